"""Pipeline configuration files (YAML or JSON).

Example::

    sources: [rtl/pkg.sv, rtl/alu.sv, rtl/top.sv]   # relative to this file
    defines: {WIDTH: "8"}
    include_dirs: [rtl/include]
    top: top
    rules: [PORT, CONT, ALWS]
    max_per_rule: 100
    seed: 0
    placeholder: "<<<MASKED_REGION>>>"
    context_mode: transitive        # or direct
    tokens: {min: 0, max: 32000}
    tokenizer: null                 # or a command printing a token count
    k: 3
    liveness: true
    verifier: {syntax: builtin, equivalence: builtin, timeout: 30, workers: 4}
    models: [mock-oracle, {profile: qwen2.5-coder, endpoint: "http://host:8000/v1"}]
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from rulecomp.context import DIRECT, TRANSITIVE
from rulecomp.errors import ConfigError, UnknownRule
from rulecomp.grammar.parser import RULE_NAMES
from rulecomp.grammar.rules import MASKABLE_RULES, resolve_rule
from rulecomp.sampling import DEFAULT_PLACEHOLDER

_KNOWN_KEYS = {
    "sources", "defines", "include_dirs", "top", "rules", "max_per_rule", "seed",
    "placeholder", "context_mode", "tokens", "tokenizer", "k", "liveness", "verifier", "models",
}
_VERIFIER_KEYS = {"syntax", "equivalence", "timeout", "workers"}


@dataclass
class VerifierConfig:
    syntax: str = "builtin"
    equivalence: str = "builtin"
    timeout: float = 30.0
    workers: int = 4


@dataclass
class ModelEntry:
    profile: str
    endpoint: str | None = None


@dataclass
class PipelineConfig:
    sources: list[str] = field(default_factory=list)
    defines: dict[str, str | None] = field(default_factory=dict)
    include_dirs: list[str] = field(default_factory=list)
    top: str | None = None
    rules: list[str] = field(default_factory=lambda: list(MASKABLE_RULES.values()))
    max_per_rule: int = 100
    seed: int = 0
    placeholder: str = DEFAULT_PLACEHOLDER
    context_mode: str = TRANSITIVE
    min_tokens: int = 0
    max_tokens: int = 32000
    tokenizer: str | None = None
    k: int = 3
    liveness: bool = True
    verifier: VerifierConfig = field(default_factory=VerifierConfig)
    models: list[ModelEntry] = field(default_factory=list)

    def validate(self) -> None:
        if not self.sources:
            raise ConfigError("no source files configured")
        try:
            self.rules = [resolve_rule(r) for r in self.rules]
        except UnknownRule as exc:
            raise ConfigError(str(exc)) from exc
        if not set(self.rules) <= RULE_NAMES:
            raise ConfigError("selected rules must be grammar rules")
        if self.max_per_rule < 1:
            raise ConfigError("max_per_rule must be at least 1")
        if not 0 <= self.min_tokens < self.max_tokens:
            raise ConfigError("token bounds need 0 <= min < max")
        if self.k < 1:
            raise ConfigError("k must be at least 1")
        if self.context_mode not in (DIRECT, TRANSITIVE):
            raise ConfigError(f"context_mode must be {DIRECT} or {TRANSITIVE}")
        if not self.placeholder:
            raise ConfigError("placeholder must be non-empty")
        if self.verifier.workers < 1:
            raise ConfigError("verifier.workers must be at least 1")


def _as_list(value, key: str) -> list:
    if value is None:
        return []
    if isinstance(value, (str, int)):
        return [value]
    if not isinstance(value, list):
        raise ConfigError(f"{key} must be a list")
    return value


def config_from_dict(doc: dict, base_dir: str | Path = ".") -> PipelineConfig:
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a mapping")
    unknown = set(doc) - _KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
    base = Path(base_dir)

    def rel(p) -> str:
        path = Path(str(p))
        return str(path if path.is_absolute() else base / path)

    cfg = PipelineConfig()
    cfg.sources = [rel(p) for p in _as_list(doc.get("sources"), "sources")]
    cfg.include_dirs = [rel(p) for p in _as_list(doc.get("include_dirs"), "include_dirs")]
    defines = doc.get("defines") or {}
    if isinstance(defines, list):
        defines = {str(d): None for d in defines}
    if not isinstance(defines, dict):
        raise ConfigError("defines must be a mapping or a list of names")
    cfg.defines = {str(k): (None if v is None else str(v)) for k, v in defines.items()}
    cfg.top = doc.get("top")
    if "rules" in doc:
        cfg.rules = [str(r) for r in _as_list(doc["rules"], "rules")]
    try:
        cfg.max_per_rule = int(doc.get("max_per_rule", cfg.max_per_rule))
        cfg.seed = int(doc.get("seed", cfg.seed))
        cfg.k = int(doc.get("k", cfg.k))
        tokens = doc.get("tokens") or {}
        cfg.min_tokens = int(tokens.get("min", cfg.min_tokens))
        cfg.max_tokens = int(tokens.get("max", cfg.max_tokens))
    except (TypeError, ValueError, AttributeError) as exc:
        raise ConfigError(f"bad numeric setting: {exc}") from exc
    cfg.placeholder = str(doc.get("placeholder", cfg.placeholder))
    cfg.context_mode = str(doc.get("context_mode", cfg.context_mode))
    cfg.tokenizer = doc.get("tokenizer")
    cfg.liveness = bool(doc.get("liveness", True))
    ver = doc.get("verifier") or {}
    if not isinstance(ver, dict) or set(ver) - _VERIFIER_KEYS:
        raise ConfigError(f"verifier accepts only: {', '.join(sorted(_VERIFIER_KEYS))}")
    cfg.verifier = VerifierConfig(
        syntax=str(ver.get("syntax", "builtin")),
        equivalence=str(ver.get("equivalence", "builtin")),
        timeout=float(ver.get("timeout", 30.0)),
        workers=int(ver.get("workers", 4)),
    )
    for m in _as_list(doc.get("models"), "models"):
        if isinstance(m, str):
            cfg.models.append(ModelEntry(m))
        elif isinstance(m, dict) and "profile" in m:
            cfg.models.append(ModelEntry(str(m["profile"]), m.get("endpoint")))
        else:
            raise ConfigError("each model must be a profile name or a mapping with 'profile'")
    cfg.validate()
    return cfg


def load_config(path: str | Path) -> PipelineConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {p}: {exc}") from exc
    try:
        doc = json.loads(text) if p.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse {p}: {exc}") from exc
    return config_from_dict(doc, p.parent)
