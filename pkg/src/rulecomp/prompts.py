"""Chat and fill-in-the-middle prompt rendering."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from rulecomp.errors import ConfigError, PlaceholderCollision, SpanOutOfRange, TemplateSlotMissing

MASK_TOKEN = "<MASK>"
CONTEXT_SLOT = "{context}"
PSM = "PSM"
SPM = "SPM"
CHAT = "chat"
FIM = "fim"

DEFAULT_SYSTEM = "You are an expert hardware engineer."
DEFAULT_USER = (
    "Complete the code replaced by <MASK> so the design is functionally correct. "
    "Reply with only the replacement code.\n\n{context}"
)


@dataclass(frozen=True)
class ChatTemplate:
    system: str = DEFAULT_SYSTEM
    user: str = DEFAULT_USER

    def check(self) -> None:
        if CONTEXT_SLOT not in self.user:
            raise TemplateSlotMissing("chat template has no {context} slot")
        if MASK_TOKEN not in self.user.replace(CONTEXT_SLOT, ""):
            raise TemplateSlotMissing(f"chat template never mentions {MASK_TOKEN}")


DEFAULT_TEMPLATE = ChatTemplate()


@dataclass(frozen=True)
class FimTokenSet:
    prefix_token: str
    suffix_token: str
    middle_token: str
    order: str = PSM

    def __post_init__(self) -> None:
        toks = (self.prefix_token, self.suffix_token, self.middle_token)
        if not all(toks) or len(set(toks)) != 3:
            raise ConfigError("FIM tokens must be non-empty and pairwise distinct")
        if self.order not in (PSM, SPM):
            raise ConfigError(f"FIM order must be {PSM} or {SPM}, not {self.order!r}")

    @property
    def tokens(self) -> tuple[str, str, str]:
        return (self.prefix_token, self.suffix_token, self.middle_token)


@dataclass(frozen=True)
class PromptBundle:
    task_id: str
    mode: str
    chat_messages: tuple[tuple[str, str], ...] | None = None
    fim_text: str | None = None

    def __post_init__(self) -> None:
        if self.mode == CHAT:
            ok = self.chat_messages is not None and self.fim_text is None
        elif self.mode == FIM:
            ok = self.fim_text is not None and self.chat_messages is None
        else:
            ok = False
        if not ok:
            raise ValueError(f"prompt bundle content does not match mode {self.mode!r}")


def split_fim(reference: str, mask_span: tuple[int, int]) -> tuple[str, str, str]:
    start, end = mask_span
    if not 0 <= start <= end <= len(reference):
        raise SpanOutOfRange(f"span [{start}, {end}) outside a text of length {len(reference)}")
    return reference[:start], reference[start:end], reference[end:]


def build_fim_prompt(task, tokens: FimTokenSet) -> PromptBundle:
    prefix, _, suffix = split_fim(task.reference, task.mask_span)
    p, s, m = tokens.tokens
    if tokens.order == PSM:
        text = f"{p}{prefix}{s}{suffix}{m}"
    else:
        text = f"{s}{suffix}{p}{prefix}{m}"
    return PromptBundle(task.task_id, FIM, fim_text=text)


def render_context(task) -> str:
    """The masked source with its placeholder shown as ``<MASK>``."""
    if MASK_TOKEN in task.masked_source:
        raise PlaceholderCollision(f"{MASK_TOKEN} already occurs in the source text")
    return task.masked_source.replace(task.placeholder, MASK_TOKEN)


def build_chat_prompt(task, template: ChatTemplate = DEFAULT_TEMPLATE) -> PromptBundle:
    template.check()
    user = template.user.replace(CONTEXT_SLOT, render_context(task))
    return PromptBundle(task.task_id, CHAT, chat_messages=(("system", template.system), ("user", user)))


# model profiles -------------------------------------------------------------


@dataclass(frozen=True)
class ModelProfile:
    """Static description of a model family: endpoint kind and FIM tokens."""

    name: str
    kind: str  # chat, completion, mock-oracle or mock-constant
    fim: FimTokenSet | None = None
    stop: tuple[str, ...] = ()
    model: str = ""
    endpoint: str = ""
    api_key_env: str | None = None
    temperature: float = 0.0
    max_tokens: int = 512
    constant: str = ""

    @classmethod
    def from_json(cls, doc: dict) -> "ModelProfile":
        try:
            fim = doc.get("fim")
            return cls(
                name=doc["name"],
                kind=doc.get("kind", "chat"),
                fim=FimTokenSet(fim["prefix"], fim["suffix"], fim["middle"], fim.get("order", PSM)) if fim else None,
                stop=tuple(doc.get("stop", ())),
                model=doc.get("model", doc["name"]),
                endpoint=doc.get("endpoint", ""),
                api_key_env=doc.get("api_key_env"),
                temperature=float(doc.get("temperature", 0.0)),
                max_tokens=int(doc.get("max_tokens", 512)),
                constant=doc.get("constant", ""),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed model profile: {exc!r}") from exc


def _bundled_profiles() -> dict[str, Path]:
    root = resources.files("rulecomp") / "profiles"
    return {p.name[:-5]: Path(str(p)) for p in root.iterdir() if p.name.endswith(".json")}


def available_profiles() -> list[str]:
    return sorted(_bundled_profiles())


def load_profile(name_or_path: str) -> ModelProfile:
    """A shipped profile by name, or a profile JSON file by path."""
    path = Path(name_or_path)
    if not path.is_file():
        bundled = _bundled_profiles()
        if name_or_path not in bundled:
            raise ConfigError(
                f"unknown model profile {name_or_path!r}; shipped: {', '.join(sorted(bundled))}"
            )
        path = bundled[name_or_path]
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read profile {path}: {exc}") from exc
    return ModelProfile.from_json(doc)
