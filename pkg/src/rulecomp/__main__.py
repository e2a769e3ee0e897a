import sys

from rulecomp.harness.cli import main

sys.exit(main())
