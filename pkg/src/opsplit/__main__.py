"""Module entry point: ``python -m opsplit <verb> ...``."""
import sys

from .cli import main

sys.exit(main())
