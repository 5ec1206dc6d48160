"""Module entry point: `python -m nit_sim` behaves like the `nit-sim` script."""

import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
