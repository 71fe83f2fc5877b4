#!/usr/bin/env python3
"""
Entry point for the AMS experiment runner.

Same as `python -m ams`; see QUICK_START.md for the subcommands.
"""

import sys

from ams.cli import main

if __name__ == "__main__":
    sys.exit(main())
