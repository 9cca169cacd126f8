#!/usr/bin/env python3
"""
tindep
Command-line entry point; see cli.py for the subcommands
"""

import sys

from cli import main

if __name__ == "__main__":
    sys.exit(main())
