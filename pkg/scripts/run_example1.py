#!/usr/bin/env python3
"""Six-tank run: iterate to the optimal control and report the cost gap."""

import sys
from pathlib import Path

from symlqr.cli import main

CONFIG = Path(__file__).resolve().parent.parent / "configs" / "example1.toml"

if __name__ == "__main__":
    sys.exit(main(["solve-fh", str(CONFIG), *sys.argv[1:]]))
