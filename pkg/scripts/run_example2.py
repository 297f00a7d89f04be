#!/usr/bin/env python3
"""Motor run: four iterations at t_f = 11, then static gain recovery."""

import sys
from pathlib import Path

from symlqr.cli import main

CONFIG = Path(__file__).resolve().parent.parent / "configs" / "example2.toml"

if __name__ == "__main__":
    sys.exit(main(["solve-ih", str(CONFIG), *sys.argv[1:]]))
