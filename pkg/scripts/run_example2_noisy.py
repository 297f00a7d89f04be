#!/usr/bin/env python3
"""Noisy motor runs: gain recovery from averaged trials, then the MC study."""

import sys
from pathlib import Path

from symlqr.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

if __name__ == "__main__":
    rc = main(["solve-ih", str(CONFIGS / "example2_noisy.toml"), *sys.argv[1:]])
    if rc == 0:
        rc = main(["noise-study", str(CONFIGS / "example2_study.toml"), *sys.argv[1:]])
    sys.exit(rc)
