#!/usr/bin/env python3
"""Run the acceptance criteria and show the one-line PASS/FAIL report each
criterion prints."""
import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent

if __name__ == "__main__":
    raise SystemExit(subprocess.call(
        [sys.executable, "-m", "pytest", str(ROOT / "tests" / "test_acceptance.py"),
         "-v", "-s", *sys.argv[1:]],
        cwd=ROOT))
