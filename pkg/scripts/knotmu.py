#!/usr/bin/env python3
"""
knotmu command-line entry point.

Usage examples:
  python scripts/knotmu.py mu2 knots/8_1.diagram
  python scripts/knotmu.py --json quad classical/3_1.knot
  python scripts/knotmu.py render knots/10_2.diagram out/10_2.svg --cycles
  python scripts/knotmu.py c2 classical/4_1.pd

Exit codes: 0 success, 1 malformed or invalid input, 2 unresolved degeneracy.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from knotmu.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
