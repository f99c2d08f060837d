#!/usr/bin/env python3
"""
Entry point for the hhmala benchmark harness.

    python main.py run configs/gaussian_ess.conf --out results --threads 4
    python main.py check
    python main.py plot results/results.csv --out results
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent / "src"))

from hhmala_bench.main import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
