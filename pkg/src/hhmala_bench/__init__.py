# Benchmark harness for the hhmala samplers
"""
hhmala_bench: seeded experiment grids over the hhmala adaptive schemes, with
CSV/SVG reporting and the ``hhmala-bench`` command line.
"""

__version__ = "0.1.0"
