"""Run every CLI experiment with its default configuration into an output directory.

    python scripts/reproduce_all.py [outdir]
"""

import sys
import time
from pathlib import Path

from sublevel_sense.cli import main

RUNS = {
    "precess_stretched": ["precess", "--f", "3", "--initial-m", "3", "--phases", "0:6.2832:0.001"],
    "precess_m0": ["precess", "--f", "3", "--initial-m", "0", "--phases", "0:6.2832:0.001"],
    "sequential_m0": ["sequential", "--f", "3", "--initial-m", "0", "--phases", "0.01:3.13:0.01"],
    "parity_m0": ["parity", "--f", "3", "--initial-m", "0", "--phases", "0:6.2832:0.001"],
    "harmonic_f3": ["harmonic", "--f", "3", "--phases", "0:6.2832:0.001"],
    "scaling": ["scaling", "--f-max", "21/2"],
    "transverse": ["transverse", "--f", "3", "--initial-m", "0", "--sin-gamma", "0.1", "--phases", "0:6.2832:0.001"],
    "edm_eigen": ["edm-eigen", "--stark-e1", "5", "--transverse-grid", "0:50:0.25"],
    "edm_scan": ["edm-scan", "--stark-e1", "5", "--transverse", "10", "--tau", "3", "--bias", "10:200:auto"],
    "edm_threshold": ["edm-threshold", "--stark-e1", "5", "--transverse", "10", "--tau", "3", "--bias", "10:400:auto"],
}


def run_all(outdir: Path) -> int:
    outdir.mkdir(parents=True, exist_ok=True)
    failures = 0
    for name, args in RUNS.items():
        t0 = time.perf_counter()
        code = main([*args, "--output", str(outdir / f"{name}.csv")])
        print(f"  {name}: exit {code} in {time.perf_counter() - t0:.1f}s")
        failures += code != 0
    return failures


if __name__ == "__main__":
    sys.exit(1 if run_all(Path(sys.argv[1] if len(sys.argv) > 1 else "results")) else 0)
