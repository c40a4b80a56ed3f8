"""Bias-scan study: how the peak-valley differences settle back to the ideal fringe.

Prints, for the default scenario and a few variants, the worst relative
distance of the gaps near 200 Hz from the ideal-fringe values, the windowed
spread at low bias, and the settling bias at 10% and 5% tolerance.

    python scripts/edm_contrast_study.py
"""

import numpy as np

from sublevel_sense.edm import (
    EdmConfig,
    ScanTooShort,
    auto_bias_grid,
    cluster_deviation,
    fringe_scan,
    ideal_pv_values,
    robustness_threshold,
    windowed_std,
)
from sublevel_sense.spin import SpinF

VARIANTS = [
    ("default (azimuth x)", EdmConfig(SpinF(6), 5.0, 10.0, "x")),
    ("azimuth y", EdmConfig(SpinF(6), 5.0, 10.0, "y")),
    ("no Stark shift, azimuth x", EdmConfig(SpinF(6), 0.0, 10.0, "x")),
    ("no Stark shift, azimuth y", EdmConfig(SpinF(6), 0.0, 10.0, "y")),
    ("transverse 20 Hz", EdmConfig(SpinF(6), 5.0, 20.0, "x")),
]


def settle(cfg, curve, tol):
    try:
        return robustness_threshold(cfg, None, tolerance=tol, curve=curve).threshold
    except ScanTooShort:
        return float("nan")


def main():
    centres = ideal_pv_values(3)
    print("ideal gaps:", np.round(centres, 7))
    print(f"{'variant':<28}{'worst@190-200':>14}{'min std<60':>12}{'settle 10%':>12}{'settle 5%':>11}")
    for name, cfg in VARIANTS:
        curve = fringe_scan(cfg, auto_bias_grid(cfg, 10.0, 800.0))
        mids, vals = curve.pv_midpoints, curve.pv_values
        top = vals[(mids >= 190) & (mids < 200)]
        worst = 100 * cluster_deviation(top, centres).max()
        _, std = windowed_std(mids, vals, 10.0, 10.0, 60.0)
        print(f"{name:<28}{worst:>13.1f}%{std.min():>12.3f}{settle(cfg, curve, 0.10):>12.1f}{settle(cfg, curve, 0.05):>11.1f}")


if __name__ == "__main__":
    main()
