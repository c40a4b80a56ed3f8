"""Stretched-pair splitting against transverse field, with the fitted log-log slope.

    python scripts/splitting_power_law.py
"""

import numpy as np

from sublevel_sense.edm import loglog_slope, stretched_splitting


def main(stark_e1=5.0):
    ratios = np.logspace(-3, -2, 7)
    for big_f in (1, 2, 3):
        xs = stark_e1 * ratios
        ys = [stretched_splitting(big_f, stark_e1, b) for b in xs]
        print(f"F={big_f}: slope {loglog_slope(xs, ys):.4f}  (expect {2 * big_f})")
        for b, s in zip(xs, ys):
            print(f"    transverse {b:.3e} Hz  splitting {s:.6e} Hz")


if __name__ == "__main__":
    main()
