"""Skeleton length of the strip rotation: anchored linear fit and count growth."""
import argparse
import math

import numpy as np

from gpex.exchange import builtin
from gpex.join import join_sequence


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-N", type=int, default=60)
    ap.add_argument("--alpha", default="3/13")
    ap.add_argument("--w", default="1/40")
    args = ap.parse_args()
    levels = join_sequence(builtin("strip-rotation", alpha=args.alpha, w=args.w), args.N)
    n = np.arange(1, args.N + 1, dtype=float)
    ell = np.array([lv.stats.skeleton_length.mid() for lv in levels])
    c = float(np.dot(n, ell - ell[0]) / np.dot(n, n))
    print("n,atom_count,skeleton_length,linear_fit,log_count_over_n")
    for lv, k, e in zip(levels, n, ell):
        print(f"{lv.n},{lv.stats.atom_count},{e:.12g},{ell[0] + c * k:.12g},{math.log(lv.stats.atom_count) / lv.n:.6f}")
    resid = np.max(np.abs(ell - (ell[0] + c * n)) / ell)
    print(f"# slope {c:.6g}, max relative residual {resid:.4f}")


if __name__ == "__main__":
    main()
