"""Finsler length of the singular set and its power-law exponent."""
import argparse

import numpy as np

from gpex import billiard as bl


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--table", choices=["square", "right-triangle"], default="square")
    ap.add_argument("-N", type=int, default=12)
    ap.add_argument("--gap", type=float, default=0.02)
    args = ap.parse_args()
    t = bl.unit_square() if args.table == "square" else bl.right_triangle()
    ss = bl.singular_set(t, args.N, gap=args.gap)
    total = np.cumsum(ss.generation_lengths)
    print("n,singular_length")
    for n, v in enumerate(total, start=1):
        print(f"{n},{v:.10g}")
    alpha, _ = np.polyfit(np.log(np.arange(1, args.N + 1)), np.log(total), 1)
    print(f"# exponent {alpha:.4f}{' (truncated)' if ss.truncated else ''}")


if __name__ == "__main__":
    main()
