"""Print counts, skeleton lengths and the entropy report for the baker map."""
import argparse

from gpex.entropy import check_bounds
from gpex.exchange import builtin
from gpex.join import join_sequence, levels_csv


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-N", type=int, default=12)
    args = ap.parse_args()
    g = builtin("baker")
    print(levels_csv(join_sequence(g, args.N)), end="")
    print(check_bounds(g, args.N, samples=8).to_text(), end="")


if __name__ == "__main__":
    main()
