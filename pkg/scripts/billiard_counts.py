"""Itinerary cell counts for a polygonal table, with the grid oracle for small n."""
import argparse
import math

from gpex import billiard as bl


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--table", choices=["square", "right-triangle"], default="square")
    ap.add_argument("-N", type=int, default=20)
    ap.add_argument("--grid-upto", type=int, default=3)
    ap.add_argument("-m", type=int, default=1000, help="grid resolution for the oracle")
    args = ap.parse_args()
    t = bl.unit_square() if args.table == "square" else bl.right_triangle()
    print("n,cell_count,log_count_over_n,grid_count")
    for n in range(1, args.N + 1):
        k = bl.count_itinerary_cells(t, n)
        grid = bl.grid_itinerary_count(t, n, m=args.m) if n <= args.grid_upto else ""
        print(f"{n},{k},{math.log(k) / n:.6f},{grid}")


if __name__ == "__main__":
    main()
