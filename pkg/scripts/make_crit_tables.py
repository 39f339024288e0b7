"""Fill the critical-value cache for dimensions 1..D at the default resolution.

Usage: python3 scripts/make_crit_tables.py [D]

Tables land in $ZCHANGE_CACHE_DIR (default ~/.cache/zchange), so later
`zchange test` calls on d-dimensional models start instantly.
"""

import sys
import time

from zchange import limits


def main() -> None:
    top = int(sys.argv[1]) if len(sys.argv) > 1 else 4
    print("dim  q90      q95      q99      seconds  cached")
    for dim in range(1, top + 1):
        t0 = time.perf_counter()
        table, cached = limits.load_or_simulate(dim)
        q = table.quantiles
        print(f"{dim:<4d} {q[0.90]:.5f}  {q[0.95]:.5f}  {q[0.99]:.5f}  {time.perf_counter() - t0:7.1f}  {cached}")
    print(f"cache: {limits.cache_dir()}")


if __name__ == "__main__":
    main()
