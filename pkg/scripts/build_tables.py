#!/usr/bin/env python3
"""Build the default quantile tables into the on-disk cache.

Pre-warms the tables the CLI would otherwise tabulate on first use:
the scalar-pair and small-panel largest-eigenvalue tables, the top-edge
sum tables for r = 1..3, and a small-dimension Brownian functional table.
"""

import argparse
from pathlib import Path

from hdcca.cli import _atomic_write, _default_cache_dir
from hdcca.cointegration import tabulate_brownian_coint
from hdcca.ensembles import Seed
from hdcca.hyptest import tabulate_airy1_sums, tabulate_laguerre_max

ALPHAS = (0.9, 0.95, 0.99)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cache-dir", default=None)
    ap.add_argument("--nsamples", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    cache = Path(args.cache_dir) if args.cache_dir else _default_cache_dir()
    cache.mkdir(parents=True, exist_ok=True)
    seed = Seed(args.seed)

    built = []
    for K, M in ((1, 1), (2, 3), (3, 5)):
        t = tabulate_laguerre_max(K, M, ALPHAS, args.nsamples, seed)
        built.append((f"laguerre-max-{K}x{M}.json", t))
    for r in (1, 2, 3):
        t = tabulate_airy1_sums(r, ALPHAS, 100, args.nsamples, seed)
        built.append((f"airy1-sum-r{r}.json", t))
    for K in (1, 2):
        t = tabulate_brownian_coint(K, 1, ALPHAS, 1000, args.nsamples, seed)
        built.append((f"brownian-coint-k{K}.json", t))

    for name, table in built:
        path = cache / name
        _atomic_write(path, table.dumps() + "\n")
        print(path)


if __name__ == "__main__":
    main()
