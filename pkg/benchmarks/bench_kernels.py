"""Benchmark the numba kernels against the pure-numpy fallback.

Runs each hot kernel in both backends and reports per-call wall time.  The
numpy backend lives in the same module as unsuffixed/np-suffixed pairs, so
both can be timed from a single process; the dispatch choice itself is made
at import time from EPISCAN_NO_NUMBA.

Usage:  python benchmarks/bench_kernels.py [--sizes 200,2000,20000]
"""

import argparse
import timeit

import numpy as np

from episcan import _kernels as k


def bench(fn, *args, repeat=5, number=50):
    best = min(timeit.repeat(lambda: fn(*args), repeat=repeat, number=number))
    return best / number


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="200,2000,20000",
                        help="comma-separated segment lengths")
    parser.add_argument("--grid", type=int, default=500,
                        help="bridge grid size for the pairwise sup kernel")
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    rng = np.random.default_rng(0)
    print(f"installed dispatch backend: {k.BACKEND}")
    print(f"{'kernel':<22}{'m':>8}{'numba':>12}{'numpy':>12}{'speedup':>10}")

    pairs = [
        ("ingarch_filter", k._ingarch_filter_nb if k.BACKEND == "numba" else None,
         k.ingarch_filter_np,
         lambda y: (y, 0.7, 0.25, 0.3, float(y.mean()))),
        ("ingarch_grad_filter", getattr(k, "_ingarch_grad_filter_nb", None),
         k.ingarch_grad_filter_np,
         lambda y: (y, 0.7, 0.25, 0.3, float(y.mean()), np.zeros(3))),
        ("qll_value_grad", getattr(k, "_qll_value_grad_nb", None),
         k.qll_value_grad_np,
         lambda y: (y, 0.7, 0.25, 0.3, float(y.mean()), np.zeros(3))),
    ]

    for m in sizes:
        y = rng.poisson(3.0, size=m).astype(np.float64)
        for name, nb_fn, np_fn, make_args in pairs:
            call_args = make_args(y)
            t_np = bench(np_fn, *call_args)
            if nb_fn is None:
                print(f"{name:<22}{m:>8}{'n/a':>12}{t_np * 1e6:>10.1f}us")
                continue
            nb_fn(*call_args)  # trigger compilation outside the timer
            t_nb = bench(nb_fn, *call_args)
            print(f"{name:<22}{m:>8}{t_nb * 1e6:>10.1f}us{t_np * 1e6:>10.1f}us"
                  f"{t_np / t_nb:>9.1f}x")

    # pairwise sup over the bridge grid (quadratic in grid size)
    g = args.grid
    w = np.ascontiguousarray(rng.normal(size=(g + 1, 3)))
    t_np = bench(k.pairwise_sup_sq_np, w, number=3)
    nb_fn = getattr(k, "_pairwise_sup_sq_nb", None)
    if nb_fn is not None:
        nb_fn(w)
        t_nb = bench(nb_fn, w, number=3)
        print(f"{'pairwise_sup_sq':<22}{g + 1:>8}{t_nb * 1e6:>10.1f}us"
              f"{t_np * 1e6:>10.1f}us{t_np / t_nb:>9.1f}x")
    else:
        print(f"{'pairwise_sup_sq':<22}{g + 1:>8}{'n/a':>12}{t_np * 1e6:>10.1f}us")


if __name__ == "__main__":
    main()
