"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints one row per kernel with the best wall time of each backend and the
speedup.  Both backends get identical inputs; results are also compared so a
fast but wrong kernel shows up here.
"""
import argparse
import timeit

import numpy as np

from bottleneck_lab.kernels import backends
from bottleneck_lab.prob import tito_channel


def cases(rng):
    T3 = tito_channel(0.1, 0.05).entries
    T8 = rng.dirichlet(np.ones(8), size=8).T
    q8 = rng.dirichlet(np.ones(8))
    P8 = rng.dirichlet(np.ones(9), size=8).T
    p3 = rng.dirichlet(np.ones(3))
    q3 = np.full(3, 1 / 3)
    P3 = rng.dirichlet(np.ones(4), size=3).T
    return {
        "channel_rates n=8 k=9": lambda m: m.channel_rates(T8, q8, P8)[:2],
        "channel_descent n=3 k=4": lambda m: m.channel_descent(T3, q3, P3, 1.0, 0.0, 0.9, 0.0, 10.0, 2, 200, 1e-12)[1],
        "channel_descent n=8 k=9": lambda m: m.channel_descent(T8, q8, P8, -1.0, 0.0, 1.0, 0.0, 10.0, 1, 200, 1e-12)[1],
        "phi_descent n=3": lambda m: m.phi_descent(T3, p3, 0.5, -1.0, 500, 1e-12)[1],
        "phi_descent n=8": lambda m: m.phi_descent(T8, q8, 0.5, -1.0, 500, 1e-12)[1],
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--number", type=int, default=20)
    args = ap.parse_args()

    mods = backends()
    if "cython" not in mods:
        print("compiled kernels not available; only the numpy backend is installed")
    rng = np.random.default_rng(0)
    print(f"{'kernel':28s} {'numpy ms':>10s} {'cython ms':>10s} {'speedup':>8s} {'max diff':>9s}")
    for name, fn in cases(rng).items():
        row = {}
        out = {}
        for key, mod in mods.items():
            out[key] = np.atleast_1d(np.asarray(fn(mod), dtype=float))
            t = min(timeit.repeat(lambda: fn(mod), repeat=args.repeat, number=args.number))
            row[key] = 1e3 * t / args.number
        if "cython" in row:
            diff = float(np.max(np.abs(out["cython"] - out["python"])))
            print(f"{name:28s} {row['python']:10.3f} {row['cython']:10.3f} {row['python'] / row['cython']:8.1f} {diff:9.1e}")
        else:
            print(f"{name:28s} {row['python']:10.3f} {'-':>10s}")


if __name__ == "__main__":
    main()
