"""Time the p-variation dynamic programme on both backends.

    python benchmarks/bench_pvar.py --sizes 256,512,1024 --repeat 3

Prints one line per (kind, size, backend) with the best wall time and the
speed-up of the compiled kernel; results must agree to 1e-12 relative.
"""

import argparse
import time

import numpy as np

from roughito import GridPath, dp_distance, ito_lift, p_variation, sample_brownian, strat_lift
from roughito import variation


def best_time(fn, repeat):
    best, out = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="256,512,1024")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--dim", type=int, default=2)
    ap.add_argument("--p", type=float, default=2.5)
    args = ap.parse_args()

    backends = ["python"]
    try:
        variation.use_backend("cython")
        backends.append("cython")
    except ImportError:
        print("compiled kernel not built; timing the numpy fallback only")
    start = variation.BACKEND

    print(f"{'kind':<10}{'N':>7}{'backend':>9}{'seconds':>12}{'speed-up':>10}")
    for n in (int(s) for s in args.sizes.split(",")):
        z = sample_brownian(np.linspace(0.0, 1.0, n + 1), args.dim, 0)
        g, h = ito_lift(z), strat_lift(z)
        jobs = {
            "vector": lambda: p_variation(GridPath(z.times, z.values), args.p),
            "rough": lambda: p_variation(g, args.p),
            "distance": lambda: dp_distance(g, h, args.p),
        }
        for kind, fn in jobs.items():
            times, vals = {}, {}
            for b in backends:
                variation.use_backend(b)
                times[b], vals[b] = best_time(fn, args.repeat)
            if len(backends) == 2 and not np.isclose(vals["python"], vals["cython"], rtol=1e-12, atol=0):
                raise SystemExit(f"backends disagree on {kind} N={n}: {vals}")
            for b in backends:
                speed = times["python"] / times[b]
                print(f"{kind:<10}{n:>7}{b:>9}{times[b]:>12.4f}{speed:>9.1f}x")
    variation.use_backend(start)


if __name__ == "__main__":
    main()
