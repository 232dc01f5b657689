"""Time the compiled kernels against the numpy fallback.

Usage: ``python benchmarks/bench_kernels.py [--repeat N]``. Prints one row
per kernel with the best-of-N time for each backend and the speedup.
"""
import argparse
import timeit

import numpy as np

from nsmlab._kernels import fast, slow
from nsmlab.heat import RHO_GRID


def cases(rng):
    n_modes = 64 * 33
    z = rng.standard_normal((3, n_modes)) + 1j * rng.standard_normal((3, n_modes))
    n0 = rng.standard_normal((3, n_modes)) + 1j * rng.standard_normal((3, n_modes))
    n1 = n0 + 0.1
    e, p1, p2 = (rng.random(n_modes) for _ in range(3))
    a, b = rng.standard_normal((3, 64 * 64)), rng.standard_normal((3, 64 * 64))
    g = rng.random(401)
    out = np.empty(4096)
    return {
        "xorshift_uniform (4096 draws)": lambda k: k.xorshift_uniform(12345, out),
        "maximal_scan (401 samples)": lambda k: k.maximal_scan(g, 1 / 400, RHO_GRID),
        "cross3 (64x64 points)": lambda k: k.cross3(a, b),
        "etd_combine (64x33 modes)": lambda k: k.etd_combine(e, p1, p2, z, n0, n1),
    }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--number", type=int, default=20)
    args = p.parse_args(argv)
    if fast is None:
        raise SystemExit("compiled kernels are not built; reinstall with Cython available")
    print(f"{'kernel':32s} {'cython [ms]':>12s} {'python [ms]':>12s} {'speedup':>8s}")
    for name, call in cases(np.random.default_rng(0)).items():
        t_fast, t_slow = (min(timeit.repeat(lambda: call(k), number=args.number,
                                            repeat=args.repeat)) / args.number * 1e3
                          for k in (fast, slow))
        print(f"{name:32s} {t_fast:12.4f} {t_slow:12.4f} {t_slow / t_fast:8.1f}")


if __name__ == "__main__":
    main()
