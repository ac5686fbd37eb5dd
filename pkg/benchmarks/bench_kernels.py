"""Compare the compiled kernels with the numpy fallback.

Usage::

    python benchmarks/bench_kernels.py [--N 128] [--repeat 20]

Prints one line per kernel with the best-of-``repeat`` time for each
backend and the speedup, then the time of a full determining-wavenumber
evaluation under each backend (run in a subprocess so the backend switch
takes effect at import).
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from detwave import _fallback

try:
    from detwave import _ckernels
except ImportError:  # extension not built
    _ckernels = None

END_TO_END = """
import timeit
from detwave.spectral import TorusGrid, random_divfree_field
from detwave.wavenumbers import WavenumberParams, lambda_b
g = TorusGrid(2, {N})
f = random_divfree_field(g, 1, (-1, g.q_max), 1e-3)
wp = WavenumberParams()
print(min(timeit.repeat(lambda: lambda_b(f, wp), number=1, repeat={repeat})))
"""


def best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def kernel_cases(N):
    rng = np.random.default_rng(0)
    m = N * N
    a = rng.standard_normal((3, m))
    b = rng.standard_normal((3, m))
    t = rng.uniform(0.0, 1.5, size=(N, N))
    return {
        "cross3": lambda mod: mod.cross3(a, b),
        "chi_profile": lambda mod: mod.chi_profile(t),
        "vec_norm_sum(p=3)": lambda mod: mod.vec_norm_sum(a, 3.0),
        "vec_norm_max": lambda mod: mod.vec_norm_max(a),
    }


def end_to_end(N, repeat, pure):
    env = dict(os.environ, DETWAVE_PURE_PYTHON="1" if pure else "0")
    out = subprocess.run([sys.executable, "-c", END_TO_END.format(N=N, repeat=repeat)],
                         env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--N", type=int, default=128, help="grid points per side")
    parser.add_argument("--repeat", type=int, default=20, help="timing repetitions")
    args = parser.parse_args(argv)

    if _ckernels is None:
        print("compiled extension not built; only the fallback is available")
    print(f"{'kernel':<20}{'python [ms]':>14}{'cython [ms]':>14}{'speedup':>10}")
    for name, call in kernel_cases(args.N).items():
        tp = best(lambda: call(_fallback), args.repeat)
        if _ckernels is None:
            print(f"{name:<20}{tp * 1e3:>14.3f}{'-':>14}{'-':>10}")
            continue
        tc = best(lambda: call(_ckernels), args.repeat)
        print(f"{name:<20}{tp * 1e3:>14.3f}{tc * 1e3:>14.3f}{tp / tc:>10.2f}")

    repeat = max(3, args.repeat // 4)
    tp = end_to_end(args.N, repeat, pure=True)
    tc = end_to_end(args.N, repeat, pure=False)
    print(f"{'lambda_b end to end':<20}{tp * 1e3:>14.3f}{tc * 1e3:>14.3f}{tp / tc:>10.2f}")


if __name__ == "__main__":
    main()
