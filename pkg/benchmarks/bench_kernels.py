"""Compare the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both backends are imported directly, so this works regardless of
DPFL_PURE_PYTHON. Each row reports the best-of-N wall time and checks that
the two backends agree bit for bit.
"""
import argparse
import sys
import timeit

import numpy as np

from dpfl import _pykernels as py
from dpfl.families import uniform_dataset
from dpfl.mechanism import MechanismSpec, build_output_density
from dpfl.score import _Shifted

try:
    from dpfl import _ckernels as cy
except ImportError:
    cy = None


def cases(size: int):
    counters = np.arange(size, dtype=np.uint64)
    d = uniform_dataset(1001, 2.0)
    dens = build_output_density(d, MechanismSpec(1.0, 1 / 1001))
    u1 = py.uniforms(1, counters, 0)
    u2 = py.uniforms(1, counters, 1)
    width = dens.hi - dens.lo
    sh = _Shifted(d, 0.05)
    ells = np.linspace(-1.0, 1.0, size)
    return {
        "uniforms": lambda k: k.uniforms(7, counters, 0),
        "sample_pieces": lambda k: k.sample_pieces(dens.cdf, dens.lo, width, u1, u2),
        "shifted_score": lambda k: k.shifted_score(sh.left, sh.right, sh.zero_lo, sh.zero_hi, sh.c, ells),
    }


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if cy is None:
        print("compiled extension not built; nothing to compare", file=sys.stderr)
        return 1
    print(f"{'kernel':<16}{'numpy ms':>12}{'cython ms':>12}{'speedup':>10}  identical")
    for name, fn in cases(args.size).items():
        t_py = min(timeit.repeat(lambda: fn(py), number=1, repeat=args.repeat)) * 1e3
        t_cy = min(timeit.repeat(lambda: fn(cy), number=1, repeat=args.repeat)) * 1e3
        same = np.array_equal(fn(py), fn(cy))
        print(f"{name:<16}{t_py:>12.2f}{t_cy:>12.2f}{t_py / t_cy:>9.1f}x  {same}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
