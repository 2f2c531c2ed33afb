"""Compare the compiled kernels with the numpy fallback.

Run from the repository root::

    python3 benchmarks/bench_kernels.py [--repeat 5]

Kernel timings import both implementations directly.  The end-to-end
timing runs ``analyze`` on the built-in fixtures in two subprocesses, one
with ``ORIGAMI_RIGIDITY_PURE_PYTHON=1``.
"""
from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from origami_rigidity import _pykernels

try:
    from origami_rigidity import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def _cases(rng):
    steps = np.stack([np.eye(4)] * 8)
    steps[:, :3, 3] = rng.standard_normal((8, 3))
    angles = rng.uniform(-np.pi, np.pi, 8)
    x = rng.standard_normal((8, 3))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    origins = rng.standard_normal((8, 3))
    Q = rng.standard_normal((3, 5, 5))
    Q = Q + Q.transpose(0, 2, 1)
    starts = rng.standard_normal((200, 5))
    return {
        "chain_products (8 creases)": lambda k: k.chain_products(steps, angles),
        "hessian_blocks (8 creases, hole)": lambda k: k.hessian_blocks(x, origins, True),
        "refine_zero_set (200 starts)": lambda k: k.refine_zero_set(Q, starts, 30),
    }


_E2E = """
import time, warnings
from origami_rigidity import BACKEND, fixture_names, load_fixture
from origami_rigidity.cli import analyze
warnings.simplefilter("ignore")
papers = [load_fixture(n) for n in fixture_names()]
t = time.perf_counter()
for _ in range({repeat}):
    for p in papers:
        analyze(p, samples=500, seed=0)
print(BACKEND, (time.perf_counter() - t) / {repeat})
"""


def end_to_end(repeat: int, pure: bool) -> tuple[str, float]:
    env = dict(os.environ)
    if pure:
        env["ORIGAMI_RIGIDITY_PURE_PYTHON"] = "1"
    out = subprocess.run([sys.executable, "-c", _E2E.format(repeat=repeat)], env=env,
                         capture_output=True, text=True, check=True).stdout.split()
    return out[0], float(out[1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"{'kernel':36s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speedup':>8s}")
    for name, fn in _cases(rng).items():
        tp = min(timeit.repeat(lambda: fn(_pykernels), number=1, repeat=args.repeat)) * 1e3
        if _ckernels is None:
            print(f"{name:36s} {tp:12.3f} {'n/a':>12s}")
            continue
        tc = min(timeit.repeat(lambda: fn(_ckernels), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:36s} {tp:12.3f} {tc:12.3f} {tp / tc:7.1f}x")
    b1, t1 = end_to_end(args.repeat, pure=True)
    b2, t2 = end_to_end(args.repeat, pure=False)
    print(f"\nanalyze on all built-in fixtures: {b1} {t1 * 1e3:.1f} ms, {b2} {t2 * 1e3:.1f} ms")


if __name__ == "__main__":
    main()
