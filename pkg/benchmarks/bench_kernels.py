"""Time the compiled kernels against their pure-numpy twins.

    python benchmarks/bench_kernels.py [--repeat 5] [--rows 20000]

Both implementations are imported directly, so FOGALLOC_BACKEND is ignored.
Each kernel is called once before timing so compilation is not counted.
"""

import argparse
import timeit

import numpy as np

from fogalloc import _waterfill
from fogalloc._backend import HAVE_NUMBA
from fogalloc.rlnc import _elim, galois_field


def cases(rows: int, rng: np.random.Generator):
    b = rng.uniform(0.05, 5.0, (rows, 8))
    a = rng.uniform(1.0, 50.0, (rows, 8))
    gb, ga = b[0, :4].copy(), a[0, :4].copy()
    field = galois_field(8)
    aug = rng.integers(0, 256, (rows // 10, 16, 24), dtype=np.uint8)
    coeffs = rng.integers(0, 256, (64, 64), dtype=np.uint8)
    data = rng.integers(0, 256, (64, 4096), dtype=np.uint8)
    return {
        f"waterfill {rows}x8": lambda impl: impl.waterfill(b, a),
        "grid search N=4 steps=200": lambda impl: impl.grid(gb, ga, 200),
        f"gauss-jordan {rows // 10}x16x24 GF(256)": lambda impl: impl.reduce(aug.copy(), 16, field.byte_mul,
                                                                            field.inv_table),
        "matmul 64x64 by 64x4096 GF(256)": lambda impl: impl.matmul(coeffs, data, field.byte_mul),
    }


class Impl:
    def __init__(self, suffix):
        self.name = suffix
        self.waterfill = getattr(_waterfill, f"waterfill_batch_{suffix}")
        self.grid = getattr(_waterfill, f"grid_search_{suffix}")
        self.reduce = getattr(_elim, f"reduce_batch_{suffix}")
        self.matmul = getattr(_elim, f"matmul_{suffix}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--rows", type=int, default=20000)
    args = parser.parse_args()

    impls = [Impl("numpy")] + ([Impl("numba")] if HAVE_NUMBA else [])
    work = cases(args.rows, np.random.default_rng(0))
    print(f"{'kernel':40s} " + " ".join(f"{i.name:>10s}" for i in impls) + "   speedup")
    for label, call in work.items():
        best = []
        for impl in impls:
            call(impl)
            best.append(min(timeit.repeat(lambda: call(impl), number=1, repeat=args.repeat)))
        speed = f"{best[0] / best[1]:8.1f}x" if len(best) > 1 else "       -"
        print(f"{label:40s} " + " ".join(f"{t * 1e3:8.2f}ms" for t in best) + f"  {speed}")


if __name__ == "__main__":
    main()
