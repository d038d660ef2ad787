"""Compare the compiled commutator kernels with the numpy fallback.

    python benchmarks/bench_kernels.py --sizes 2,4,8 --members 8,16,32
"""
import argparse
import timeit

import numpy as np

from modpolar import _pykernels

try:
    from modpolar._ext import commutators as _cy
except ImportError:
    _cy = None


def stack(rng, count, d):
    return rng.standard_normal((count, d, d)) + 1j * rng.standard_normal((count, d, d))


def best_of(fn, repeat):
    number = 1
    while timeit.timeit(fn, number=number) < 0.05:
        number *= 2
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", default="2,4,8", help="Matrix sizes d.")
    ap.add_argument("--members", default="8,16,32", help="Family sizes (stack length).")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    print(f"{'d':>3} {'members':>8} {'numpy [us]':>12} {'cython [us]':>12} {'speedup':>8}")
    for d in (int(x) for x in args.sizes.split(",")):
        for m in (int(x) for x in args.members.split(",")):
            a = stack(rng, m, d)
            t_py = best_of(lambda: _pykernels.self_commutator_fro(a), args.repeat)
            if _cy is None:
                print(f"{d:>3} {m:>8} {t_py * 1e6:>12.1f} {'n/a':>12} {'n/a':>8}")
                continue
            ref = _pykernels.self_commutator_fro(a)
            got = _cy.self_commutator_fro(a)
            assert np.allclose(ref, got, rtol=1e-12, atol=1e-12), "backends disagree"
            t_cy = best_of(lambda: _cy.self_commutator_fro(a), args.repeat)
            print(f"{d:>3} {m:>8} {t_py * 1e6:>12.1f} {t_cy * 1e6:>12.1f} {t_py / t_cy:>7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
