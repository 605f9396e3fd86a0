"""Benchmark the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--pool 200000] [--repeat 3]
"""

import argparse
import time

import numpy as np

from sparsebandit import random_sparse_instance
from sparsebandit._kernels import HAVE_SPEEDUPS, _fallback
from sparsebandit.net import build_separated_net, sphere_pool
from sparsebandit.param_elim import build_candidate_sets

if HAVE_SPEEDUPS:
    from sparsebandit._kernels import _speedups
else:
    _speedups = None


def timeit(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_greedy(pool_size, repeat):
    pool = sphere_pool(2, pool_size, seed=0)
    sep = 0.025
    t_fb, out_fb = timeit(lambda: _fallback.greedy_pack(pool, sep), repeat)
    print(f"greedy_pack  pool={pool_size:>8}  fallback {t_fb * 1e3:9.1f} ms "
          f"({len(out_fb)} accepted)")
    if _speedups is not None:
        t_c, out_c = timeit(lambda: _speedups.greedy_pack(pool, sep), repeat)
        assert np.array_equal(out_fb, out_c)
        print(f"{'':24}  compiled {t_c * 1e3:9.1f} ms  "
              f"speedup x{t_fb / t_c:.1f}")


def bench_pair_scan(repeat):
    inst = random_sparse_instance(6, 2, 30, 0.1, seed=0)
    net = build_separated_net(2, 0.1, seed=0, pool_size=50_000)
    cand = build_candidate_sets(inst.features, net)
    alive = np.ones((cand.n_subsets, cand.n_net), dtype=np.uint8)
    pairs = [(m, t) for m in range(cand.n_subsets)
             for t in range(0, cand.n_net, 8)]

    def scan(fn):
        def run():
            out = []
            for m, t in pairs:
                out.append(fn(cand.projections, cand.anchors, alive, m, t,
                              cand.epsilon))
            return out
        return run

    t_fb, out_fb = timeit(scan(_fallback.pair_first_violation), repeat)
    per = t_fb / len(pairs) * 1e6
    print(f"pair_scan    {len(pairs):>4} scans  fallback {t_fb * 1e3:9.1f} ms "
          f"({per:.0f} us/scan)")
    if _speedups is not None:
        t_c, out_c = timeit(scan(_speedups.pair_first_violation), repeat)
        assert out_fb == out_c
        print(f"{'':24}  compiled {t_c * 1e3:9.1f} ms  "
              f"speedup x{t_fb / t_c:.1f}")


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--pool", type=int, default=200_000)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    print(f"compiled extension available: {HAVE_SPEEDUPS}")
    bench_greedy(args.pool, args.repeat)
    bench_pair_scan(args.repeat)


if __name__ == "__main__":
    main()
