"""Time the compiled tensor-grid MGF kernel against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]
"""
from __future__ import annotations

import argparse
import math
import time

import numpy as np

from corrsir import _kernels_py
from corrsir.fading import XI
from corrsir.numerics import SQRT_PI, gauss_hermite
from corrsir.scenario import build_sum_model, hex_uma_scene

try:
    from corrsir import _kernels as compiled
except ImportError:
    compiled = None

CASES = [(6, 6), (6, 8), (4, 16), (3, 32), (6, 10)]


def kernel_args(k: int, order: int):
    _, model, _ = build_sum_model(hex_uma_scene(ue_polar=(225.0, 0.0), p_default=0.5))
    sub = model.permuted(range(k))
    rule = gauss_hermite(order)
    return (1.0, np.ascontiguousarray((sub.mu - sub.mu.max()) / XI),
            np.ascontiguousarray(math.sqrt(2.0) / XI * sub.chol), np.ascontiguousarray(sub.p),
            rule.nodes, np.ascontiguousarray(rule.weights / SQRT_PI))


def best_of(func, args, repeat: int) -> tuple[float, float]:
    times, value = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        value = func(*args)
        times.append(time.perf_counter() - t0)
    return min(times), value


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    print(f"{'K':>2} {'N':>3} {'terms':>10} {'numpy ms':>10} {'cython ms':>10} {'speedup':>8} {'rel diff':>9}")
    for k, n in CASES:
        a = kernel_args(k, n)
        t_py, v_py = best_of(_kernels_py.mgf_tensor_sum, a, args.repeat)
        if compiled is None:
            print(f"{k:>2} {n:>3} {n ** k:>10} {t_py * 1e3:>10.2f} {'n/a':>10}")
            continue
        t_c, v_c = best_of(compiled.mgf_tensor_sum, a, args.repeat)
        print(f"{k:>2} {n:>3} {n ** k:>10} {t_py * 1e3:>10.2f} {t_c * 1e3:>10.2f} "
              f"{t_py / t_c:>7.1f}x {abs(v_py - v_c) / abs(v_c):>9.1e}")
    if compiled is None:
        print("compiled extension not built; only the numpy timings are shown")


if __name__ == "__main__":
    main()
