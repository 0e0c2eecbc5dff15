"""Time the compiled and numpy kernels on the same ring integration.

Usage: python benchmarks/bench_kernels.py [--t-end 100] [--repeat 3]
"""
import argparse
import time

import numpy as np

from cnoidal_traffic import _pykernels
from cnoidal_traffic.ov_model import OVParams
from cnoidal_traffic.simulate import initial_from_family
from cnoidal_traffic.steady import solve_m

try:
    from cnoidal_traffic import _ckernels
except ImportError:
    _ckernels = None


def run(kernels, y0, sol, t_end, t_step):
    p = sol.ov_params
    t_out = np.arange(0.0, t_end + 0.5 * t_step, t_step)
    return kernels.dopri5_ring(y0, 0.0, t_out, p.sensitivity, p.v_max, p.h_c, 1e-8, 1e-10, 1e-3, np.inf, 1e-4)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--t-end", type=float, default=100.0)
    ap.add_argument("--t-step", type=float, default=0.1)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    sol = solve_m(1.59, 1, 100, 3.5, OVParams(h=3.5))
    init = initial_from_family(sol)
    y0 = np.concatenate([init.headway, init.headway_rate])

    rows = []
    results = {}
    for name, mod in (("python", _pykernels), ("cython", _ckernels)):
        if mod is None:
            print(f"{name:>7}: unavailable")
            continue
        rhs_t, _ = best_of(lambda: [mod.ring_rhs(y0, 1.59, 2.0, 4.0) for _ in range(1000)], args.repeat)
        int_t, out = best_of(lambda: run(mod, y0, sol, args.t_end, args.t_step), args.repeat)
        results[name] = out
        rows.append((name, rhs_t / 1000 * 1e6, int_t, out[6], out[8]))
    print(f"{'backend':>7} {'rhs [us]':>10} {'integrate [s]':>14} {'steps':>6} {'rhs evals':>9}")
    for name, rhs_us, int_s, steps, nf in rows:
        print(f"{name:>7} {rhs_us:10.2f} {int_s:14.4f} {steps:6d} {nf:9d}")
    if len(results) == 2:
        diff = np.max(np.abs(results["python"][0] - results["cython"][0]))
        speedup = rows[0][2] / rows[1][2]
        print(f"max sample difference {diff:.3e}; integration speedup {speedup:.1f}x")


if __name__ == "__main__":
    main()
