"""Compare the numba and numpy backends of the quadratic-form kernel.

    python benchmarks/bench_kernels.py [--mus 2000] [--repeat 5]
"""

import argparse
import math
import time

import numpy as np

from tpgate import TrapConfig, chain_modes, kernels
from tpgate.optimizer import OptimizationProblem


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--mus", type=int, default=2000, help="detunings per call")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    cfg = TrapConfig()
    modes = chain_modes(cfg)
    mus = np.linspace(9.0, 11.0, args.mus)
    print(f"{'m':>3} {'numba [s]':>10} {'numpy [s]':>10} {'speedup':>8} {'max rel diff':>13}")
    for m in (1, 3, 5, 8, 16):
        pb = OptimizationProblem(cfg, modes, (1, 2), 5 * 2 * math.pi, m)
        w_m, w_g = pb.couplings()
        args_k = (mus, modes.frequencies, w_m, w_g, pb.tau, m)
        # compile outside the timed region
        kernels.quadratic_forms(mus[:2], *args_k[1:], backend="numba")
        t_nb = best_of(lambda: kernels.quadratic_forms(*args_k, backend="numba"), args.repeat)
        t_np = best_of(lambda: kernels.quadratic_forms(*args_k, backend="numpy"), args.repeat)
        a = kernels.quadratic_forms(*args_k, backend="numba")
        b = kernels.quadratic_forms(*args_k, backend="numpy")
        diff = max(float(np.max(np.abs(x - y)) / np.max(np.abs(y))) for x, y in zip(a, b))
        print(f"{m:>3} {t_nb:>10.4f} {t_np:>10.4f} {t_np / t_nb:>8.1f} {diff:>13.1e}")


if __name__ == "__main__":
    main()
