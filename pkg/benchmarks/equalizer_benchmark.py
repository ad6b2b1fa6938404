"""Time the Alamouti LMS kernel: numba-compiled versus pure Python.

The equalizer inner loop dominates sweep runtime, so this is the number that
matters when deciding whether to run with SHCSIM_DISABLE_NUMBA=1.

    python benchmarks/equalizer_benchmark.py [--blocks N] [--taps T]
"""

import argparse
import time

import numpy as np

from shcsim import _kernels
from shcsim.constellation import make_constellation


def make_inputs(n_blocks, n_taps, sps=2, seed=0):
    rng = np.random.default_rng(seed)
    n = n_blocks * 2 * sps
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    pad = n_taps + 2 * sps
    zeros = np.zeros(pad, dtype=np.complex128)
    const = make_constellation(16)
    train = const.points[rng.integers(0, 16, 2 * n_blocks)]
    return dict(
        branch_o=np.concatenate([zeros, x, zeros]),
        branch_e=np.concatenate([zeros, np.conj(x), zeros]),
        sps=sps,
        pad=pad,
        train_o=np.ascontiguousarray(train[0::2]),
        train_e=np.ascontiguousarray(train[1::2]),
        const_points=np.ascontiguousarray(const.points),
    )


def run_once(impl, inputs, n_blocks, n_taps):
    w = [np.zeros(n_taps, dtype=np.complex128) for _ in range(4)]
    p_state = np.array([1.0 + 0j, 1.0 + 0j])
    y_o = np.empty(n_blocks, dtype=np.complex128)
    y_e = np.empty(n_blocks, dtype=np.complex128)
    e_o = np.empty(n_blocks, dtype=np.complex128)
    e_e = np.empty(n_blocks, dtype=np.complex128)
    t0 = time.perf_counter()
    impl(
        inputs["branch_o"], inputs["branch_e"], n_blocks, inputs["sps"],
        inputs["pad"], w[0], w[1], w[2], w[3], p_state, 3e-3, 5e-2,
        n_blocks // 2, inputs["train_o"], inputs["train_e"],
        inputs["const_points"], 2, y_o, y_e, e_o, e_e,
    )
    return time.perf_counter() - t0


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--blocks", type=int, default=1 << 15)
    parser.add_argument("--taps", type=int, default=9)
    args = parser.parse_args()

    inputs = make_inputs(args.blocks, args.taps)
    symbols = 2 * args.blocks

    rows = []
    if _kernels.NUMBA_ENABLED:
        run_once(_kernels.alamouti_lms_numba, inputs, 64, args.taps)  # JIT warmup
        t = min(run_once(_kernels.alamouti_lms_numba, inputs, args.blocks, args.taps)
                for _ in range(3))
        rows.append(("numba @njit", t))
    else:
        print("numba path unavailable (SHCSIM_DISABLE_NUMBA set or numba missing)")
    t = run_once(_kernels.alamouti_lms_python, inputs, args.blocks, args.taps)
    rows.append(("pure python", t))

    print(f"\nAlamouti LMS, {symbols} symbols, {args.taps} taps per FIR:")
    for name, t in rows:
        print(f"  {name:12s} {t:9.4f} s   {symbols / t / 1e6:8.2f} Msym/s")
    if len(rows) == 2:
        print(f"  speedup      {rows[1][1] / rows[0][1]:9.1f} x")


if __name__ == "__main__":
    main()
