"""Time the numba kernels against their numpy fallbacks, and the fast IDAFT against the dense one.

Run with ``python3 benchmarks/bench_kernels.py``. Both kernel paths are
called directly, so the ``AFDMSIM_DISABLE_NUMBA`` flag does not matter here.
"""

import timeit

import numpy as np

from afdmsim import kernels
from afdmsim.transforms import ChirpParams, idaft, idaft_fast


def best_of(fn, repeat=5, number=None):
    if number is None:
        number = max(1, int(0.2 / max(timeit.timeit(fn, number=1), 1e-7)))
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def row(name, t_numpy, t_fast, fast_label="numba"):
    print(f"{name:<34} numpy {t_numpy * 1e3:9.3f} ms   {fast_label} {t_fast * 1e3:9.3f} ms   "
          f"x{t_numpy / t_fast:7.1f}")


def main():
    rng = np.random.default_rng(0)
    n, L, p = 1024, 16, 4
    g = rng.standard_normal(p) + 1j * rng.standard_normal(p)
    l = rng.integers(0, L + 1, p).astype(np.int64)
    nu = rng.uniform(-4, 4, p)
    tx = rng.standard_normal(n + L) + 1j * rng.standard_normal(n + L)
    kernels.ltv_apply_numba(tx, g, l, nu, float(n))
    kernels.ltv_matrix_numba(g, l, nu, n + L, float(n))

    row(f"ltv_apply N={n} P={p}",
        best_of(lambda: kernels.ltv_apply_numpy(tx, g, l, nu, float(n))),
        best_of(lambda: kernels.ltv_apply_numba(tx, g, l, nu, float(n))))
    row(f"ltv_matrix N={n} P={p}",
        best_of(lambda: kernels.ltv_matrix_numpy(g, l, nu, n + L, float(n)), repeat=3),
        best_of(lambda: kernels.ltv_matrix_numba(g, l, nu, n + L, float(n)), repeat=3))

    s = rng.standard_normal(128) + 1j * rng.standard_normal(128)
    delays = np.arange(-127, 128)
    freqs = np.arange(-32, 32.001, 0.125) / 128
    kernels.dd_correlation_numba(s, s, delays, freqs)
    row("dd_correlation 255 x 513",
        best_of(lambda: kernels.dd_correlation_numpy(s, s, delays, freqs), repeat=3),
        best_of(lambda: kernels.dd_correlation_numba(s, s, delays, freqs), repeat=3))

    n = 4096
    cp = ChirpParams(3.0 / (2 * n), 1.0 / (2 * np.pi * n))
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    idaft_fast(x, cp)
    row(f"idaft N={n} (dense vs chirp-FFT)",
        best_of(lambda: idaft(x, cp), repeat=2, number=1),
        best_of(lambda: idaft_fast(x, cp)), fast_label="fast ")


if __name__ == "__main__":
    main()
