"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The numba path is used when numba imports cleanly and the environment
variable ``AFDMSIM_DISABLE_NUMBA`` is unset (or set to ``0``/``false``).
Both paths are always importable as ``*_numba`` / ``*_numpy`` so tests and
the benchmark can compare them directly; the undecorated names dispatch.
The delay-Doppler correlation always takes the numpy path, which reduces to
a single matrix product.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLE = os.environ.get("AFDMSIM_DISABLE_NUMBA", "").strip().lower() not in ("", "0", "false", "no")

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]):
            return args[0]
        return lambda f: f


USE_NUMBA = HAVE_NUMBA and not _DISABLE

TWO_PI = 2.0 * np.pi


# --------------------------------------------------------------------------
# linear time-variant channel
# --------------------------------------------------------------------------

def ltv_apply_numpy(tx, gains, delays, dopplers, n_body):
    """r[n] = sum_i h_i exp(j2pi nu_i n / n_body) tx[n - l_i]; reads before 0 are zero."""
    tx = np.asarray(tx, dtype=np.complex128)
    n_total = tx.shape[0]
    n = np.arange(n_total)
    rx = np.zeros(n_total, dtype=np.complex128)
    for h, l, nu in zip(gains, delays, dopplers):
        l = int(l)
        rot = h * np.exp(1j * TWO_PI * nu * n[l:] / n_body)
        rx[l:] += rot * tx[: n_total - l]
    return rx


@njit(cache=True)
def ltv_apply_numba(tx, gains, delays, dopplers, n_body):
    n_total = tx.shape[0]
    rx = np.zeros(n_total, dtype=np.complex128)
    for i in range(gains.shape[0]):
        l = delays[i]
        w = TWO_PI * dopplers[i] / n_body
        h = gains[i]
        for n in range(l, n_total):
            ph = w * n
            rx[n] += h * complex(np.cos(ph), np.sin(ph)) * tx[n - l]
    return rx


def ltv_matrix_numpy(gains, delays, dopplers, n_total, n_body):
    """Dense (n_total x n_total) matrix of :func:`ltv_apply` over one frame."""
    H = np.zeros((n_total, n_total), dtype=np.complex128)
    n = np.arange(n_total)
    for h, l, nu in zip(gains, delays, dopplers):
        l = int(l)
        rows = n[l:]
        H[rows, rows - l] += h * np.exp(1j * TWO_PI * nu * rows / n_body)
    return H


@njit(cache=True)
def ltv_matrix_numba(gains, delays, dopplers, n_total, n_body):
    H = np.zeros((n_total, n_total), dtype=np.complex128)
    for i in range(gains.shape[0]):
        l = delays[i]
        w = TWO_PI * dopplers[i] / n_body
        h = gains[i]
        for n in range(l, n_total):
            ph = w * n
            H[n, n - l] += h * complex(np.cos(ph), np.sin(ph))
    return H


# --------------------------------------------------------------------------
# delay-Doppler cross-correlation
# --------------------------------------------------------------------------

def dd_correlation_numpy(rx, ref, delays, freqs):
    """C[d, v] = sum_n rx[n] conj(ref[n - delays[d]]) exp(-j2pi freqs[v] n).

    ``freqs`` are in cycles per sample; delays may be negative. Samples of
    ``ref`` outside ``[0, len(ref))`` are zero.
    """
    rx = np.asarray(rx, dtype=np.complex128)
    ref = np.asarray(ref, dtype=np.complex128)
    n_rx = rx.shape[0]
    n_ref = ref.shape[0]
    delays = np.asarray(delays, dtype=np.int64)
    n = np.arange(n_rx)
    idx = n[None, :] - delays[:, None]
    valid = (idx >= 0) & (idx < n_ref)
    shifted = np.where(valid, ref[np.clip(idx, 0, n_ref - 1)], 0.0)
    prod = rx[None, :] * np.conj(shifted)
    steer = np.exp(-1j * TWO_PI * np.outer(n, np.asarray(freqs, dtype=np.float64)))
    return prod @ steer


@njit(cache=True)
def dd_correlation_numba(rx, ref, delays, freqs):
    n_rx = rx.shape[0]
    n_ref = ref.shape[0]
    n_d = delays.shape[0]
    n_v = freqs.shape[0]
    steer = np.empty((n_rx, n_v), dtype=np.complex128)
    for n in range(n_rx):
        for v in range(n_v):
            ph = -TWO_PI * freqs[v] * n
            steer[n, v] = complex(np.cos(ph), np.sin(ph))
    out = np.zeros((n_d, n_v), dtype=np.complex128)
    for d in range(n_d):
        lo = max(0, delays[d])
        hi = min(n_rx, n_ref + delays[d])
        for n in range(lo, hi):
            p = rx[n] * np.conj(ref[n - delays[d]])
            for v in range(n_v):
                out[d, v] += p * steer[n, v]
    return out


# --------------------------------------------------------------------------
# dispatch
# --------------------------------------------------------------------------

def _channel_arrays(gains, delays, dopplers):
    return (
        np.ascontiguousarray(gains, dtype=np.complex128),
        np.ascontiguousarray(delays, dtype=np.int64),
        np.ascontiguousarray(dopplers, dtype=np.float64),
    )


def ltv_apply(tx, gains, delays, dopplers, n_body):
    g, l, nu = _channel_arrays(gains, delays, dopplers)
    tx = np.ascontiguousarray(tx, dtype=np.complex128)
    if USE_NUMBA:
        return ltv_apply_numba(tx, g, l, nu, float(n_body))
    return ltv_apply_numpy(tx, g, l, nu, float(n_body))


def ltv_matrix(gains, delays, dopplers, n_total, n_body):
    g, l, nu = _channel_arrays(gains, delays, dopplers)
    if USE_NUMBA:
        return ltv_matrix_numba(g, l, nu, int(n_total), float(n_body))
    return ltv_matrix_numpy(g, l, nu, int(n_total), float(n_body))


def dd_correlation(rx, ref, delays, freqs):
    rx = np.ascontiguousarray(rx, dtype=np.complex128)
    ref = np.ascontiguousarray(ref, dtype=np.complex128)
    delays = np.ascontiguousarray(delays, dtype=np.int64)
    freqs = np.ascontiguousarray(freqs, dtype=np.float64)
    # the numpy path is one BLAS matmul and beats the compiled loop (see the benchmark)
    return dd_correlation_numpy(rx, ref, delays, freqs)
