"""Doubly-dispersive channel: LTV application, effective matrices and AWGN.

Doppler ``nu`` is expressed in cycles per N-sample frame body (bins), and
the time index runs over the whole prefixed frame starting at the first
prefix sample::

    r[n] = sum_i h_i exp(j2pi nu_i n / N) tx[n - l_i]

Reads before the start of the frame are zero; with ``prefix_len >= l_max``
these only land in the discarded prefix region.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import kernels
from .transforms import ComplexSignal, Domain, frac_cycles
from .waveform import (
    AfdmConfig,
    Waveform,
    add_prefix,
    demodulate_body,
    modulate_body,
    modulator_matrix,
    prefix_matrix,
    strip_prefix,
)

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class PathTap:
    gain: complex
    delay: int
    doppler: float = 0.0

    def __post_init__(self):
        if int(self.delay) != self.delay or self.delay < 0:
            raise ValueError(f"path delay must be a non-negative integer, got {self.delay!r}")
        object.__setattr__(self, "delay", int(self.delay))
        object.__setattr__(self, "gain", complex(self.gain))
        object.__setattr__(self, "doppler", float(self.doppler))


@dataclass(frozen=True)
class DelayDopplerChannel:
    paths: tuple
    l_max: int | None = None
    alpha_max: int | None = None
    carrier: float = 50e9
    bandwidth: float = 150e6

    def __post_init__(self):
        paths = tuple(p if isinstance(p, PathTap) else PathTap(*p) for p in self.paths)
        object.__setattr__(self, "paths", paths)
        if self.l_max is None:
            object.__setattr__(self, "l_max", max((p.delay for p in paths), default=0))
        if self.alpha_max is None:
            object.__setattr__(self, "alpha_max", int(math.ceil(max((abs(p.doppler) for p in paths), default=0.0))))
        for p in paths:
            if p.delay > self.l_max:
                raise ValueError(f"tap delay {p.delay} exceeds declared l_max={self.l_max}")
            if abs(p.doppler) > self.alpha_max + 0.5:
                raise ValueError(f"tap Doppler {p.doppler} exceeds declared alpha_max={self.alpha_max} + 0.5")

    @property
    def n_paths(self) -> int:
        return len(self.paths)

    @property
    def gains(self):
        return np.array([p.gain for p in self.paths], dtype=np.complex128)

    @property
    def delays(self):
        return np.array([p.delay for p in self.paths], dtype=np.int64)

    @property
    def dopplers(self):
        return np.array([p.doppler for p in self.paths], dtype=np.float64)

    @property
    def max_delay(self) -> int:
        return max((p.delay for p in self.paths), default=0)

    def scaled(self, factor) -> "DelayDopplerChannel":
        return DelayDopplerChannel(
            tuple(PathTap(p.gain * factor, p.delay, p.doppler) for p in self.paths),
            self.l_max, self.alpha_max, self.carrier, self.bandwidth,
        )

    def to_record(self) -> dict:
        return {
            "P": self.n_paths,
            "taps": [[p.gain.real, p.gain.imag, p.delay, p.doppler] for p in self.paths],
            "l_max": self.l_max,
            "alpha_max": self.alpha_max,
            "f_c": self.carrier,
            "B": self.bandwidth,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "DelayDopplerChannel":
        taps = rec["taps"]
        if rec.get("P", len(taps)) != len(taps):
            raise ValueError("channel record: P does not match the number of taps")
        return cls(
            tuple(PathTap(complex(re, im), int(l), float(nu)) for re, im, l, nu in taps),
            int(rec["l_max"]), int(rec["alpha_max"]), float(rec["f_c"]), float(rec["B"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_record(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "DelayDopplerChannel":
        return cls.from_record(json.loads(text))


def identity_channel(**kw) -> DelayDopplerChannel:
    return DelayDopplerChannel((PathTap(1.0, 0, 0.0),), l_max=0, alpha_max=0, **kw)


def _check_pairing(ch, prefix_len):
    if ch.max_delay > prefix_len:
        raise ValueError(f"channel delay {ch.max_delay} exceeds prefix length {prefix_len}")


def apply_channel(tx, ch: DelayDopplerChannel, prefix_len: int):
    """Pass a prefixed time-domain frame through the channel (noise-free).

    ``tx`` is a :class:`ComplexSignal` or 1-D array of length N + prefix_len.
    """
    wrapped = isinstance(tx, ComplexSignal)
    if wrapped and tx.domain is not Domain.TIME:
        raise ValueError("the channel acts on time-domain signals")
    arr = tx.samples if wrapped else np.asarray(tx, dtype=np.complex128)
    _check_pairing(ch, prefix_len)
    n_body = arr.shape[-1] - prefix_len
    if n_body < 1:
        raise ValueError("frame shorter than its prefix")
    rx = kernels.ltv_apply(arr, ch.gains, ch.delays, ch.dopplers, n_body)
    return ComplexSignal(rx, Domain.TIME) if wrapped else rx


def ltv_matrix(ch: DelayDopplerChannel, n_body: int, prefix_len: int) -> np.ndarray:
    """Dense (N+L) x (N+L) time-variant channel matrix over one frame."""
    _check_pairing(ch, prefix_len)
    return kernels.ltv_matrix(ch.gains, ch.delays, ch.dopplers, n_body + prefix_len, n_body)


# --------------------------------------------------------------------------
# effective channels
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EffectiveChannel:
    matrix: np.ndarray
    waveform: Waveform

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


@lru_cache(maxsize=32)
def _transceiver_matrices(cfg):
    M = modulator_matrix(cfg)
    T_mod = prefix_matrix(cfg) @ M
    T_demod = M.conj().T
    T_mod.setflags(write=False)
    T_demod.setflags(write=False)
    return T_mod, T_demod


def effective_matrix(ch: DelayDopplerChannel, cfg) -> EffectiveChannel:
    """Brute-force composition demod @ H_ltv @ (prefix @ mod) from dense matrices."""
    _check_pairing(ch, cfg.prefix_len)
    n, L = cfg.n, cfg.prefix_len
    T_mod, T_demod = _transceiver_matrices(cfg)
    H = ltv_matrix(ch, n, L)
    B = T_demod @ H[L:, :] @ T_mod
    return EffectiveChannel(B, cfg.waveform)


def effective_matrix_probe(ch: DelayDopplerChannel, cfg) -> EffectiveChannel:
    """Column-by-column probe through the fast modulate -> channel -> demodulate path."""
    n = cfg.n
    cols = np.empty((n, n), dtype=np.complex128)
    tx = add_prefix(modulate_body(np.eye(n, dtype=np.complex128), cfg), cfg)
    for k in range(n):
        rx = apply_channel(tx[k], ch, cfg.prefix_len)
        cols[:, k] = demodulate_body(strip_prefix(rx, cfg), cfg)
    return EffectiveChannel(cols, cfg.waveform)


def _dirichlet_sum(theta, n):
    """sum_{k=0}^{n-1} exp(j2pi k theta / n), elementwise."""
    theta = np.asarray(theta, dtype=np.float64)
    frac = np.mod(theta, n)
    near = np.minimum(frac, n - frac) < 1e-12
    num = np.exp(2j * np.pi * theta) - 1.0
    den = np.exp(2j * np.pi * theta / n) - 1.0
    with np.errstate(invalid="ignore", divide="ignore"):
        out = num / den
    return np.where(near, complex(n), out)


def afdm_effective_matrix_analytic(ch: DelayDopplerChannel, cfg: AfdmConfig) -> EffectiveChannel:
    """Closed-form AFDM effective channel, valid for integer and fractional Doppler.

    Entry (p, m) of a tap (h, l, nu)::

        h e^{j2pi nu L/N} / N * exp(j2pi (c1 l^2 + c2 (m^2 - p^2) - l m / N))
          * sum_k exp(j2pi k (m - p + nu - 2 N c1 l) / N)
    """
    _check_pairing(ch, cfg.prefix_len)
    n, L = cfg.n, cfg.prefix_len
    c1, c2 = cfg.chirp.c1, cfg.chirp.c2
    k = np.arange(n)
    p = k[:, None]
    m = k[None, :]
    sq = k * k
    B = np.zeros((n, n), dtype=np.complex128)
    for tap in ch.paths:
        l, nu = tap.delay, tap.doppler
        cyc = (
            frac_cycles(c1, l * l)
            + frac_cycles(c2, sq)[None, :]
            - frac_cycles(c2, sq)[:, None]
            - (l * m % n) / n
            + nu * L / n
        )
        B += tap.gain / n * np.exp(2j * np.pi * cyc) * _dirichlet_sum(m - p + nu - 2 * n * c1 * l, n)
    return EffectiveChannel(B, Waveform.AFDM)


def afdm_band_mask(ch: DelayDopplerChannel, cfg: AfdmConfig, widen: int = 0) -> np.ndarray:
    """Analytic support of the AFDM effective matrix for integer offsets.

    Row ``(m + round(nu) - round(2 N c1 l) + w) mod N`` of column ``m`` for
    ``|w| <= widen``.
    """
    n = cfg.n
    mask = np.zeros((n, n), dtype=bool)
    m = np.arange(n)
    for tap in ch.paths:
        off = int(round(tap.doppler)) - int(round(2 * n * cfg.chirp.c1 * tap.delay))
        for w in range(-widen, widen + 1):
            mask[(m + off + w) % n, m] = True
    return mask


def support_mask(eff, threshold: float = 1e-3) -> np.ndarray:
    """Entries with magnitude above ``threshold`` times the largest magnitude."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    B = eff.matrix if isinstance(eff, EffectiveChannel) else np.asarray(eff)
    mag = np.abs(B)
    peak = mag.max()
    if peak == 0:
        return np.zeros(B.shape, dtype=bool)
    return mag > threshold * peak


# --------------------------------------------------------------------------
# noise and random channels
# --------------------------------------------------------------------------

def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def noise_variance(snr_db: float) -> float:
    return 0.0 if math.isinf(snr_db) and snr_db > 0 else 10.0 ** (-snr_db / 10.0)


def add_awgn(r, snr_db: float, rng_seed=None):
    """Add CN(0, sigma^2) noise with sigma^2 = 10**(-snr_db/10); returns (signal, sigma^2)."""
    wrapped = isinstance(r, ComplexSignal)
    arr = r.samples if wrapped else np.asarray(r, dtype=np.complex128)
    var = noise_variance(snr_db)
    if var == 0.0:
        out = arr.copy()
    else:
        rng = _rng(rng_seed)
        w = rng.standard_normal(arr.shape) + 1j * rng.standard_normal(arr.shape)
        out = arr + math.sqrt(var / 2.0) * w
    return (ComplexSignal(out, r.domain) if wrapped else out), var


def random_channel(
    l_max: int,
    alpha_max: int,
    n_paths: int,
    fractional: bool = False,
    rng_seed=None,
    carrier: float = 50e9,
    bandwidth: float = 150e6,
) -> DelayDopplerChannel:
    """P taps at distinct (delay, rounded Doppler) grid points, sum |h|^2 = 1.

    Delays are uniform integers in [0, l_max]; Doppler is a uniform integer in
    [-alpha_max, alpha_max], or with ``fractional`` that integer plus a
    uniform offset in [-1/2, 1/2).
    """
    cells = (l_max + 1) * (2 * alpha_max + 1)
    if n_paths < 1 or n_paths > cells:
        raise ValueError(f"cannot place {n_paths} distinct taps on a {cells}-cell delay-Doppler grid")
    rng = _rng(rng_seed)
    picks = rng.choice(cells, size=n_paths, replace=False)
    delays = picks // (2 * alpha_max + 1)
    alphas = picks % (2 * alpha_max + 1) - alpha_max
    dopp = alphas.astype(np.float64)
    if fractional:
        dopp = dopp + rng.uniform(-0.5, 0.5, size=n_paths)
    g = rng.standard_normal(n_paths) + 1j * rng.standard_normal(n_paths)
    g = g / np.sqrt(np.sum(np.abs(g) ** 2))
    taps = tuple(PathTap(complex(h), int(l), float(nu)) for h, l, nu in zip(g, delays, dopp))
    return DelayDopplerChannel(taps, l_max, alpha_max, carrier, bandwidth)
