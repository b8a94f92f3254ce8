"""Modulators and demodulators for AFDM, OFDM, OCDM and OTFS.

Every waveform maps a length-``N`` native-domain symbol vector to a
time-domain body of ``N`` samples through a unitary transform, then
prepends a prefix of ``prefix_len`` samples. AFDM uses the chirp-periodic
prefix (CPP); the others use a plain cyclic prefix.

The ``*_body`` helpers work on arrays with the symbol axis last and are
what the Monte Carlo harness calls; the ``modulate_*`` functions return a
:class:`Frame`.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .transforms import (
    ChirpParams,
    ComplexSignal,
    Domain,
    daft_fast,
    dfnt,
    dfnt_matrix,
    dft_matrix,
    frac_cycles,
    idaft_fast,
    idaft_matrix,
)


class InfeasibleConfigError(ValueError):
    """The delay-Doppler spread does not fit in the configured frame."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class Waveform(enum.Enum):
    OFDM = "ofdm"
    OCDM = "ocdm"
    AFDM = "afdm"
    OTFS = "otfs"


NATIVE_DOMAIN = {
    Waveform.OFDM: Domain.FREQUENCY,
    Waveform.OCDM: Domain.DAFT,
    Waveform.AFDM: Domain.DAFT,
    Waveform.OTFS: Domain.DELAY_DOPPLER,
}


def _check_prefix(n, prefix_len):
    if prefix_len < 0:
        raise ValueError("prefix length must be non-negative")
    if prefix_len >= n:
        raise ValueError(f"prefix length {prefix_len} must be smaller than N={n}")


@dataclass(frozen=True)
class AfdmConfig:
    n: int
    chirp: ChirpParams = field(default_factory=ChirpParams)
    guard: int = 0
    prefix_len: int = 0

    waveform = Waveform.AFDM

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError("AFDM needs N >= 2 subcarriers")
        if self.guard < 0:
            raise ValueError("guard width must be non-negative")
        _check_prefix(self.n, self.prefix_len)


@dataclass(frozen=True)
class OfdmConfig:
    n: int
    prefix_len: int = 0

    waveform = Waveform.OFDM

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("OFDM needs N >= 2 subcarriers")
        _check_prefix(self.n, self.prefix_len)


@dataclass(frozen=True)
class OcdmConfig:
    n: int
    prefix_len: int = 0

    waveform = Waveform.OCDM

    def __post_init__(self):
        if self.n < 2 or self.n % 2:
            raise ValueError("OCDM needs an even N >= 2")
        _check_prefix(self.n, self.prefix_len)


@dataclass(frozen=True)
class OtfsConfig:
    """Rectangular-pulse OTFS on a K (Doppler) x L (delay) grid, one frame CP."""

    doppler_bins: int
    delay_bins: int
    prefix_len: int = 0

    waveform = Waveform.OTFS

    def __post_init__(self):
        if self.doppler_bins < 1 or self.delay_bins < 1:
            raise ValueError("OTFS grid dimensions must be positive")
        if self.n > 1:
            _check_prefix(self.n, self.prefix_len)
        elif self.prefix_len:
            raise ValueError("a 1x1 OTFS grid cannot carry a prefix")

    @property
    def n(self) -> int:
        return self.doppler_bins * self.delay_bins


WaveformConfig = Union[AfdmConfig, OfdmConfig, OcdmConfig, OtfsConfig]


@dataclass(frozen=True, eq=False)
class Frame:
    payload: ComplexSignal
    tx_time: ComplexSignal
    waveform: Waveform
    prefix_len: int

    @property
    def body(self) -> np.ndarray:
        return self.tx_time.samples[self.prefix_len:]


# --------------------------------------------------------------------------
# prefixes
# --------------------------------------------------------------------------

def prefix_phase(n: int, prefix_len: int, c1: float = 0.0) -> np.ndarray:
    """Phase applied to the copied tail: exp(-j2pi c1 (N**2 + 2 N k)), k = -L..-1."""
    k = np.arange(-prefix_len, 0)
    if c1 == 0.0:
        return np.ones(prefix_len, dtype=np.complex128)
    return np.exp(-2j * np.pi * frac_cycles(c1, n * n + 2 * n * k))


def _cfg_prefix_phase(cfg) -> np.ndarray:
    c1 = cfg.chirp.c1 if isinstance(cfg, AfdmConfig) else 0.0
    return prefix_phase(cfg.n, cfg.prefix_len, c1)


def add_prefix(body, cfg) -> np.ndarray:
    """Prepend the waveform's prefix to body samples (symbol axis last)."""
    body = np.asarray(body, dtype=np.complex128)
    L = cfg.prefix_len
    if body.shape[-1] != cfg.n:
        raise ValueError(f"body length {body.shape[-1]} does not match N={cfg.n}")
    if L == 0:
        return body.copy()
    head = body[..., cfg.n - L:] * _cfg_prefix_phase(cfg)
    return np.concatenate([head, body], axis=-1)


def strip_prefix(r, cfg) -> np.ndarray:
    r = r.samples if isinstance(r, ComplexSignal) else np.asarray(r, dtype=np.complex128)
    if r.shape[-1] != cfg.n + cfg.prefix_len:
        raise ValueError(
            f"received frame length {r.shape[-1]} does not match N + prefix = {cfg.n + cfg.prefix_len}"
        )
    return r[..., cfg.prefix_len:]


def prepend_cpp(s, cfg: AfdmConfig):
    """Chirp-periodic prefix; a plain CP when c1 == 0."""
    if isinstance(s, ComplexSignal):
        if s.domain is not Domain.TIME:
            raise ValueError("prefix insertion needs a time-domain signal")
        return ComplexSignal(add_prefix(s.samples, cfg), Domain.TIME)
    return add_prefix(s, cfg)


def check_prefix(frame: Frame, cfg, tol: float = 1e-10) -> bool:
    """True if the frame's prefix region follows the waveform's prefix rule."""
    tx = frame.tx_time.samples
    expected = add_prefix(tx[cfg.prefix_len:], cfg)
    return bool(np.max(np.abs(tx - expected), initial=0.0) <= tol)


# --------------------------------------------------------------------------
# chirp parameter selection and orthogonality
# --------------------------------------------------------------------------

def orthogonality_feasible(n: int, l_max: int, alpha_max: int, guard: int) -> bool:
    """Whether N bins hold l_max + 1 disjoint delay blocks of width 2(alpha_max + guard) + 1."""
    return (2 * (alpha_max + guard) + 1) * (l_max + 1) <= n


def c1_optimal(alpha_max: int, guard: int, n: int, l_max: int | None = None) -> float:
    """c1 = (2(alpha_max + guard) + 1) / (2N).

    With ``l_max`` given, raises :class:`InfeasibleConfigError` when the
    delay blocks do not fit in ``n`` DAFT bins.
    """
    if alpha_max < 0 or guard < 0:
        raise ValueError("alpha_max and guard must be non-negative")
    if l_max is not None and not orthogonality_feasible(n, l_max, alpha_max, guard):
        need = (2 * (alpha_max + guard) + 1) * (l_max + 1)
        raise InfeasibleConfigError(
            f"N={n} too small for l_max={l_max}, alpha_max={alpha_max}, guard={guard}: needs {need} bins"
        )
    c1 = (2 * (alpha_max + guard) + 1) / (2 * n)
    if not 0.0 < c1 < 1.0:
        raise InfeasibleConfigError(f"c1={c1} outside (0, 1); N={n} is too small")
    return c1


def band_offset(delay: int, doppler: float, n: int, c1: float) -> float:
    """DAFT-domain shift of one path: received index = (sent index + offset) mod N.

    With the channel convention ``exp(+j2pi nu n / N)`` the offset is
    ``nu - 2 N c1 l``. Integer for integer Doppler when ``2 N c1`` is an integer.
    """
    off = doppler - 2 * n * c1 * delay
    return float(np.mod(off, n))


def _circ_dist(a, b, n):
    d = abs(a - b) % n
    return min(d, n - d)


@dataclass
class OrthogonalityReport:
    ok: bool
    overlaps: list = field(default_factory=list)  # [((l, a), (l', a')), ...]
    offsets: dict = field(default_factory=dict)   # (l, a) -> offset

    def __bool__(self):
        return self.ok

    def describe(self) -> str:
        if self.ok:
            return "delay blocks are disjoint"
        pairs = ", ".join(f"{p} <-> {q}" for p, q in self.overlaps[:10])
        more = f" (+{len(self.overlaps) - 10} more)" if len(self.overlaps) > 10 else ""
        return f"{len(self.overlaps)} overlapping tap pairs: {pairs}{more}"


def validate_orthogonality(cfg: AfdmConfig, l_max: int, alpha_max: int, taps=None) -> OrthogonalityReport:
    """Check that taps at different delays occupy disjoint DAFT-index bands.

    Each tap ``(l, a)`` sits at ``band_offset(l, a)`` widened by ``cfg.guard``
    on each side. Taps sharing a delay form one block and are only required
    to have distinct offsets. ``taps`` defaults to the whole integer grid
    ``[0, l_max] x [-alpha_max, alpha_max]``.
    """
    n, c1, g = cfg.n, cfg.chirp.c1, cfg.guard
    if taps is None:
        taps = [(l, a) for l in range(l_max + 1) for a in range(-alpha_max, alpha_max + 1)]
    taps = [(int(l), int(a)) for l, a in taps]
    offsets = {t: band_offset(t[0], t[1], n, c1) for t in taps}
    overlaps = []
    for p, q in itertools.combinations(taps, 2):
        d = _circ_dist(offsets[p], offsets[q], n)
        # footprint of a tap is [off - g - 1/2, off + g + 1/2)
        width = 1 if p[0] == q[0] else 2 * g + 1
        if d < width - 1e-9:
            overlaps.append((p, q))
    return OrthogonalityReport(ok=not overlaps, overlaps=overlaps, offsets=offsets)


# --------------------------------------------------------------------------
# body transforms
# --------------------------------------------------------------------------

def _otfs_grid(x, cfg: OtfsConfig):
    x = np.asarray(x, dtype=np.complex128)
    K, L = cfg.doppler_bins, cfg.delay_bins
    if x.shape[-2:] == (K, L):
        return x
    if x.shape[-1] != K * L:
        raise ValueError(f"OTFS payload must be a {K}x{L} grid or length {K * L}")
    return x.reshape(x.shape[:-1] + (K, L))


def modulate_body(x, cfg) -> np.ndarray:
    """Native-domain symbols -> time-domain body (symbol axis last, batched)."""
    if isinstance(cfg, OtfsConfig):
        grid = _otfs_grid(x, cfg)
        # inverse Zak: unitary IDFT along Doppler, then block-wise serialisation
        s = np.fft.ifft(grid, axis=-2, norm="ortho")
        return s.reshape(s.shape[:-2] + (cfg.n,))
    x = np.asarray(x, dtype=np.complex128)
    if x.shape[-1] != cfg.n:
        raise ValueError(f"payload length {x.shape[-1]} does not match N={cfg.n}")
    if isinstance(cfg, AfdmConfig):
        return idaft_fast(x, cfg.chirp)
    if isinstance(cfg, OfdmConfig):
        return np.fft.ifft(x, axis=-1, norm="ortho")
    if isinstance(cfg, OcdmConfig):
        return dfnt(x, inverse=True)
    raise TypeError(f"unknown waveform config {type(cfg).__name__}")


def demodulate_body(s, cfg) -> np.ndarray:
    """Time-domain body -> native-domain symbols; exact inverse of :func:`modulate_body`."""
    s = np.asarray(s, dtype=np.complex128)
    if s.shape[-1] != cfg.n:
        raise ValueError(f"body length {s.shape[-1]} does not match N={cfg.n}")
    if isinstance(cfg, AfdmConfig):
        return daft_fast(s, cfg.chirp)
    if isinstance(cfg, OfdmConfig):
        return np.fft.fft(s, axis=-1, norm="ortho")
    if isinstance(cfg, OcdmConfig):
        return dfnt(s)
    if isinstance(cfg, OtfsConfig):
        grid = s.reshape(s.shape[:-1] + (cfg.doppler_bins, cfg.delay_bins))
        y = np.fft.fft(grid, axis=-2, norm="ortho")
        return y.reshape(s.shape)
    raise TypeError(f"unknown waveform config {type(cfg).__name__}")


def modulator_matrix(cfg) -> np.ndarray:
    """Dense N x N body modulator built from closed-form kernels, not the fast paths."""
    n = cfg.n
    if isinstance(cfg, AfdmConfig):
        return idaft_matrix(n, cfg.chirp)
    if isinstance(cfg, OfdmConfig):
        return dft_matrix(n).conj().T
    if isinstance(cfg, OcdmConfig):
        return dfnt_matrix(n).conj().T
    if isinstance(cfg, OtfsConfig):
        K, L = cfg.doppler_bins, cfg.delay_bins
        # sample (j, l) of block j <- symbol (k, l): exp(+j2pi jk/K)/sqrt(K)
        return np.kron(dft_matrix(K).conj().T, np.eye(L))
    raise TypeError(f"unknown waveform config {type(cfg).__name__}")


def prefix_matrix(cfg) -> np.ndarray:
    """(N + L) x N matrix inserting the prefix in front of a body."""
    n, L = cfg.n, cfg.prefix_len
    P = np.zeros((n + L, n), dtype=np.complex128)
    P[L:, :] = np.eye(n)
    phase = _cfg_prefix_phase(cfg)
    for k in range(L):
        P[k, n - L + k] = phase[k]
    return P


# --------------------------------------------------------------------------
# frame-level modulators
# --------------------------------------------------------------------------

def _payload(x, n, domain):
    arr = x.samples if isinstance(x, ComplexSignal) else np.asarray(x, dtype=np.complex128).reshape(-1)
    if arr.shape[-1] != n:
        raise ValueError(f"payload length {arr.shape[-1]} does not match N={n}")
    return ComplexSignal(arr, domain)


def modulate(x, cfg) -> Frame:
    payload = _payload(x, cfg.n, NATIVE_DOMAIN[cfg.waveform])
    tx = add_prefix(modulate_body(payload.samples, cfg), cfg)
    return Frame(payload, ComplexSignal(tx, Domain.TIME), cfg.waveform, cfg.prefix_len)


def demodulate(r, cfg) -> ComplexSignal:
    if isinstance(r, ComplexSignal) and r.domain is not Domain.TIME:
        raise ValueError("demodulation needs a time-domain signal")
    y = demodulate_body(strip_prefix(r, cfg), cfg)
    return ComplexSignal(y, NATIVE_DOMAIN[cfg.waveform])


def modulate_afdm(x, cfg: AfdmConfig) -> Frame:
    return modulate(x, cfg)


def demodulate_afdm(r, cfg: AfdmConfig) -> ComplexSignal:
    return demodulate(r, cfg)


def modulate_ofdm(x, n: int, cp_len: int = 0) -> Frame:
    return modulate(x, OfdmConfig(n, cp_len))


def demodulate_ofdm(r, n: int, cp_len: int = 0) -> ComplexSignal:
    return demodulate(r, OfdmConfig(n, cp_len))


def modulate_ocdm(x, n: int, cp_len: int = 0) -> Frame:
    return modulate(x, OcdmConfig(n, cp_len))


def demodulate_ocdm(r, n: int, cp_len: int = 0) -> ComplexSignal:
    return demodulate(r, OcdmConfig(n, cp_len))


def modulate_otfs(x, cfg: OtfsConfig, cp_len: int | None = None) -> Frame:
    """``x`` is a (K, L) delay-Doppler grid (Doppler rows) or its row-major flattening."""
    if cp_len is not None:
        cfg = OtfsConfig(cfg.doppler_bins, cfg.delay_bins, cp_len)
    flat = _otfs_grid(x.samples if isinstance(x, ComplexSignal) else x, cfg).reshape(-1)
    return modulate(flat, cfg)


def demodulate_otfs(r, cfg: OtfsConfig, cp_len: int | None = None, as_grid: bool = True):
    if cp_len is not None:
        cfg = OtfsConfig(cfg.doppler_bins, cfg.delay_bins, cp_len)
    y = demodulate(r, cfg)
    if as_grid:
        return y.samples.reshape(cfg.doppler_bins, cfg.delay_bins)
    return y


# --------------------------------------------------------------------------
# AFDM as precoded OFDM
# --------------------------------------------------------------------------

def precoder_matrix(cfg: AfdmConfig) -> np.ndarray:
    """P = DFT @ IDAFT: maps DAFT-domain symbols onto OFDM subcarriers."""
    return dft_matrix(cfg.n) @ idaft_matrix(cfg.n, cfg.chirp)


def afdm_as_precoded_ofdm(x, cfg: AfdmConfig) -> Frame:
    """OFDM frame carrying ``precoder_matrix(cfg) @ x`` with a plain CP."""
    payload = _payload(x, cfg.n, Domain.DAFT)
    frame = modulate_ofdm(precoder_matrix(cfg) @ payload.samples, cfg.n, cfg.prefix_len)
    return Frame(payload, frame.tx_time, Waveform.OFDM, cfg.prefix_len)


def precoded_equivalence(x, cfg: AfdmConfig) -> dict:
    """Compare precoded-OFDM and native AFDM frames: body and prefix errors separately."""
    a = modulate_afdm(x, cfg).tx_time.samples
    b = afdm_as_precoded_ofdm(x, cfg).tx_time.samples
    L = cfg.prefix_len
    return {
        "body_max_err": float(np.max(np.abs(a[L:] - b[L:]))),
        "prefix_max_err": float(np.max(np.abs(a[:L] - b[:L]), initial=0.0)),
    }


def global_phase_fit(a, b):
    """Least-squares unit-modulus phase aligning ``b`` to ``a``; returns (theta, max residual)."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    theta = float(np.angle(np.vdot(b, a)))
    return theta, float(np.max(np.abs(a - np.exp(1j * theta) * b)))
