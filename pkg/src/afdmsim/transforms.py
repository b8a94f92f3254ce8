"""Unitary discrete transforms: DFT, DAFT/IDAFT and the discrete Fresnel transform.

Conventions
-----------
All transforms are unitary (``1/sqrt(N)`` in both directions). The DAFT
matrix is::

    A[m, n] = N**-0.5 * exp(-j2pi (c1 n**2 + c2 m**2 + n m / N))

so ``daft(s) = A @ s`` and ``idaft(x) = A.conj().T @ x``. The fast paths
factor ``A`` as chirp * FFT * chirp and run in O(N log N). The dense paths
are kept as the in-repo reference.

Functions accept either a :class:`ComplexSignal` (domain-checked, result
wrapped) or a plain array whose last axis is the transform axis (batched).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "Domain",
    "ComplexSignal",
    "ChirpParams",
    "AftParams",
    "AftKind",
    "aft_special_case",
    "dft_matrix",
    "idaft",
    "daft",
    "idaft_fast",
    "daft_fast",
    "idaft_matrix",
    "daft_matrix",
    "dfnt",
    "dfnt_matrix",
    "chirp",
]


class Domain(enum.Enum):
    TIME = "time"
    DAFT = "daft"
    FREQUENCY = "frequency"
    DELAY_DOPPLER = "delay_doppler"


@dataclass(frozen=True, eq=False)
class ComplexSignal:
    """A complex sample vector tagged with the domain it lives in."""

    samples: np.ndarray
    domain: Domain

    def __post_init__(self):
        s = np.array(self.samples, dtype=np.complex128)
        if s.ndim != 1 or s.size == 0:
            raise ValueError("ComplexSignal needs a non-empty 1-D sample vector")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def length(self) -> int:
        return self.samples.shape[0]

    def __len__(self):
        return self.length

    def energy(self) -> float:
        return float(np.vdot(self.samples, self.samples).real)


def _unwrap(x, domain: Domain | None):
    """Return (array, is_signal). Checks the domain tag when given a signal."""
    if isinstance(x, ComplexSignal):
        if domain is not None and x.domain is not domain:
            raise ValueError(f"expected a {domain.value}-domain signal, got {x.domain.value}")
        arr = x.samples
        wrapped = True
    else:
        arr = np.asarray(x, dtype=np.complex128)
        wrapped = False
    if arr.ndim == 0:
        raise ValueError("transform input must be at least 1-D")
    if not np.all(np.isfinite(arr)):
        raise ValueError("transform input contains non-finite samples")
    return arr, wrapped


def _wrap(arr, wrapped: bool, domain: Domain):
    return ComplexSignal(arr, domain) if wrapped else arr


def _check_length(arr, n):
    if n is not None and arr.shape[-1] != n:
        raise ValueError(f"length mismatch: expected {n}, got {arr.shape[-1]}")
    if arr.shape[-1] < 2:
        raise ValueError("transform length must be >= 2")


# --------------------------------------------------------------------------
# parameters
# --------------------------------------------------------------------------

def _real_scalar(name, v):
    if isinstance(v, complex) or np.iscomplexobj(v):
        raise TypeError(f"{name} must be real, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        raise ValueError(f"{name} must be finite")
    return v


@dataclass(frozen=True)
class ChirpParams:
    """Chirp rates of the DAFT.

    ``c1`` (cycles/sample**2) is stored reduced modulo 1, since
    ``exp(j2pi c1 n**2)`` is 1-periodic in ``c1`` for integer ``n``.
    ``c2`` (cycles/index**2) is stored as given.
    """

    c1: float = 0.0
    c2: float = 0.0

    def __post_init__(self):
        c1 = _real_scalar("c1", self.c1) % 1.0
        if c1 == 1.0:  # -tiny % 1 rounds up to 1
            c1 = 0.0
        object.__setattr__(self, "c1", c1)
        object.__setattr__(self, "c2", _real_scalar("c2", self.c2))

    def with_c1(self, c1: float) -> "ChirpParams":
        return ChirpParams(c1, self.c2)


_UNIMODULAR_TOL = 1e-12


@dataclass(frozen=True)
class AftParams:
    """Real (a, b, c, d) parameters of the affine Fourier transform, ad - bc = 1."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        for name in "abcd":
            object.__setattr__(self, name, _real_scalar(name, getattr(self, name)))
        if abs(self.determinant - 1.0) > _UNIMODULAR_TOL:
            raise ValueError(f"AFT parameters must satisfy ad - bc = 1, got {self.determinant!r}")

    @property
    def determinant(self) -> float:
        return self.a * self.d - self.b * self.c

    def as_tuple(self):
        return (self.a, self.b, self.c, self.d)


class AftKind(enum.Enum):
    FOURIER = "fourier"
    FRACTIONAL = "fractional"
    FRESNEL = "fresnel"
    IDENTITY = "identity"


def aft_special_case(kind: AftKind | str, value: float | None = None) -> AftParams:
    """AFT parameters of a named special case.

    ``value`` is the FrFT angle (radians, in [0, 2pi)) for ``FRACTIONAL`` and
    the propagation distance for ``FRESNEL``; it is ignored otherwise.
    """
    kind = AftKind(kind)
    if kind is AftKind.FOURIER:
        return AftParams(0.0, 1.0, -1.0, 0.0)
    if kind is AftKind.IDENTITY:
        return AftParams(1.0, 0.0, 0.0, 1.0)
    if value is None:
        raise ValueError(f"{kind.value} transform needs a parameter")
    if kind is AftKind.FRACTIONAL:
        alpha = _real_scalar("alpha", value)
        if not 0.0 <= alpha < 2 * math.pi:
            raise ValueError("FrFT angle must lie in [0, 2pi)")
        ca, sa = math.cos(alpha), math.sin(alpha)
        return AftParams(ca, sa, -sa, ca)
    z = _real_scalar("z", value)
    return AftParams(1.0, z, 0.0, 1.0)


# --------------------------------------------------------------------------
# chirp tables
# --------------------------------------------------------------------------

def frac_cycles(c: float, ints) -> np.ndarray:
    """(c * ints) mod 1 for integer ``ints``, with the product formed in extended precision.

    Plain float64 loses about eps * |c * ints| cycles, which at N = 256
    already shows up at the 1e-10 level in the transform outputs.
    """
    prod = np.longdouble(c) * np.asarray(ints, dtype=np.longdouble)
    return np.mod(prod, 1).astype(np.float64)


@lru_cache(maxsize=256)
def _chirp_cached(n: int, c: float) -> np.ndarray:
    k = np.arange(n, dtype=np.int64)
    cycles = frac_cycles(c, k * k)
    out = np.exp(2j * np.pi * cycles)
    out.setflags(write=False)
    return out


def chirp(n: int, c: float) -> np.ndarray:
    """``exp(j2pi c k**2)`` for k = 0..n-1 (read-only, cached)."""
    return _chirp_cached(int(n), float(c))


# --------------------------------------------------------------------------
# dense reference matrices
# --------------------------------------------------------------------------

def dft_matrix(n: int) -> np.ndarray:
    """Unitary forward DFT matrix."""
    k = np.arange(n)
    return np.exp(-2j * np.pi * (np.outer(k, k) % n) / n) / math.sqrt(n)


def daft_matrix(n: int, p: ChirpParams) -> np.ndarray:
    """Dense forward DAFT matrix ``A``."""
    ki = np.arange(n)
    sq = ki * ki
    # rows m, columns n
    cycles = (
        frac_cycles(p.c1, sq)[None, :]
        + frac_cycles(p.c2, sq)[:, None]
        + (np.outer(ki, ki) % n) / n
    )
    return np.exp(-2j * np.pi * cycles) / math.sqrt(n)


def idaft_matrix(n: int, p: ChirpParams) -> np.ndarray:
    """Dense inverse DAFT matrix ``A^H``."""
    return daft_matrix(n, p).conj().T


# --------------------------------------------------------------------------
# DAFT / IDAFT
# --------------------------------------------------------------------------

def idaft(x, p: ChirpParams, n: int | None = None):
    """Inverse DAFT by dense matrix product (reference path)."""
    arr, wrapped = _unwrap(x, Domain.DAFT)
    _check_length(arr, n)
    out = arr @ idaft_matrix(arr.shape[-1], p).T
    return _wrap(out, wrapped, Domain.TIME)


def daft(s, p: ChirpParams, n: int | None = None):
    """Forward DAFT by dense matrix product (reference path)."""
    arr, wrapped = _unwrap(s, Domain.TIME)
    _check_length(arr, n)
    out = arr @ daft_matrix(arr.shape[-1], p).T
    return _wrap(out, wrapped, Domain.DAFT)


def idaft_fast(x, p: ChirpParams, n: int | None = None):
    """Inverse DAFT as pre-chirp(c2), unitary IDFT, post-chirp(c1)."""
    arr, wrapped = _unwrap(x, Domain.DAFT)
    _check_length(arr, n)
    N = arr.shape[-1]
    out = np.fft.ifft(arr * chirp(N, p.c2), axis=-1, norm="ortho") * chirp(N, p.c1)
    return _wrap(out, wrapped, Domain.TIME)


def daft_fast(s, p: ChirpParams, n: int | None = None):
    """Forward DAFT; exact inverse of :func:`idaft_fast`."""
    arr, wrapped = _unwrap(s, Domain.TIME)
    _check_length(arr, n)
    N = arr.shape[-1]
    out = np.fft.fft(arr * chirp(N, p.c1).conj(), axis=-1, norm="ortho") * chirp(N, p.c2).conj()
    return _wrap(out, wrapped, Domain.DAFT)


# --------------------------------------------------------------------------
# discrete Fresnel transform
# --------------------------------------------------------------------------

def _check_even(n):
    if n % 2:
        raise ValueError(f"the discrete Fresnel transform is defined for even N only, got {n}")


def dfnt_matrix(n: int) -> np.ndarray:
    """Gamma[m, n] = N**-0.5 e^{-j pi/4} exp(j pi (m - n)**2 / N), even N."""
    _check_even(n)
    k = np.arange(n)
    d2 = (k[:, None] - k[None, :]) ** 2 % (2 * n)
    return np.exp(-0.25j * np.pi) * np.exp(1j * np.pi * d2 / n) / math.sqrt(n)


@lru_cache(maxsize=64)
def _dfnt_eigs(n: int) -> np.ndarray:
    # Gamma is circulant for even N; its first column diagonalises under the DFT
    k = np.arange(n)
    g = np.exp(-0.25j * np.pi) * np.exp(1j * np.pi * (k * k % (2 * n)) / n) / math.sqrt(n)
    eig = np.fft.fft(g)
    eig.setflags(write=False)
    return eig


def dfnt(x, inverse: bool = False):
    """Discrete Fresnel transform via its circulant FFT diagonalisation.

    ``inverse=True`` applies the conjugate transpose (the OCDM modulator).
    Wrapped forward outputs are tagged ``DAFT``, the chirp-symbol domain
    shared with AFDM.
    """
    arr, wrapped = _unwrap(x, None)
    N = arr.shape[-1]
    _check_even(N)
    eig = _dfnt_eigs(N)
    if inverse:
        eig = eig.conj()
    out = np.fft.ifft(np.fft.fft(arr, axis=-1) * eig, axis=-1)
    if wrapped:
        return ComplexSignal(out, Domain.TIME if inverse else Domain.DAFT)
    return out
