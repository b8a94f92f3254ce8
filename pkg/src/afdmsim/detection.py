"""Gray-labelled symbol mapping and linear equalisation."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

from .channel import EffectiveChannel


class SingularChannelError(np.linalg.LinAlgError):
    pass


def _gray(k):
    return k ^ (k >> 1)


@dataclass(frozen=True)
class SymbolMap:
    """Unit-energy Gray-labelled constellation: BPSK or square QAM.

    For QAM the first half of each label's bits selects the in-phase level
    and the second half the quadrature level, each axis Gray coded, so for
    QPSK ``00 -> (1 + 1j) / sqrt(2)``.
    """

    order: int = 4

    def __post_init__(self):
        M = self.order
        if M < 2 or M & (M - 1):
            raise ValueError(f"modulation order must be a power of two >= 2, got {M}")
        if M != 2 and math.isqrt(M) ** 2 != M:
            raise ValueError(f"only BPSK and square QAM are supported, got M={M}")

    @property
    def bits_per_symbol(self) -> int:
        return self.order.bit_length() - 1

    @cached_property
    def constellation(self) -> np.ndarray:
        """Point for each integer label (label bits MSB first)."""
        M = self.order
        if M == 2:
            return np.array([1.0 + 0j, -1.0 + 0j])
        side = math.isqrt(M)
        half = self.bits_per_symbol // 2
        # level index whose Gray code is g, levels descending so label 0 sits at +
        levels = np.arange(side - 1, -side, -2, dtype=np.float64)
        inv_gray = np.empty(side, dtype=np.int64)
        inv_gray[_gray(np.arange(side))] = np.arange(side)
        labels = np.arange(M)
        i_lvl = levels[inv_gray[labels >> half]]
        q_lvl = levels[inv_gray[labels & (side - 1)]]
        pts = i_lvl + 1j * q_lvl
        return pts / math.sqrt(np.mean(np.abs(pts) ** 2))

    def min_distance(self) -> float:
        c = self.constellation
        d = np.abs(c[:, None] - c[None, :])
        return float(d[d > 0].min())


QPSK = SymbolMap(4)


def map_bits(bits, smap: SymbolMap = QPSK) -> np.ndarray:
    """Map a bit array (last axis) to symbols, MSB-first within each label."""
    bits = np.asarray(bits)
    k = smap.bits_per_symbol
    if bits.shape[-1] % k:
        raise ValueError(f"bit count {bits.shape[-1]} not divisible by log2(M)={k}")
    groups = bits.reshape(bits.shape[:-1] + (-1, k)).astype(np.int64)
    labels = groups @ (1 << np.arange(k - 1, -1, -1))
    return smap.constellation[labels]


def demap_symbols(symbols, smap: SymbolMap = QPSK) -> np.ndarray:
    """Hard minimum-distance decisions back to bits."""
    y = np.asarray(symbols, dtype=np.complex128)
    labels = np.argmin(np.abs(y[..., None] - smap.constellation) ** 2, axis=-1)
    k = smap.bits_per_symbol
    bits = (labels[..., None] >> np.arange(k - 1, -1, -1)) & 1
    return bits.reshape(y.shape[:-1] + (-1,)).astype(np.int8)


class EqualizerKind(enum.Enum):
    ZF = "zf"
    LMMSE = "lmmse"


@dataclass(frozen=True)
class Equalizer:
    kind: EqualizerKind = EqualizerKind.LMMSE
    noise_var: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", EqualizerKind(self.kind))
        if self.noise_var < 0:
            raise ValueError("noise variance must be non-negative")
        if self.kind is EqualizerKind.LMMSE and self.noise_var <= 0:
            raise ValueError("LMMSE needs a positive noise variance")


def equalize(y, eff, eq: Equalizer) -> np.ndarray:
    """ZF: H^-1 y. LMMSE: H^H (H H^H + s2 I)^-1 y via a Cholesky factorisation."""
    H = eff.matrix if isinstance(eff, EffectiveChannel) else np.asarray(eff, dtype=np.complex128)
    y = np.asarray(y, dtype=np.complex128)
    if H.ndim != 2 or H.shape[0] != H.shape[1] or H.shape[1] != y.shape[0]:
        raise ValueError(f"dimension mismatch: H {H.shape}, y {y.shape}")
    if not (np.all(np.isfinite(H)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite channel or observation")
    if eq.kind is EqualizerKind.ZF:
        if np.linalg.cond(H) > 1e12:
            raise SingularChannelError("effective channel is singular; zero-forcing undefined")
        return np.linalg.solve(H, y)
    G = H @ H.conj().T
    G[np.diag_indices_from(G)] += eq.noise_var
    factor = scipy.linalg.cho_factor(G, lower=True, check_finite=False)
    return H.conj().T @ scipy.linalg.cho_solve(factor, y, check_finite=False)


class LmmseBank:
    """LMMSE for one channel at many noise levels from a single factorisation.

    With ``H H^H = U diag(lam) U^H`` the estimate is
    ``H^H U diag(1 / (lam + s2)) U^H y``.
    """

    def __init__(self, H):
        self.H = np.asarray(H, dtype=np.complex128)
        self.lam, self.U = np.linalg.eigh(self.H @ self.H.conj().T)

    def __call__(self, y, noise_var: float) -> np.ndarray:
        u = (self.U.conj().T @ y) / (self.lam + noise_var)
        return self.H.conj().T @ (self.U @ u)
