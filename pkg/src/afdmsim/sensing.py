"""Embedded-pilot channel estimation and on-grid radar parameter extraction.

A single DAFT-domain pilot at index ``m_p`` is spread by each path onto row
``m_p + nu - 2 N c1 l``. With a guard of zero symbols wide enough that no
data symbol reaches those rows, every on-grid path can be read off
directly.

Physical conversions are bistatic: ``range = c0 * l / B`` and
``velocity = nu * (B / N) * c0 / f_c``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .channel import SPEED_OF_LIGHT, DelayDopplerChannel, PathTap
from .transforms import ComplexSignal, frac_cycles
from .waveform import AfdmConfig, InfeasibleConfigError, orthogonality_feasible


def pilot_guard_width(cfg: AfdmConfig, l_max: int, alpha_max: int) -> int:
    """Guard half-width keeping every pilot observation row free of data."""
    q = 2 * cfg.n * cfg.chirp.c1
    return int(math.ceil(q * l_max - 1e-9)) + 2 * (alpha_max + cfg.guard)


@dataclass(frozen=True)
class PilotLayout:
    pilot_index: int
    guard: int
    amplitude: float = 1.0

    def __post_init__(self):
        if self.guard < 0:
            raise ValueError("guard half-width must be non-negative")
        if self.amplitude <= 0:
            raise ValueError("pilot amplitude must be positive")

    @classmethod
    def for_profile(cls, cfg: AfdmConfig, l_max: int, alpha_max: int, pilot_index: int = 0,
                    amplitude: float = 1.0) -> "PilotLayout":
        return cls(pilot_index % cfg.n, pilot_guard_width(cfg, l_max, alpha_max), amplitude)

    def _dist(self, n):
        d = (np.arange(n) - self.pilot_index) % n
        return np.minimum(d, n - d)

    def guard_indices(self, n: int) -> np.ndarray:
        d = self._dist(n)
        return np.flatnonzero((d > 0) & (d <= self.guard))

    def data_indices(self, n: int) -> np.ndarray:
        return np.flatnonzero(self._dist(n) > self.guard)

    def n_data(self, n: int) -> int:
        return self.data_indices(n).size

    def scale(self, n: int) -> float:
        """Factor bringing the frame energy (pilot + unit-energy data) to N."""
        return math.sqrt(n / (self.amplitude ** 2 + self.n_data(n)))

    def pilot_value(self, n: int) -> float:
        return self.amplitude * self.scale(n)


def insert_pilot(data, layout: PilotLayout, n: int) -> np.ndarray:
    """DAFT-domain frame: pilot, zero guard, data elsewhere, energy normalised to N."""
    if not 0 <= layout.pilot_index < n:
        raise ValueError("pilot index outside the frame")
    data = np.asarray(data, dtype=np.complex128).reshape(-1)
    idx = layout.data_indices(n)
    if data.size != idx.size:
        raise ValueError(f"layout holds {idx.size} data symbols, got {data.size}")
    frame = np.zeros(n, dtype=np.complex128)
    frame[layout.pilot_index] = layout.amplitude
    frame[idx] = data
    return frame * layout.scale(n)


def _pilot_response(cfg: AfdmConfig, m_p: int, l: int, alpha: int, row: int) -> complex:
    n, L = cfg.n, cfg.prefix_len
    c1, c2 = cfg.chirp.c1, cfg.chirp.c2
    cyc = frac_cycles(c1, l * l) + frac_cycles(c2, m_p * m_p - row * row) - (l * m_p % n) / n + alpha * L / n
    return complex(np.exp(2j * np.pi * cyc))


def estimate_channel(
    y,
    layout: PilotLayout,
    cfg: AfdmConfig,
    l_max: int,
    alpha_max: int,
    noise_var: float = 0.0,
    threshold: float | None = None,
) -> DelayDopplerChannel:
    """On-grid path estimate from the pilot's response region.

    ``threshold`` is an absolute magnitude on the received pilot rows; the
    default is ``3 sigma`` (or a numerical floor when noise-free). Gains are
    the least-squares fit of the detected taps' analytic pilot responses.
    """
    y = y.samples if isinstance(y, ComplexSignal) else np.asarray(y, dtype=np.complex128)
    n = cfg.n
    if y.shape != (n,):
        raise ValueError(f"expected a length-{n} DAFT-domain vector")
    q = 2 * n * cfg.chirp.c1
    if abs(q - round(q)) > 1e-9:
        raise ValueError("on-grid estimation needs 2 N c1 to be an integer")
    q = int(round(q))
    if layout.guard < pilot_guard_width(cfg, l_max, alpha_max) or not orthogonality_feasible(
        n, l_max, alpha_max, cfg.guard
    ):
        raise InfeasibleConfigError("pilot guard too small for the delay-Doppler profile")

    xp = layout.pilot_value(n)
    m_p = layout.pilot_index
    if threshold is None:
        threshold = 3.0 * math.sqrt(noise_var) if noise_var > 0 else 1e-9 * xp

    cand, rows, resp = [], [], []
    for l in range(l_max + 1):
        for a in range(-alpha_max, alpha_max + 1):
            row = (m_p + a - q * l) % n
            cand.append((l, a))
            rows.append(row)
            resp.append(xp * _pilot_response(cfg, m_p, l, a, row))
    rows = np.array(rows)
    resp = np.array(resp)
    hit = np.abs(y[rows]) > threshold
    if not hit.any():
        return DelayDopplerChannel((), l_max, alpha_max)

    # each detected tap lights one distinct row, so the LS system is diagonal
    Phi = np.zeros((n, int(hit.sum())), dtype=np.complex128)
    Phi[rows[hit], np.arange(hit.sum())] = resp[hit]
    gains, *_ = np.linalg.lstsq(Phi[rows[hit]], y[rows[hit]], rcond=None)
    taps = tuple(PathTap(g, l, float(a)) for g, (l, a) in zip(gains, np.array(cand)[hit]))
    return DelayDopplerChannel(taps, l_max, alpha_max)


# --------------------------------------------------------------------------
# radar processing
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ScattererEstimate:
    delay: int
    doppler: float
    gain: complex
    range_m: float
    velocity_mps: float

    def to_record(self) -> dict:
        return {
            "delay": self.delay,
            "doppler": self.doppler,
            "gain_re": self.gain.real,
            "gain_im": self.gain.imag,
            "range_m": self.range_m,
            "velocity_mps": self.velocity_mps,
        }


def to_physical(delay, doppler, n: int, carrier: float, bandwidth: float):
    """(bistatic range in m, velocity in m/s) of a delay/Doppler bin pair."""
    rng = SPEED_OF_LIGHT * delay / bandwidth
    vel = doppler * (bandwidth / n) * SPEED_OF_LIGHT / carrier
    return rng, vel


def scatterers_from_channel(ch: DelayDopplerChannel, n: int) -> list:
    out = []
    for p in ch.paths:
        r, v = to_physical(p.delay, p.doppler, n, ch.carrier, ch.bandwidth)
        out.append(ScattererEstimate(p.delay, p.doppler, p.gain, r, v))
    return out


@dataclass(frozen=True, eq=False)
class DelayDopplerMap:
    magnitude: np.ndarray   # normalised to peak 1
    values: np.ndarray      # raw complex correlation
    delays: np.ndarray      # samples
    dopplers: np.ndarray    # bins (cycles per n_body samples)
    n_body: int
    ref_energy: float


def matched_filter_map(rx, tx, delays, dopplers, n_body: int | None = None) -> DelayDopplerMap:
    """|sum_n rx[n] conj(tx[n - d]) exp(-j2pi v n / N)| over a delay x Doppler grid."""
    rx = rx.samples if isinstance(rx, ComplexSignal) else np.asarray(rx, dtype=np.complex128)
    tx = tx.samples if isinstance(tx, ComplexSignal) else np.asarray(tx, dtype=np.complex128)
    delays = np.asarray(delays, dtype=np.int64)
    dopplers = np.asarray(dopplers, dtype=np.float64)
    if delays.size == 0 or dopplers.size == 0:
        raise ValueError("delay and Doppler grids must be non-empty")
    n_body = tx.shape[0] if n_body is None else n_body
    C = kernels.dd_correlation(rx, tx, delays, dopplers / n_body)
    mag = np.abs(C)
    peak = mag.max()
    mag = mag / peak if peak > 0 else mag
    return DelayDopplerMap(mag, C, delays, dopplers, n_body, float(np.vdot(tx, tx).real))


def _parabolic(a, b, c):
    den = a - 2 * b + c
    return 0.0 if den == 0 else 0.5 * (a - c) / den


def estimate_targets(
    mf: DelayDopplerMap,
    threshold: float = 0.1,
    max_targets: int = 8,
    carrier: float = 50e9,
    bandwidth: float = 150e6,
    refine_doppler: bool = False,
) -> list:
    """Greedy on-grid peak picking with a local-maximum test and mask-out.

    ``refine_doppler`` adds a parabolic interpolation around each Doppler peak.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    mag = mf.magnitude
    work = mag.copy()
    nd, nv = mag.shape
    found = []
    while len(found) < max_targets:
        i, j = np.unravel_index(np.argmax(work), work.shape)
        if work[i, j] < threshold:
            break
        lo_i, hi_i = max(i - 1, 0), min(i + 2, nd)
        lo_j, hi_j = max(j - 1, 0), min(j + 2, nv)
        is_local_max = mag[i, j] >= mag[lo_i:hi_i, lo_j:hi_j].max()
        work[lo_i:hi_i, lo_j:hi_j] = 0.0
        if not is_local_max:
            continue
        nu = float(mf.dopplers[j])
        if refine_doppler and 0 < j < nv - 1:
            step = float(mf.dopplers[j + 1] - mf.dopplers[j])
            nu += step * _parabolic(mag[i, j - 1], mag[i, j], mag[i, j + 1])
        delay = int(mf.delays[i])
        gain = complex(mf.values[i, j] / mf.ref_energy) if mf.ref_energy > 0 else 0j
        r, v = to_physical(delay, nu, mf.n_body, carrier, bandwidth)
        found.append(ScattererEstimate(delay, nu, gain, r, v))
    return found
