"""Experiment harnesses: BER Monte Carlo, ambiguity function, PAPR and key mismatch.

Randomness is counter-derived: trial ``t`` of an experiment seeded with
``seed`` draws everything from ``np.random.default_rng([seed, tag, t])``.
Results are integer error counts summed over trials, so they do not depend
on how trials are spread across worker threads.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.signal

from . import kernels
from .channel import DelayDopplerChannel, apply_channel, effective_matrix, identity_channel, random_channel
from .detection import QPSK, LmmseBank, SymbolMap, demap_symbols, map_bits
from .waveform import (
    AfdmConfig,
    Waveform,
    add_prefix,
    demodulate_body,
    modulate_body,
    strip_prefix,
)

# stream tags keep experiments on disjoint counter-based RNG streams
_TAG_BER = 1
_TAG_PAPR = 2
_TAG_SECURITY = 3


class InsufficientStatisticsError(ValueError):
    pass


def fingerprint(obj) -> str:
    """Short stable hash of a JSON-serialisable config description."""
    blob = json.dumps(obj, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def describe_cfg(cfg) -> dict:
    d = {"waveform": cfg.waveform.value, "n": cfg.n, "prefix_len": cfg.prefix_len}
    if isinstance(cfg, AfdmConfig):
        d.update(c1=cfg.chirp.c1, c2=cfg.chirp.c2, guard=cfg.guard)
    elif cfg.waveform is Waveform.OTFS:
        d.update(doppler_bins=cfg.doppler_bins, delay_bins=cfg.delay_bins)
    return d


@dataclass(frozen=True)
class ChannelProfile:
    l_max: int
    alpha_max: int
    n_paths: int
    fractional: bool = False
    carrier: float = 50e9
    bandwidth: float = 150e6

    def draw(self, rng) -> DelayDopplerChannel:
        if self.n_paths == 0:
            return identity_channel(carrier=self.carrier, bandwidth=self.bandwidth)
        return random_channel(
            self.l_max, self.alpha_max, self.n_paths, self.fractional, rng, self.carrier, self.bandwidth
        )

    def as_dict(self) -> dict:
        return {
            "l_max": self.l_max,
            "alpha_max": self.alpha_max,
            "n_paths": self.n_paths,
            "fractional": self.fractional,
            "carrier": self.carrier,
            "bandwidth": self.bandwidth,
        }


IDENTITY_PROFILE = ChannelProfile(0, 0, 0)


# --------------------------------------------------------------------------
# BER
# --------------------------------------------------------------------------

@dataclass
class BerCurve:
    waveform: str
    snr_db: list
    ber: list
    trials: list
    bit_errors: list
    bits: list
    fingerprint: dict = field(default_factory=dict)

    def point(self, snr):
        i = self.snr_db.index(snr)
        return self.ber[i]


def _ber_trial(t, seed, cfgs, profile, snr_db, active, smap):
    """Bit-error counts [waveform, snr] for one trial (zero where inactive)."""
    rng = np.random.default_rng([seed, _TAG_BER, t])
    n, L = cfgs[0].n, cfgs[0].prefix_len
    ch = profile.draw(rng)
    k = smap.bits_per_symbol
    bits = rng.integers(0, 2, size=n * k, dtype=np.int8)
    x = map_bits(bits, smap)
    w = (rng.standard_normal(n + L) + 1j * rng.standard_normal(n + L)) / math.sqrt(2.0)
    errs = np.zeros((len(cfgs), len(snr_db)), dtype=np.int64)
    for i, cfg in enumerate(cfgs):
        bank = LmmseBank(effective_matrix(ch, cfg).matrix)
        rx = apply_channel(add_prefix(modulate_body(x, cfg), cfg), ch, L)
        y0 = demodulate_body(strip_prefix(rx, cfg), cfg)
        z = demodulate_body(strip_prefix(w, cfg), cfg)
        for j, snr in enumerate(snr_db):
            if not active[j]:
                continue
            var = 10.0 ** (-snr / 10.0)
            xh = bank(y0 + math.sqrt(var) * z, var)
            errs[i, j] = int(np.count_nonzero(demap_symbols(xh, smap) != bits))
    return errs


def run_ber(
    cfgs,
    profile: ChannelProfile,
    snr_db,
    trials: int,
    seed: int = 0,
    smap: SymbolMap = QPSK,
    min_bits: int = 0,
    target_errors: int = 500,
    batch: int = 64,
    threads: int = 1,
    progress=None,
) -> list:
    """Monte Carlo BER with common random numbers across waveforms and SNR points.

    Each trial draws one channel, one payload and one unit noise vector, and
    reuses them for every waveform and every SNR (noise scaled per SNR).
    Perfect CSI and LMMSE equalisation are assumed. An SNR point stops
    accumulating, at a batch boundary, once it has ``min_bits`` bits and
    ``target_errors`` errors for every waveform; ``trials`` caps it.
    """
    if trials <= 0:
        raise ValueError("trials must be positive")
    cfgs = list(cfgs)
    n, L = cfgs[0].n, cfgs[0].prefix_len
    for c in cfgs:
        if c.n != n or c.prefix_len != L:
            raise ValueError("all waveforms must share N and the prefix length")
    if profile.l_max > L:
        raise ValueError(f"prefix length {L} shorter than the channel's l_max={profile.l_max}")
    snr_db = [float(s) for s in snr_db]
    bits_per_trial = n * smap.bits_per_symbol
    n_snr = len(snr_db)
    errs = np.zeros((len(cfgs), n_snr), dtype=np.int64)
    done = np.zeros(n_snr, dtype=np.int64)
    active = np.ones(n_snr, dtype=bool)

    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        t0 = 0
        while t0 < trials and active.any():
            ts = range(t0, min(t0 + batch, trials))
            snap = active.copy()
            args = (seed, cfgs, profile, snr_db, snap, smap)
            if pool is None:
                results = [_ber_trial(t, *args) for t in ts]
            else:
                results = list(pool.map(lambda t: _ber_trial(t, *args), ts))
            for r in results:
                errs += r
            done[snap] += len(ts)
            t0 = ts.stop
            enough = (done * bits_per_trial >= min_bits) & (errs.min(axis=0) >= target_errors)
            active &= ~enough
            if progress is not None:
                progress(t0, active)
    finally:
        if pool is not None:
            pool.shutdown()

    fp = {
        "profile": profile.as_dict(),
        "modulation_order": smap.order,
        "seed": seed,
        "detector": "lmmse",
        "snr_axis": "Es/N0 dB",
    }
    curves = []
    for i, cfg in enumerate(cfgs):
        bits = (done * bits_per_trial).tolist()
        curves.append(
            BerCurve(
                waveform=cfg.waveform.value,
                snr_db=snr_db,
                ber=[e / b if b else float("nan") for e, b in zip(errs[i].tolist(), bits)],
                trials=done.tolist(),
                bit_errors=errs[i].tolist(),
                bits=bits,
                fingerprint=dict(fp, **describe_cfg(cfg)),
            )
        )
    return curves


def diversity_slope(curve: BerCurve, snr_window, min_errors: int = 100) -> float:
    """Diversity order: minus the LS slope of log10(BER) against SNR_dB / 10."""
    lo, hi = snr_window
    pts = [(s, b, e) for s, b, e in zip(curve.snr_db, curve.ber, curve.bit_errors) if lo <= s <= hi]
    if len(pts) < 3:
        raise InsufficientStatisticsError(f"{curve.waveform}: only {len(pts)} points in window {snr_window}")
    thin = [s for s, _, e in pts if e < min_errors]
    if thin:
        raise InsufficientStatisticsError(f"{curve.waveform}: fewer than {min_errors} errors at {thin} dB")
    s = np.array([p[0] for p in pts]) / 10.0
    b = np.log10([p[1] for p in pts])
    slope = np.polyfit(s, b, 1)[0]
    return float(-slope)


# --------------------------------------------------------------------------
# ambiguity function
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AmbiguitySurface:
    delays: np.ndarray        # samples at rate fs
    dopplers: np.ndarray      # Hz
    magnitude: np.ndarray     # |A| / max |A|
    fs: float

    def index_of(self, delay=0, doppler=0.0):
        i = int(np.flatnonzero(self.delays == delay)[0])
        j = int(np.argmin(np.abs(self.dopplers - doppler)))
        return i, j


def ambiguity(s, delays, dopplers_hz, fs: float) -> AmbiguitySurface:
    """|sum_n s[n] conj(s[n - tau]) exp(-j2pi nu n / fs)|, normalised to peak 1."""
    s = np.asarray(getattr(s, "samples", s), dtype=np.complex128)
    if not np.any(s):
        raise ValueError("ambiguity of a zero-energy signal is undefined")
    delays = np.asarray(delays, dtype=np.int64)
    dopplers_hz = np.asarray(dopplers_hz, dtype=np.float64)
    C = kernels.dd_correlation(s, s, delays, dopplers_hz / fs)
    mag = np.abs(C)
    return AmbiguitySurface(delays, dopplers_hz, mag / mag.max(), float(fs))


def ambiguity_cuts(surface: AmbiguitySurface):
    """(zero-Doppler cut over delay, zero-delay cut over Doppler)."""
    i, j = surface.index_of(0, 0.0)
    return surface.magnitude[:, j].copy(), surface.magnitude[i, :].copy()


def peak_sidelobe_ratio_db(cut) -> float:
    """Peak over the highest sample outside the main lobe (bounded by the first minima)."""
    cut = np.asarray(cut, dtype=np.float64)
    k = int(np.argmax(cut))
    lo = k
    while lo > 0 and cut[lo - 1] < cut[lo]:
        lo -= 1
    hi = k
    while hi < cut.size - 1 and cut[hi + 1] < cut[hi]:
        hi += 1
    side = np.concatenate([cut[:lo], cut[hi + 1:]])
    if side.size == 0 or side.max() <= 0:
        return float("inf")
    return float(20 * np.log10(cut[k] / side.max()))


def sidelobe_ceiling_db(cut) -> float:
    """Highest sidelobe relative to the peak, in dB (<= 0)."""
    return -peak_sidelobe_ratio_db(cut)


def sensing_waveform(cfg, oversample: int = 2, symbols=None) -> np.ndarray:
    """Frame body for unit sensing symbols, band-limited resampled by ``oversample``."""
    x = np.ones(cfg.n, dtype=np.complex128) if symbols is None else np.asarray(symbols, dtype=np.complex128)
    body = modulate_body(x, cfg)
    if oversample == 1:
        return body
    return scipy.signal.resample(body, oversample * cfg.n)


# --------------------------------------------------------------------------
# PAPR
# --------------------------------------------------------------------------

def papr(frame) -> float:
    """Peak-to-average power ratio of the frame body, in dB."""
    body = frame.body if hasattr(frame, "body") else np.asarray(frame, dtype=np.complex128)
    p = np.abs(body) ** 2
    out = 10 * np.log10(p.max(axis=-1) / p.mean(axis=-1))
    return float(out) if np.ndim(out) == 0 else out


@dataclass
class CcdfCurve:
    waveform: str
    threshold_db: np.ndarray
    ccdf: np.ndarray
    papr_db: np.ndarray       # sorted samples

    def level_at(self, prob: float) -> float:
        """PAPR level exceeded with probability ``prob``."""
        return float(np.quantile(self.papr_db, 1.0 - prob, method="higher"))


def papr_ccdf(cfg, smap: SymbolMap = QPSK, trials: int = 10_000, seed: int = 0,
              thresholds_db=None, chunk: int = 4096) -> CcdfCurve:
    """Empirical CCDF P(PAPR > x) over random payloads (deterministic per seed)."""
    vals = []
    k = smap.bits_per_symbol
    for c0 in range(0, trials, chunk):
        m = min(chunk, trials - c0)
        rng = np.random.default_rng([seed, _TAG_PAPR, c0])
        bits = rng.integers(0, 2, size=(m, cfg.n * k), dtype=np.int8)
        vals.append(papr(modulate_body(map_bits(bits, smap), cfg)))
    v = np.sort(np.concatenate(vals))
    if thresholds_db is None:
        thresholds_db = np.arange(0.0, 14.01, 0.25)
    thresholds_db = np.asarray(thresholds_db, dtype=np.float64)
    ccdf = 1.0 - np.searchsorted(v, thresholds_db, side="right") / v.size
    return CcdfCurve(cfg.waveform.value, thresholds_db, ccdf, v)


# --------------------------------------------------------------------------
# chirp parameters as a shared key
# --------------------------------------------------------------------------

@dataclass
class SecurityCurve:
    offsets: list
    ber: list
    bit_errors: list
    bits: int
    snr_db: float
    fingerprint: dict = field(default_factory=dict)


def security_experiment(cfg: AfdmConfig, offsets, snr_db: float, trials: int, seed: int = 0,
                        channel_profile: ChannelProfile = IDENTITY_PROFILE,
                        smap: SymbolMap = QPSK) -> SecurityCurve:
    """BER of receivers demodulating with ``c1 + offset`` (offset 0 is the legitimate one).

    Every receiver sees the same frames, channels and noise, and equalises
    with the effective channel it believes in: its own DAFT and the true
    physical channel.
    """
    offsets = [float(o) for o in offsets]
    n, L = cfg.n, cfg.prefix_len
    var = 10.0 ** (-snr_db / 10.0)
    k = smap.bits_per_symbol
    rx_cfgs = [AfdmConfig(n, cfg.chirp.with_c1(cfg.chirp.c1 + o), cfg.guard, L) for o in offsets]
    errs = np.zeros(len(offsets), dtype=np.int64)
    for t in range(trials):
        rng = np.random.default_rng([seed, _TAG_SECURITY, t])
        ch = channel_profile.draw(rng)
        bits = rng.integers(0, 2, size=n * k, dtype=np.int8)
        w = (rng.standard_normal(n + L) + 1j * rng.standard_normal(n + L)) * math.sqrt(var / 2.0)
        rx = apply_channel(add_prefix(modulate_body(map_bits(bits, smap), cfg), cfg), ch, L) + w
        for i, rc in enumerate(rx_cfgs):
            y = demodulate_body(strip_prefix(rx, rc), rc)
            xh = LmmseBank(effective_matrix(ch, rc).matrix)(y, var)
            errs[i] += int(np.count_nonzero(demap_symbols(xh, smap) != bits))
    bits_total = trials * n * k
    return SecurityCurve(
        offsets=offsets,
        ber=(errs / bits_total).tolist(),
        bit_errors=errs.tolist(),
        bits=bits_total,
        snr_db=float(snr_db),
        fingerprint=dict(describe_cfg(cfg), seed=seed, profile=channel_profile.as_dict(),
                         modulation_order=smap.order),
    )
