"""Command-line experiment runner.

Usage::

    afdmsim run --config fig2.cfg --out results/ [--seed N] [--threads N]
    afdmsim describe --config fig2.cfg

Configs are INI files (``configparser`` syntax). Unknown sections or keys
are rejected before anything is computed. See ``README.md`` for the full
key reference. The output directory is taken from ``--out``, else from the
``AFDMSIM_OUT`` environment variable, else from ``[experiment] out``.

Exit codes: 0 success, 2 config error, 3 infeasible physics, 4 I/O error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import os
import shutil
import sys
import tempfile
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    ChannelProfile,
    InsufficientStatisticsError,
    ambiguity,
    ambiguity_cuts,
    diversity_slope,
    fingerprint,
    papr_ccdf,
    peak_sidelobe_ratio_db,
    run_ber,
    security_experiment,
    sensing_waveform,
)
from .channel import SPEED_OF_LIGHT, add_awgn, apply_channel, effective_matrix, support_mask
from .detection import SymbolMap, map_bits
from .sensing import (
    PilotLayout,
    estimate_channel,
    estimate_targets,
    insert_pilot,
    matched_filter_map,
    pilot_guard_width,
    scatterers_from_channel,
)
from .transforms import ChirpParams
from .waveform import (
    AfdmConfig,
    InfeasibleConfigError,
    OcdmConfig,
    OfdmConfig,
    OtfsConfig,
    Waveform,
    add_prefix,
    c1_optimal,
    demodulate_body,
    modulate_body,
    orthogonality_feasible,
    strip_prefix,
    validate_orthogonality,
)

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_IO = 0, 2, 3, 4
OUT_ENV = "AFDMSIM_OUT"
KINDS = ("ber", "ambiguity", "papr", "sensing", "security", "effective-channel")


class ConfigError(ValueError):
    pass


# --------------------------------------------------------------------------
# schema
# --------------------------------------------------------------------------

def _int(s):
    return int(s)


def _float(s):
    v = float(s)
    if math.isnan(v):
        raise ValueError("NaN not allowed")
    return v


def _bool(s):
    t = s.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _floats(s):
    return [_float(x) for x in s.replace(",", " ").split()]


def _words(s):
    return [x.strip().lower() for x in s.replace(",", " ").split() if x.strip()]


def _c1(s):
    return "optimal" if s.strip().lower() == "optimal" else _float(s)


def _c2(s):
    return "irrational" if s.strip().lower() == "irrational" else _float(s)


# section -> key -> (parser, default); default None means required
SCHEMA = {
    "experiment": {
        "kind": (str, None),
        "waveforms": (_words, "afdm"),
        "seed": (_int, "0"),
        "trials": (_int, "1000"),
        "out": (str, "results"),
    },
    "frame": {
        "n": (_int, "64"),
        "prefix_len": (_int, "-1"),
        "doppler_bins": (_int, "0"),
        "delay_bins": (_int, "0"),
        "c1": (_c1, "optimal"),
        "c2": (_c2, "irrational"),
        "guard": (_int, "1"),
        "modulation_order": (_int, "4"),
    },
    "channel": {
        "l_max": (_int, "0"),
        "alpha_max": (_int, "0"),
        "n_paths": (_int, "0"),
        "fractional": (_bool, "false"),
        "carrier_hz": (_float, "50e9"),
        "bandwidth_hz": (_float, "150e6"),
    },
    "ber": {
        "snr_db": (_floats, "0 5 10 15 20"),
        "min_bits": (_int, "0"),
        "target_errors": (_int, "500"),
        "batch": (_int, "64"),
        "slope_window_db": (_floats, "10 20"),
    },
    "ambiguity": {
        "oversample": (_int, "2"),
        "doppler_step_bins": (_float, "0.125"),
    },
    "papr": {
        "threshold_min_db": (_float, "0"),
        "threshold_max_db": (_float, "14"),
        "threshold_step_db": (_float, "0.25"),
    },
    "security": {
        "snr_db": (_float, "30"),
        "c1_offset_steps": (_floats, "0 1 2 4"),
    },
    "sensing": {
        "snr_db": (_float, "inf"),
        "pilot_index": (_int, "0"),
        "pilot_amplitude": (_float, "1"),
        "mf_threshold": (_float, "0.1"),
    },
    "effective-channel": {
        "threshold": (_float, "1e-6"),
    },
}


@dataclass
class ExperimentConfig:
    kind: str
    waveforms: list
    seed: int
    trials: int
    out: str
    frame: dict
    channel: dict
    params: dict
    raw: dict = field(default_factory=dict)

    @property
    def profile(self) -> ChannelProfile:
        c = self.channel
        return ChannelProfile(c["l_max"], c["alpha_max"], c["n_paths"], c["fractional"],
                              c["carrier_hz"], c["bandwidth_hz"])

    @property
    def prefix_len(self) -> int:
        p = self.frame["prefix_len"]
        return self.channel["l_max"] if p < 0 else p

    @property
    def smap(self) -> SymbolMap:
        return SymbolMap(self.frame["modulation_order"])

    def echo(self) -> dict:
        """Fully resolved config, defaults included; this is what gets fingerprinted."""
        return {"experiment": {"kind": self.kind, "waveforms": self.waveforms, "seed": self.seed,
                               "trials": self.trials},
                "frame": dict(self.frame, prefix_len=self.prefix_len),
                "channel": self.channel,
                self.kind: self.params}

    def fingerprint(self) -> str:
        return fingerprint(self.echo())


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"syntax: {e}") from None

    values = {}
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"[{sec}]: unknown section")
        for key in cp[sec]:
            if key not in SCHEMA[sec]:
                raise ConfigError(f"[{sec}] {key}: unknown key")
    for sec, keys in SCHEMA.items():
        values[sec] = {}
        for key, (parse, default) in keys.items():
            raw = cp.get(sec, key, fallback=None) if cp.has_section(sec) else None
            if raw is None:
                if default is None:
                    raise ConfigError(f"[{sec}] {key}: required")
                raw = default
            try:
                values[sec][key] = parse(raw)
            except (ValueError, TypeError) as e:
                raise ConfigError(f"[{sec}] {key}: {e}") from None

    ex = values["experiment"]
    if ex["kind"] not in KINDS:
        raise ConfigError(f"[experiment] kind: must be one of {', '.join(KINDS)}")
    for w in ex["waveforms"]:
        if w not in {x.value for x in Waveform}:
            raise ConfigError(f"[experiment] waveforms: unknown waveform {w!r}")
    if not ex["waveforms"]:
        raise ConfigError("[experiment] waveforms: empty")
    if ex["trials"] <= 0:
        raise ConfigError("[experiment] trials: must be positive")
    if ex["seed"] < 0:
        raise ConfigError("[experiment] seed: must be non-negative")
    fr, ch = values["frame"], values["channel"]
    if fr["n"] < 2:
        raise ConfigError("[frame] n: must be at least 2")
    for k in ("l_max", "alpha_max", "n_paths"):
        if ch[k] < 0:
            raise ConfigError(f"[channel] {k}: must be non-negative")
    if ch["carrier_hz"] <= 0 or ch["bandwidth_hz"] <= 0:
        raise ConfigError("[channel] carrier_hz/bandwidth_hz: must be positive")
    kind = ex["kind"]
    params = values[kind]
    if kind == "ber":
        if not params["snr_db"]:
            raise ConfigError("[ber] snr_db: empty")
        if len(params["slope_window_db"]) != 2:
            raise ConfigError("[ber] slope_window_db: needs two values")
    if kind == "ambiguity" and (params["oversample"] < 1 or params["doppler_step_bins"] <= 0):
        raise ConfigError("[ambiguity] oversample/doppler_step_bins: must be positive")
    if kind == "papr" and params["threshold_step_db"] <= 0:
        raise ConfigError("[papr] threshold_step_db: must be positive")
    if kind == "sensing" and not 0 < params["mf_threshold"] < 1:
        raise ConfigError("[sensing] mf_threshold: must lie in (0, 1)")
    cfg = ExperimentConfig(ex["kind"], ex["waveforms"], ex["seed"], ex["trials"], ex["out"],
                           fr, ch, params, raw={s: dict(cp[s]) for s in cp.sections()})
    try:
        cfg.smap
    except ValueError as e:
        raise ConfigError(f"[frame] modulation_order: {e}") from None
    if kind in ("sensing", "security") and cfg.waveforms != ["afdm"]:
        raise ConfigError(f"[experiment] waveforms: {kind} runs on afdm only")
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}") from None
    return parse_config(text)


# --------------------------------------------------------------------------
# building modem configs
# --------------------------------------------------------------------------

def afdm_chirp(cfg: ExperimentConfig) -> ChirpParams:
    fr, ch, n = cfg.frame, cfg.channel, cfg.frame["n"]
    if fr["c1"] == "optimal":
        c1 = c1_optimal(ch["alpha_max"], fr["guard"], n, ch["l_max"])
    else:
        c1 = fr["c1"]
    c2 = 1.0 / (2 * math.pi * n) if fr["c2"] == "irrational" else fr["c2"]
    return ChirpParams(c1, c2)


def modem_configs(cfg: ExperimentConfig) -> list:
    """One modem config per requested waveform; ValueError on inconsistent frame fields."""
    fr, n, L = cfg.frame, cfg.frame["n"], cfg.prefix_len
    out = []
    for w in cfg.waveforms:
        if w == "ofdm":
            out.append(OfdmConfig(n, L))
        elif w == "ocdm":
            out.append(OcdmConfig(n, L))
        elif w == "otfs":
            k, l = fr["doppler_bins"], fr["delay_bins"]
            if k <= 0 or l <= 0:
                raise ConfigError("[frame] doppler_bins/delay_bins: required for otfs")
            if k * l != n:
                raise ConfigError(f"[frame] doppler_bins*delay_bins = {k * l} != n = {n}")
            out.append(OtfsConfig(k, l, L))
        else:
            out.append(AfdmConfig(n, afdm_chirp(cfg), fr["guard"], L))
    return out


def check_physics(cfg: ExperimentConfig, mods) -> None:
    ch = cfg.channel
    if ch["l_max"] > cfg.prefix_len:
        raise InfeasibleConfigError(
            f"prefix length {cfg.prefix_len} shorter than the maximum delay l_max={ch['l_max']}")
    if ch["l_max"] >= cfg.frame["n"]:
        raise InfeasibleConfigError("maximum delay must be shorter than the frame")
    for m in mods:
        if isinstance(m, AfdmConfig) and cfg.kind in ("ber", "sensing", "effective-channel") \
                and cfg.channel["n_paths"] > 0:
            rep = validate_orthogonality(m, ch["l_max"], ch["alpha_max"])
            if not rep:
                raise InfeasibleConfigError("chirp does not separate the paths: " + rep.describe(), rep)


def _modems(cfg):
    try:
        mods = modem_configs(cfg)
    except ValueError as e:
        if isinstance(e, (ConfigError, InfeasibleConfigError)):
            raise
        raise ConfigError(f"[frame]: {e}") from None
    check_physics(cfg, mods)
    return mods


# --------------------------------------------------------------------------
# output formatting
# --------------------------------------------------------------------------

def _num(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _csv_text(cfg: ExperimentConfig, columns, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# fingerprint: {cfg.fingerprint()}\n")
    buf.write(f"# seed: {cfg.seed}\n")
    buf.write(f"# afdmsim: {__version__}\n")
    buf.write(f"# config: {json.dumps(cfg.echo(), sort_keys=True)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([x if isinstance(x, str) else _num(x) for x in r])
    return buf.getvalue()


def _json_text(cfg: ExperimentConfig, payload: dict) -> str:
    doc = {"fingerprint": cfg.fingerprint(), "seed": cfg.seed}
    doc.update(payload)
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# --------------------------------------------------------------------------
# experiments: each returns ({filename: text}, summary dict)
# --------------------------------------------------------------------------

def _exp_ber(cfg, mods, threads, log):
    p = cfg.params

    def progress(t, active):
        log(f"  trials {t}, {int(active.sum())} SNR points still running")

    curves = run_ber(mods, cfg.profile, p["snr_db"], cfg.trials, cfg.seed, cfg.smap,
                     min_bits=p["min_bits"], target_errors=p["target_errors"],
                     batch=p["batch"], threads=threads, progress=progress)
    rows = []
    slopes = {}
    for c in curves:
        for s, t, e, b in zip(c.snr_db, c.trials, c.bit_errors, c.ber):
            rows.append((c.waveform, s, t, e, b))
        try:
            slopes[c.waveform] = diversity_slope(c, tuple(p["slope_window_db"]))
        except InsufficientStatisticsError as e:
            slopes[c.waveform] = None
            log(f"  slope unavailable: {e}")
    files = {"ber.csv": _csv_text(cfg, ("waveform", "snr_db", "trials", "bit_errors", "ber"), rows)}
    return files, {"snr_axis": "Es/N0 dB", "diversity_slope": slopes,
                   "slope_window_db": p["slope_window_db"]}


def _exp_ambiguity(cfg, mods, threads, log):
    p = cfg.params
    n, B = cfg.frame["n"], cfg.channel["bandwidth_hz"]
    os_ = p["oversample"]
    fs = os_ * B
    delays = np.arange(-os_ * n + 1, os_ * n)
    dop_bins = np.arange(-n / 2, n / 2 + 1e-9, p["doppler_step_bins"])
    rows, summary = [], {}
    for m in mods:
        w = m.waveform.value
        surf = ambiguity(sensing_waveform(m, os_), delays, dop_bins * B / n, fs)
        zero_doppler, zero_delay = ambiguity_cuts(surf)
        with np.errstate(divide="ignore"):
            zd_db = 20 * np.log10(zero_doppler)
            zt_db = 20 * np.log10(zero_delay)
        rows += [(w, "delay", d / os_, v) for d, v in zip(delays, zd_db)]
        rows += [(w, "doppler", v_bin, v) for v_bin, v in zip(dop_bins, zt_db)]
        summary[w] = {
            "peak": float(surf.magnitude[surf.index_of(0, 0.0)]),
            "zero_doppler_pslr_db": peak_sidelobe_ratio_db(zero_doppler),
            "zero_delay_pslr_db": peak_sidelobe_ratio_db(zero_delay),
        }
    files = {"ambiguity_cut.csv": _csv_text(cfg, ("waveform", "axis", "value", "magnitude_db"), rows)}
    return files, {"units": {"delay": "1/B", "doppler": "B/N"}, "cuts": summary}


def _exp_papr(cfg, mods, threads, log):
    p = cfg.params
    th = np.arange(p["threshold_min_db"], p["threshold_max_db"] + 1e-9, p["threshold_step_db"])
    rows, summary = [], {}
    for m in mods:
        c = papr_ccdf(m, cfg.smap, cfg.trials, cfg.seed, th)
        rows += [(c.waveform, t, q) for t, q in zip(c.threshold_db, c.ccdf)]
        summary[c.waveform] = {"papr_db_at_1e-3": c.level_at(1e-3) if cfg.trials >= 1000 else None}
    files = {"papr_ccdf.csv": _csv_text(cfg, ("waveform", "threshold_db", "ccdf"), rows)}
    return files, summary


def _exp_security(cfg, mods, threads, log):
    p = cfg.params
    m = mods[0]
    step = 1.0 / (2 * m.n)
    offsets = [k * step for k in p["c1_offset_steps"]]
    curve = security_experiment(m, offsets, p["snr_db"], cfg.trials, cfg.seed, cfg.profile, cfg.smap)
    rows = [(k, o, curve.snr_db, curve.bits, e, b)
            for k, o, e, b in zip(p["c1_offset_steps"], curve.offsets, curve.bit_errors, curve.ber)]
    cols = ("offset_steps", "c1_offset", "snr_db", "bits", "bit_errors", "ber")
    return {"security.csv": _csv_text(cfg, cols, rows)}, {"ber": dict(zip(map(str, offsets), curve.ber))}


def _exp_sensing(cfg, mods, threads, log):
    p, ch_p = cfg.params, cfg.channel
    m = mods[0]
    n, L = m.n, m.prefix_len
    if ch_p["fractional"]:
        raise ConfigError("[channel] fractional: on-grid sensing needs integer Doppler")
    q = 2 * n * m.chirp.c1
    if abs(q - round(q)) > 1e-9:
        raise InfeasibleConfigError("pilot estimation needs 2*N*c1 to be an integer")
    layout = PilotLayout.for_profile(m, ch_p["l_max"], ch_p["alpha_max"], p["pilot_index"],
                                     p["pilot_amplitude"])
    rng = np.random.default_rng([cfg.seed, 4, 0])
    ch = cfg.profile.draw(rng)
    k = cfg.smap.bits_per_symbol
    bits = rng.integers(0, 2, size=layout.n_data(n) * k, dtype=np.int8)
    x = insert_pilot(map_bits(bits, cfg.smap), layout, n)
    tx = add_prefix(modulate_body(x, m), m)
    rx = apply_channel(tx, ch, L)
    var = 0.0
    if math.isfinite(p["snr_db"]):
        rx, var = add_awgn(rx, p["snr_db"], rng)
    y = demodulate_body(strip_prefix(rx, m), m)
    est = estimate_channel(y, layout, m, ch_p["l_max"], ch_p["alpha_max"], noise_var=var)
    delays = np.arange(0, ch_p["l_max"] + 1)
    dops = np.arange(-ch_p["alpha_max"], ch_p["alpha_max"] + 1, dtype=np.float64)
    mf = matched_filter_map(rx, tx, delays, dops, n_body=n)
    targets = estimate_targets(mf, p["mf_threshold"], max_targets=max(ch.n_paths, 1),
                               carrier=ch.carrier, bandwidth=ch.bandwidth)
    truth = scatterers_from_channel(ch, n)
    pilot = scatterers_from_channel(est, n)
    rows = [(src, s.delay, s.doppler, s.gain.real, s.gain.imag, s.range_m, s.velocity_mps)
            for src, group in (("truth", truth), ("pilot", pilot), ("matched_filter", targets))
            for s in group]
    cols = ("source", "delay", "doppler", "gain_re", "gain_im", "range_m", "velocity_mps")
    files = {
        "sensing.csv": _csv_text(cfg, cols, rows),
        "channel.json": _json_text(cfg, {"channel": ch.to_record()}),
        "estimate.json": _json_text(cfg, {
            "pilot": {"index": layout.pilot_index, "guard": layout.guard, "amplitude": layout.amplitude},
            "noise_var": var,
            "channel": est.to_record(),
            "matched_filter": [t.to_record() for t in targets],
        }),
    }
    return files, {"paths_true": ch.n_paths, "paths_found": est.n_paths}


def _exp_effective(cfg, mods, threads, log):
    p = cfg.params
    rng = np.random.default_rng([cfg.seed, 5, 0])
    ch = cfg.profile.draw(rng)
    rows, summary = [], {}
    for m in mods:
        H = effective_matrix(ch, m).matrix
        mask = support_mask(H, p["threshold"])
        r, c = np.nonzero(mask)
        rows += [(m.waveform.value, i, j, H[i, j].real, H[i, j].imag) for i, j in zip(r, c)]
        summary[m.waveform.value] = {"nonzeros": int(mask.sum())}
    files = {
        "effective_channel.csv": _csv_text(cfg, ("waveform", "row", "col", "re", "im"), rows),
        "channel.json": _json_text(cfg, {"channel": ch.to_record()}),
    }
    return files, summary


EXPERIMENTS = {
    "ber": _exp_ber,
    "ambiguity": _exp_ambiguity,
    "papr": _exp_papr,
    "security": _exp_security,
    "sensing": _exp_sensing,
    "effective-channel": _exp_effective,
}


def resolve_out(cfg: ExperimentConfig, out_flag) -> Path:
    if out_flag:
        return Path(out_flag)
    env = os.environ.get(OUT_ENV)
    return Path(env) if env else Path(cfg.out)


def _write_atomic(out: Path, files: dict) -> None:
    """Write every file to a sibling temp dir first, then move them in."""
    out.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=".afdmsim-", dir=out))
    try:
        for name, text in files.items():
            (tmp / name).write_text(text)
        for name in files:
            os.replace(tmp / name, out / name)
    finally:
        shutil.rmtree(tmp, ignore_errors=True)


def run(cfg: ExperimentConfig, out: Path, threads: int = 1, log=print) -> dict:
    """Validate, compute, then write outputs; nothing touches disk before compute succeeds."""
    mods = _modems(cfg)
    t0 = time.perf_counter()
    files, summary = EXPERIMENTS[cfg.kind](cfg, mods, threads, log)
    wall = time.perf_counter() - t0
    manifest = {
        "tool": "afdmsim",
        "version": __version__,
        "kind": cfg.kind,
        "seed": cfg.seed,
        "fingerprint": cfg.fingerprint(),
        "config": cfg.echo(),
        "threads": threads,
        "wall_time_s": wall,
        "outputs": sorted(files),
        "summary": summary,
    }
    files["manifest.json"] = json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n"
    _write_atomic(out, files)
    return manifest


# --------------------------------------------------------------------------
# describe
# --------------------------------------------------------------------------

def describe(cfg: ExperimentConfig) -> str:
    mods = modem_configs(cfg)
    ch = cfg.channel
    n, B, fc = cfg.frame["n"], ch["bandwidth_hz"], ch["carrier_hz"]
    lines = [f"experiment      {cfg.kind}  (fingerprint {cfg.fingerprint()}, seed {cfg.seed})",
             f"frame           N = {n}, prefix length = {cfg.prefix_len}",
             f"channel         l_max = {ch['l_max']}, alpha_max = {ch['alpha_max']}, "
             f"paths = {ch['n_paths']}, fractional = {ch['fractional']}"]
    for m in mods:
        if isinstance(m, AfdmConfig):
            feas = orthogonality_feasible(n, ch["l_max"], ch["alpha_max"], m.guard)
            lines.append(f"afdm            c1 = {m.chirp.c1!r}, c2 = {m.chirp.c2!r}, guard = {m.guard}")
            lines.append(f"                2*N*c1 = {2 * n * m.chirp.c1:.6g}, path separation feasible: {feas}")
            g = pilot_guard_width(m, ch["l_max"], ch["alpha_max"])
            lines.append(f"                pilot guard half-width = {g} "
                         f"(span {min(2 * g + 1, n)} of {n} symbols)")
        if isinstance(m, OtfsConfig):
            ok = "ok" if m.doppler_bins * m.delay_bins == n else "MISMATCH"
            lines.append(f"otfs            K*L = {m.doppler_bins}*{m.delay_bins} = "
                         f"{m.doppler_bins * m.delay_bins} vs N = {n}: {ok}")
    dv = (B / n) * SPEED_OF_LIGHT / fc
    lines.append(f"range           resolution {SPEED_OF_LIGHT / B:.4g} m, "
                 f"unambiguous {SPEED_OF_LIGHT * n / B:.4g} m, "
                 f"max channel delay {SPEED_OF_LIGHT * ch['l_max'] / B:.4g} m")
    lines.append(f"velocity        resolution {dv:.4g} m/s, unambiguous +/-{dv * n / 2:.4g} m/s, "
                 f"max channel Doppler {dv * ch['alpha_max']:.4g} m/s")
    return "\n".join(lines)


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

def bundled_config(name: str) -> Path:
    return Path(str(resources.files("afdmsim") / "configs" / name))


def _parser():
    ap = argparse.ArgumentParser(prog="afdmsim", description="AFDM/OFDM/OCDM/OTFS link and sensing simulator")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("run", "describe"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True,
                        help="config path, or the name of a bundled config (fig2.cfg, fig3.cfg)")
        sp.add_argument("--seed", type=int, help="overrides [experiment] seed")
        if name == "run":
            sp.add_argument("--out", help=f"output directory (else ${OUT_ENV}, else [experiment] out)")
            sp.add_argument("--threads", type=int, default=1)
            sp.add_argument("--quiet", action="store_true")
    return ap


def _find_config(arg: str) -> Path:
    p = Path(arg)
    if not p.exists() and p.parent == Path(".") and bundled_config(arg).exists():
        return bundled_config(arg)
    return p


def main(argv=None) -> int:
    ap = _parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK
    try:
        cfg = load_config(_find_config(args.config))
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed: must be non-negative")
            cfg.seed = args.seed
        if args.command == "describe":
            print(describe(cfg))
            return EXIT_OK
        if args.threads < 1:
            raise ConfigError("--threads: must be at least 1")
        log = (lambda *a: None) if args.quiet else (lambda msg: print(msg, file=sys.stderr))
        out = resolve_out(cfg, args.out)
        man = run(cfg, out, args.threads, log)
        if not args.quiet:
            print(f"wrote {', '.join(man['outputs'] + ['manifest.json'])} to {out}")
        return EXIT_OK
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleConfigError as e:
        print(f"infeasible configuration: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
