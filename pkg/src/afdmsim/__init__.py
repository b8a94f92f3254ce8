"""Chirp-multicarrier (AFDM) physical-layer simulation with OFDM, OCDM and OTFS baselines."""

__version__ = "0.1.0"

from .transforms import ChirpParams, ComplexSignal, Domain, daft, daft_fast, dfnt, idaft, idaft_fast
from .waveform import (
    AfdmConfig,
    InfeasibleConfigError,
    OcdmConfig,
    OfdmConfig,
    OtfsConfig,
    Waveform,
    c1_optimal,
    demodulate,
    modulate,
    validate_orthogonality,
)
from .channel import DelayDopplerChannel, PathTap, apply_channel, effective_matrix, random_channel
from .detection import QPSK, Equalizer, EqualizerKind, SymbolMap, demap_symbols, equalize, map_bits
from .sensing import PilotLayout, estimate_channel, estimate_targets, matched_filter_map
from .analysis import ChannelProfile, ambiguity, diversity_slope, papr_ccdf, run_ber, security_experiment

__all__ = [
    "AfdmConfig", "ChannelProfile", "ChirpParams", "ComplexSignal", "DelayDopplerChannel", "Domain",
    "Equalizer", "EqualizerKind", "InfeasibleConfigError", "OcdmConfig", "OfdmConfig", "OtfsConfig",
    "PathTap", "PilotLayout", "QPSK", "SymbolMap", "Waveform", "ambiguity", "apply_channel",
    "c1_optimal", "daft", "daft_fast", "demap_symbols", "demodulate", "dfnt", "diversity_slope",
    "effective_matrix", "equalize", "estimate_channel", "estimate_targets", "idaft", "idaft_fast",
    "map_bits", "matched_filter_map", "modulate", "papr_ccdf", "random_channel", "run_ber",
    "security_experiment", "validate_orthogonality",
]
