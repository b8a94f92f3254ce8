import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from afdmsim.transforms import ChirpParams, idaft_fast
from afdmsim.waveform import (
    AfdmConfig,
    InfeasibleConfigError,
    OcdmConfig,
    OfdmConfig,
    OtfsConfig,
    add_prefix,
    afdm_as_precoded_ofdm,
    band_offset,
    c1_optimal,
    check_prefix,
    demodulate,
    demodulate_afdm,
    demodulate_body,
    demodulate_otfs,
    modulate,
    modulate_afdm,
    modulate_body,
    modulate_ofdm,
    modulate_otfs,
    modulator_matrix,
    orthogonality_feasible,
    precoded_equivalence,
    prefix_matrix,
    prefix_phase,
    strip_prefix,
    validate_orthogonality,
)

from conftest import crandn


def all_configs(prefix=3):
    return [
        OfdmConfig(16, prefix),
        OcdmConfig(16, prefix),
        OtfsConfig(4, 4, prefix),
        AfdmConfig(16, ChirpParams(5 / 32, 0.013), 1, prefix),
    ]


def test_zero_chirp_afdm_is_ofdm(rng):
    for _ in range(20):
        x = crandn(rng, 32)
        a = modulate_afdm(x, AfdmConfig(32, ChirpParams(0, 0), 0, 4)).tx_time.samples
        b = modulate_ofdm(x, 32, 4).tx_time.samples
        assert np.max(np.abs(a - b)) < 1e-12


@pytest.mark.parametrize("cfg", all_configs(), ids=lambda c: c.waveform.value)
def test_round_trip_through_prefix(cfg, rng):
    x = crandn(rng, cfg.n)
    frame = modulate(x, cfg)
    assert frame.tx_time.length == cfg.n + cfg.prefix_len
    assert check_prefix(frame, cfg)
    np.testing.assert_allclose(demodulate(frame.tx_time, cfg).samples, x, atol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(frame.body), np.linalg.norm(x), rtol=1e-12)


@pytest.mark.parametrize("cfg", all_configs(), ids=lambda c: c.waveform.value)
def test_dense_modulator_matches_fast_path(cfg, rng):
    X = crandn(rng, 3, cfg.n)
    np.testing.assert_allclose(modulate_body(X, cfg), X @ modulator_matrix(cfg).T, atol=1e-12)
    np.testing.assert_allclose(demodulate_body(modulate_body(X, cfg), cfg), X, atol=1e-12)
    np.testing.assert_allclose(add_prefix(modulate_body(X[0], cfg), cfg),
                               prefix_matrix(cfg) @ modulator_matrix(cfg) @ X[0], atol=1e-12)


def test_chirp_periodic_prefix_rule(rng):
    n, L = 16, 4
    c1 = 0.0371
    cfg = AfdmConfig(n, ChirpParams(c1, 0.2), 0, L)
    body = crandn(rng, n)
    tx = add_prefix(body, cfg)
    for k in range(-L, 0):
        expected = body[n + k] * np.exp(-2j * np.pi * c1 * (n * n + 2 * n * k))
        assert abs(tx[L + k] - expected) < 1e-12
    np.testing.assert_array_equal(strip_prefix(tx, cfg), body)


def test_prefix_reduces_to_cyclic_when_2nc1_is_integer_and_n_even():
    n = 64
    ph = prefix_phase(n, 10, c1_optimal(2, 1, n))
    np.testing.assert_allclose(ph, np.ones(10), atol=1e-12)
    assert np.max(np.abs(prefix_phase(n, 10, 0.1234) - 1)) > 0.1


def test_c1_optimal_values():
    assert c1_optimal(2, 1, 64, 3) == 7 / 128
    assert c1_optimal(0, 0, 64) == 1 / 128
    with pytest.raises(InfeasibleConfigError):
        c1_optimal(6, 1, 16, 3)


def test_band_offset_direction(rng):
    # one delayed, Doppler-shifted tap moves a DAFT pulse by nu - 2 N c1 l
    n, L = 32, 4
    c1 = 3 / 64
    cfg = AfdmConfig(n, ChirpParams(c1, 0.0), 0, L)
    x = np.zeros(n, complex)
    x[5] = 1
    tx = add_prefix(idaft_fast(x, cfg.chirp), cfg)
    l, nu = 2, 3
    t = np.arange(n + L)
    rx = np.zeros_like(tx)
    rx[l:] = tx[:-l] * np.exp(2j * np.pi * nu * t[l:] / n)
    y = demodulate_afdm(rx, cfg).samples
    assert int(np.argmax(np.abs(y))) == (5 + int(band_offset(l, nu, n, c1))) % n
    assert band_offset(l, nu, n, c1) == (nu - 2 * n * c1 * l) % n


def test_validate_flags_colliding_taps():
    cfg = AfdmConfig(16, ChirpParams(1 / 16, 0), 0, 1)
    rep = validate_orthogonality(cfg, 1, 2, taps=[(0, 0), (1, 2)])
    assert not rep and rep.overlaps == [((0, 0), (1, 2))]
    assert "overlapping" in rep.describe()
    assert validate_orthogonality(cfg, 1, 2, taps=[(0, 0), (1, 1)])


def test_feasibility_matches_exhaustive_tap_scan():
    for n, l_max, a, g in itertools.product(range(4, 25), range(0, 4), range(0, 4), range(0, 3)):
        width = 2 * (a + g) + 1
        if width > n:  # one footprint already wraps onto itself; nothing pairwise to scan
            continue
        c1 = width / (2 * n)
        cfg = AfdmConfig(n, ChirpParams(c1, 0), g, 0)
        assert bool(validate_orthogonality(cfg, l_max, a)) == orthogonality_feasible(n, l_max, a, g), (n, l_max, a, g)


def test_precoded_ofdm_matches_body_not_prefix(rng):
    x = crandn(rng, 16)
    cfg = AfdmConfig(16, ChirpParams(0.0417, 0.2), 0, 3)
    err = precoded_equivalence(x, cfg)
    assert err["body_max_err"] < 1e-12
    assert err["prefix_max_err"] > 1e-3
    # with an integer 2 N c1 and even N the chirp prefix is cyclic, so the frames coincide
    cfg = AfdmConfig(16, ChirpParams(3 / 32, 0.2), 0, 3)
    assert precoded_equivalence(x, cfg)["prefix_max_err"] < 1e-12
    assert afdm_as_precoded_ofdm(x, cfg).tx_time.length == 19


def test_otfs_matches_dense_zak_oracle(rng):
    K, L = 4, 4
    cfg = OtfsConfig(K, L, 0)
    X = crandn(rng, K, L)
    s = np.zeros(K * L, complex)
    for kk in range(K):
        for ll in range(L):
            s[kk * L + ll] = sum(X[k, ll] * np.exp(2j * np.pi * k * kk / K) for k in range(K)) / np.sqrt(K)
    np.testing.assert_allclose(modulate_otfs(X, cfg).body, s, atol=1e-12)
    np.testing.assert_allclose(demodulate_otfs(modulate_otfs(X, cfg).tx_time, cfg), X, atol=1e-12)


@given(
    k=st.integers(1, 8), l=st.integers(1, 8), seed=st.integers(0, 2**32 - 1),
)
def test_otfs_round_trip(k, l, seed):
    rng = np.random.default_rng(seed)
    cfg = OtfsConfig(k, l, 0)
    x = crandn(rng, k * l)
    np.testing.assert_allclose(demodulate_body(modulate_body(x, cfg), cfg), x, atol=1e-12)


def test_invalid_configs():
    with pytest.raises(ValueError):
        OcdmConfig(15)
    with pytest.raises(ValueError):
        OfdmConfig(8, 8)
    with pytest.raises(ValueError):
        AfdmConfig(8, guard=-1)
    with pytest.raises(ValueError):
        modulate(np.ones(8), OfdmConfig(16))
