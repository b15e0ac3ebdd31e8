import math

import numpy as np
import pytest

from activesense.array import steering, toeplitz
from activesense.channel import ScenarioConfig, covariance_from_config, two_cluster_scenario
from activesense.experiments import (
    AdaptiveOptions,
    ComparisonSummary,
    ExperimentTrace,
    config_fingerprint,
    dominant_subspace,
    efficiency_eta,
    exhaustive_bins,
    gamma_metric,
    run_adaptive,
    run_comparison,
    run_exhaustive,
)


def spiked(rng, M, spikes):
    Q, _ = np.linalg.qr(rng.standard_normal((M, M)) + 1j * rng.standard_normal((M, M)))
    vals = np.ones(M)
    vals[: len(spikes)] = spikes
    return (Q * vals) @ Q.conj().T, Q, vals


def test_dominant_subspace_diagonal():
    U = dominant_subspace(np.diag([3.0, 2.0, 1.0]), 2)
    P = U @ U.conj().T
    np.testing.assert_allclose(P, np.diag([1.0, 1.0, 0.0]), atol=1e-12)
    with pytest.raises(ValueError):
        dominant_subspace(np.eye(3), 4)


def test_dominant_subspace_full_and_tie(rng):
    C, _, vals = spiked(rng, 6, [5.0, 2.0, 2.0])
    U = dominant_subspace(C, 6)
    np.testing.assert_allclose(U.conj().T @ U, np.eye(6), atol=1e-10)
    assert np.trace(U.conj().T @ C @ U).real == pytest.approx(np.trace(C).real)
    U2 = dominant_subspace(C, 2)
    assert np.trace(U2.conj().T @ C @ U2).real == pytest.approx(7.0)


def test_eta():
    assert efficiency_eta(np.eye(5), 2) == pytest.approx(0.4)
    cov = covariance_from_config(two_cluster_scenario(M=20, snr_db=0))
    C = cov.C
    etas = [efficiency_eta(C, p) for p in range(1, 21)]
    assert etas[-1] == pytest.approx(1.0)
    assert np.all(np.diff(etas) >= -1e-12)
    # the signal part of the two-cluster scenario is essentially two-dimensional
    S = toeplitz(cov.f_true)
    eta_s = efficiency_eta(S, 2)
    assert eta_s >= 0.9
    # white noise adds p * s2 to the captured power and M * s2 to the trace
    M, f0, s2 = 20, cov.f_true[0].real, cov.noise_var
    assert etas[1] == pytest.approx((eta_s * M * f0 + 2 * s2) / (M * (f0 + s2)), rel=1e-10)


def test_gamma_examples(rng):
    C, Q, vals = spiked(rng, 8, [10.0, 6.0])
    assert gamma_metric(C, dominant_subspace(C, 2)) == pytest.approx(1.0)
    trailing = Q[:, -2:]
    assert gamma_metric(C, trailing) == pytest.approx(2.0 / 16.0)
    for _ in range(50):
        U, _ = np.linalg.qr(rng.standard_normal((8, 2)) + 1j * rng.standard_normal((8, 2)))
        assert 0 <= gamma_metric(C, U) <= 1 + 1e-9
    with pytest.raises(ValueError):
        gamma_metric(C, np.ones((8, 2)))


def test_trace_requires_increasing_t():
    tr = ExperimentTrace("adaptive", 0, "x")
    tr.add(1, "a", 1.0, 0.5)
    with pytest.raises(ValueError):
        tr.add(1, "b", 1.0, 0.5)


def test_fingerprint_stable():
    a = config_fingerprint(two_cluster_scenario(M=8))
    assert a == config_fingerprint(two_cluster_scenario(M=8))
    assert a != config_fingerprint(two_cluster_scenario(M=9))


def test_adaptive_noiseless_limit():
    cfg = ScenarioConfig(M=8, point_masses=((20.0, 1.0),), snr_db=40.0)
    for seed in range(3):
        tr = run_adaptive(cfg, 32, 1, seed, AdaptiveOptions(noiseless=True))
        assert tr.gamma[-1] >= 0.99


def test_adaptive_bounds_and_determinism():
    cfg = two_cluster_scenario(M=5, snr_db=0)
    a = run_adaptive(cfg, 20, 2, 4)
    b = run_adaptive(cfg, 20, 2, 4)
    assert a.gamma == b.gamma and a.beam == b.beam and a.r == b.r
    g = a.gamma_array
    assert np.all((g >= 0) & (g <= 1 + 1e-9))
    assert a.t == list(range(1, 21))
    with pytest.raises(ValueError):
        run_adaptive(cfg, 8, 2, 0)


def test_adaptive_literal_fim_refresh():
    cfg = two_cluster_scenario(M=4, snr_db=5)
    tr = run_adaptive(cfg, 14, 1, 0, AdaptiveOptions(fim_refresh=1))
    assert len(tr) == 14


def test_exhaustive_bins():
    np.testing.assert_allclose(exhaustive_bins(4, 90.0),
                               np.sin(np.radians([-90, -45, 0, 45])), atol=1e-15)


def test_exhaustive_finds_on_bin_source():
    M = 8
    theta = -90 + 2 * 5 * 90 / M
    cfg = ScenarioConfig(M=M, point_masses=((theta, 1.0),), snr_db=20.0)
    C = covariance_from_config(cfg).C
    a = steering(math.sin(math.radians(theta)), M) / math.sqrt(M)
    target = gamma_metric(C, a)
    hits = sum(abs(run_exhaustive(cfg, 5 * M, 1, s).gamma[-1] - target) < 1e-9
               for s in range(100))
    assert hits >= 95


def test_exhaustive_full_span_and_determinism():
    cfg = two_cluster_scenario(M=6, snr_db=0)
    tr = run_exhaustive(cfg, 12, 6, 0)
    assert np.allclose(tr.gamma[5:], 1.0)
    tr2 = run_exhaustive(cfg, 12, 6, 0)
    assert tr.gamma == tr2.gamma and tr.r == tr2.r
    with pytest.raises(ValueError):
        run_exhaustive(cfg, 0, 1, 0)


def test_comparison_single_rep():
    cfg = two_cluster_scenario(M=4, snr_db=0)
    s = run_comparison(cfg, 10, 1, 1, seed=2, workers=1)
    assert np.all(s.std_adaptive == 0) and np.all(s.std_exhaustive == 0)
    lines = s.to_csv().splitlines()
    assert lines[0] == ",".join(ComparisonSummary.HEADER)
    assert len(lines) == 11
    assert s.auc("adaptive", 1, 10) >= 0
    with pytest.raises(ValueError):
        run_comparison(cfg, 10, 1, 0)


def test_comparison_parallel_matches_serial():
    cfg = two_cluster_scenario(M=4, snr_db=0)
    a = run_comparison(cfg, 8, 1, 2, seed=0, workers=1)
    b = run_comparison(cfg, 8, 1, 2, seed=0, workers=2)
    assert a.to_csv() == b.to_csv()
