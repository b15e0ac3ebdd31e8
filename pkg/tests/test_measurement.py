import numpy as np
import pytest

from activesense.array import realify, toeplitz
from activesense.channel import covariance_from_config, two_cluster_scenario, sample_snapshots
from activesense.measurement import (
    MeasurementRecord,
    check_unit,
    mean_power,
    measure,
    take_measurement,
)
from conftest import random_psd_f, random_unit


def test_check_unit():
    with pytest.raises(ValueError):
        check_unit(np.ones(3))
    v = np.array([1.0 + 1e-8, 0.0])
    assert np.linalg.norm(check_unit(v)) == pytest.approx(1.0, abs=1e-15)


def test_mean_power_examples(rng):
    v = random_unit(rng, 5)
    assert mean_power(v, np.zeros(5), 0.7) == pytest.approx(0.7)
    assert mean_power(v, np.eye(5)[0], 0.7) == pytest.approx(1.7)
    with pytest.raises(ValueError):
        mean_power(2 * v, np.zeros(5), 1.0)


def test_mean_power_matrix_oracle(rng):
    for _ in range(20):
        v = random_unit(rng, 7)
        f = random_psd_f(rng, 7)
        ref = 0.3 + np.vdot(v, toeplitz(f) @ v).real
        assert abs(mean_power(v, f, 0.3) - ref) < 1e-10


def test_take_measurement_examples(rng):
    y = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    v = y / np.linalg.norm(y)
    assert take_measurement(v, y) == pytest.approx(np.linalg.norm(y) ** 2, rel=1e-12)
    w = np.array([y[1], -y[0], 0, 0]).conj()
    w = w / np.linalg.norm(w)
    assert take_measurement(w, y) < 1e-20


def test_measurement_mean_monte_carlo(rng):
    cfg = two_cluster_scenario(M=6, snr_db=5)
    cov = covariance_from_config(cfg)
    v = random_unit(rng, 6)
    Y = sample_snapshots(cov, 1_000_000, rng)
    r = np.abs(Y @ v.conj()) ** 2
    mu = mean_power(v, cov.f_true, cov.noise_var)
    assert abs(r.mean() / mu - 1) < 0.01


def test_record(rng):
    v = random_unit(rng, 3)
    rec = measure(v, np.ones(3), t=4)
    assert rec.t == 4 and rec.beam_autocorr[0] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        MeasurementRecord(rec.beam_autocorr, -1.0, 1)
