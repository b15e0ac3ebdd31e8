import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from activesense.array import (
    autocorr,
    autocorr_many,
    complex_embed,
    lag_vector,
    realify,
    steering,
    steering_matrix,
    toeplitz,
    trig_poly,
)
from conftest import random_psd_f, random_unit


def test_steering_examples():
    np.testing.assert_array_equal(steering(0.0, 4), np.ones(4))
    np.testing.assert_allclose(steering(1.0, 2), [1, -1], atol=1e-15)
    assert steering(0.37, 5)[0] == 1


def test_steering_rejects_out_of_range():
    with pytest.raises(ValueError):
        steering(1.5, 4)
    with pytest.raises(ValueError):
        steering_matrix(np.array([0.0, -1.01]), 3)


def test_steering_norm(rng):
    for u in rng.uniform(-1, 1, 100):
        assert abs(np.linalg.norm(steering(u, 13)) ** 2 - 13) < 1e-10


def test_autocorr_examples():
    e1 = np.zeros(5, complex)
    e1[0] = 1
    np.testing.assert_array_equal(autocorr(e1), np.eye(9)[0])
    np.testing.assert_allclose(autocorr(np.array([1, 1]) / np.sqrt(2)), [1, 1, 0], atol=1e-15)


def test_lag_vector_against_loop(rng):
    v = rng.standard_normal(7) + 1j * rng.standard_normal(7)
    c = lag_vector(v)
    ref = [np.vdot(v, v).real] + [2 * sum(v[i + k] * np.conj(v[i]) for i in range(7 - k))
                                  for k in range(1, 7)]
    np.testing.assert_allclose(c, ref, atol=1e-12)


def test_autocorr_many_matches_single(rng):
    V = rng.standard_normal((6, 9)) + 1j * rng.standard_normal((6, 9))
    A = autocorr_many(V)
    for j in range(9):
        np.testing.assert_allclose(A[j], autocorr(V[:, j]), atol=1e-12)


def test_quadratic_form_identity(rng):
    for _ in range(50):
        M = rng.integers(2, 12)
        v = rng.standard_normal(M) + 1j * rng.standard_normal(M)
        f = rng.standard_normal(M) + 1j * rng.standard_normal(M)
        f[0] = f[0].real
        lhs = np.vdot(v, toeplitz(f) @ v).real
        assert abs(lhs - autocorr(v) @ realify(f)) < 1e-10 * max(1, abs(lhs))


def test_trig_poly_is_beam_pattern(rng):
    v = random_unit(rng, 8)
    u = rng.uniform(-1, 1, 50)
    direct = np.abs(steering_matrix(u, 8).conj().T @ v) ** 2
    # |a(u)^H v|^2 equals |v^H a(u)|^2
    np.testing.assert_allclose(trig_poly(autocorr(v), u), direct, atol=1e-12)


def test_lag_bound(rng):
    for _ in range(100):
        r = autocorr(random_unit(rng, 6))
        c = complex_embed(r)
        assert abs(r[0] - 1) < 1e-12
        assert np.all(np.abs(c[1:]) <= 2 * r[0] + 1e-12)


def test_embedding_examples():
    np.testing.assert_array_equal(complex_embed(np.array([1.0, 0, 0, 0, 0])), [1, 0, 0])
    np.testing.assert_array_equal(complex_embed(np.array([1.0, 2.0, 3.0])), [1, 2 + 3j])
    with pytest.raises(ValueError):
        realify(np.array([1 + 1j, 2]))
    with pytest.raises(ValueError):
        complex_embed(np.ones(4))


def test_embedding_roundtrip(rng):
    for _ in range(1000):
        M = rng.integers(1, 10)
        r = rng.standard_normal(2 * M - 1)
        assert np.max(np.abs(realify(complex_embed(r)) - r)) < 1e-14


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.integers(1, 8).map(lambda m: 2 * m - 1),
              elements=st.floats(-1e3, 1e3, allow_nan=False)))
def test_embedding_roundtrip_property(r):
    np.testing.assert_array_equal(realify(complex_embed(r)), r)


def test_toeplitz_examples():
    np.testing.assert_array_equal(toeplitz(np.array([1.0, 0, 0])), np.eye(3))
    np.testing.assert_array_equal(toeplitz(np.array([1.0, 0.5])), [[1, 0.5], [0.5, 1]])


def test_toeplitz_structure(rng):
    f = random_psd_f(rng, 6)
    T = toeplitz(f)
    np.testing.assert_array_equal(T, T.conj().T)
    for r in range(6):
        for c in range(r + 1):
            assert T[r, c] == f[r - c] or (r == c and T[r, c] == f[0].real)
    assert np.linalg.eigvalsh(T).min() > -1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 9), st.integers(0, 2**31))
def test_toeplitz_hermitian_property(M, seed):
    g = np.random.default_rng(seed)
    f = g.standard_normal(M) + 1j * g.standard_normal(M)
    T = toeplitz(f)
    assert np.array_equal(T, T.conj().T)
    np.testing.assert_array_equal(T[:, 0][1:], f[1:])
