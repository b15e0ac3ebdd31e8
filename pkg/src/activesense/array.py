"""Array algebra for a uniform linear array in the normalized-angle domain.

Conventions
-----------
A beam or snapshot is a complex ``M``-vector. Its *lag vector* (the output of
:func:`lag_vector`) is complex with

    ``c[0] = ||v||^2``  and  ``c[k] = 2 * sum_i v[i+k] * conj(v[i])``  (k >= 1).

The factor 2 on the off-zero lags makes the real inner product of two lag
vectors reproduce quadratic forms with Hermitian Toeplitz matrices::

    v^H T(f) v == <realify(lag_vector(v)), realify(f)>

Real vectors of length ``2M - 1`` are laid out as
``[Re c[0], Re c[1..M-1], Im c[1..M-1]]``.
"""

import functools

import numpy as np

__all__ = [
    "steering",
    "steering_matrix",
    "lag_vector",
    "autocorr",
    "autocorr_many",
    "realify",
    "complex_embed",
    "toeplitz",
    "real_dim",
    "trig_poly",
]

REAL_LAG0_TOL = 1e-12


def real_dim(M):
    """Length of the realified parameter vector for an ``M``-element array."""
    return 2 * M - 1


def steering(u, M):
    """Array response ``a(u)`` with entries ``exp(j k pi u)``, ``k = 0..M-1``."""
    u = float(u)
    if not -1.0 <= u <= 1.0:
        raise ValueError(f"normalized angle must lie in [-1, 1], got {u}")
    if M < 1:
        raise ValueError("M must be positive")
    return np.exp(1j * np.pi * u * np.arange(M))


def steering_matrix(u, M):
    """Stack of steering vectors, one column per entry of ``u`` (shape ``M x len(u)``)."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if np.any(np.abs(u) > 1.0):
        raise ValueError("normalized angles must lie in [-1, 1]")
    return np.exp(1j * np.pi * np.outer(np.arange(M), u))


def lag_vector(v):
    """Complex lag vector of ``v`` (doubled off-zero lags, see module docstring)."""
    v = np.asarray(v, dtype=complex)
    M = v.shape[0]
    full = np.correlate(v, v, mode="full")  # full[M-1+k] = sum_i v[i+k] conj(v[i])
    c = full[M - 1:].copy()
    c[0] = c[0].real
    c[1:] *= 2.0
    return c


def realify(c):
    """Map a complex ``M``-vector with real entry 0 to ``R^(2M-1)``."""
    c = np.asarray(c, dtype=complex)
    if abs(c[0].imag) > REAL_LAG0_TOL * max(1.0, abs(c[0].real)):
        raise ValueError(f"entry 0 must be real, imaginary part is {c[0].imag:.3e}")
    return np.concatenate([c.real, c[1:].imag])


def complex_embed(r):
    """Inverse of :func:`realify`."""
    r = np.asarray(r, dtype=float)
    n = r.shape[-1]
    if n % 2 != 1:
        raise ValueError("realified vectors have odd length 2M - 1")
    M = (n + 1) // 2
    c = r[..., :M].astype(complex)
    c[..., 1:] += 1j * r[..., M:]
    return c


def autocorr(v):
    """Realified lag vector of ``v`` (length ``2M - 1``)."""
    return realify(lag_vector(v))


def autocorr_many(V):
    """Realified lag vectors of the columns of ``V``; returns shape ``(n, 2M - 1)``.

    Vectorized over columns, used to build data and Fisher matrices.
    """
    V = np.asarray(V, dtype=complex)
    if V.ndim == 1:
        V = V[:, None]
    M, n = V.shape
    out = np.empty((n, 2 * M - 1))
    out[:, 0] = np.sum(np.abs(V) ** 2, axis=0)
    for k in range(1, M):
        lag = 2.0 * np.sum(V[k:, :] * V[: M - k, :].conj(), axis=0)
        out[:, k] = lag.real
        out[:, M - 1 + k] = lag.imag
    return out


@functools.lru_cache(maxsize=64)
def _toeplitz_index(M):
    idx = np.arange(M)[:, None] - np.arange(M)[None, :]
    # lower triangle takes f[k], upper triangle conj(f[k]) stored at offset M
    flat = np.where(idx >= 0, idx, M - idx)
    flat.setflags(write=False)
    return flat


def toeplitz(f):
    """Hermitian Toeplitz matrix with first column ``f``."""
    f = np.asarray(f, dtype=complex)
    M = f.shape[0]
    ext = np.empty(2 * M, dtype=complex)
    ext[:M] = f
    ext[M:] = f.conj()
    # force an exactly real diagonal
    ext[0] = ext[M] = f[0].real
    return ext[_toeplitz_index(M)]


def trig_poly(r, u):
    """Evaluate ``<r, realify(a(u))> = r0 + sum_k r_k cos(k pi u) + r_{M-1+k} sin(k pi u)``.

    For ``r = autocorr(v)`` this equals ``|v^H a(u)|^2``.
    """
    r = np.asarray(r, dtype=float)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    M = (r.shape[0] + 1) // 2
    k = np.arange(1, M)
    arg = np.pi * np.outer(u, k)
    return r[0] + np.cos(arg) @ r[1:M] + np.sin(arg) @ r[M:]
