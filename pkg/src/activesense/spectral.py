"""Recover a unit beam from a feasible autocorrelation vector (Fejer-Riesz).

The realified vector ``r`` defines the nonnegative trigonometric polynomial
``P(u) = <r, realify(a(u))>``. Writing ``rho`` for the classical
autocorrelation (off-zero lags of ``complex_embed(r)`` halved), the Laurent
polynomial ``R(z) = sum_k rho_k z^-k`` factors as ``V(z) V*(1/z*)`` with
``V(z) = sum_i v_i z^-i``. The minimum-phase factor keeps the roots inside
the unit circle.
"""

import logging

import numpy as np
from scipy.optimize import least_squares

from .array import autocorr, complex_embed, trig_poly

__all__ = ["InfeasibleAutocorrelation", "spectral_factor", "classical_lags"]

log = logging.getLogger(__name__)

CLAMP_TOL = 1e-6
GRID_SIZE = 4096


class InfeasibleAutocorrelation(ValueError):
    """The trigonometric polynomial of ``r`` is negative somewhere."""


def classical_lags(r):
    """``rho_k = sum_i v[i+k] conj(v[i])`` for ``k = 0..M-1``, given ``r = autocorr(v)``."""
    rho = complex_embed(r)
    rho[1:] *= 0.5
    return rho


def _jacobian(x, M):
    v = x[:M] + 1j * x[M:]
    n = 2 * M - 1
    J = np.zeros((n, 2 * M))
    for k in range(M):
        scale = 1.0 if k == 0 else 2.0
        d_re = np.zeros(M, dtype=complex)
        d_im = np.zeros(M, dtype=complex)
        m = np.arange(M)
        lo = m >= k
        d_re[lo] += v[m[lo] - k].conj()
        d_im[lo] += 1j * v[m[lo] - k].conj()
        hi = m + k < M
        d_re[hi] += v[m[hi] + k]
        d_im[hi] -= 1j * v[m[hi] + k]
        d_re *= scale
        d_im *= scale
        J[k, :M] = d_re.real
        J[k, M:] = d_im.real
        if k > 0:
            J[M - 1 + k, :M] = d_re.imag
            J[M - 1 + k, M:] = d_im.imag
    return J


def _polish(v, target):
    M = v.shape[0]

    def resid(x):
        return autocorr(x[:M] + 1j * x[M:]) - target

    sol = least_squares(
        resid, np.concatenate([v.real, v.imag]), jac=lambda x: _jacobian(x, M),
        method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=200,
    )
    return sol.x[:M] + 1j * sol.x[M:]


def _fix_phase(v):
    nz = np.flatnonzero(np.abs(v) > 1e-12 * np.abs(v).max())
    return v * np.exp(-1j * np.angle(v[nz[0]]))


def _pair_unit_circle(near):
    """Merge numerically split double roots on the unit circle."""
    near = list(near)
    merged = []
    while near:
        z = near.pop(0)
        if not near:
            return None
        j = int(np.argmin([abs(z - w) for w in near]))
        w = near.pop(j)
        merged.append(np.exp(1j * np.angle(z + w)))
    return merged


def _minimum_phase_roots(roots, n, circle_tol=1e-4):
    mag = np.abs(roots)
    inner = roots[mag < 1.0 - circle_tol]
    near = roots[np.abs(mag - 1.0) <= circle_tol]
    if len(inner) < n:
        merged = _pair_unit_circle(near) if len(near) % 2 == 0 else None
        if merged is not None and len(inner) + len(merged) <= n:
            chosen = np.concatenate([inner, np.asarray(merged, dtype=complex)])
            # a vanishing leading coefficient loses roots at the origin
            return np.concatenate([chosen, np.zeros(n - len(chosen))])
    # roots pair up as (z, 1/conj z); keep the n innermost
    chosen = roots[np.argsort(mag)][:n]
    return np.concatenate([chosen, np.zeros(n - len(chosen))])


def spectral_factor(r, clamp_tol=CLAMP_TOL, grid_size=GRID_SIZE):
    """Unit-norm minimum-phase beam ``v`` with ``autocorr(v) ~= r``.

    Parameters
    ----------
    r : array_like, shape (2M - 1,)
        Realified autocorrelation vector with ``r[0] > 0``.
    clamp_tol : float
        Negative spectrum dips down to ``-clamp_tol * r[0]`` are absorbed by
        raising the zero lag; anything deeper is rejected.
    grid_size : int
        Number of ``u`` points used to check nonnegativity.

    Returns
    -------
    v : ndarray, shape (M,)
        Unit-norm beam, global phase fixed so its first nonzero entry is real
        positive.
    """
    r = np.array(r, dtype=float)
    M = (r.shape[0] + 1) // 2
    if r[0] <= 0:
        raise InfeasibleAutocorrelation("zero-lag power must be positive")
    if M == 1:
        return np.ones(1, dtype=complex)

    u = np.linspace(-1.0, 1.0, grid_size, endpoint=False)
    spec = trig_poly(r, u)
    i_min = int(np.argmin(spec))
    dip = -spec[i_min]
    if dip > clamp_tol * r[0]:
        raise InfeasibleAutocorrelation(
            f"spectrum is negative ({spec[i_min]:.3e}) at u = {u[i_min]:.6f}"
        )
    if dip > 0:
        r[0] += dip
    r /= r[0]

    rho = classical_lags(r)
    coeffs = np.concatenate([rho[:0:-1].conj(), rho])
    roots = _minimum_phase_roots(np.roots(coeffs), M - 1)
    v = np.poly(roots).astype(complex)
    v /= np.linalg.norm(v)

    if np.max(np.abs(autocorr(v) - r)) > 1e-10:
        v = _polish(v, r)
        v /= np.linalg.norm(v)
    return _fix_phase(v)
