"""Maximum-likelihood Toeplitz covariance estimation from power measurements.

The negative log-likelihood of exponential measurements ``r_l`` taken with
unit beams ``v_l`` is

    L(f) = sum_l log(mu_l) + r_l / mu_l,   mu_l = s2 + <autocorr(v_l), realify(f)>.

It is the sum of a concave (log) and a convex (reciprocal) part, so it is
minimized with the concave-convex procedure: the log term is replaced by its
tangent at the current iterate and the resulting convex surrogate is
minimized. PSD-ness of ``T(f)`` is enforced by writing ``f`` as a
nonnegative combination of steering vectors on a uniform ``u``-grid.
"""

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .array import autocorr_many, complex_embed, realify, steering_matrix

__all__ = [
    "LikelihoodData",
    "AtomicGrid",
    "MLResult",
    "MLOptions",
    "neg_log_likelihood",
    "nll_gradient",
    "hessian",
    "expected_hessian",
    "cccp_ml_step",
    "estimate_f",
    "SubproblemWarning",
]

log = logging.getLogger(__name__)


class SubproblemWarning(RuntimeWarning):
    pass


class LikelihoodData:
    """Growing table of beam autocorrelations and measured powers."""

    def __init__(self, M, noise_var, beams=None, values=None):
        if not noise_var > 0:
            raise ValueError("noise_var must be positive")
        self.M = int(M)
        self.noise_var = float(noise_var)
        n = 2 * self.M - 1
        self._R = np.empty((16, n))
        self._r = np.empty(16)
        self._t = 0
        if beams is not None:
            self.extend(beams, values)

    @classmethod
    def from_records(cls, records, M, noise_var):
        data = cls(M, noise_var)
        for rec in records:
            data.append_autocorr(rec.beam_autocorr, rec.value)
        return data

    def __len__(self):
        return self._t

    @property
    def R(self):
        """Beam autocorrelations, one row per measurement."""
        return self._R[: self._t]

    @property
    def r(self):
        return self._r[: self._t]

    def _grow(self, extra):
        need = self._t + extra
        if need > self._R.shape[0]:
            cap = max(need, 2 * self._R.shape[0])
            R = np.empty((cap, self._R.shape[1]))
            r = np.empty(cap)
            R[: self._t] = self.R
            r[: self._t] = self.r
            self._R, self._r = R, r

    def append_autocorr(self, rvec, value):
        if value < 0:
            raise ValueError("measurement values are nonnegative")
        rvec = np.asarray(rvec, dtype=float)
        if rvec.shape != (2 * self.M - 1,):
            raise ValueError("beam autocorrelation has the wrong length")
        self._grow(1)
        self._R[self._t] = rvec
        self._r[self._t] = value
        self._t += 1

    def append(self, v, value):
        self.append_autocorr(autocorr_many(v)[0], value)

    def extend(self, beams, values):
        """Add measurements; ``beams`` holds one unit beam per column."""
        R = autocorr_many(beams)
        values = np.asarray(values, dtype=float)
        if np.any(values < 0):
            raise ValueError("measurement values are nonnegative")
        self._grow(len(values))
        self._R[self._t: self._t + len(values)] = R
        self._r[self._t: self._t + len(values)] = values
        self._t += len(values)


@dataclass(frozen=True)
class AtomicGrid:
    """Uniform grid ``u_k = -1 + 2k/G`` of atoms ``a(u_k) a(u_k)^H``."""

    M: int
    G: int

    @property
    def u(self):
        return -1.0 + 2.0 * np.arange(self.G) / self.G

    def atom_matrix(self):
        """Realified steering vectors ``realify(a(u_k))``, shape ``(G, 2M - 1)``."""
        A = steering_matrix(self.u, self.M)  # M x G
        return np.concatenate([A.real, A[1:].imag], axis=0).T

    def to_f(self, weights):
        return complex_embed(self.atom_matrix().T @ weights)

    def uniform_weights(self, total=1.0):
        """Weights reproducing ``f = total * e_0`` exactly."""
        return np.full(self.G, total / self.G)


@dataclass
class MLOptions:
    grid_factor: int = 8
    max_outer: int = 50
    rel_tol: float = 1e-6
    inner_tol: float = 1e-7
    max_inner: int = 500


@dataclass
class MLResult:
    f: np.ndarray
    weights: np.ndarray
    costs: list = field(default_factory=list)
    converged: bool = False
    warnings: list = field(default_factory=list)

    @property
    def iterations(self):
        return len(self.costs) - 1


def _means(rf, data):
    mu = data.noise_var + data.R @ rf
    if np.any(mu <= 0):
        raise ValueError("infeasible f: non-positive measurement mean")
    return mu


def neg_log_likelihood(f, data):
    """Negative log-likelihood ``L(f)`` of the measurements in ``data``."""
    if len(data) == 0:
        return 0.0
    mu = _means(realify(f), data)
    return float(np.sum(np.log(mu) + data.r / mu))


def nll_gradient(f, data):
    """Gradient of :func:`neg_log_likelihood` with respect to ``realify(f)``."""
    mu = _means(realify(f), data)
    return data.R.T @ (1.0 / mu - data.r / mu**2)


def hessian(f, data):
    """Hessian of ``L`` in ``realify(f)``: ``sum R R^T (2 r / mu - 1) / mu^2``."""
    mu = _means(realify(f), data)
    w = (2.0 * data.r / mu - 1.0) / mu**2
    return (data.R * w[:, None]).T @ data.R


def expected_hessian(f, data):
    """Expectation of :func:`hessian` over the measurement law: ``sum R R^T / mu^2``."""
    mu = _means(realify(f), data)
    return (data.R / mu[:, None] ** 2).T @ data.R


class _GridProblem:
    def __init__(self, data, grid):
        self.data = data
        self.grid = grid
        self.K = data.R @ grid.atom_matrix().T  # K[l, k] = |v_l^H a(u_k)|^2
        np.maximum(self.K, 0.0, out=self.K)
        self.s2 = data.noise_var
        self.r = data.r

    def mu(self, w):
        return self.s2 + self.K @ w

    def cost(self, w):
        mu = self.mu(w)
        return float(np.sum(np.log(mu) + self.r / mu))

    def surrogate(self, w, w_ref):
        """Convex upper bound of the cost, tight at ``w_ref``."""
        mu_ref = self.mu(w_ref)
        mu = self.mu(w)
        lin = np.sum(np.log(mu_ref)) + np.sum((mu - mu_ref) / mu_ref)
        return float(np.sum(self.r / mu) + lin)

    def step(self, w_ref, opts):
        mu_ref = self.mu(w_ref)
        b = self.K.T @ (1.0 / mu_ref)
        K, r, s2 = self.K, self.r, self.s2
        scale = 1.0 + float(np.sum(r / mu_ref)) + float(b @ w_ref)

        def fun(w):
            mu = s2 + K @ w
            val = np.sum(r / mu) + b @ w
            grad = b - K.T @ (r / mu**2)
            return val / scale, grad / scale

        res = minimize(
            fun, w_ref, jac=True, method="L-BFGS-B",
            bounds=[(0.0, None)] * len(w_ref),
            options={"maxiter": opts.max_inner, "ftol": 1e-15,
                     "gtol": opts.inner_tol, "maxcor": 20},
        )
        w = np.maximum(res.x, 0.0)
        ok = res.success
        # the surrogate is tight at w_ref, so never accept a worse point
        if self.surrogate(w, w_ref) > self.surrogate(w_ref, w_ref):
            w, ok = w_ref.copy(), False
        return w, ok


def cccp_ml_step(weights, data, grid, opts=None):
    """One concave-convex step on the atomic weights; returns the new weights.

    ``weights`` parameterize ``f = grid.to_f(weights)``. The returned weights
    never increase :func:`neg_log_likelihood`.
    """
    opts = opts or MLOptions()
    prob = _GridProblem(data, grid)
    w, ok = prob.step(np.asarray(weights, dtype=float), opts)
    if not ok:
        warnings.warn("CCCP subproblem did not converge", SubproblemWarning, stacklevel=2)
    return w


def estimate_f(data, options=None, init=None, grid=None):
    """Maximum-likelihood estimate of the Toeplitz parameter ``f``.

    Parameters
    ----------
    data : LikelihoodData
        At least one measurement.
    options : MLOptions, optional
    init : ndarray, optional
        Initial atomic weights (warm start). Defaults to weights representing
        ``f = (1, 0, ..., 0)``.
    grid : AtomicGrid, optional
        Defaults to ``G = options.grid_factor * M`` atoms.

    Returns
    -------
    MLResult
        ``result.f`` is the estimate; ``T(result.f)`` is PSD by construction.
    """
    if len(data) == 0:
        raise ValueError("estimate_f needs at least one measurement")
    opts = options or MLOptions()
    grid = grid or AtomicGrid(data.M, opts.grid_factor * data.M)
    prob = _GridProblem(data, grid)
    w = grid.uniform_weights(1.0) if init is None else np.maximum(np.asarray(init, float), 0.0)
    if w.shape != (grid.G,):
        raise ValueError("init weights do not match the grid")

    result = MLResult(f=grid.to_f(w), weights=w, costs=[prob.cost(w)])
    for _ in range(opts.max_outer):
        w_new, ok = prob.step(w, opts)
        if not ok:
            result.warnings.append(f"inner solver stalled at outer step {len(result.costs)}")
        c_new = prob.cost(w_new)
        c_old = result.costs[-1]
        result.costs.append(c_new)
        w = w_new
        if abs(c_old - c_new) <= opts.rel_tol * max(1.0, abs(c_old)):
            result.converged = True
            break
    for msg in result.warnings:
        log.debug("estimate_f: %s", msg)
    result.weights = w
    result.f = grid.to_f(w)
    return result
