"""D-optimal selection of the next measurement beam.

The design variable is the realified autocorrelation ``r = autocorr(v)`` of a
unit beam. The set of all such vectors is convex; it is the set of ``r`` with
``r[0] = 1`` whose trigonometric polynomial ``<r, realify(a(u))>`` is
nonnegative for every ``u``. The next beam maximizes

    r^T D r / <r, rhat>^2,        rhat = realify(fhat) + s2 * e_0,

where ``D`` is the (ridge-regularized) inverse Fisher information. The ratio
is maximized with Dinkelbach's parametric scheme; each parametric problem
``max r^T (D - lam rhat rhat^T) r`` is an indefinite quadratic handled with
the concave-convex procedure.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.optimize import linprog

from .array import autocorr, complex_embed, realify, steering_matrix, toeplitz, trig_poly
from .measurement import check_unit
from .spectral import InfeasibleAutocorrelation, classical_lags, spectral_factor

__all__ = [
    "FisherState",
    "fim_rank_one",
    "fim_from_autocorrs",
    "accumulate",
    "AutocorrSet",
    "GridHalfspaces",
    "ToeplitzEmbedding",
    "d_criterion",
    "max_indefinite_quadratic",
    "QuadMaxResult",
    "dinkelbach_solve",
    "DinkelbachResult",
    "next_beam",
    "BeamChoice",
]

log = logging.getLogger(__name__)

RIDGE = 1e-8


# --------------------------------------------------------------------------
# Fisher information
# --------------------------------------------------------------------------

def _ridge_inverse(F):
    n = F.shape[0]
    tr = float(np.trace(F))
    eps = RIDGE * tr / n if tr > 0 else 1.0
    D = np.linalg.inv(F + eps * np.eye(n))
    return 0.5 * (D + D.T), eps


@dataclass(frozen=True)
class FisherState:
    """Accumulated Fisher information ``F`` and ``D = (F + eps I)^-1``.

    ``eps = 1e-8 * trace(F) / (2M - 1)``; an empty state uses ``eps = 1``.
    """

    F: np.ndarray
    D: np.ndarray
    t: int
    eps: float

    @classmethod
    def empty(cls, M):
        n = 2 * M - 1
        F = np.zeros((n, n))
        D, eps = _ridge_inverse(F)
        return cls(F, D, 0, eps)

    @classmethod
    def from_matrix(cls, F, t):
        F = 0.5 * (F + F.T)
        D, eps = _ridge_inverse(F)
        return cls(F, D, int(t), eps)

    @property
    def M(self):
        return (self.F.shape[0] + 1) // 2


def fim_rank_one(v, f, noise_var):
    """Fisher information of one measurement: ``r r^T / mu^2`` with ``r = autocorr(v)``."""
    r = autocorr(check_unit(v))
    mu = noise_var + r @ realify(f)
    if mu <= 0:
        raise ValueError("non-positive measurement mean")
    return np.outer(r, r) / mu**2


def fim_from_autocorrs(R, f, noise_var):
    """Summed Fisher information of measurements with beam autocorrelations ``R`` (rows)."""
    R = np.atleast_2d(R)
    mu = noise_var + R @ realify(f)
    if np.any(mu <= 0):
        raise ValueError("non-positive measurement mean")
    Rw = R / mu[:, None]
    return Rw.T @ Rw


def accumulate(state, contribution, count=1):
    """Add a Fisher information contribution; information is additive over snapshots."""
    contribution = np.asarray(contribution, dtype=float)
    if contribution.shape != state.F.shape:
        raise ValueError("dimension mismatch")
    return FisherState.from_matrix(state.F + contribution, state.t + count)


# --------------------------------------------------------------------------
# Feasible sets for autocorrelation vectors
# --------------------------------------------------------------------------

class AutocorrSet:
    """The exact set of unit-beam autocorrelations.

    Linear maximization is an eigenvalue problem:
    ``max_{r} <w, r> = lambda_max(T(complex_embed(w)))``, attained at the
    autocorrelation of the top eigenvector.
    """

    kind = "exact"

    def __init__(self, M, check_grid=4096):
        self.M = int(M)
        self._u = np.linspace(-1.0, 1.0, check_grid, endpoint=False)

    def linear_max(self, w):
        w = np.asarray(w, dtype=float)
        if not np.all(np.isfinite(w)):
            raise RuntimeError("non-finite direction passed to the eigenvalue oracle")
        T = toeplitz(complex_embed(w))
        k = self.M - 1
        try:
            vals, vecs = scipy.linalg.eigh(T, subset_by_index=[k, k], driver="evx",
                                           check_finite=False)
        except np.linalg.LinAlgError:
            vals = ()
        if len(vals) == 0:
            # the partial solver occasionally returns nothing; use the full one
            vals, vecs = np.linalg.eigh(T)
            vals, vecs = vals[-1:], vecs[:, -1:]
        return float(vals[0]), autocorr(vecs[:, 0])

    def violation(self, r):
        r = np.asarray(r, dtype=float)
        return max(abs(r[0] - 1.0), float(-np.min(trig_poly(r, self._u))), 0.0)

    def contains(self, r, tol=1e-9):
        return self.violation(r) <= tol

    def __repr__(self):
        return f"AutocorrSet(M={self.M})"


class GridHalfspaces:
    """Polyhedral outer approximation: ``r[0] = 1`` and ``<r, realify(a(u))> >= 0`` on a grid."""

    kind = "grid"

    def __init__(self, M, grid_size=None):
        self.M = int(M)
        self.grid_size = int(grid_size or 8 * M)
        u = -1.0 + 2.0 * np.arange(self.grid_size) / self.grid_size
        A = steering_matrix(u, self.M)
        self.B = np.concatenate([A.real, A[1:].imag], axis=0).T
        n = 2 * self.M - 1
        self._eq = np.zeros((1, n))
        self._eq[0, 0] = 1.0

    def linear_max(self, w):
        res = linprog(
            -np.asarray(w, dtype=float), A_ub=-self.B, b_ub=np.zeros(self.grid_size),
            A_eq=self._eq, b_eq=[1.0], bounds=(None, None), method="highs",
        )
        if res.status != 0:
            raise RuntimeError(f"LP oracle failed: {res.message}")
        return float(-res.fun), res.x

    def violation(self, r):
        r = np.asarray(r, dtype=float)
        return max(abs(r[0] - 1.0), float(-np.min(self.B @ r)), 0.0)

    def contains(self, r, tol=1e-9):
        return self.violation(r) <= tol

    def __repr__(self):
        return f"GridHalfspaces(M={self.M}, grid_size={self.grid_size})"


class ToeplitzEmbedding:
    """Outer approximation by an order-``M'`` Toeplitz embedding.

    Membership: ``r[0] = 1`` and the ``M' x M'`` Hermitian Toeplitz matrix of
    the classical lags of ``r`` padded with zeros is PSD. Larger orders give
    smaller sets, all containing the exact set.
    """

    kind = "embed"

    def __init__(self, M, order=None):
        self.M = int(M)
        self.order = int(order or 4 * M)
        if self.order < self.M:
            raise ValueError("embedding order must be at least M")

    def _matrix(self, r):
        rho = classical_lags(r)
        return toeplitz(np.concatenate([rho, np.zeros(self.order - self.M)]))

    def violation(self, r):
        r = np.asarray(r, dtype=float)
        lam = np.linalg.eigvalsh(self._matrix(r))[0]
        return max(abs(r[0] - 1.0), float(-lam), 0.0)

    def contains(self, r, tol=1e-9):
        return self.violation(r) <= tol

    def linear_max(self, w):
        import cvxpy as cp

        M, Mp = self.M, self.order
        w = np.asarray(w, dtype=float)
        X = cp.Variable((Mp, Mp), hermitian=True)
        cons = [X >> 0, cp.real(X[0, 0]) == 1]
        # Toeplitz structure: every diagonal constant, lags >= M vanish
        for k in range(Mp):
            diag = [X[i + k, i] for i in range(Mp - k)]
            for d in diag[1:]:
                cons.append(d == diag[0])
            if k >= M:
                cons.append(diag[0] == 0)
        col = [X[k, 0] for k in range(M)]
        obj = w[0] * cp.real(col[0])
        for k in range(1, M):
            obj += 2.0 * (w[k] * cp.real(col[k]) + w[M - 1 + k] * cp.imag(col[k]))
        prob = cp.Problem(cp.Maximize(obj), cons)
        prob.solve(solver=cp.CLARABEL)
        if prob.status not in ("optimal", "optimal_inaccurate"):
            raise RuntimeError(f"SDP oracle failed: {prob.status}")
        rho = np.array([X.value[k, 0] for k in range(M)])
        c = rho.copy()
        c[0] = rho[0].real
        c[1:] *= 2.0
        r = realify(c)
        return float(w @ r), r

    def __repr__(self):
        return f"ToeplitzEmbedding(M={self.M}, order={self.order})"


# --------------------------------------------------------------------------
# Criterion and inner solvers
# --------------------------------------------------------------------------

def d_criterion(r, D, rhat, noise_var):
    """D-optimal gain ``r^T D r / <r, rhat>^2`` of a candidate autocorrelation."""
    r = np.asarray(r, dtype=float)
    s = float(r @ rhat)
    if s < 0.5 * noise_var:
        raise ValueError(f"infeasible r: <r, rhat> = {s:.3e} is below noise_var/2")
    return float(r @ D @ r) / s**2


def _segment_best(g, h, c, ra, rb):
    """Maximize ``g.r - c (h.r)^2`` on the segment ``[rb, ra]``."""
    d = ra - rb
    hd = h @ d
    gd = g @ d
    hb = h @ rb
    if abs(hd) < 1e-300:
        theta = 1.0 if gd > 0 else 0.0
    else:
        theta = (gd / (2.0 * c) - hb * hd) / hd**2
        theta = min(1.0, max(0.0, theta))
    r = rb + theta * d
    return r, float(g @ r - c * (h @ r) ** 2)


def _rank_one_concave_max(g, h, c, feasible, rel_gap=1e-10, max_iter=100, h_range=None):
    """Maximize ``g.r - c (h.r)^2`` (``c >= 0``) over ``feasible`` through its linear oracle.

    Uses ``-c s^2 = min_nu (nu^2 / (4c) - nu s)``: the dual function
    ``phi(nu) = nu^2/(4c) + max_r (g - nu h).r`` is convex in one variable
    and its minimizer is bracketed by the range of ``h.r``. Returns the best
    primal point and the duality gap. ``h_range`` may pass the precomputed
    maximizers of ``h.r`` and ``-h.r`` (they do not depend on ``g``).
    """
    if c <= 0:
        val, r = feasible.linear_max(g)
        return r, val, 0.0

    def oracle(nu):
        val, r = feasible.linear_max(g - nu * h)
        return nu * nu / (4.0 * c) + val, r, float(h @ r)

    if h_range is None:
        h_range = (feasible.linear_max(-h)[1], feasible.linear_max(h)[1])
    r_lo_s, r_hi_s = h_range
    # slope phi'(nu) = nu/(2c) - s(nu) is nondecreasing
    nu_a, nu_b = 2.0 * c * float(h @ r_lo_s), 2.0 * c * float(h @ r_hi_s)
    phi_a, ra, sa = oracle(nu_a)
    phi_b, rb, sb = oracle(nu_b)
    upper = min(phi_a, phi_b)
    best_r, best = max(((ra, float(g @ ra - c * sa**2)), (rb, float(g @ rb - c * sb**2))),
                       key=lambda p: p[1])
    # ra has slope <= 0, rb slope >= 0
    for it in range(max_iter):
        cand_r, cand = _segment_best(g, h, c, ra, rb)
        if cand > best:
            best_r, best = cand_r, cand
        if upper - best <= rel_gap * (1.0 + abs(best)):
            break
        if nu_b - nu_a <= 1e-15 * max(1.0, abs(nu_a), abs(nu_b)):
            break
        # secant on the slope, safeguarded by bisection every other step
        da = nu_a / (2.0 * c) - sa
        db = nu_b / (2.0 * c) - sb
        if it % 2 == 0 and db > da:
            nu = nu_a - da * (nu_b - nu_a) / (db - da)
            if not nu_a < nu < nu_b:
                nu = 0.5 * (nu_a + nu_b)
        else:
            nu = 0.5 * (nu_a + nu_b)
        phi, r, s = oracle(nu)
        upper = min(upper, phi)
        val = float(g @ r - c * s**2)
        if val > best:
            best_r, best = r, val
        slope = nu / (2.0 * c) - s
        if slope < 0:
            nu_a, ra, sa = nu, r, s
        elif slope > 0:
            nu_b, rb, sb = nu, r, s
        else:
            break
    return best_r, best, max(upper - best, 0.0)


def _frank_wolfe(g, N, feasible, r0, rel_gap=1e-8, max_iter=2000):
    """Maximize ``g.r - r^T N r`` (``N`` PSD) by conditional gradient."""
    r = np.array(r0, dtype=float)
    gap = np.inf
    for _ in range(max_iter):
        grad = g - 2.0 * N @ r
        _, s = feasible.linear_max(grad)
        d = s - r
        gap = float(grad @ d)
        val = float(g @ r - r @ N @ r)
        if gap <= rel_gap * (1.0 + abs(val)):
            break
        curv = float(d @ N @ d)
        step = 1.0 if curv <= 0 else min(1.0, gap / (2.0 * curv))
        r = r + step * d
    return r, float(g @ r - r @ N @ r), max(gap, 0.0)


@dataclass
class QuadMaxResult:
    r: np.ndarray
    value: float
    chains: list = field(default_factory=list)
    failed_starts: int = 0

    def violations(self, tol=1e-9):
        """Count of CCCP steps that decreased the objective by more than ``tol``."""
        return sum(int(np.sum(np.diff(ch) < -tol)) for ch in self.chains)


def _split(Q):
    """DC split ``Q = P - N`` into PSD parts from the eigendecomposition."""
    vals, vecs = np.linalg.eigh(0.5 * (Q + Q.T))
    P = (vecs * np.maximum(vals, 0.0)) @ vecs.T
    N = (vecs * np.maximum(-vals, 0.0)) @ vecs.T
    neg = np.flatnonzero(vals < -1e-14 * max(1.0, np.abs(vals).max()))
    if len(neg) == 1:
        return P, (vecs[:, neg[0]], float(-vals[neg[0]]))
    return P, N


def _start_points(M, restarts, rng, extra=()):
    e0 = np.zeros(2 * M - 1)
    e0[0] = 1.0
    starts = [e0]
    for _ in range(max(restarts - 1, 0)):
        v = rng.standard_normal(M) + 1j * rng.standard_normal(M)
        starts.append(autocorr(v / np.linalg.norm(v)))
    starts.extend(np.asarray(x, dtype=float) for x in extra)
    return starts


def max_indefinite_quadratic(Q, feasible, restarts=3, rng=None, split=None, starts=None,
                             max_iter=100, rel_stop=1e-8):
    """Approximately maximize ``r^T Q r`` over ``feasible`` with CCCP and restarts.

    Parameters
    ----------
    Q : ndarray
        Symmetric ``(2M-1) x (2M-1)`` matrix, possibly indefinite.
    feasible : AutocorrSet, GridHalfspaces or ToeplitzEmbedding
    restarts : int
        Number of starting points: ``e_0`` followed by autocorrelations of
        random unit beams.
    split : tuple, optional
        ``(P, (h, c))`` with ``Q = P - c h h^T`` and ``P`` PSD, or ``(P, N)``
        with both PSD. Defaults to the eigenvalue split of ``Q``.
    starts : sequence, optional
        Extra starting points (e.g. a warm start), tried after the restarts.

    Returns
    -------
    QuadMaxResult
        Best point over all starts; ``chains`` holds the objective sequence
        of every CCCP run.
    """
    Q = np.asarray(Q, dtype=float)
    M = (Q.shape[0] + 1) // 2
    rng = rng if rng is not None else np.random.default_rng(0)
    P, neg = split if split is not None else _split(Q)

    if isinstance(neg, tuple):
        h, c = neg
        h_range = (feasible.linear_max(-h)[1], feasible.linear_max(h)[1]) if c > 0 else None

        def surrogate_max(g, r_k):
            r, _, _ = _rank_one_concave_max(g, h, c, feasible, h_range=h_range)
            return r
    else:
        N = neg

        def surrogate_max(g, r_k):
            r, _, _ = _frank_wolfe(g, N, feasible, r_k)
            return r

    def objective(r):
        return float(r @ Q @ r)

    out = QuadMaxResult(r=None, value=-np.inf)
    for r in _start_points(M, restarts, rng, extra=starts or ()):
        try:
            val = objective(r)
            chain = [val]
            for _ in range(max_iter):
                # tangent of r^T P r at r is 2 (P r).x - r^T P r; constants dropped
                r_new = surrogate_max(2.0 * P @ r, r)
                val_new = objective(r_new)
                chain.append(val_new)
                if val_new < val:
                    break
                improved = val_new - val
                r, val = r_new, val_new
                if improved <= rel_stop * (1.0 + abs(val)):
                    break
        except (RuntimeError, np.linalg.LinAlgError) as exc:
            log.warning("concave subproblem failed (%s); skipping restart", exc)
            out.failed_starts += 1
            continue
        out.chains.append(chain)
        if val > out.value:
            out.r, out.value = r, val
    if out.r is None:
        raise RuntimeError("all CCCP restarts failed")
    return out


# --------------------------------------------------------------------------
# Dinkelbach
# --------------------------------------------------------------------------

@dataclass
class DinkelbachResult:
    r: np.ndarray
    lam: float
    pi_lam: float
    pi0: float
    iterations: int
    history: list = field(default_factory=list)
    cccp_violations: int = 0


def dc_split(D, rhat, lam):
    """Split ``D - lam rhat rhat^T`` as ``P - c rhat rhat^T`` with ``P`` PSD and ``c >= 0``.

    ``P = D - g rhat rhat^T`` where ``g = min(lam, g_max)`` and
    ``g_max = 1 / (rhat^T D^+ rhat)`` is the largest shift keeping ``P`` PSD
    (zero when ``rhat`` leaves the range of ``D``); then ``c = lam - g``.
    """
    vals, vecs = np.linalg.eigh(0.5 * (D + D.T))
    vals = np.maximum(vals, 0.0)
    proj = vecs.T @ rhat
    tol = 1e-12 * max(vals.max(), 1e-300)
    pos = vals > tol
    outside = np.sum(proj[~pos] ** 2)
    if outside > 1e-20 * float(rhat @ rhat) or not np.any(pos):
        g_max = 0.0
    else:
        g_max = (1.0 - 1e-12) / float(np.sum(proj[pos] ** 2 / vals[pos]))
    g = min(lam, g_max)
    P = (vecs * vals) @ vecs.T - g * np.outer(rhat, rhat)
    P = 0.5 * (P + P.T)
    return P, lam - g


def dinkelbach_solve(D, rhat, feasible, noise_var, tol=1e-6, max_iter=60, restarts=3,
                     rng=None, warm_start=None):
    """Maximize ``r^T D r / <r, rhat>^2`` over ``feasible``.

    ``pi(lam) = max_r r^T (D - lam rhat rhat^T) r`` is decreasing and convex
    with a root at the optimal ratio. Iterates ``lam <- ratio(r(lam))``
    (Dinkelbach) inside the bracket ``[0, pi(0) / noise_var^2]`` and falls
    back to bisection when the inner maximization cannot certify
    ``pi(lam) >= 0``. Intermediate steps start the inner search from the
    incumbent only; an apparent root is re-solved with all ``restarts``
    before it is accepted.

    Returns
    -------
    DinkelbachResult
        ``lam`` with ``|pi(lam)| <= tol * max(1, pi(0))`` and the ``r`` that
        attains ``pi(lam)``.
    """
    D = 0.5 * (np.asarray(D, float) + np.asarray(D, float).T)
    rhat = np.asarray(rhat, dtype=float)
    M = (len(rhat) + 1) // 2
    rng = rng if rng is not None else np.random.default_rng(0)
    e0 = np.zeros(2 * M - 1)
    e0[0] = 1.0

    def ratio(r):
        return float(r @ D @ r) / float(r @ rhat) ** 2

    extra = [] if warm_start is None else [warm_start]
    res0 = max_indefinite_quadratic(D, feasible, restarts=restarts, rng=rng,
                                    split=(D, (rhat, 0.0)), starts=extra)
    pi0 = res0.value
    violations = res0.violations()
    if pi0 <= 0:
        return DinkelbachResult(e0, 0.0, pi0, pi0, 0, [], violations)

    scale = max(1.0, pi0)
    lo, hi = 0.0, pi0 / noise_var**2
    best_r = res0.r
    lam = min(ratio(best_r), hi)
    history = [(0.0, pi0)]
    pi_lam, r_lam = pi0, res0.r
    it = 0
    certify = False
    for it in range(1, max_iter + 1):
        P, c = dc_split(D, rhat, lam)
        # steps track the incumbent; a candidate root is re-checked with all restarts
        res = max_indefinite_quadratic(D - lam * np.outer(rhat, rhat), feasible,
                                       restarts=restarts if certify else 1, rng=rng,
                                       split=(P, (rhat, c)), starts=[best_r])
        violations += res.violations()
        pi_lam, r_lam = res.value, res.r
        history.append((lam, pi_lam))
        if abs(pi_lam) <= tol * scale:
            if certify or restarts <= 1:
                break
            certify = True
            continue
        certify = False
        if pi_lam > 0:
            best_r = r_lam
            lo = max(lam, ratio(r_lam))
            if lo > hi:
                hi = pi0 / noise_var**2
            lam = lo
        else:
            hi = lam
            lam = 0.5 * (lo + hi)
    return DinkelbachResult(r_lam, lam, pi_lam, pi0, it, history, violations)


# --------------------------------------------------------------------------
# Next beam
# --------------------------------------------------------------------------

@dataclass
class BeamChoice:
    v: np.ndarray
    r: np.ndarray
    criterion: float
    fallback: bool = False
    solve: DinkelbachResult | None = None


def _steering_fallback(D, rhat, noise_var, M, grid_size):
    u = -1.0 + 2.0 * np.arange(grid_size) / grid_size
    A = steering_matrix(u, M) / np.sqrt(M)
    best = (-np.inf, None)
    for k in range(grid_size):
        r = autocorr(A[:, k])
        val = d_criterion(r, D, rhat, noise_var)
        if val > best[0]:
            best = (val, A[:, k])
    return best[1], best[0]


def next_beam(state, fhat, noise_var, feasible=None, restarts=3, seed=0, warm_start=None,
              verify=None, min_count=None):
    """Unit beam maximizing the D-optimal gain given the current Fisher state.

    Parameters
    ----------
    state : FisherState
        Must hold at least ``2M - 1`` measurements.
    fhat : ndarray
        Current estimate of the Toeplitz parameter.
    feasible : feasible-set object, optional
        Defaults to :class:`AutocorrSet`.
    seed : int
        Seeds the random CCCP restarts so repeated calls agree.
    verify : feasible-set object, optional
        Membership check applied to the optimizer output before factoring
        (defaults to an order-``4M`` Toeplitz embedding for grid sets).
    """
    M = state.M
    if state.t < (min_count if min_count is not None else 2 * M - 1):
        raise ValueError(f"next_beam needs at least {2 * M - 1} measurements, got {state.t}")
    feasible = feasible or AutocorrSet(M)
    rhat = realify(fhat).copy()
    rhat[0] += noise_var
    # the argmax is invariant to scaling D
    D = state.D / max(np.linalg.eigvalsh(state.D)[-1], 1e-300)
    sol = dinkelbach_solve(D, rhat, feasible, noise_var, restarts=restarts,
                           rng=np.random.default_rng(seed), warm_start=warm_start)
    r = sol.r
    if verify is None and feasible.kind == "grid":
        verify = ToeplitzEmbedding(M)
    if verify is not None and not verify.contains(r, tol=1e-6):
        log.info("next_beam: optimizer output leaves %r by %.2e", verify, verify.violation(r))
    try:
        v = spectral_factor(r)
    except InfeasibleAutocorrelation as exc:
        log.warning("next_beam: spectral factorization failed (%s); using steering fallback", exc)
        v, crit = _steering_fallback(D, rhat, noise_var, M, 8 * M)
        r_v = autocorr(v)
        return BeamChoice(v, r_v, d_criterion(r_v, state.D, rhat, noise_var), True, sol)
    r_v = autocorr(v)
    return BeamChoice(v, r_v, d_criterion(r_v, state.D, rhat, noise_var), False, sol)
