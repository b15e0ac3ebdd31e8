"""Adaptive (D-optimal) and exhaustive-sweep subspace acquisition experiments."""

import hashlib
import json
import logging
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .array import autocorr, steering, toeplitz
from .channel import covariance_from_config, sample_snapshots
from .design import (
    AutocorrSet,
    FisherState,
    GridHalfspaces,
    ToeplitzEmbedding,
    accumulate,
    fim_from_autocorrs,
    fim_rank_one,
    next_beam,
)
from .ml import LikelihoodData, MLOptions, estimate_f

__all__ = [
    "dominant_subspace",
    "efficiency_eta",
    "gamma_metric",
    "ExperimentTrace",
    "AdaptiveOptions",
    "run_adaptive",
    "run_exhaustive",
    "run_comparison",
    "ComparisonSummary",
    "exhaustive_bins",
    "config_fingerprint",
]

log = logging.getLogger(__name__)


def dominant_subspace(C, p):
    """Orthonormal basis of the ``p`` leading eigenvectors of Hermitian ``C``."""
    M = C.shape[0]
    if not 1 <= p <= M:
        raise ValueError(f"p must lie in [1, {M}], got {p}")
    _, vecs = np.linalg.eigh(C)
    return vecs[:, ::-1][:, :p]


def _top_power(C, p):
    vals = np.linalg.eigvalsh(C)[::-1]
    return float(np.sum(vals[:p]))


def efficiency_eta(C, p):
    """Fraction of ``trace(C)`` captured by the best ``p``-dimensional beamformer."""
    if not 1 <= p <= C.shape[0]:
        raise ValueError("p out of range")
    return _top_power(C, p) / float(np.trace(C).real)


def gamma_metric(C, U_hat, optimal_power=None):
    """Captured power of ``U_hat`` relative to the dominant ``p``-subspace of ``C``."""
    U_hat = np.asarray(U_hat, dtype=complex)
    if U_hat.ndim == 1:
        U_hat = U_hat[:, None]
    p = U_hat.shape[1]
    gram = U_hat.conj().T @ U_hat
    if np.max(np.abs(gram - np.eye(p))) > 1e-6:
        raise ValueError("U_hat must have orthonormal columns")
    if optimal_power is None:
        optimal_power = _top_power(C, p)
    captured = float(np.real(np.trace(U_hat.conj().T @ C @ U_hat)))
    return captured / optimal_power


def config_fingerprint(cfg):
    blob = json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _beam_hash(v):
    return hashlib.sha1(np.round(np.asarray(v, dtype=complex), 10).tobytes()).hexdigest()[:12]


@dataclass
class ExperimentTrace:
    algorithm: str
    seed: int
    fingerprint: str
    t: list = field(default_factory=list)
    beam: list = field(default_factory=list)
    r: list = field(default_factory=list)
    gamma: list = field(default_factory=list)
    warnings: int = 0

    def add(self, t, beam, r, gamma):
        if self.t and t <= self.t[-1]:
            raise ValueError("snapshot index must increase")
        self.t.append(int(t))
        self.beam.append(beam)
        self.r.append(float(r))
        self.gamma.append(float(gamma))

    def __len__(self):
        return len(self.t)

    @property
    def gamma_array(self):
        return np.asarray(self.gamma)


@dataclass
class AdaptiveOptions:
    """Knobs of the adaptive loop.

    ``fim_refresh`` is the number of snapshots between full Fisher
    recomputations at the current estimate (rank-one updates in between;
    1 recomputes every snapshot). ``feasible`` picks the autocorrelation set
    used by the beam optimizer: ``"exact"``, ``"grid"`` or ``"embed"``.
    ``noiseless`` replaces every measured power by its mean ``mu(v)``, the
    limit of averaging infinitely many snapshots per beam (a diagnostic).
    """

    fim_refresh: int = 10
    restarts: int = 3
    feasible: str = "exact"
    ml: MLOptions = field(default_factory=MLOptions)
    warm_start_ml: bool = True
    noiseless: bool = False


def _feasible_set(kind, M):
    if kind == "exact":
        return AutocorrSet(M)
    if kind == "grid":
        return GridHalfspaces(M, 8 * M)
    if kind == "embed":
        return ToeplitzEmbedding(M, 4 * M)
    raise ValueError(f"unknown feasible set kind {kind!r}")


def _streams(seed):
    ss = np.random.SeedSequence(int(seed))
    beams, snaps, design = ss.spawn(3)
    return (np.random.default_rng(beams), np.random.default_rng(snaps),
            int(design.generate_state(1)[0]))


def _random_beam(rng, M):
    v = rng.standard_normal(M) + 1j * rng.standard_normal(M)
    return v / np.linalg.norm(v)


def run_adaptive(cfg, T, p, seed, options=None):
    """Adaptive beamforming and subspace estimation on one scenario.

    The first ``2M - 1`` beams are random; afterwards each beam maximizes the
    D-optimal gain at the current maximum-likelihood estimate. After every
    snapshot the subspace estimate is the dominant ``p``-subspace of
    ``T(fhat) + s2 I`` and its efficiency against the true covariance is
    recorded.
    """
    M = cfg.M
    if T < 2 * M - 1:
        raise ValueError(f"T must be at least 2M - 1 = {2 * M - 1}, got {T}")
    opts = options or AdaptiveOptions()
    s2 = cfg.noise_var
    cov = covariance_from_config(cfg)
    opt_power = _top_power(cov.C, p)
    beam_rng, snap_rng, design_seed = _streams(seed)
    snapshots = sample_snapshots(cov, T, snap_rng)
    feasible = _feasible_set(opts.feasible, M)

    trace = ExperimentTrace("adaptive", int(seed), config_fingerprint(cfg))
    data = LikelihoodData(M, s2)
    weights = None
    fhat = None
    state = None
    last_r = None
    for t in range(1, T + 1):
        if t <= 2 * M - 1:
            v = _random_beam(beam_rng, M)
        else:
            n_seq = t - 2 * M  # sequential steps already taken
            if state is None or n_seq % opts.fim_refresh == 0:
                state = FisherState.from_matrix(fim_from_autocorrs(data.R, fhat, s2), len(data))
            else:
                state = accumulate(state, fim_rank_one(v, fhat, s2))
            choice = next_beam(state, fhat, s2, feasible, restarts=opts.restarts,
                               seed=design_seed + t, warm_start=last_r)
            if choice.fallback:
                trace.warnings += 1
            v = choice.v
            last_r = choice.solve.r if choice.solve is not None else None
        if opts.noiseless:
            value = float(np.real(np.vdot(v, cov.C @ v)))
        else:
            value = float(abs(np.vdot(v, snapshots[t - 1])) ** 2)
        data.append(v, value)

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = estimate_f(data, opts.ml, init=weights if opts.warm_start_ml else None)
        if res.warnings:
            trace.warnings += 1
            log.debug("t=%d: %s", t, "; ".join(res.warnings))
        weights = res.weights
        fhat = res.f
        U_hat = dominant_subspace(toeplitz(fhat) + s2 * np.eye(M), p)
        trace.add(t, _beam_hash(v), value, gamma_metric(cov.C, U_hat, opt_power))
    return trace


def exhaustive_bins(M, theta_max_deg=90.0):
    """Bin centres ``-theta_m + 2 i theta_m / M`` mapped to ``u``."""
    theta = -theta_max_deg + 2.0 * np.arange(M) * theta_max_deg / M
    return np.sin(np.radians(theta)) / math.sin(math.radians(theta_max_deg))


def _orthonormal_steering(us, M):
    A = np.stack([steering(u, M) for u in us], axis=1)
    Q, _ = np.linalg.qr(A)
    return Q


def run_exhaustive(cfg, T, p, seed):
    """Sweep ``M`` fixed steering beams; after each sweep keep the ``p`` strongest."""
    if T < 1:
        raise ValueError("T must be positive")
    M = cfg.M
    cov = covariance_from_config(cfg)
    opt_power = _top_power(cov.C, p)
    _, snap_rng, _ = _streams(seed)
    snapshots = sample_snapshots(cov, T, snap_rng)
    bins = np.clip(exhaustive_bins(M, cfg.theta_max_deg), -1.0, 1.0)
    beams = [steering(u, M) / math.sqrt(M) for u in bins]

    sums = np.zeros(M)
    counts = np.zeros(M, dtype=int)
    # before the first completed sweep all bins tie at zero power
    U_hat = _orthonormal_steering(bins[:p], M)
    trace = ExperimentTrace("exhaustive", int(seed), config_fingerprint(cfg))
    for t in range(1, T + 1):
        b = (t - 1) % M
        value = float(abs(np.vdot(beams[b], snapshots[t - 1])) ** 2)
        sums[b] += value
        counts[b] += 1
        if t % M == 0:
            power = sums / counts
            top = np.argsort(-power, kind="stable")[:p]
            U_hat = _orthonormal_steering(bins[np.sort(top)], M)
        trace.add(t, f"bin{b:03d}", value, gamma_metric(cov.C, U_hat, opt_power))
    return trace


def _run_one(args):
    algo, cfg, T, p, seed, options = args
    if algo == "adaptive":
        return run_adaptive(cfg, T, p, seed, options)
    return run_exhaustive(cfg, T, p, seed)


def _workers(n_tasks):
    cap = os.environ.get("ASL_THREADS")
    n = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(n, n_tasks))


def run_many(tasks, workers=None):
    """Run ``(algo, cfg, T, p, seed, options)`` tasks, in parallel when allowed.

    Results come back in task order.
    """
    tasks = list(tasks)
    workers = workers or _workers(len(tasks))
    if workers <= 1:
        return [_run_one(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_run_one, tasks))


@dataclass
class ComparisonSummary:
    t: np.ndarray
    mean_adaptive: np.ndarray
    std_adaptive: np.ndarray
    mean_exhaustive: np.ndarray
    std_exhaustive: np.ndarray
    adaptive: list
    exhaustive: list

    HEADER = ("t", "mean_adaptive", "std_adaptive", "mean_exhaustive", "std_exhaustive")

    def rows(self):
        for i in range(len(self.t)):
            yield (int(self.t[i]), float(self.mean_adaptive[i]), float(self.std_adaptive[i]),
                   float(self.mean_exhaustive[i]), float(self.std_exhaustive[i]))

    def to_csv(self):
        lines = [",".join(self.HEADER)]
        for row in self.rows():
            lines.append(",".join([str(row[0])] + [repr(x) for x in row[1:]]))
        return "\n".join(lines) + "\n"

    def auc(self, which, t_lo, t_hi):
        """Trapezoidal area under the mean-Gamma curve over ``[t_lo, t_hi]``."""
        mean = self.mean_adaptive if which == "adaptive" else self.mean_exhaustive
        sel = (self.t >= t_lo) & (self.t <= t_hi)
        return float(np.trapezoid(mean[sel], self.t[sel]))


def run_comparison(cfg, T, p, repetitions, seed=0, seeds=None, options=None, workers=None):
    """Both algorithms over ``repetitions`` seeds; per-snapshot mean and std of Gamma."""
    if repetitions < 1:
        raise ValueError("repetitions must be at least 1")
    seeds = list(seeds) if seeds is not None else [seed + i for i in range(repetitions)]
    if len(seeds) != repetitions:
        raise ValueError("need one seed per repetition")
    tasks = [("adaptive", cfg, T, p, s, options) for s in seeds]
    tasks += [("exhaustive", cfg, T, p, s, None) for s in seeds]
    traces = run_many(tasks, workers)
    ad, ex = traces[:repetitions], traces[repetitions:]
    G_ad = np.array([tr.gamma for tr in ad])
    G_ex = np.array([tr.gamma for tr in ex])
    return ComparisonSummary(
        t=np.arange(1, T + 1),
        mean_adaptive=G_ad.mean(axis=0), std_adaptive=G_ad.std(axis=0),
        mean_exhaustive=G_ex.mean(axis=0), std_exhaustive=G_ex.std(axis=0),
        adaptive=ad, exhaustive=ex,
    )
