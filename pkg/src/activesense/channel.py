"""Angular power scenarios, their Toeplitz covariance, and array snapshots."""

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .array import toeplitz

__all__ = [
    "ScenarioConfig",
    "PowerDensity",
    "TrueCovariance",
    "scenario_to_density",
    "fourier_coeffs",
    "build_covariance",
    "sample_snapshot",
    "sample_snapshots",
    "two_cluster_scenario",
    "covariance_from_config",
]


def _as_float(key, x):
    if isinstance(x, bool):
        raise ValueError(f"{key}: expected a number, got {x!r}")
    try:
        val = float(x)
    except (TypeError, ValueError):
        raise ValueError(f"{key}: expected a number, got {x!r}") from None
    if not math.isfinite(val):
        raise ValueError(f"{key}: must be finite, got {x!r}")
    return val


def _float_rows(key, rows):
    try:
        return tuple(tuple(_as_float(key, x) for x in row) for row in rows)
    except TypeError:
        raise ValueError(f"{key}: expected a list of numeric lists, got {rows!r}") from None


@dataclass(frozen=True)
class ScenarioConfig:
    """Angular power profile of one user seen by an ``M``-element ULA.

    ``segments`` holds ``(theta_lo_deg, theta_hi_deg, level)`` triples of
    uniform power and ``point_masses`` holds ``(theta_deg, variance)`` pairs.
    Levels are power per unit of normalized angle ``u``. When ``snr_db`` is
    given, all levels and variances are rescaled so that the total signal power
    over ``noise_var`` equals ``10 ** (snr_db / 10)``.
    """

    M: int
    segments: tuple = ()
    point_masses: tuple = ()
    noise_var: float = 1.0
    theta_max_deg: float = 90.0
    snr_db: float | None = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "segments", _float_rows("segments", self.segments))
        object.__setattr__(self, "point_masses", _float_rows("point_masses", self.point_masses))
        for key in ("noise_var", "theta_max_deg") + (("snr_db",) if self.snr_db is not None else ()):
            object.__setattr__(self, key, _as_float(key, getattr(self, key)))
        for key, low in (("M", 1), ("seed", 0)):
            val = getattr(self, key)
            if isinstance(val, bool) or not isinstance(val, (int, np.integer)) or val < low:
                raise ValueError(f"{key}: must be an integer >= {low}, got {val!r}")
            object.__setattr__(self, key, int(val))
        if not 0.0 < self.theta_max_deg <= 90.0:
            raise ValueError(f"theta_max_deg: must lie in (0, 90], got {self.theta_max_deg}")
        if not self.noise_var > 0:
            raise ValueError(f"noise_var: must be positive, got {self.noise_var}")
        tm = self.theta_max_deg
        for s in self.segments:
            if len(s) != 3:
                raise ValueError(f"segments: entries are (theta_lo, theta_hi, level), got {s}")
            lo, hi, level = s
            if not lo < hi:
                raise ValueError(f"segments: degenerate segment {s} (need lo < hi)")
            if lo < -tm or hi > tm:
                raise ValueError(f"segments: {s} leaves the scanned range [-{tm}, {tm}]")
            if level < 0:
                raise ValueError(f"segments: negative level in {s}")
        for p in self.point_masses:
            if len(p) != 2:
                raise ValueError(f"point_masses: entries are (theta, variance), got {p}")
            theta, var = p
            if abs(theta) > tm:
                raise ValueError(f"point_masses: angle {theta} leaves [-{tm}, {tm}]")
            if var < 0:
                raise ValueError(f"point_masses: negative variance in {p}")

    @classmethod
    def from_dict(cls, d):
        known = {"M", "segments", "point_masses", "noise_var", "theta_max_deg", "snr_db", "seed"}
        unknown = set(d) - known
        if not isinstance(d, dict):
            raise ValueError("config must be a JSON object")
        if unknown:
            raise ValueError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        if "M" not in d:
            raise ValueError("missing config key: M")
        return cls(**d)

    def to_dict(self):
        d = asdict(self)
        d["segments"] = [list(s) for s in self.segments]
        d["point_masses"] = [list(p) for p in self.point_masses]
        return d

    def with_snr(self, snr_db):
        d = self.to_dict()
        d["snr_db"] = snr_db
        return ScenarioConfig.from_dict(d)


@dataclass(frozen=True)
class PowerDensity:
    """Power density over ``u`` in [-1, 1]: uniform segments plus point masses."""

    segments: tuple = ()  # (u_lo, u_hi, level)
    points: tuple = ()  # (u, variance)

    def total_power(self):
        return sum(level * (hi - lo) for lo, hi, level in self.segments) + sum(
            var for _, var in self.points
        )

    def scaled(self, factor):
        return PowerDensity(
            tuple((lo, hi, level * factor) for lo, hi, level in self.segments),
            tuple((u, var * factor) for u, var in self.points),
        )

    def evaluate(self, u):
        """Continuous part of the density at the points ``u``."""
        u = np.asarray(u, dtype=float)
        out = np.zeros_like(u)
        for lo, hi, level in self.segments:
            out += level * ((u >= lo) & (u <= hi))
        return out


@dataclass(frozen=True)
class TrueCovariance:
    f_true: np.ndarray
    C: np.ndarray
    noise_var: float
    factor: np.ndarray = field(repr=False)

    @property
    def snr(self):
        return float(self.f_true[0].real) / self.noise_var

    @property
    def M(self):
        return self.C.shape[0]


def scenario_to_density(cfg):
    """Map a degree-domain scenario to the normalized-angle domain ``u = sin(theta)/sin(theta_m)``.

    Power levels are rescaled to hit ``cfg.snr_db`` when it is set.
    """
    s_m = math.sin(math.radians(cfg.theta_max_deg))

    def to_u(theta):
        return float(np.clip(math.sin(math.radians(theta)) / s_m, -1.0, 1.0))

    density = PowerDensity(
        tuple((to_u(lo), to_u(hi), level) for lo, hi, level in cfg.segments),
        tuple((to_u(theta), var) for theta, var in cfg.point_masses),
    )
    if cfg.snr_db is not None:
        total = density.total_power()
        if total <= 0:
            raise ValueError("snr_db: scenario carries no signal power to rescale")
        target = cfg.noise_var * 10.0 ** (cfg.snr_db / 10.0)
        density = density.scaled(target / total)
    return density


def fourier_coeffs(density, M):
    """First ``M`` Fourier coefficients ``f_k = int gamma(u) exp(j k pi u) du`` in closed form."""
    k = np.arange(M)
    f = np.zeros(M, dtype=complex)
    for lo, hi, level in density.segments:
        seg = np.empty(M, dtype=complex)
        seg[0] = hi - lo
        kk = k[1:]
        seg[1:] = (np.exp(1j * np.pi * kk * hi) - np.exp(1j * np.pi * kk * lo)) / (1j * np.pi * kk)
        f += level * seg
    for u, var in density.points:
        f += var * np.exp(1j * np.pi * k * u)
    f[0] = f[0].real
    return f


def build_covariance(f_true, noise_var):
    """Array covariance ``T(f_true) + noise_var * I`` with a sampling factor."""
    f_true = np.asarray(f_true, dtype=complex)
    if not noise_var > 0:
        raise ValueError("noise_var must be positive")
    S = toeplitz(f_true)
    lam_min = np.linalg.eigvalsh(S)[0]
    if lam_min < -1e-6 * max(f_true[0].real, 1e-300):
        raise ValueError(
            f"signal covariance is not PSD (min eigenvalue {lam_min:.3e}); malformed density"
        )
    C = S + noise_var * np.eye(len(f_true))
    factor = np.linalg.cholesky(C)
    return TrueCovariance(f_true=f_true, C=C, noise_var=float(noise_var), factor=factor)


def covariance_from_config(cfg):
    return build_covariance(fourier_coeffs(scenario_to_density(cfg), cfg.M), cfg.noise_var)


def sample_snapshots(cov, n, rng):
    """``n`` i.i.d. draws of ``CN(0, C)``, returned as an ``(n, M)`` array."""
    M = cov.M
    z = (rng.standard_normal((n, M)) + 1j * rng.standard_normal((n, M))) / math.sqrt(2.0)
    return z @ cov.factor.T


def sample_snapshot(cov, rng):
    return sample_snapshots(cov, 1, rng)[0]


def two_cluster_scenario(M=20, snr_db=0.0, noise_var=1.0, seed=0):
    """Two 2-degree clusters at [-50, -48] and [10, 12] degrees with equal level."""
    return ScenarioConfig(
        M=M,
        segments=((-50.0, -48.0, 1.0), (10.0, 12.0, 1.0)),
        noise_var=noise_var,
        theta_max_deg=90.0,
        snr_db=snr_db,
        seed=seed,
    )
