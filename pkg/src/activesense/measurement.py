"""Single-RF-chain noncoherent power measurements.

A unit beam ``v`` applied to a snapshot ``y ~ CN(0, T(f) + s2 I)`` yields
``r = |v^H y|^2``, an exponential variable with mean
``mu(v) = s2 + v^H T(f) v`` and variance ``mu(v)^2``.
"""

from dataclasses import dataclass

import numpy as np

from .array import autocorr, realify

__all__ = [
    "MeasurementRecord",
    "check_unit",
    "mean_power",
    "take_measurement",
    "measure",
]

UNIT_TOL = 1e-6


def check_unit(v, tol=UNIT_TOL):
    """Return ``v`` renormalized to unit norm; fail if it was off by more than ``tol``."""
    v = np.asarray(v, dtype=complex)
    nrm = np.linalg.norm(v)
    if abs(nrm - 1.0) > tol:
        raise ValueError(f"beam must have unit norm (got ||v|| = {nrm:.9g})")
    return v / nrm


@dataclass(frozen=True)
class MeasurementRecord:
    beam_autocorr: np.ndarray
    value: float
    t: int

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("measurement values are nonnegative")


def mean_power(v, f, noise_var):
    """``mu(v) = noise_var + <autocorr(v), realify(f)>``."""
    v = check_unit(v)
    return float(noise_var + autocorr(v) @ realify(f))


def take_measurement(v, y):
    """Noncoherent power ``|v^H y|^2`` of snapshot ``y`` through beam ``v``."""
    v = check_unit(v)
    return float(abs(np.vdot(v, y)) ** 2)


def measure(v, y, t):
    v = check_unit(v)
    return MeasurementRecord(autocorr(v), take_measurement(v, y), int(t))
