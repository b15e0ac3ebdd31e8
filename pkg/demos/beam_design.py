"""One D-optimal design step, from measurements to a physical beam.

Takes ``2M - 1`` random-beam power measurements of a small array, fits the
maximum-likelihood Toeplitz parameter, solves for the autocorrelation that
maximizes the D-optimal gain and factors it back into a unit beam. The
beam pattern is printed on a coarse angle grid next to the true angular
power so the two can be compared by eye.

Run with ``python3 demos/beam_design.py``.
"""

import numpy as np

from activesense import (
    FisherState,
    LikelihoodData,
    autocorr,
    covariance_from_config,
    estimate_f,
    next_beam,
    two_cluster_scenario,
    steering,
)
from activesense.channel import sample_snapshots
from activesense.design import fim_from_autocorrs


def main():
    M = 8
    cfg = two_cluster_scenario(M=M, snr_db=10.0)
    cov = covariance_from_config(cfg)
    rng = np.random.default_rng(3)

    n = 2 * M - 1
    V = rng.standard_normal((n, M)) + 1j * rng.standard_normal((n, M))
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    Y = sample_snapshots(cov, n, rng)
    data = LikelihoodData(M, cfg.noise_var)
    for v, y in zip(V, Y):
        data.append(v, abs(np.vdot(v, y)) ** 2)

    fit = estimate_f(data)
    print(f"ML fit after {n} measurements: {fit.iterations} outer iterations")
    print("true f  :", np.array2string(cov.f_true[:3], precision=3))
    print("fitted f:", np.array2string(fit.f[:3], precision=3))

    state = FisherState.from_matrix(fim_from_autocorrs(data.R, fit.f, cfg.noise_var), n)
    choice = next_beam(state, fit.f, cfg.noise_var)
    print(f"D-optimal gain {choice.criterion:.4f}, "
          f"autocorrelation roundtrip error {np.abs(autocorr(choice.v) - choice.solve.r).max():.2e}")

    print("\n  theta   beam gain   true power")
    for theta in range(-80, 81, 10):
        u = np.sin(np.radians(theta))
        a = steering(u, M)
        gain = abs(np.vdot(choice.v, a)) ** 2
        power = np.real(np.vdot(a, cov.C @ a)) / M
        print(f"{theta:7d} {gain:11.3f} {power:12.3f}")


if __name__ == "__main__":
    main()
