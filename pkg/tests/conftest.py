import numpy as np
import pytest

from activesense.array import complex_embed, realify


def random_unit(rng, M):
    v = rng.standard_normal(M) + 1j * rng.standard_normal(M)
    return v / np.linalg.norm(v)


def random_psd_f(rng, M, n_atoms=4, power=1.0):
    """Toeplitz parameter of a random positive combination of steering atoms."""
    u = rng.uniform(-1, 1, n_atoms)
    w = rng.uniform(0.1, 1.0, n_atoms)
    w *= power / w.sum()
    k = np.arange(M)[:, None]
    return np.exp(1j * np.pi * k * u[None, :]) @ w


@pytest.fixture
def rng():
    return np.random.default_rng(20241018)


def rejection_samples(rng, M, n, grid=1024, chunk=50_000):
    """``n`` points of the unit-zero-lag autocorrelation set by box rejection.

    Candidates are uniform on the set's bounding box (``r[0] = 1``, extents
    from the exact linear oracle) and kept when their trigonometric polynomial
    is nonnegative on a ``grid``-point u-grid.
    """
    from activesense.design import AutocorrSet

    S = AutocorrSet(M)
    eye = np.eye(2 * M - 1)[1:]
    hi = np.array([S.linear_max(e)[0] for e in eye])
    lo = np.array([-S.linear_max(-e)[0] for e in eye])
    u = np.linspace(-1, 1, grid, endpoint=False)
    k = np.arange(1, M)
    basis = np.concatenate([np.cos(np.pi * np.outer(k, u)), np.sin(np.pi * np.outer(k, u))])
    out = []
    total = 0
    while total < n:
        X = rng.uniform(lo, hi, (chunk, 2 * M - 2))
        ok = (1.0 + X @ basis).min(axis=1) >= 0
        X = X[ok]
        out.append(np.hstack([np.ones((len(X), 1)), X]))
        total += len(X)
    return np.vstack(out)[:n]


def beam_samples(rng, M, n):
    """Autocorrelations of ``n`` random unit beams (extreme points of the set)."""
    from activesense.array import autocorr_many

    V = rng.standard_normal((M, n)) + 1j * rng.standard_normal((M, n))
    return autocorr_many(V / np.linalg.norm(V, axis=0))


ACCEPTANCE_LINES = []


def report_criterion(number, title, ok, detail):
    """Record one acceptance line; printed again in the terminal summary."""
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} | {detail}"
    ACCEPTANCE_LINES.append((number, line))
    print(line, flush=True)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
