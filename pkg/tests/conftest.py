"""Shared test helpers: random problem generators and the acceptance report."""

import numpy as np
from hypothesis import HealthCheck, settings

from prdoa import ArrayGeometry, SampleCovariance, Scenario, generate_snapshots
from prdoa.rankone import RankOneMod

settings.register_profile(
    "ci",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")


def random_cov(rng, m=8, n_sources=2, snapshots=64, snr_db=6.0, doas=None,
               correlation=0.0):
    """A sample covariance from a random two-ish source scene."""
    if doas is None:
        lo = rng.uniform(10.0, 40.0)
        doas = np.sort(lo + rng.uniform(8.0, 35.0, size=n_sources).cumsum())
    geom = ArrayGeometry.ula(m)
    scen = Scenario(
        doas_deg=np.asarray(doas, dtype=float),
        powers=np.ones(n_sources),
        correlation=correlation,
        noise_power=10.0 ** (-snr_db / 10.0),
        snapshots=snapshots,
        seed=int(rng.integers(0, 2**31 - 1)),
    )
    x = generate_snapshots(geom, scen)
    return SampleCovariance.from_snapshots(x, n_sources)


def random_spd_cov(rng, m=8, n_sources=2):
    """A well-conditioned random SPD matrix wrapped as a covariance."""
    g = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    r = g @ g.conj().T / m + 0.5 * np.eye(m)
    return SampleCovariance.from_matrix(r, n_sources)


def random_mod(rng, k, dup=False, zero=False, spread=10.0):
    """A random rank-one modification, optionally with duplicate diagonal
    entries or zeroed update weights (the deflation triggers)."""
    d = np.sort(rng.uniform(0.0, spread, size=k))[::-1]
    if dup and k >= 3:
        i = int(rng.integers(0, k - 1))
        d[i + 1] = d[i]
        d = np.sort(d)[::-1]
    z = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    if zero:
        z[int(rng.integers(0, k))] = 0.0
    rho = float(rng.uniform(0.05, 2.0))
    return RankOneMod(d=d, rho=rho, z=z)


def dense_eigs_desc(mod):
    """Oracle: dense Hermitian eigenvalues of the modified matrix, descending."""
    return np.linalg.eigvalsh(mod.dense())[::-1]


# Acceptance lines are collected here and replayed in the terminal summary so
# they stay visible under default output capture.
ACCEPT_LINES = []


def record_accept(name, ok, detail=""):
    tag = "PASS" if ok else "FAIL"
    line = f"ACCEPT {name}: {tag}"
    if detail:
        line += f"  [{detail}]"
    ACCEPT_LINES.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if not ACCEPT_LINES:
        return
    terminalreporter.write_sep("-", "acceptance")
    for line in ACCEPT_LINES:
        terminalreporter.write_line(line)
