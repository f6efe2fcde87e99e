"""Sensor-array geometry, synthetic snapshots, and sample covariance handling.

Angles at every public interface are degrees measured from array broadside;
radians appear only inside trigonometric kernels.  Sensor positions are given
in wavelengths, so a half-wavelength uniform linear array on the x axis has
the classic steering phase ``exp(j*pi*m*sin(theta))`` with the first sensor
as phase reference.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_SQRT2 = np.sqrt(2.0)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ArrayGeometry:
    """Sensor positions in wavelengths, one row per sensor, columns x/y/z."""

    positions: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim == 1:
            pos = np.column_stack([pos, np.zeros_like(pos), np.zeros_like(pos)])
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise ValueError("positions must be (m,) or (m, 3)")
        if pos.shape[0] < 2:
            raise ValueError("need at least two sensors")
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions must be finite")
        object.__setattr__(self, "positions", _readonly(pos))

    @classmethod
    def ula(cls, m: int, spacing: float = 0.5) -> "ArrayGeometry":
        """Uniform linear array of ``m`` sensors along x, spacing in wavelengths."""
        if m < 2:
            raise ValueError("need at least two sensors")
        if not (spacing > 0 and np.isfinite(spacing)):
            raise ValueError("spacing must be positive and finite")
        return cls(np.arange(m, dtype=float) * spacing)

    @property
    def m(self) -> int:
        return self.positions.shape[0]


def steering_vector(geometry: ArrayGeometry, theta_deg: float) -> np.ndarray:
    """Unit-modulus steering vector for a source at ``theta_deg`` from broadside.

    The arrival direction is ``(sin t, 0, cos t)`` so sensors on the x axis see
    the phase ``2*pi*<p_m, u>``; all entries have magnitude one and the first
    ULA sensor sits at the phase reference.
    """
    if not np.isfinite(theta_deg):
        raise ValueError("direction angle must be finite")
    return steering_matrix(geometry, np.asarray([theta_deg], dtype=float))[:, 0]


def steering_matrix(geometry: ArrayGeometry, angles_deg: np.ndarray) -> np.ndarray:
    """Steering vectors for many directions at once, shape (m, len(angles))."""
    ang = np.asarray(angles_deg, dtype=float)
    if not np.all(np.isfinite(ang)):
        raise ValueError("direction angles must be finite")
    t = np.deg2rad(ang)
    u = np.stack([np.sin(t), np.zeros_like(t), np.cos(t)])  # (3, G)
    phase = 2.0 * np.pi * (geometry.positions @ u)  # (m, G)
    return np.exp(1j * phase)


@dataclass(frozen=True)
class SearchGrid:
    """A direction grid with its precomputed steering matrix."""

    angles_deg: np.ndarray
    steering: np.ndarray  # (m, n_grid)

    def __post_init__(self):
        object.__setattr__(self, "angles_deg", _readonly(np.asarray(self.angles_deg, float)))
        object.__setattr__(self, "steering", _readonly(np.asarray(self.steering)))

    @classmethod
    def linspace(cls, geometry: ArrayGeometry, lo: float, hi: float, n: int) -> "SearchGrid":
        if n < 2 or not (hi > lo):
            raise ValueError("grid needs hi > lo and at least two points")
        ang = np.linspace(lo, hi, n)
        return cls(ang, steering_matrix(geometry, ang))

    @classmethod
    def from_spec(cls, geometry: ArrayGeometry, spec: str) -> "SearchGrid":
        """Build from a ``lo:hi:n`` string, endpoints inclusive."""
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid spec must look like lo:hi:n, got {spec!r}")
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        return cls.linspace(geometry, lo, hi, n)

    @property
    def n(self) -> int:
        return self.angles_deg.size

    @property
    def step(self) -> float:
        return float(np.median(np.diff(self.angles_deg)))


@dataclass(frozen=True)
class Scenario:
    """Source/noise description for one synthetic experiment.

    Parameters
    ----------
    doas_deg : strictly increasing source directions, degrees.
    powers : per-source powers (same length as ``doas_deg``).
    correlation : complex coefficient applied between consecutive source pairs;
        ``|correlation| <= 1`` and 1 makes consecutive sources coherent.
    noise_power : sensor noise variance (SNR of 1/noise_power for unit sources).
    snapshots : number of time samples.
    seed : RNG seed; identical seeds reproduce identical snapshots bit for bit.
    """

    doas_deg: np.ndarray
    powers: np.ndarray
    correlation: complex = 0.0
    noise_power: float = 1.0
    snapshots: int = 100
    seed: int = 0

    def __post_init__(self):
        doas = np.atleast_1d(np.asarray(self.doas_deg, dtype=float))
        if doas.size == 0 or not np.all(np.isfinite(doas)):
            raise ValueError("doas must be a nonempty finite list")
        if doas.size > 1 and not np.all(np.diff(doas) > 0):
            raise ValueError("doas must be strictly increasing")
        powers = np.atleast_1d(np.asarray(self.powers, dtype=float))
        if powers.shape != doas.shape or np.any(powers < 0) or not np.all(np.isfinite(powers)):
            raise ValueError("powers must be nonnegative, one per source")
        rho = complex(self.correlation)
        if abs(rho) > 1 + 1e-12:
            raise ValueError("|correlation| must be at most 1")
        if not (self.noise_power > 0 and np.isfinite(self.noise_power)):
            raise ValueError("noise_power must be positive")
        if int(self.snapshots) < 1:
            raise ValueError("need at least one snapshot")
        object.__setattr__(self, "doas_deg", _readonly(doas))
        object.__setattr__(self, "powers", _readonly(powers))
        object.__setattr__(self, "correlation", rho)
        object.__setattr__(self, "snapshots", int(self.snapshots))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def n_sources(self) -> int:
        return self.doas_deg.size

    def with_updates(self, **changes) -> "Scenario":
        cur = dict(
            doas_deg=self.doas_deg,
            powers=self.powers,
            correlation=self.correlation,
            noise_power=self.noise_power,
            snapshots=self.snapshots,
            seed=self.seed,
        )
        cur.update(changes)
        return Scenario(**cur)


def snr_to_noise_power(snr_db: float) -> float:
    """Noise variance for a given SNR in dB against unit source power."""
    return float(10.0 ** (-snr_db / 10.0))


@dataclass(frozen=True)
class SnapshotMatrix:
    """Complex sensor snapshots, shape (m, snapshots)."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _readonly(np.asarray(self.data, complex)))

    @property
    def m(self) -> int:
        return self.data.shape[0]

    @property
    def snapshots(self) -> int:
        return self.data.shape[1]


def _complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    # circular CN(0, 1): unit variance split evenly over both quadratures
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / _SQRT2


def generate_snapshots(geometry: ArrayGeometry, scenario: Scenario) -> SnapshotMatrix:
    """Draw snapshots ``X = A(theta) S + N`` for the scenario.

    Source waveforms are circular complex Gaussian; the scenario correlation
    chains consecutive sources as ``s_k = rho*s_{k-1} + sqrt(1-|rho|^2)*w_k``,
    leaving every source at its nominal power.  The draw order (sources first,
    then noise) is fixed so a seed pins the snapshots exactly.
    """
    n, m, t = scenario.n_sources, geometry.m, scenario.snapshots
    if n >= m:
        raise ValueError("scenario needs fewer sources than sensors")
    rng = np.random.default_rng(scenario.seed)
    w = _complex_gaussian(rng, (n, t))
    noise = _complex_gaussian(rng, (m, t)) * np.sqrt(scenario.noise_power)

    rho = scenario.correlation
    s = np.empty_like(w)
    s[0] = w[0]
    mix = np.sqrt(max(0.0, 1.0 - abs(rho) ** 2))
    for k in range(1, n):
        s[k] = rho * s[k - 1] + mix * w[k]
    s *= np.sqrt(scenario.powers)[:, None]

    a = steering_matrix(geometry, scenario.doas_deg)
    return SnapshotMatrix(a @ s + noise)


@dataclass(frozen=True)
class SampleCovariance:
    """Sample covariance with its eigendecomposition, eigenvalues descending.

    ``eig_values``/``eig_vectors`` satisfy ``r_hat = V diag(w) V^H`` with the
    first ``n_sources`` columns spanning the signal subspace estimate.  A
    singular matrix is legal here; estimators that need an inverse check
    :attr:`is_singular` and ask for :func:`diagonal_load`.
    """

    r_hat: np.ndarray
    eig_values: np.ndarray
    eig_vectors: np.ndarray
    n_sources: int

    def __post_init__(self):
        r = np.asarray(self.r_hat, complex)
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise ValueError("covariance must be square")
        if not (0 < self.n_sources < r.shape[0]):
            raise ValueError("need 0 < n_sources < m")
        object.__setattr__(self, "r_hat", _readonly(r))
        object.__setattr__(self, "eig_values", _readonly(np.asarray(self.eig_values, float)))
        object.__setattr__(self, "eig_vectors", _readonly(np.asarray(self.eig_vectors, complex)))

    @classmethod
    def from_snapshots(cls, x: "SnapshotMatrix | np.ndarray", n_sources: int) -> "SampleCovariance":
        data = x.data if isinstance(x, SnapshotMatrix) else np.asarray(x, complex)
        r = data @ data.conj().T / data.shape[1]
        return cls.from_matrix(r, n_sources)

    @classmethod
    def from_matrix(cls, r: np.ndarray, n_sources: int) -> "SampleCovariance":
        r = np.asarray(r, complex)
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise ValueError("covariance must be square")
        scale = np.abs(r).max()
        if scale > 0 and np.abs(r - r.conj().T).max() > 1e-10 * scale:
            raise ValueError("covariance must be Hermitian")
        r = 0.5 * (r + r.conj().T)
        w, v = np.linalg.eigh(r)
        return cls(r, w[::-1], v[:, ::-1], n_sources)

    @property
    def m(self) -> int:
        return self.r_hat.shape[0]

    @property
    def trace(self) -> float:
        return float(self.eig_values.sum())

    @property
    def signal_values(self) -> np.ndarray:
        return self.eig_values[: self.n_sources]

    @property
    def noise_values(self) -> np.ndarray:
        return self.eig_values[self.n_sources :]

    @property
    def signal_vectors(self) -> np.ndarray:
        return self.eig_vectors[:, : self.n_sources]

    @property
    def noise_vectors(self) -> np.ndarray:
        return self.eig_vectors[:, self.n_sources :]

    @property
    def rank(self) -> int:
        tol = self.m * np.finfo(float).eps * max(self.eig_values[0], 0.0)
        return int(np.sum(self.eig_values > tol))

    @property
    def is_singular(self) -> bool:
        return self.rank < self.m


def sample_covariance(x: "SnapshotMatrix | np.ndarray", n_sources: int) -> SampleCovariance:
    """Sample covariance ``X X^H / T`` of the snapshots, eigen-decomposed."""
    return SampleCovariance.from_snapshots(x, n_sources)


def diagonal_load(cov: SampleCovariance, gamma: float) -> SampleCovariance:
    """Covariance for ``r_hat + gamma*I``: eigenvalues shift by exactly gamma.

    Eigenvectors are untouched, so no second decomposition is run.  A zero
    gamma returns the input object itself.
    """
    if gamma < 0 or not np.isfinite(gamma):
        raise ValueError("loading factor must be nonnegative and finite")
    if gamma == 0.0:
        return cov
    m = cov.m
    return SampleCovariance(
        cov.r_hat + gamma * np.eye(m),
        cov.eig_values + gamma,
        cov.eig_vectors,
        cov.n_sources,
    )
