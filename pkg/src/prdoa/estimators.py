"""Null-spectrum DOA estimators over a direction grid.

Every estimator maps a sample covariance and a search grid to nonnegative
per-direction values whose N deepest minima locate the sources:

* ``bf``      conventional beamformer residual  tr(R) - a^H R a / ||a||^2
* ``capon``   inverse Capon power               a^H R^{-1} a
* ``music``   noise-subspace projection         ||U_n^H a||^2 / ||a||^2
* ``pr-dml``  partial relaxation of deterministic ML
* ``pr-wsf``  partial relaxation of weighted subspace fitting
* ``pr-ccf``  partial relaxation of covariance fitting, Capon power inserted
* ``pr-ucf``  partial relaxation of covariance fitting, power optimized

The partial-relaxation spectra keep one steering column constrained to the
test direction and relax the remaining N-1 columns to arbitrary vectors; the
resulting per-direction cost is a tail sum of eigenvalues (or squared
eigenvalues) of a rank-one modification of the sample eigensystem.  The
``fast`` path feeds those modifications to the batched secular solver in
:mod:`prdoa.rankone`; the ``naive`` path forms the projected matrices per
direction and calls a dense eigendecomposition.  Both paths agree to solver
tolerance and are cross-checked in the test suite.

Estimator functions are pure: they never mutate the covariance, so one
decomposition can be shared across estimators and threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import rankone
from .arrays import SampleCovariance, SearchGrid

_TINY = np.finfo(float).tiny
# the squared forms amplify a root error by 2*lambda against a heavily
# cancelled residual, so drive the roots a few digits past the output tol
_SOLVER_EPS = 1e-14


class SingularCovarianceError(ValueError):
    """The estimator needs R^{-1}; apply arrays.diagonal_load first."""


@dataclass(frozen=True)
class SpectrumResult:
    """Null-spectrum values over a grid plus per-direction diagnostics."""

    angles_deg: np.ndarray
    values: np.ndarray
    estimator: str
    iterations: Optional[np.ndarray] = None  # secular steps per direction
    bisections: Optional[np.ndarray] = None  # power-bracket steps (pr-ucf)
    failed: Optional[np.ndarray] = None  # directions abandoned (+inf value)
    loading_gamma: float = 0.0  # diagonal loading the caller applied, if any


@dataclass(frozen=True)
class WsfWeighting:
    """Diagonal subspace weights (lambda_k - sigma_n^2)^2 / lambda_k."""

    weights: np.ndarray
    noise_power: float


@dataclass(frozen=True)
class UcfState:
    """Record of one per-direction power optimization (pr-ucf)."""

    sigma_left: float
    sigma_right: float
    sigma_hat: float
    grad_evals: int
    failed: bool
    value: float


def _direction_stats(cov: SampleCovariance, grid: SearchGrid):
    """Projections of the grid steering vectors onto the sample eigenbasis.

    Returns (w2, anorm2, ara): squared magnitudes of U^H a per direction
    (m, n_grid), the steering norms ||a||^2, and the quadratic forms a^H R a.
    """
    zfull = cov.eig_vectors.conj().T @ grid.steering
    w2 = zfull.real**2 + zfull.imag**2
    anorm2 = w2.sum(axis=0)
    ara = cov.eig_values @ w2
    return w2, anorm2, ara


def beamformer_spectrum(cov: SampleCovariance, grid: SearchGrid) -> SpectrumResult:
    """Total power left after removing the beamformer look direction."""
    _, anorm2, ara = _direction_stats(cov, grid)
    vals = np.maximum(cov.trace - ara / anorm2, 0.0)
    return SpectrumResult(grid.angles_deg, vals, "bf")


def capon_power(cov: SampleCovariance, a: np.ndarray) -> float:
    """Capon power 1 / (a^H R^{-1} a) for a single steering vector."""
    if cov.is_singular:
        raise SingularCovarianceError("capon power needs an invertible covariance; diagonal_load it")
    z = cov.eig_vectors.conj().T @ np.asarray(a, complex)
    return float(1.0 / np.sum((z.real**2 + z.imag**2) / cov.eig_values))


def capon_spectrum(cov: SampleCovariance, grid: SearchGrid) -> SpectrumResult:
    """Inverse Capon power a^H R^{-1} a (minima at the sources)."""
    if cov.is_singular:
        raise SingularCovarianceError("capon spectrum needs an invertible covariance; diagonal_load it")
    w2, _, _ = _direction_stats(cov, grid)
    vals = (w2 / cov.eig_values[:, None]).sum(axis=0)
    return SpectrumResult(grid.angles_deg, vals, "capon")


def music_spectrum(cov: SampleCovariance, grid: SearchGrid) -> SpectrumResult:
    """Normalized noise-subspace energy of the steering vector."""
    w2, anorm2, _ = _direction_stats(cov, grid)
    vals = w2[cov.n_sources :].sum(axis=0) / anorm2
    return SpectrumResult(grid.angles_deg, vals, "music")


def wsf_weighting(cov: SampleCovariance) -> WsfWeighting:
    """Diagonal weights (lambda_k - sigma_n^2)^2 / lambda_k, clamped at zero.

    sigma_n^2 is the mean of the m - n smallest sample eigenvalues; signal
    eigenvalues at or below it (possible at low SNR or for singular matrices)
    get zero weight instead of a negative or undefined one.
    """
    sigma_n = float(cov.noise_values.mean())
    lam_s = cov.signal_values
    w = np.zeros(lam_s.size)
    ok = lam_s > max(sigma_n, 0.0)
    w[ok] = (lam_s[ok] - sigma_n) ** 2 / lam_s[ok]
    return WsfWeighting(w, sigma_n)


# ---------------------------------------------------------------------------
# partial-relaxation spectra
# ---------------------------------------------------------------------------


def _projected_tail(cov: SampleCovariance, grid: SearchGrid, inner: np.ndarray, square: bool) -> np.ndarray:
    """Naive path helper: tail eigenvalue sums of P_perp(a) @ inner @ P_perp(a).

    Builds the projected matrix for every grid direction and takes the
    m - n + 1 smallest eigenvalues (the tail of the descending spectrum),
    summing them or their squares.
    """
    a = grid.steering  # (m, G)
    m = cov.m
    anorm2 = (a.real**2 + a.imag**2).sum(axis=0)
    outer = np.einsum("mg,ng->gmn", a, a.conj()) / anorm2[:, None, None]
    proj = np.eye(m)[None, :, :] - outer
    sandwich = proj @ inner @ proj
    evs = np.linalg.eigvalsh(sandwich)  # ascending, (G, m)
    tail = evs[:, : m - cov.n_sources + 1]
    return (tail**2).sum(axis=1) if square else tail.sum(axis=1)


def pr_dml_spectrum(cov: SampleCovariance, grid: SearchGrid, path: str = "fast") -> SpectrumResult:
    """Deterministic-ML residual with the unconstrained columns relaxed.

    Value: sum of the m-n+1 smallest eigenvalues of P_perp(a) R.  The fast
    path writes it as tr(R) - a^H R a/||a||^2 minus the n-1 largest
    eigenvalues of the rank-one modified eigenvalue matrix.
    """
    if path == "naive":
        vals = np.maximum(_projected_tail(cov, grid, cov.r_hat, square=False), 0.0)
        return SpectrumResult(grid.angles_deg, vals, "pr-dml")
    if path != "fast":
        raise ValueError("path must be 'fast' or 'naive'")
    w2, anorm2, ara = _direction_stats(cov, grid)
    vals = cov.trace - ara / anorm2
    iters = None
    n = cov.n_sources
    if n >= 2:
        lam_pos = np.maximum(cov.eig_values, 0.0)  # tiny negative rounding clamps
        top, it = rankone.batched_extremal_eigvals(
            cov.eig_values, 1.0 / anorm2, lam_pos[:, None] * w2, n - 1, "largest", eps=_SOLVER_EPS
        )
        vals = vals - top.sum(axis=0)
        iters = it.sum(axis=0)
    return SpectrumResult(grid.angles_deg, np.maximum(vals, 0.0), "pr-dml", iterations=iters)


def pr_wsf_spectrum(
    cov: SampleCovariance,
    grid: SearchGrid,
    weighting: Optional[WsfWeighting] = None,
    path: str = "fast",
) -> SpectrumResult:
    """Weighted subspace fitting residual with relaxed unconstrained columns.

    Value: smallest eigenvalue (equivalently the rank-deficient tail sum) of
    P_perp(a) U_s W U_s^H.  The fast path solves the n x n rank-one problem
    (W, 1/||a||^2, W^{1/2} U_s^H a) for its smallest eigenvalue; with W = I
    this reduces exactly to the MUSIC spectrum.
    """
    wsf = weighting if weighting is not None else wsf_weighting(cov)
    n = cov.n_sources
    w = np.asarray(wsf.weights, dtype=float)
    if w.shape != (n,):
        raise ValueError("weighting must supply one weight per source")
    if path == "naive":
        us = cov.signal_vectors
        inner = (us * w) @ us.conj().T
        vals = np.maximum(_projected_tail(cov, grid, inner, square=False), 0.0)
        return SpectrumResult(grid.angles_deg, vals, "pr-wsf")
    if path != "fast":
        raise ValueError("path must be 'fast' or 'naive'")

    zs = cov.eig_vectors[:, :n].conj().T @ grid.steering  # (n, G)
    anorm2 = (grid.steering.real**2 + grid.steering.imag**2).sum(axis=0)
    zpow = zs.real**2 + zs.imag**2
    if n > 1 and np.any(w[:-1] < w[1:]):  # weights usually arrive descending
        order = np.argsort(-w, kind="stable")
        w = w[order]
        zpow = zpow[order]
    weights = w[:, None] * zpow
    bottom, it = rankone.batched_extremal_eigvals(
        w, 1.0 / anorm2, weights, 1, "smallest", eps=_SOLVER_EPS
    )
    return SpectrumResult(
        grid.angles_deg, np.maximum(bottom[0], 0.0), "pr-wsf", iterations=it.sum(axis=0)
    )


def pr_ccf_spectrum(cov: SampleCovariance, grid: SearchGrid, path: str = "fast") -> SpectrumResult:
    """Covariance-fitting residual with the Capon power in the look direction.

    Value: sum of the m-n+1 smallest squared eigenvalues of
    R - sigma_c^2(a) a a^H with sigma_c^2 the Capon power.  The subtraction
    zeroes the smallest eigenvalue exactly, so the residual measures how far
    the remaining tail is from noise.
    """
    if cov.is_singular:
        raise SingularCovarianceError("pr-ccf needs an invertible covariance; diagonal_load it")
    w2, anorm2, ara = _direction_stats(cov, grid)
    sigma_c = 1.0 / (w2 / cov.eig_values[:, None]).sum(axis=0)
    if path == "naive":
        a = grid.steering
        mod = cov.r_hat[None, :, :] - sigma_c[:, None, None] * np.einsum("mg,ng->gmn", a, a.conj())
        evs = np.linalg.eigvalsh(mod)
        tail = evs[:, : cov.m - cov.n_sources + 1]
        return SpectrumResult(grid.angles_deg, (tail**2).sum(axis=1), "pr-ccf")
    if path != "fast":
        raise ValueError("path must be 'fast' or 'naive'")

    trr2 = float((cov.eig_values**2).sum())
    vals = trr2 - 2.0 * sigma_c * ara + sigma_c**2 * anorm2**2
    iters = None
    n = cov.n_sources
    if n >= 2:
        top, it = rankone.batched_extremal_eigvals(
            cov.eig_values, sigma_c, w2, n - 1, "largest", eps=_SOLVER_EPS
        )
        vals = vals - (top**2).sum(axis=0)
        iters = it.sum(axis=0)
    return SpectrumResult(grid.angles_deg, np.maximum(vals, 0.0), "pr-ccf", iterations=iters)


def _ucf_grad_cols(lam, w2, ara, anorm4, n_sources, sig, warm=None):
    """Fitting-residual derivative in the look-direction power, per column.

    g'(s) = -2 a^H R a + 2 s ||a||^4
            + sum_k 2 lam_k(s) / (s^2 * sum_j w_j/(lam_j - lam_k(s))^2)
    over the n-1 principal eigenvalues lam_k(s) of the modified matrix.
    Deflated eigenvalues report an infinite gap sum and so contribute zero.
    """
    base = -2.0 * ara + 2.0 * sig * anorm4
    count = n_sources - 1
    if count == 0:
        return base, None
    vals, _, gaps = rankone.batched_extremal_eigvals(
        lam, sig, w2, count, "largest", eps=_SOLVER_EPS, warm=warm, want_gap_sums=True
    )
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        denom = sig[None, :] ** 2 * gaps
        terms = np.where(np.isfinite(denom) & (denom > 0.0), 2.0 * vals / denom, 0.0)
    return base + terms.sum(axis=0), vals


def _ucf_power_search(
    lam: np.ndarray,
    n_sources: int,
    w2: np.ndarray,
    ara: np.ndarray,
    anorm4: np.ndarray,
    init_power: float,
    width_rtol: float,
    max_doublings: int,
    max_bisections: int,
):
    """Bracket and bisect the zero of g'(s) for every column of w2.

    Returns (sig_hat, left, right, grad_evals, bisections, failed).  Columns
    whose derivative stays negative out to the doubling cap are flagged as
    failed; columns whose left end halves below the floating-point floor pin
    sig_hat = 0 exactly (the residual decreases all the way into s = 0).
    """
    g = w2.shape[1]
    count = n_sources - 1
    warm_last = np.zeros((count, g)) if count else None
    grad_evals = np.zeros(g, dtype=int)

    def grad(sig_vec, cols):
        warm = warm_last[:, cols] if count else None
        gv, vals = _ucf_grad_cols(lam, w2[:, cols], ara[cols], anorm4[cols], n_sources, sig_vec, warm=warm)
        if count and vals is not None:
            warm_last[:, cols] = vals
        grad_evals[cols] += 1
        return gv

    left = np.full(g, float(init_power))
    right = left.copy()
    g0 = grad(left, np.arange(g))
    going_up = g0 < 0.0
    failed = np.zeros(g, dtype=bool)
    zero_power = np.zeros(g, dtype=bool)

    active = going_up.copy()
    for _ in range(max_doublings):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        right[idx] *= 2.0
        gv = grad(right[idx], idx)
        active[idx[gv > 0.0]] = False
    failed |= active  # right end never turned the derivative positive

    active = ~going_up
    while active.any():
        idx = np.flatnonzero(active)
        left[idx] *= 0.5
        floored = left <= 1e-300
        zero_power |= active & floored
        active &= ~floored
        idx = np.flatnonzero(active)
        if idx.size:
            gv = grad(left[idx], idx)
            active[idx[gv < 0.0]] = False

    bisections = np.zeros(g, dtype=int)
    active = ~failed & ~zero_power
    for _ in range(max_bisections):
        live = active & ((right - left) > width_rtol * np.maximum(right, _TINY))
        if not live.any():
            break
        idx = np.flatnonzero(live)
        mid = 0.5 * (left[idx] + right[idx])
        gv = grad(mid, idx)
        neg = gv < 0.0
        left[idx[neg]] = mid[neg]
        right[idx[~neg]] = mid[~neg]
        bisections[idx] += 1

    sig_hat = np.where(zero_power, 0.0, 0.5 * (left + right))
    sig_hat[failed] = np.nan
    return sig_hat, left, right, grad_evals, bisections, failed


def pr_ucf_spectrum(
    cov: SampleCovariance,
    grid: SearchGrid,
    init_power: float = 1e-6,
    width_rtol: float = 1e-8,
    max_doublings: int = 200,
    max_bisections: int = 500,
) -> SpectrumResult:
    """Covariance-fitting residual minimized over the look-direction power.

    Per direction the residual g(s) = sum of squared tail eigenvalues of
    R - s a a^H is minimized over s >= 0: starting from ``init_power`` the
    right end doubles until g' turns positive (or the left end halves until
    g' turns negative; hitting the floor pins s = 0), then bisection closes
    the bracket to ``width_rtol`` relative width.  Directions whose bracket
    never closes are flagged and set to +inf.
    """
    if not (init_power > 0):
        raise ValueError("init_power must be positive")
    lam = cov.eig_values
    n = cov.n_sources
    w2, anorm2, ara = _direction_stats(cov, grid)
    anorm4 = anorm2**2
    g = grid.n
    count = n - 1

    sig_hat, _, _, _, bisections, failed = _ucf_power_search(
        lam, n, w2, ara, anorm4, init_power, width_rtol, max_doublings, max_bisections
    )
    sig_hat = np.where(failed, 0.0, sig_hat)  # value is overwritten with inf below

    trr2 = float((lam**2).sum())
    vals = trr2 - 2.0 * sig_hat * ara + sig_hat**2 * anorm4
    if count:
        pos = sig_hat > 0.0
        if pos.any():
            top, _ = rankone.batched_extremal_eigvals(
                lam, sig_hat[pos], w2[:, pos], count, "largest", eps=_SOLVER_EPS
            )
            sub = np.zeros(g)
            sub[pos] = (top**2).sum(axis=0)
            sub[~pos] = float((lam[:count] ** 2).sum())
            vals = vals - sub
        else:
            vals = vals - float((lam[:count] ** 2).sum())
    vals = np.maximum(vals, 0.0)
    vals[failed] = np.inf
    return SpectrumResult(
        grid.angles_deg,
        vals,
        "pr-ucf",
        bisections=bisections,
        failed=failed if failed.any() else None,
    )


def ucf_derivative(cov: SampleCovariance, a: np.ndarray, power: float) -> float:
    """Derivative of the fitting residual g(s) at one direction and power."""
    if not (power > 0):
        raise ValueError("power must be positive")
    z = cov.eig_vectors.conj().T @ np.asarray(a, complex)
    w2 = (z.real**2 + z.imag**2)[:, None]
    ara = np.array([float(cov.eig_values @ w2[:, 0])])
    anorm4 = np.array([float(w2.sum()) ** 2])
    gv, _ = _ucf_grad_cols(cov.eig_values, w2, ara, anorm4, cov.n_sources, np.array([float(power)]))
    return float(gv[0])


def ucf_minimize(cov: SampleCovariance, a: np.ndarray, init_power: float = 1e-6) -> UcfState:
    """Run the per-direction power optimization for a single steering vector."""
    if not (init_power > 0):
        raise ValueError("init_power must be positive")
    z = cov.eig_vectors.conj().T @ np.asarray(a, complex)
    w2 = (z.real**2 + z.imag**2)[:, None]
    ara = np.array([float(cov.eig_values @ w2[:, 0])])
    anorm4 = np.array([float(w2.sum()) ** 2])
    sig_hat, left, right, evals, _, failed = _ucf_power_search(
        cov.eig_values, cov.n_sources, w2, ara, anorm4, init_power, 1e-8, 200, 500
    )
    lam = cov.eig_values
    count = cov.n_sources - 1
    trr2 = float((lam**2).sum())
    if failed[0]:
        value = float("inf")
        sig = float("nan")
    else:
        sig = float(sig_hat[0])
        value = trr2 - 2.0 * sig * ara[0] + sig**2 * anorm4[0]
        if count:
            if sig > 0.0:
                top, _ = rankone.batched_extremal_eigvals(
                    lam, np.array([sig]), w2, count, "largest", eps=_SOLVER_EPS
                )
                value -= float((top**2).sum())
            else:
                value -= float((lam[:count] ** 2).sum())
        value = max(value, 0.0)
    return UcfState(
        sigma_left=float(left[0]),
        sigma_right=float(right[0]),
        sigma_hat=sig,
        grad_evals=int(evals[0]),
        failed=bool(failed[0]),
        value=float(value),
    )


SPECTRUM_ESTIMATORS: dict = {
    "bf": lambda cov, grid, path, opts: beamformer_spectrum(cov, grid),
    "capon": lambda cov, grid, path, opts: capon_spectrum(cov, grid),
    "music": lambda cov, grid, path, opts: music_spectrum(cov, grid),
    "pr-dml": lambda cov, grid, path, opts: pr_dml_spectrum(cov, grid, path=path),
    "pr-wsf": lambda cov, grid, path, opts: pr_wsf_spectrum(cov, grid, path=path),
    "pr-ccf": lambda cov, grid, path, opts: pr_ccf_spectrum(cov, grid, path=path),
    "pr-ucf": lambda cov, grid, path, opts: pr_ucf_spectrum(
        cov, grid, init_power=opts.get("ucf_init_power", 1e-6)
    ),
}

_NO_PATHS = ("bf", "capon", "music", "pr-ucf")


def register_estimator(tag: str, fn: Callable) -> None:
    """Add a spectrum estimator under a new tag (signature (cov, grid, path, opts))."""
    if ":" in tag:
        raise ValueError("tags must not contain ':'")
    SPECTRUM_ESTIMATORS[tag] = fn


def parse_tag(tag: str) -> tuple:
    """Split an estimator tag into (base, path); path suffixes are :fast/:naive."""
    base, sep, path = tag.partition(":")
    if not sep:
        return base, "fast"
    if path not in ("fast", "naive"):
        raise ValueError(f"unknown path suffix in {tag!r}")
    if base in _NO_PATHS:
        raise ValueError(f"estimator {base!r} has a single path")
    return base, path


def spectrum(tag: str, cov: SampleCovariance, grid: SearchGrid, **opts) -> SpectrumResult:
    """Evaluate the named estimator ('pr-dml', 'music', ..., optional ':naive')."""
    base, path = parse_tag(tag)
    try:
        fn = SPECTRUM_ESTIMATORS[base]
    except KeyError:
        raise ValueError(f"unknown spectrum estimator {base!r}") from None
    return fn(cov, grid, path, opts)
