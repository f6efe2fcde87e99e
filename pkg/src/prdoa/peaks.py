"""Turn null spectra into DOA estimates.

Grid-based estimators end in the same two moves: find the n deepest minima
of a spectrum subject to a separation constraint, or (for the exact
two-source reference) search a coarse grid of direction pairs jointly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .arrays import SampleCovariance, SearchGrid
from .estimators import SpectrumResult


@dataclass(frozen=True)
class DoaEstimate:
    """Exactly n direction estimates, ascending, with their spectrum values."""

    angles_deg: np.ndarray
    values: np.ndarray
    used_fallback: bool


def find_n_minima(
    spec: SpectrumResult,
    n: int,
    min_separation_deg: Optional[float] = None,
    refine: bool = False,
) -> DoaEstimate:
    """Pick the n deepest spectrum minima at least min_separation_deg apart.

    Strict interior minima are taken greedily by depth.  If too few survive
    the separation constraint, the deepest remaining grid points fill in
    (still separated); if even that cannot reach n, separation is dropped for
    the final picks.  Either fallback sets ``used_fallback``.  The result
    always has exactly n ascending angles.

    ``min_separation_deg`` defaults to two grid cells.  ``refine`` shifts
    each interior pick by the vertex of the parabola through it and its two
    neighbors (at most half a cell).
    """
    ang = spec.angles_deg
    val = spec.values
    if not 1 <= n <= ang.size:
        raise ValueError(f"need 1 <= n <= {ang.size}, got {n}")
    step = float(np.median(np.diff(ang))) if ang.size > 1 else 1.0
    if min_separation_deg is None:
        min_separation_deg = 2.0 * step

    interior = np.flatnonzero((val[1:-1] < val[:-2]) & (val[1:-1] < val[2:])) + 1
    chosen: list[int] = []

    def try_take(candidates):
        for i in candidates:
            if len(chosen) == n:
                return
            i = int(i)
            if i in chosen:
                continue
            if all(abs(ang[i] - ang[j]) >= min_separation_deg for j in chosen):
                chosen.append(i)

    try_take(interior[np.argsort(val[interior], kind="stable")])
    used_fallback = False
    if len(chosen) < n:
        used_fallback = True
        everything = np.argsort(val, kind="stable")
        try_take(everything)
        for i in everything:  # separation cannot be satisfied; fill regardless
            if len(chosen) == n:
                break
            if int(i) not in chosen:
                chosen.append(int(i))

    idx = np.sort(np.asarray(chosen, dtype=int))
    angles = ang[idx].astype(float)
    if refine:
        angles = angles.copy()
        for pos, i in enumerate(idx):
            if 0 < i < val.size - 1 and np.isfinite(val[i - 1 : i + 2]).all():
                y0, y1, y2 = val[i - 1], val[i], val[i + 1]
                den = y0 - 2.0 * y1 + y2
                if den > 0.0:
                    shift = np.clip(0.5 * (y0 - y2) / den, -0.5, 0.5) * step
                    angles[pos] = ang[i] + shift
        order = np.argsort(angles, kind="stable")
        return DoaEstimate(angles[order], val[idx][order], used_fallback)
    return DoaEstimate(angles, val[idx], used_fallback)


def dml_grid2(cov: SampleCovariance, grid: SearchGrid) -> DoaEstimate:
    """Joint two-source grid minimization of the deterministic ML residual.

    Minimizes tr(P_perp([a_1, a_2]) R) over ordered pairs from the grid via
    the closed form for the two-column projector; pairs whose steering
    vectors are (near-)parallel are excluded.  Exact reference for n = 2,
    quadratic in the grid size, so keep the grid coarse.
    """
    if cov.n_sources != 2:
        raise ValueError("joint pair search requires n_sources == 2")
    if grid.n < 2:
        raise ValueError("pair search needs at least two grid points")
    a = grid.steering
    m = float(cov.m)
    cross = a.conj().T @ a  # Gram matrix of steering vectors
    k = a.conj().T @ (cov.r_hat @ a)
    kd = np.real(np.diagonal(k))
    num = m * (kd[:, None] + kd[None, :]) - 2.0 * np.real(np.conj(cross) * k)
    det = m * m - (cross.real**2 + cross.imag**2)
    with np.errstate(divide="ignore", invalid="ignore"):
        f = cov.trace - num / det
    f[det <= 1e-12 * m * m] = np.inf  # includes the diagonal
    f[np.tril_indices(grid.n)] = np.inf  # keep one orientation of each pair
    flat = int(np.argmin(f))
    i, j = divmod(flat, grid.n)
    best = max(float(f[i, j]), 0.0)
    if not np.isfinite(best):
        raise ValueError("no admissible direction pair on this grid")
    return DoaEstimate(
        np.array([grid.angles_deg[i], grid.angles_deg[j]]),
        np.array([best, best]),
        False,
    )
