"""Eigenvalues of a Hermitian diagonal matrix minus a rank-one term.

Everything here works on ``D - rho * z z^H`` with ``D`` real diagonal, ``rho``
positive and ``z`` complex.  After deflation (dropping negligible update
components and rotating duplicate diagonal entries together) the remaining
eigenvalues are the roots of the secular function

    p(x) = 1 - rho * sum_k |z_k|^2 / (d_k - x),

one root strictly inside each gap ``(d_{k+1}, d_k)`` and one below ``d_K``
bounded by ``d_K - rho*||z||^2``.  Roots are found by a safeguarded iteration
that fits first-degree rational approximants (a constant plus one simple pole
on each side of the bracket) to the two halves of the secular sum and solves
the resulting quadratic, falling back to bisection whenever the candidate
leaves the current sign-change interval.

Two drivers are provided: a scalar per-root solver (`deflate`,
`root_secular_k`, `eigenvalues`, `eigenvector_for_root`) and a batched kernel
(`batched_extremal_eigvals`) that runs the same iteration across many update
vectors sharing one diagonal, which is the shape the grid-sweeping estimators
produce.  Collapsed problems of size one or two are solved in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

_EPS = float(np.finfo(float).eps)


class ConvergenceError(RuntimeError):
    """Secular iteration hit its cap; carries the best iterate seen."""

    def __init__(self, message: str, best: float, iterations: int):
        super().__init__(message)
        self.best = best
        self.iterations = iterations


@dataclass(frozen=True)
class RankOneMod:
    """The modified matrix ``diag(d) - rho * z z^H``."""

    d: np.ndarray
    rho: float
    z: np.ndarray

    def __post_init__(self):
        d = np.atleast_1d(np.asarray(self.d, dtype=float))
        z = np.atleast_1d(np.asarray(self.z, dtype=complex))
        if d.ndim != 1 or z.shape != d.shape:
            raise ValueError("d and z must be 1-D with matching length")
        if not np.all(np.isfinite(d)) or not np.all(np.isfinite(z)):
            raise ValueError("d and z must be finite")
        if not (np.isfinite(self.rho) and self.rho > 0):
            raise ValueError("rho must be positive")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "rho", float(self.rho))

    @property
    def k(self) -> int:
        return self.d.size

    def dense(self) -> np.ndarray:
        """Materialize the full Hermitian matrix (test/oracle use)."""
        return np.diag(self.d).astype(complex) - self.rho * np.outer(self.z, self.z.conj())


def secular_value(mod: RankOneMod, x: float) -> float:
    """Evaluate ``1 - rho * sum |z_k|^2 / (d_k - x)``; poles are an error."""
    diffs = mod.d - x
    if np.any(diffs == 0.0):
        raise ValueError("secular function evaluated at a pole")
    w = np.abs(mod.z) ** 2
    return float(1.0 - mod.rho * np.sum(w / diffs))


@dataclass(frozen=True)
class DeflationResult:
    """Outcome of deflation: exact eigenvalues plus a strictly reduced problem.

    ``kept`` lists eigenvalues read off directly (repeats carry multiplicity);
    ``reduced`` has strictly descending diagonal entries and update components
    all safely away from zero.  ``rotations`` records the complex Givens pairs
    (i, j, c, s) applied in order, acting on the sorted coordinates given by
    ``order``; they are needed to lift eigenvectors back to the original
    coordinates.
    """

    kept: np.ndarray
    reduced: RankOneMod
    rotations: tuple
    order: np.ndarray
    kept_idx: np.ndarray
    reduced_idx: np.ndarray

    def eigenvector(self, root: float, kept_position: Optional[int] = None) -> np.ndarray:
        """Unit eigenvector of the original matrix for one eigenvalue.

        For a secular root of the reduced problem pass the root; for a kept
        eigenvalue pass its index within ``kept`` via ``kept_position``.
        """
        k_orig = self.order.size
        v = np.zeros(k_orig, dtype=complex)
        if kept_position is None:
            diffs = self.reduced.d - root
            if np.any(diffs == 0.0):
                raise ValueError("root coincides with a reduced diagonal entry")
            v[self.reduced_idx] = self.reduced.z / diffs
        else:
            v[self.kept_idx[kept_position]] = 1.0
        for i, j, c, s in reversed(self.rotations):
            vi, vj = v[i], v[j]
            v[i] = c * vi - np.conj(s) * vj
            v[j] = s * vi + np.conj(c) * vj
        out = np.zeros_like(v)
        out[self.order] = v
        return out / np.linalg.norm(out)


def deflate(
    d: np.ndarray,
    rho: float,
    z: np.ndarray,
    tol_z: Optional[float] = None,
    tol_d: Optional[float] = None,
) -> DeflationResult:
    """Split ``diag(d) - rho z z^H`` into kept eigenvalues and a reduced update.

    Components with ``|z_k|`` below ``tol_z * ||z||`` deflate directly; near
    duplicate diagonal entries (gap below ``tol_d * spread``, where spread is
    ``d_max - d_min + rho*||z||^2``) are combined by a complex Givens rotation
    that zeroes one update component exactly, leaving the reduced diagonal
    strictly descending.  Defaults for both tolerances are ``K`` machine
    epsilons.
    """
    d = np.atleast_1d(np.asarray(d, dtype=float))
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if d.shape != z.shape or d.ndim != 1:
        raise ValueError("d and z must be 1-D with matching length")
    if not (np.isfinite(rho) and rho > 0):
        raise ValueError("rho must be positive")
    k = d.size
    order = np.argsort(-d, kind="stable")
    ds = d[order].copy()
    zs = z[order].copy()

    znorm2 = float(np.sum(np.abs(zs) ** 2))
    znorm = np.sqrt(znorm2)
    spread = (ds[0] - ds[-1]) + rho * znorm2
    if tol_z is None:
        tol_z = k * _EPS
    if tol_d is None:
        tol_d = k * _EPS
    zthr = tol_z * znorm
    dthr = tol_d * spread

    deflated = np.abs(zs) <= zthr
    zs[deflated] = 0.0

    rotations = []
    surv = -1
    for idx in range(k):
        if deflated[idx]:
            continue
        if surv >= 0 and (ds[surv] - ds[idx]) <= dthr:
            r = np.hypot(np.abs(zs[surv]), np.abs(zs[idx]))
            c = zs[surv] / r
            s = zs[idx] / r
            rotations.append((surv, idx, c, s))
            zs[surv] = r
            zs[idx] = 0.0
            deflated[idx] = True
        else:
            surv = idx

    kept_idx = np.flatnonzero(deflated)
    red_idx = np.flatnonzero(~deflated)
    reduced = RankOneMod(ds[red_idx], rho, zs[red_idx])
    return DeflationResult(
        kept=ds[kept_idx],
        reduced=reduced,
        rotations=tuple(rotations),
        order=order,
        kept_idx=kept_idx,
        reduced_idx=red_idx,
    )


def root_secular_k(
    mod,
    k: int,
    x0: Optional[float] = None,
    eps: float = 1e-9,
    max_iter: int = 100,
) -> tuple:
    """Root of the secular function in the k-th gap (0-based, k=0 topmost).

    Expects a deflated problem: strictly descending ``d`` and nonzero ``z``.
    The bracket is ``(d[k+1], d[k])`` for interior roots and
    ``(d[-1] - rho*||z||^2, d[-1])`` for the last one.  Each step fits
    ``p + q/(d_k - x)`` to the near half of the secular sum and
    ``r + s/(d_{k+1} - x)`` to the far half, solves the cleared quadratic,
    keeps the candidate only when it stays inside the current sign-change
    interval, and bisects otherwise.  Convergence is ``|dx| < eps*(1+|x|)``.

    Returns ``(root, iterations)``.
    """
    d = np.asarray(mod.d, dtype=float)
    rho = float(mod.rho)
    w = np.abs(np.asarray(mod.z)) ** 2
    kk = d.size
    if kk == 0:
        raise ValueError("empty problem has no secular roots")
    if not (0 <= k < kk):
        raise IndexError("root index out of range")
    if kk > 1 and not np.all(np.diff(d) < 0):
        raise ValueError("diagonal must be strictly descending (deflate first)")
    if np.any(w == 0.0):
        raise ValueError("update weights must be nonzero (deflate first)")

    if kk == 1:
        # single pole: the fit is exact and so is this root
        return d[0] - rho * w[0], 1

    last = k == kk - 1
    hi = d[k]
    lo = d[-1] - rho * w.sum() if last else d[k + 1]
    x = x0 if (x0 is not None and lo < x0 < hi) else 0.5 * (lo + hi)

    for it in range(1, max_iter + 1):
        if hi - lo <= eps * (1.0 + abs(hi)):
            return 0.5 * (lo + hi), it

        diffs = d - x
        t1 = rho * w / diffs
        t2 = t1 / diffs
        psi = -float(t1[: k + 1].sum())
        dpsi = -float(t2[: k + 1].sum())
        phi = -float(t1[k + 1 :].sum())
        dphi = -float(t2[k + 1 :].sum())
        psec = 1.0 + psi + phi

        if psec > 0.0:
            lo = max(lo, x)
        else:
            hi = min(hi, x)

        d1 = d[k] - x
        q = dpsi * d1 * d1
        p = psi - dpsi * d1
        cands = []
        if not last:
            d2 = d[k + 1] - x
            s_ = dphi * d2 * d2
            r_ = phi - dphi * d2
            a_ = 1.0 + p + r_
            b_ = -(a_ * (d1 + d2) + q + s_)
            c_ = psec * d1 * d2  # exact product form of the constant term
            disc = b_ * b_ - 4.0 * a_ * c_
            sq = np.sqrt(disc) if disc > 0.0 else 0.0
            qf = -0.5 * (b_ + sq) if b_ >= 0.0 else -0.5 * (b_ - sq)
            if qf != 0.0:
                cands.append(c_ / qf)  # smaller-magnitude step first
                if a_ != 0.0:
                    cands.append(qf / a_)
            elif b_ != 0.0:
                cands.append(-c_ / b_)
        else:
            c1p = 1.0 + p
            if c1p > 0.0:
                cands.append(d1 + q / c1p)

        # a fitted step below tolerance means x already sits on the root to
        # working precision, even when x + step falls on a bracket endpoint
        if cands and abs(cands[0]) < eps * (1.0 + abs(x)):
            return x, it

        x_new = None
        for t in cands:
            cand = x + t
            inside = (lo <= cand < hi) if last else (lo < cand < hi)
            if inside and np.isfinite(cand):
                x_new = cand
                break
        if x_new is None:
            x_new = 0.5 * (lo + hi)

        if abs(x_new - x) < eps * (1.0 + abs(x_new)):
            return x_new, it
        x = x_new

    raise ConvergenceError(
        f"secular root {k} did not converge in {max_iter} iterations", best=x, iterations=max_iter
    )


@dataclass(frozen=True)
class SecularRoots:
    """Requested eigenvalues of the modified matrix.

    ``roots`` are sorted descending for ``which='largest'`` and ascending for
    ``which='smallest'``; ``iterations`` counts secular steps (zero for
    eigenvalues read off during deflation); ``gap_sums`` holds
    ``sum_j |z_j|^2/(d_j - root)^2`` over the reduced problem for secular
    roots and ``+inf`` for deflated eigenvalues (whose eigenvectors are
    orthogonal to the update).
    """

    roots: np.ndarray
    iterations: np.ndarray
    gap_sums: np.ndarray


def eigenvalues(
    mod: RankOneMod,
    how_many: int,
    which: str = "largest",
    warm: Optional[np.ndarray] = None,
    eps: float = 1e-9,
) -> SecularRoots:
    """The ``how_many`` largest or smallest eigenvalues of the modified matrix.

    Deflates, finds the needed secular roots (optionally warm-started from a
    previous call's values; a warm value is used only when it falls inside the
    root's bracket), and merges with the deflated eigenvalues.
    """
    if which not in ("largest", "smallest"):
        raise ValueError("which must be 'largest' or 'smallest'")
    k_all = mod.d.size
    if not (0 <= how_many <= k_all):
        raise ValueError("how_many out of range")
    if how_many == 0:
        empty = np.empty(0)
        return SecularRoots(empty, empty.astype(int), empty)

    defl = deflate(mod.d, mod.rho, mod.z)
    red = defl.reduced
    kr = red.d.size
    need = min(how_many, kr)
    if which == "largest":
        ks = range(need)
    else:
        ks = range(kr - need, kr)

    warm_arr = None if warm is None else np.sort(np.asarray(warm, dtype=float))[::-1]
    roots = np.empty(need)
    iters = np.zeros(need, dtype=int)
    gaps = np.empty(need)
    wred = np.abs(red.z) ** 2 if kr else np.empty(0)
    for out_i, ki in enumerate(ks):
        hi = red.d[ki]
        lo = red.d[-1] - red.rho * wred.sum() if ki == kr - 1 else red.d[ki + 1]
        x0 = None
        if warm_arr is not None:
            inside = warm_arr[(warm_arr > lo) & (warm_arr < hi)]
            if inside.size:
                x0 = float(inside[0])
        root, it = root_secular_k(red, ki, x0=x0, eps=eps)
        roots[out_i] = root
        iters[out_i] = it
        gaps[out_i] = float(np.sum(wred / (red.d - root) ** 2))

    kept = np.sort(defl.kept)[::-1]
    sel = min(how_many, kept.size)
    kept_sel = kept[:sel] if which == "largest" else kept[kept.size - sel :]
    vals = np.concatenate([roots, kept_sel])
    its = np.concatenate([iters, np.zeros(sel, dtype=int)])
    gs = np.concatenate([gaps, np.full(sel, np.inf)])
    order = np.argsort(-vals, kind="stable") if which == "largest" else np.argsort(vals, kind="stable")
    order = order[:how_many]
    return SecularRoots(vals[order], its[order], gs[order])


def full_spectrum(mod: RankOneMod, eps: float = 1e-9) -> np.ndarray:
    """All eigenvalues of the modified matrix, descending."""
    return eigenvalues(mod, mod.d.size, "largest", eps=eps).roots


def eigenvector_for_root(mod, root: float) -> np.ndarray:
    """Unit eigenvector ``(D - root I)^{-1} z`` of a deflated problem."""
    diffs = np.asarray(mod.d, dtype=float) - root
    if np.any(diffs == 0.0):
        raise ValueError("root coincides with a diagonal entry; deflate first")
    v = np.asarray(mod.z) / diffs
    nrm = np.linalg.norm(v)
    if nrm == 0.0:
        raise ValueError("degenerate eigenvector for this root")
    return v / nrm


# ---------------------------------------------------------------------------
# batched kernel: one diagonal, many update vectors
# ---------------------------------------------------------------------------


def _closed_form_pair(d0, d1, w0, w1, rho):
    """Exact eigenvalues of the 2x2 modified matrix, returned (larger, smaller)."""
    t0 = d0 - rho * w0
    t1 = d1 - rho * w1
    mid = 0.5 * (t0 + t1)
    disc = np.sqrt(0.25 * (t0 - t1) ** 2 + (rho**2) * w0 * w1)
    return mid + disc, mid - disc


def _batched_root(d, rho, w, k, eps, max_iter, x0=None):
    """Vectorized secular root k for many columns sharing a clean diagonal.

    d: (K,) strictly descending; rho: (G,); w: (K, G) positive weights.
    Returns (roots (G,), iterations (G,)).
    """
    kk = d.size
    g = w.shape[1]
    last = k == kk - 1
    hi = np.full(g, d[k])
    lo = (d[-1] - rho * w.sum(axis=0)) if last else np.full(g, d[k + 1])

    x = 0.5 * (lo + hi) if x0 is None else np.asarray(x0, dtype=float).copy()
    bad = ~((x > lo) & (x < hi))
    if bad.any():
        x[bad] = 0.5 * (lo[bad] + hi[bad])

    active = np.ones(g, dtype=bool)
    iters = np.zeros(g, dtype=int)

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for _ in range(max_iter):
            width_done = active & ((hi - lo) <= eps * (1.0 + np.abs(hi)))
            if width_done.any():
                x = np.where(width_done, 0.5 * (lo + hi), x)
                active &= ~width_done
            if not active.any():
                break

            diffs = d[:, None] - x[None, :]  # (K, G)
            t1 = w / diffs
            t2 = t1 / diffs
            psi = -rho * t1[: k + 1].sum(axis=0)
            dpsi = -rho * t2[: k + 1].sum(axis=0)
            phi = -rho * t1[k + 1 :].sum(axis=0)
            dphi = -rho * t2[k + 1 :].sum(axis=0)
            psec = 1.0 + psi + phi

            pos = psec > 0.0
            lo = np.where(active & pos, np.maximum(lo, x), lo)
            hi = np.where(active & ~pos, np.minimum(hi, x), hi)

            d1 = d[k] - x
            q = dpsi * d1 * d1
            p = psi - dpsi * d1
            if not last:
                d2 = d[k + 1] - x
                s_ = dphi * d2 * d2
                r_ = phi - dphi * d2
                a_ = 1.0 + p + r_
                b_ = -(a_ * (d1 + d2) + q + s_)
                c_ = psec * d1 * d2
                disc = np.maximum(b_ * b_ - 4.0 * a_ * c_, 0.0)
                sq = np.sqrt(disc)
                qf = np.where(b_ >= 0.0, -0.5 * (b_ + sq), -0.5 * (b_ - sq))
                t_small = np.where(qf != 0.0, c_ / qf, np.nan)
                t_big = np.where(a_ != 0.0, qf / a_, np.where(b_ != 0.0, -c_ / b_, np.nan))
            else:
                c1p = 1.0 + p
                t_small = np.where(c1p > 0.0, d1 + q / c1p, np.nan)
                t_big = np.full(g, np.nan)

            cand1 = x + t_small
            cand2 = x + t_big
            if last:
                in1 = (cand1 >= lo) & (cand1 < hi)
                in2 = (cand2 >= lo) & (cand2 < hi)
            else:
                in1 = (cand1 > lo) & (cand1 < hi)
                in2 = (cand2 > lo) & (cand2 < hi)
            x_new = np.where(in1, cand1, np.where(in2, cand2, 0.5 * (lo + hi)))
            # fitted step below tolerance: x is the root to working precision
            # even when x + step lands on a bracket endpoint (NaN compares False)
            tiny_step = np.abs(t_small) < eps * (1.0 + np.abs(x))
            x_new = np.where(tiny_step, x, x_new)

            stepped = np.abs(x_new - x)
            conv = active & (stepped < eps * (1.0 + np.abs(x_new)))
            iters += active
            x = np.where(active, x_new, x)
            active &= ~conv

        if active.any():
            x = np.where(active, 0.5 * (lo + hi), x)
    return x, iters


def batched_extremal_eigvals(
    d: np.ndarray,
    rho,
    weights: np.ndarray,
    count: int,
    which: str = "largest",
    eps: float = 1e-9,
    max_iter: int = 100,
    warm: Optional[np.ndarray] = None,
    want_gap_sums: bool = False,
):
    """Extremal eigenvalues of ``diag(d) - rho_g z_g z_g^H`` for many columns.

    Parameters
    ----------
    d : (K,) shared diagonal, sorted descending (ties allowed).
    rho : positive scalar or (G,) per-column factors.
    weights : (K, G) per-column ``|z|^2`` values.
    count : how many eigenvalues per column.
    which : 'largest' (rows sorted descending) or 'smallest' (ascending).
    warm : optional (count, G) values from a nearby call, used as starting
        iterates when they fall inside the right bracket.
    want_gap_sums : also return ``sum_j w_j/(d_j - lam)^2`` per eigenvalue
        (``+inf`` for eigenvalues untouched by the update).

    Eigenvalue-only arithmetic: only ``|z|^2`` enters, so callers pass squared
    magnitudes.  Duplicate diagonal entries are collapsed once for all columns
    (the rotation that zeroes duplicate components preserves column weights);
    columns whose own weight pattern still needs deflation fall back to the
    scalar solver.
    """
    d = np.asarray(d, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if weights.ndim != 2 or weights.shape[0] != d.size:
        raise ValueError("weights must be (K, G)")
    kk, g = weights.shape
    if not (0 <= count <= kk):
        raise ValueError("count out of range")
    if which not in ("largest", "smallest"):
        raise ValueError("which must be 'largest' or 'smallest'")
    if kk > 1 and not np.all(np.diff(d) <= 0):
        raise ValueError("shared diagonal must be sorted descending")
    rho = np.broadcast_to(np.asarray(rho, dtype=float), (g,))
    if np.any(rho <= 0) or not np.all(np.isfinite(rho)):
        raise ValueError("rho must be positive")

    if count == 0 or g == 0:
        values = np.empty((count, g))
        iters = np.zeros((count, g), dtype=int)
        if want_gap_sums:
            return values, iters, np.full((count, g), np.inf)
        return values, iters

    wsum = weights.sum(axis=0)
    spread = (d[0] - d[-1]) + rho * wsum

    # shared collapse of duplicate diagonal entries; the usual case is a
    # diagonal with no near-duplicates, which must stay allocation-free
    dthr = kk * _EPS * max(float(spread.max()), np.finfo(float).tiny)
    if kk == 1 or np.all(d[:-1] - d[1:] > dthr):
        d_t = d
        w_t = weights
        kept_shared = np.empty(0)
    else:
        starts = [0]
        for i in range(1, kk):
            if d[starts[-1]] - d[i] > dthr:
                starts.append(i)
        starts_arr = np.asarray(starts, dtype=int)
        d_t = d[starts_arr]
        w_t = np.add.reduceat(weights, starts_arr, axis=0)
        extra_mask = np.ones(kk, dtype=bool)
        extra_mask[starts_arr] = False
        kept_shared = d[extra_mask]

    # rows negligible in every column deflate for everyone
    wthr = (kk * _EPS) ** 2 * wsum  # threshold on |z|^2 per column
    tiny = w_t <= wthr[None, :]
    drop = tiny.all(axis=1)
    if drop.any():
        kept_shared = np.concatenate([kept_shared, d_t[drop]])
        d_t = d_t[~drop]
        w_t = w_t[~drop]
        tiny = tiny[~drop]
    if kept_shared.size:
        kept_shared = np.sort(kept_shared)[::-1]
    kr = d_t.size

    dirty = tiny.any(axis=0) if kr else np.zeros(g, dtype=bool)
    zero_cols = wsum <= 0.0
    dirty &= ~zero_cols
    all_clean = not dirty.any() and not zero_cols.any()

    def _solve_clean(rho_c, w_c, warm_c, n_cols):
        need = min(count, kr)
        roots = np.empty((need, n_cols))
        rit = np.zeros((need, n_cols), dtype=int)
        if kr == 1:
            roots[0] = d_t[0] - rho_c * w_c[0]
        elif kr == 2:
            big, small = _closed_form_pair(d_t[0], d_t[1], w_c[0], w_c[1], rho_c)
            pair = (big, small) if which == "largest" else (small, big)
            roots[0] = pair[0]
            if need == 2:
                roots[1] = pair[1]
        else:
            ks = range(need) if which == "largest" else range(kr - need, kr)
            if warm_c is not None and which == "smallest":
                # rows run extremal-gap-first (descending values), so
                # ascending 'smallest' warm values must be flipped to match
                warm_c = warm_c[::-1]
            for out_i, ki in enumerate(ks):
                x0 = warm_c[out_i] if (warm_c is not None and out_i < warm_c.shape[0]) else None
                roots[out_i], rit[out_i] = _batched_root(d_t, rho_c, w_c, ki, eps, max_iter, x0=x0)
            if which == "smallest":  # reorder rows to ascending
                roots = roots[::-1].copy()
                rit = rit[::-1].copy()
        rg = None
        if want_gap_sums:
            rg = np.empty_like(roots)
            # a root can sit on a diagonal entry whose weight is denormal
            # tiny; the resulting +inf gap sum is the correct limit
            with np.errstate(divide="ignore"):
                for i in range(need):
                    rg[i] = (w_c / (d_t[:, None] - roots[i][None, :]) ** 2).sum(axis=0)
        return roots, rit, rg

    good_warm = warm if (warm is not None and warm.shape == (count, g)) else None

    if all_clean and kept_shared.size == 0:
        roots, rit, rg = _solve_clean(rho, w_t, good_warm, g)
        return (roots, rit, rg) if want_gap_sums else (roots, rit)

    values = np.empty((count, g))
    iters = np.zeros((count, g), dtype=int)
    gaps = np.full((count, g), np.inf)
    clean = ~dirty & ~zero_cols

    # columns with no effective update: spectrum is d itself
    if zero_cols.any():
        full_sorted = np.sort(d)[::-1]
        sel = full_sorted[:count] if which == "largest" else full_sorted[kk - count :][::-1]
        values[:, zero_cols] = sel[:, None]

    if clean.any():
        warm_c = good_warm[:, clean] if good_warm is not None else None
        roots, rit, rg = _solve_clean(rho[clean], w_t[:, clean], warm_c, int(clean.sum()))
        if kept_shared.size == 0:  # need == count and no interleaving possible
            values[:, clean] = roots
            iters[:, clean] = rit
            if want_gap_sums:
                gaps[:, clean] = rg
        else:
            sel = min(count, kept_shared.size)
            if which == "largest":
                kept_sel = kept_shared[:sel]
            else:
                kept_sel = kept_shared[kept_shared.size - sel :]
            n_clean = roots.shape[1]
            cand = np.vstack([roots, np.tile(kept_sel[:, None], (1, n_clean))])
            cand_it = np.vstack([rit, np.zeros((sel, n_clean), dtype=int)])
            key = -cand if which == "largest" else cand
            order = np.argsort(key, axis=0, kind="stable")[:count]
            values[:, clean] = np.take_along_axis(cand, order, axis=0)
            iters[:, clean] = np.take_along_axis(cand_it, order, axis=0)
            if want_gap_sums:
                cand_gp = np.vstack([rg, np.full((sel, n_clean), np.inf)])
                gaps[:, clean] = np.take_along_axis(cand_gp, order, axis=0)

    if dirty.any():
        for col in np.flatnonzero(dirty):
            mod = RankOneMod(d, float(rho[col]), np.sqrt(np.maximum(weights[:, col], 0.0)))
            res = eigenvalues(mod, count, which, eps=eps)
            values[:, col] = res.roots
            iters[:, col] = res.iterations
            gaps[:, col] = res.gap_sums

    return (values, iters, gaps) if want_gap_sums else (values, iters)
