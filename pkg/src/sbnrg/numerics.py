"""Numerical kernels: symmetric eigensolver, adaptive quadrature, divergence fit.

Everything here is deterministic for fixed inputs. The eigensolver wraps
LAPACK's symmetric driver and adds a fixed sign convention so repeated
runs produce bit-identical eigenvectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ToleranceConfig",
    "TOLERANCES",
    "SymMatrix",
    "EigenDecomposition",
    "DivergenceFit",
    "IntegrationError",
    "FitError",
    "sym_eig",
    "integrate",
    "fit_divergence",
]


class IntegrationError(RuntimeError):
    """Adaptive quadrature hit its depth limit before reaching tolerance."""


class FitError(RuntimeError):
    """Divergence fit could not locate a trustworthy pole."""


@dataclass(frozen=True)
class ToleranceConfig:
    """All numeric tolerances of this module in one record.

    symmetry_rtol        max allowed relative asymmetry of a SymMatrix
    eig_residual_rtol    bound on ||A V - V diag(w)||_max / ||A||_max
    eig_orthonormal_atol bound on ||V^T V - I||_max
    integrate_rtol       default relative tolerance of `integrate`
    integrate_max_depth  default bisection depth limit of `integrate`
    fit_window           default search window above max(alpha) for the pole
    fit_grid_points      coarse grid size of the pole scan
    fit_golden_iters     fixed golden-section refinement count (determinism)
    """

    symmetry_rtol: float = 1e-12
    eig_residual_rtol: float = 1e-10
    eig_orthonormal_atol: float = 1e-10
    integrate_rtol: float = 1e-12
    integrate_max_depth: int = 48
    fit_window: float = 2.0
    fit_grid_points: int = 2000
    fit_golden_iters: int = 90


TOLERANCES = ToleranceConfig()


class SymMatrix:
    """Dense real symmetric matrix; symmetry is checked on construction."""

    __slots__ = ("data",)

    def __init__(self, data):
        a = np.asarray(data, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("SymMatrix requires a square 2-d array")
        if not np.all(np.isfinite(a)):
            raise ValueError("SymMatrix entries must be finite")
        scale = float(np.abs(a).max()) if a.size else 0.0
        if scale > 0.0:
            asym = float(np.abs(a - a.T).max())
            if asym > TOLERANCES.symmetry_rtol * scale:
                raise ValueError(
                    f"asymmetry {asym:.3e} exceeds "
                    f"{TOLERANCES.symmetry_rtol:.1e} * max|A| = "
                    f"{TOLERANCES.symmetry_rtol * scale:.3e}"
                )
        self.data = 0.5 * (a + a.T)

    @property
    def dimension(self) -> int:
        return self.data.shape[0]


@dataclass
class EigenDecomposition:
    """Eigenvalues in ascending order and the matching orthonormal vectors."""

    eigenvalues: np.ndarray
    vectors: np.ndarray


def sym_eig(a, check: bool = False) -> EigenDecomposition:
    """Diagonalize a real symmetric matrix.

    Accepts a SymMatrix or anything convertible to one. Eigenvalues come
    back ascending; each eigenvector is normalized and signed so that its
    largest-magnitude component is positive (first such index on ties),
    which makes the output reproducible bit for bit.

    With check=True the residual and orthonormality contracts are verified
    explicitly; the hot NRG loop leaves this off and the test suite covers
    the bounds instead.
    """
    if not isinstance(a, SymMatrix):
        a = SymMatrix(a)
    w, v = np.linalg.eigh(a.data)

    idx = np.argmax(np.abs(v), axis=0)
    signs = np.sign(v[idx, np.arange(v.shape[1])])
    signs[signs == 0] = 1.0
    v = v * signs

    if check:
        scale = max(float(np.abs(a.data).max()), 1e-300)
        resid = float(np.abs(a.data @ v - v * w).max())
        if resid > TOLERANCES.eig_residual_rtol * scale:
            raise FloatingPointError(
                f"eigendecomposition residual {resid:.3e} out of tolerance"
            )
        ortho = float(np.abs(v.T @ v - np.eye(v.shape[1])).max())
        if ortho > TOLERANCES.eig_orthonormal_atol:
            raise FloatingPointError(
                f"eigenvector orthonormality defect {ortho:.3e} out of tolerance"
            )
    return EigenDecomposition(eigenvalues=w, vectors=v)


def _simpson(f, lo, hi, flo, fmid, fhi, whole, tol, depth):
    mid = 0.5 * (lo + hi)
    lmid = 0.5 * (lo + mid)
    rmid = 0.5 * (mid + hi)
    flm = f(lmid)
    frm = f(rmid)
    left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid)
    right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi)
    delta = left + right - whole
    if abs(delta) <= 15.0 * tol * max(abs(left + right), 1e-300):
        return left + right + delta / 15.0
    if depth <= 0:
        raise IntegrationError(
            f"no convergence on [{lo:.6g}, {hi:.6g}] at depth limit"
        )
    return _simpson(f, lo, mid, flo, flm, fmid, left, tol, depth - 1) + _simpson(
        f, mid, hi, fmid, frm, fhi, right, tol, depth - 1
    )


def integrate(f, lo: float, hi: float, tol: float | None = None,
              max_depth: int | None = None) -> float:
    """Adaptive Simpson quadrature of f over [lo, hi].

    Subintervals are bisected until the local Richardson error estimate
    drops below `tol` relative to the local integral. Raises
    IntegrationError when the depth limit is exhausted first.
    """
    lo = float(lo)
    hi = float(hi)
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("integration bounds must be finite")
    if lo > hi:
        raise ValueError("lower bound exceeds upper bound")
    if lo == hi:
        return 0.0
    tol = TOLERANCES.integrate_rtol if tol is None else float(tol)
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    depth = TOLERANCES.integrate_max_depth if max_depth is None else int(max_depth)
    mid = 0.5 * (lo + hi)
    flo, fmid, fhi = f(lo), f(mid), f(hi)
    for val in (flo, fmid, fhi):
        if not math.isfinite(val):
            raise ValueError("integrand is not finite on the interval")
    whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)
    return _simpson(f, lo, hi, flo, fmid, fhi, whole, tol, depth)


@dataclass
class DivergenceFit:
    """Least-squares fit of n(alpha) = a + b / (alpha_c - alpha)."""

    a: float
    b: float
    alpha_c: float
    rss: float


def _pole_lsq(alphas: np.ndarray, ns: np.ndarray, alpha_c: float):
    """Linear LSQ for (a, b) at a fixed pole; returns (a, b, rss) or None."""
    u = 1.0 / (alpha_c - alphas)
    npts = len(u)
    su = float(u.sum())
    suu = float((u * u).sum())
    det = npts * suu - su * su
    if det <= 1e-14 * max(npts * suu, su * su, 1.0):
        return None
    sy = float(ns.sum())
    suy = float((u * ns).sum())
    b = (npts * suy - su * sy) / det
    a = (sy - b * su) / npts
    r = ns - a - b * u
    return a, b, float(r @ r)


def fit_divergence(points, window: float | None = None) -> DivergenceFit:
    """Fit n_star(alpha) = a + b / (alpha_c - alpha) with alpha_c above the data.

    A coarse grid over (max(alpha), max(alpha) + window] followed by a
    fixed-count golden-section refinement keeps the result deterministic.
    Degenerate inputs (too few points, repeated alphas, flat or
    non-divergent data) raise FitError instead of returning a spurious
    pole.
    """
    pts = [(float(a), float(n)) for a, n in points]
    if len(pts) < 4:
        raise FitError("need at least 4 points to fit a divergence")
    alphas = np.array([p[0] for p in pts])
    ns = np.array([p[1] for p in pts])
    if not (np.all(np.isfinite(alphas)) and np.all(np.isfinite(ns))):
        raise FitError("non-finite fit input")
    if len(np.unique(alphas)) != len(alphas):
        raise FitError("alpha values must be distinct")
    if float(ns.max() - ns.min()) == 0.0:
        raise FitError("n_star values are constant; no divergence to fit")
    window = TOLERANCES.fit_window if window is None else float(window)
    if window <= 0:
        raise FitError("search window must be positive")

    amax = float(alphas.max())
    m = TOLERANCES.fit_grid_points

    def rss_at(ac: float) -> float:
        sol = _pole_lsq(alphas, ns, ac)
        return math.inf if sol is None else sol[2]

    grid = amax + window * np.arange(1, m + 1) / m
    costs = np.array([rss_at(ac) for ac in grid])
    best = int(np.argmin(costs))
    if not math.isfinite(costs[best]):
        raise FitError("degenerate data: pole scan found no valid candidate")

    lo = grid[best - 1] if best > 0 else amax + window / (2.0 * m)
    hi = grid[best + 1] if best < m - 1 else grid[best]

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1, f2 = rss_at(x1), rss_at(x2)
    for _ in range(TOLERANCES.fit_golden_iters):
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - invphi * (hi - lo)
            f1 = rss_at(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + invphi * (hi - lo)
            f2 = rss_at(x2)
    ac = x1 if f1 <= f2 else x2

    sol = _pole_lsq(alphas, ns, ac)
    if sol is None:
        raise FitError("pole refinement collapsed onto degenerate data")
    a, b, rss = sol
    if b <= 0:
        raise FitError(f"fitted amplitude b = {b:.3e} is not positive; no divergence")
    if ac >= amax + 0.999 * window:
        raise FitError(
            f"pole estimate {ac:.4f} sits at the search-window edge; widen the window"
        )
    return DivergenceFit(a=a, b=b, alpha_c=ac, rss=rss)
