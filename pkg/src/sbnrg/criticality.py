"""Kosterlitz-Thouless diagnostics extracted from NRG flows.

The crossover iteration N* is where the rescaled first excited level
first reaches a threshold (0.3) from below; T* = const * Lambda^-N* is
the crossover scale. Approaching the transition from the delocalized
side, T* ~ Delta^(1/(alpha_c - alpha)), so N*(alpha) diverges like
a + b / (alpha_c - alpha) and the pole of that fit extrapolates the
critical coupling. The population difference delta_p classifies the
phase directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import numerics
from .nrg import NrgFlow

__all__ = [
    "CrossoverPoint",
    "PhaseDiagnosis",
    "CriticalFit",
    "DeltaScalingFit",
    "NoCrossingError",
    "extract_nstar",
    "fit_alpha_c",
    "classify_phase",
    "fit_delta_scaling",
]

DEFAULT_THRESHOLD = 0.3


class NoCrossingError(RuntimeError):
    """The level-1 flow never reached the threshold; extend n_iter."""


@dataclass(frozen=True)
class CrossoverPoint:
    alpha: float
    n_star: float
    threshold: float


@dataclass(frozen=True)
class PhaseDiagnosis:
    delta_p: float
    label: str  # delocalized | localized | undetermined


@dataclass(frozen=True)
class CriticalFit:
    """Divergence fit of N*(alpha) together with the points that fed it."""

    points: tuple[CrossoverPoint, ...]
    a: float
    b: float
    alpha_c: float
    rss: float


@dataclass(frozen=True)
class DeltaScalingFit:
    """Fixed-alpha probe: N* against log_Lambda(1/Delta) should be linear
    with slope 1/(alpha_c - alpha); alpha_c_implied back-solves the pole."""

    alpha: float
    slope: float
    intercept: float
    alpha_c_implied: float
    rss: float


def extract_nstar(flow: NrgFlow, threshold: float = DEFAULT_THRESHOLD) -> CrossoverPoint:
    """First iteration where level 1 crosses the threshold from below.

    The crossing is linearly interpolated between the bracketing
    iterations. A flow already above threshold at its first record gives
    n_star = 0. No crossing at all raises NoCrossingError.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    if len(flow.records) < 2:
        raise ValueError("need at least two recorded iterations")
    its, vals = flow.level_series(1)
    if len(vals) < 2:
        raise ValueError("flow records do not track level 1")
    if vals[0] >= threshold:
        return CrossoverPoint(alpha=flow.alpha, n_star=0.0, threshold=threshold)
    for i in range(len(vals) - 1):
        if vals[i] < threshold <= vals[i + 1]:
            frac = (threshold - vals[i]) / (vals[i + 1] - vals[i])
            n_star = float(its[i]) + frac * float(its[i + 1] - its[i])
            return CrossoverPoint(alpha=flow.alpha, n_star=n_star, threshold=threshold)
    raise NoCrossingError(
        f"level 1 stayed below {threshold} over {len(vals)} iterations"
    )


def fit_alpha_c(points, window: float | None = None) -> CriticalFit:
    """Extrapolate alpha_c from the pole of N*(alpha) = a + b/(alpha_c - alpha)."""
    pts = tuple(points)
    if len(pts) < 4:
        raise numerics.FitError("need at least 4 crossover points")
    fit = numerics.fit_divergence(
        [(p.alpha, p.n_star) for p in pts], window=window
    )
    return CriticalFit(
        points=pts, a=fit.a, b=fit.b, alpha_c=fit.alpha_c, rss=fit.rss
    )


def classify_phase(delta_p: float, lo: float = 0.05, hi: float = 0.45) -> PhaseDiagnosis:
    """Label a delta_p value: below lo delocalized, above hi localized."""
    dp = float(delta_p)
    if not 0.0 <= dp <= 0.5 + 1e-9:
        raise ValueError(f"delta_p = {dp} outside [0, 0.5]")
    if not 0.0 < lo < hi < 0.5:
        raise ValueError("thresholds must satisfy 0 < lo < hi < 0.5")
    if dp < lo:
        label = "delocalized"
    elif dp > hi:
        label = "localized"
    else:
        label = "undetermined"
    return PhaseDiagnosis(delta_p=dp, label=label)


def fit_delta_scaling(points, alpha: float, Lambda: float) -> DeltaScalingFit:
    """Secondary consistency probe at fixed alpha over a Delta grid.

    points are (delta, n_star) pairs. Linear least squares of n_star
    against x = log_Lambda(1/delta) gives slope 1/(alpha_c - alpha); the
    implied alpha_c is alpha + 1/slope.
    """
    pts = [(float(d), float(n)) for d, n in points]
    if len(pts) < 3:
        raise numerics.FitError("need at least 3 (delta, n_star) points")
    if Lambda <= 1:
        raise ValueError("Lambda must exceed 1")
    deltas = np.array([p[0] for p in pts])
    if np.any(deltas <= 0):
        raise ValueError("delta values must be positive")
    x = np.log(1.0 / deltas) / math.log(Lambda)
    y = np.array([p[1] for p in pts])
    n = len(x)
    sx, sxx, sy, sxy = x.sum(), (x * x).sum(), y.sum(), (x * y).sum()
    det = n * sxx - sx * sx
    if det <= 1e-14 * max(n * sxx, sx * sx, 1.0):
        raise numerics.FitError("degenerate delta grid")
    slope = (n * sxy - sx * sy) / det
    intercept = (sy - slope * sx) / n
    if slope <= 0:
        raise numerics.FitError(
            f"slope {slope:.3e} is not positive; no crossover scaling"
        )
    r = y - intercept - slope * x
    return DeltaScalingFit(
        alpha=float(alpha),
        slope=float(slope),
        intercept=float(intercept),
        alpha_c_implied=float(alpha + 1.0 / slope),
        rss=float(r @ r),
    )
