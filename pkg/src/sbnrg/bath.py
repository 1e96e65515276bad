"""Ohmic bath: spectral function, logarithmic star discretization, Wilson chain.

The continuous bath J(omega) = 2 pi alpha omega^s (cutoff at omega_c = 1)
is chopped into intervals [Lambda^-(n+1), Lambda^-n]. Each interval
becomes one star mode with squared coupling gamma_n^2 = (1/pi) int J and
representative energy xi_n = int J omega / int J. Lanczos tridiagonalization
starting from the normalized coupling vector then turns the star into a
semi-infinite chain whose hoppings decay like Lambda^-n, which is what the
iterative diagonalization needs.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import mpmath
import numpy as np

from . import numerics
from .circuit import SpinBosonParams

__all__ = [
    "StarBath",
    "WilsonChain",
    "ChainMapError",
    "spectral_density",
    "discretize",
    "chain_map",
]


class ChainMapError(RuntimeError):
    """Lanczos recursion lost orthogonality beyond tolerance."""


# Orthogonality requirement on the (extended precision) Lanczos basis.
ORTHOGONALITY_TOL = 1e-25


@dataclass(frozen=True)
class StarBath:
    """Discretized bath modes (xi_n, gamma_n) plus provenance copies."""

    xi: np.ndarray
    gamma: np.ndarray
    alpha: float
    s: float
    Lambda: float

    @property
    def n_modes(self) -> int:
        return int(self.xi.size)

    @property
    def modes(self) -> tuple[tuple[float, float], ...]:
        return tuple(zip(self.xi.tolist(), self.gamma.tolist()))


@dataclass(frozen=True)
class WilsonChain:
    """Tridiagonal chain: spin couples to site 0 with strength c0.

    eps holds on-site energies, t the hoppings; len(t) = len(eps) - 1
    (both empty for a fully decoupled bath).
    """

    c0: float
    eps: np.ndarray
    t: np.ndarray

    @property
    def n_sites(self) -> int:
        return int(self.eps.size)

    def digest(self) -> str:
        """Content hash used to tag results with the chain they ran on."""
        h = hashlib.sha256()
        h.update(np.float64(self.c0).tobytes())
        h.update(np.asarray(self.eps, dtype=float).tobytes())
        h.update(np.asarray(self.t, dtype=float).tobytes())
        return h.hexdigest()


def spectral_density(p: SpinBosonParams, omega: float) -> float:
    """J(omega) = 2 pi alpha omega^s with a hard cutoff.

    Energies are in units of omega_c, so J vanishes for omega > 1 and at
    omega = 0. Negative frequencies are rejected.
    """
    w = float(omega)
    if w < 0:
        raise ValueError("omega must be non-negative")
    if w == 0.0 or w > 1.0:
        return 0.0
    return 2.0 * math.pi * p.alpha * w ** p.s


def discretize(p: SpinBosonParams, Lambda: float, n_star: int) -> StarBath:
    """Logarithmically discretize the bath into n_star modes.

    For the Ohmic case the defining integrals have closed forms:
    gamma_n^2 = alpha (1 - Lambda^-2) Lambda^-2n and
    xi_n = (2/3) (1 - Lambda^-3)/(1 - Lambda^-2) Lambda^-n.
    Other exponents go through adaptive quadrature. alpha = 0 gives a
    decoupled bath (all gamma zero), not an error; the xi stay at the
    J-weighted interval means, which do not depend on alpha.
    """
    Lambda = float(Lambda)
    if Lambda <= 1.0:
        raise ValueError("Lambda must exceed 1")
    n_star = int(n_star)
    if n_star < 1:
        raise ValueError("need at least one discretization interval")
    n = np.arange(n_star, dtype=float)
    if p.s == 1.0:
        xi0 = (2.0 / 3.0) * (1.0 - Lambda ** -3) / (1.0 - Lambda ** -2)
        g0_sq = p.alpha * (1.0 - Lambda ** -2)
        xi = xi0 * Lambda ** -n
        g_sq = g0_sq * Lambda ** (-2.0 * n)
    else:
        s = p.s
        xi = np.empty(n_star)
        g_sq = np.empty(n_star)
        for k in range(n_star):
            lo = Lambda ** -(k + 1)
            hi = Lambda ** -k
            # weight with alpha folded out so the alpha = 0 mean stays defined
            w_unit = numerics.integrate(lambda w: w ** s, lo, hi)
            m_unit = numerics.integrate(lambda w: w ** (s + 1.0), lo, hi)
            xi[k] = m_unit / w_unit
            g_sq[k] = 2.0 * p.alpha * w_unit
    return StarBath(
        xi=xi,
        gamma=np.sqrt(g_sq),
        alpha=p.alpha,
        s=p.s,
        Lambda=Lambda,
    )


def _working_digits(xi: np.ndarray) -> int:
    """Precision needed to carry chain coefficients across the xi range."""
    span = math.log10(float(xi.max()) / float(xi.min())) if xi.size else 0.0
    return max(50, 40 + int(math.ceil(span)))


_CHAIN_CACHE: dict = {}


def chain_map(star: StarBath, dps: int | None = None) -> WilsonChain:
    """Tridiagonalize the star via Lanczos with full reorthogonalization.

    The recursion runs in mpmath extended precision because t_n shrinks
    like Lambda^-n and double precision loses the tail to roundoff. Every
    Lanczos vector is reorthogonalized against the whole basis; if the
    residual overlap still exceeds ORTHOGONALITY_TOL the mapping aborts.
    Chains for identical stars are cached per process (the map is pure).
    """
    xi = np.asarray(star.xi, dtype=float)
    gamma = np.asarray(star.gamma, dtype=float)
    if xi.shape != gamma.shape:
        raise ValueError("xi and gamma must have matching shapes")
    if xi.size == 0 or not np.any(gamma > 0):
        return WilsonChain(c0=0.0, eps=np.empty(0), t=np.empty(0))
    if np.any(xi <= 0):
        raise ValueError("star energies must be positive")

    key = (xi.tobytes(), gamma.tobytes(), dps)
    hit = _CHAIN_CACHE.get(key)
    if hit is not None:
        c0, eps, t = hit
        return WilsonChain(c0=c0, eps=eps.copy(), t=t.copy())

    prec = _working_digits(xi) if dps is None else int(dps)
    n = xi.size
    with mpmath.workdps(prec):
        xs = [mpmath.mpf(v) for v in xi.tolist()]
        c0_mp = mpmath.sqrt(mpmath.fsum(mpmath.mpf(g) ** 2 for g in gamma.tolist()))
        v = [mpmath.mpf(g) / c0_mp for g in gamma.tolist()]
        basis = [v]
        eps_out: list = []
        t_out: list = []
        floor = mpmath.mpf(10) ** (-(prec - 5))
        for k in range(n):
            vk = basis[-1]
            a_k = mpmath.fsum(xs[i] * vk[i] * vk[i] for i in range(n))
            eps_out.append(a_k)
            if k == n - 1:
                break
            w = [xs[i] * vk[i] - a_k * vk[i] for i in range(n)]
            for u in basis:
                ov = mpmath.fsum(u[i] * w[i] for i in range(n))
                w = [w[i] - ov * u[i] for i in range(n)]
            norm = mpmath.sqrt(mpmath.fsum(x * x for x in w))
            if norm <= floor:
                break  # invariant subspace exhausted (degenerate star)
            w = [x / norm for x in w]
            worst = max(
                abs(mpmath.fsum(u[i] * w[i] for i in range(n))) for u in basis
            )
            if worst > ORTHOGONALITY_TOL:
                raise ChainMapError(
                    f"orthogonality loss {mpmath.nstr(worst, 3)} at site {k} "
                    f"exceeds {ORTHOGONALITY_TOL:g}; raise the working precision"
                )
            t_out.append(norm)
            basis.append(w)
        c0 = float(c0_mp)
        eps = np.array([float(x) for x in eps_out])
        t = np.array([float(x) for x in t_out])

    _CHAIN_CACHE[key] = (c0, eps.copy(), t.copy())
    return WilsonChain(c0=c0, eps=eps, t=t)
