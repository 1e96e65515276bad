"""SI-unit circuit parameters to dimensionless spin-boson parameters.

A current-biased Josephson junction sits in a tilted washboard potential;
near the critical current each well is cubic, with barrier height

    dU(I_b) = (2 sqrt(2) I_0 Phi_0 / 3 pi) (1 - I_b/I_0)^(3/2)

and small-oscillation (plasma) frequency

    omega_p(I_b) = 2^(1/4) sqrt(2 pi I_0 / (Phi_0 C)) (1 - I_b/I_0)^(1/4),

where C = C_J + C_0. The two lowest well levels form the qubit with
splitting omega_10 = 0.95 omega_p. A transmission line of impedance
sqrt(l/c) shunts the junction through C_0 and acts as an Ohmic bath with
dimensionless coupling

    alpha = (Delta / hbar pi) (C_0^2 / C) sqrt(l/c).

All SI conversion happens in this module; downstream code works in units
of the bath cutoff (hbar = 1, energies in omega_c).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

__all__ = [
    "PhysicalConstants",
    "CODATA",
    "CircuitParams",
    "QubitSpectrum",
    "SpinBosonParams",
    "LineModes",
    "qubit_spectrum",
    "map_to_spin_boson",
    "microwave_bias",
    "bias_from_splitting",
    "finite_line_modes",
    "DELTA_CONVENTIONS",
]

_H_PLANCK = 6.62607015e-34  # J s, exact by definition
_E_CHARGE = 1.602176634e-19  # C, exact by definition

# The qubit splitting entering alpha and delta can be taken as hbar*omega_10
# or as hbar*omega_p/2; both appear in the literature for this circuit and
# they differ by a factor 1.9. Neither is asserted correct here.
DELTA_CONVENTIONS = ("omega10", "half_omega_p")


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA exact values; flux_quantum must satisfy Phi_0 = pi hbar / e."""

    h_bar: float = _H_PLANCK / (2.0 * math.pi)
    e_charge: float = _E_CHARGE
    flux_quantum: float = _H_PLANCK / (2.0 * _E_CHARGE)

    def __post_init__(self):
        if self.h_bar <= 0 or self.e_charge <= 0 or self.flux_quantum <= 0:
            raise ValueError("physical constants must be positive")
        ref = math.pi * self.h_bar / self.e_charge
        if abs(self.flux_quantum - ref) > 1e-12 * ref:
            raise ValueError("flux_quantum inconsistent with h_bar and e_charge")


CODATA = PhysicalConstants()


@dataclass(frozen=True)
class CircuitParams:
    """Phase-qubit circuit in SI units.

    c_j junction capacitance (F), c_0 coupling capacitance (F),
    i_0 critical current (A), i_b dc bias current (A),
    l line inductance per length (H/m), c line capacitance per length (F/m).
    """

    c_j: float
    c_0: float
    i_0: float
    i_b: float
    l: float
    c: float

    def __post_init__(self):
        if self.c_j <= 0:
            raise ValueError("junction capacitance must be positive")
        if self.c_0 < 0:
            raise ValueError("coupling capacitance must be non-negative")
        if self.i_0 <= 0:
            raise ValueError("critical current must be positive")
        if self.i_b < 0:
            raise ValueError("bias current must be non-negative")
        if self.l <= 0 or self.c <= 0:
            raise ValueError("line parameters must be positive")
        if self.i_b >= self.i_0:
            raise ValueError("bias current must stay below the critical current")

    @property
    def c_total(self) -> float:
        return self.c_j + self.c_0

    @property
    def impedance(self) -> float:
        """Characteristic impedance sqrt(l/c) in ohms."""
        return math.sqrt(self.l / self.c)


@dataclass(frozen=True)
class QubitSpectrum:
    """Derived junction spectrum, all in SI units.

    barrier_ratio is dU / (hbar omega_p), the number of levels the well
    roughly holds; is_valid records the E_J >> E_C charge-noise check.
    """

    omega_p: float
    omega_10: float
    barrier_height: float
    delta: float
    e_j: float
    e_c: float
    barrier_ratio: float
    ej_ec_ratio: float
    is_valid: bool


@dataclass(frozen=True)
class SpinBosonParams:
    """Dimensionless model parameters in units of the cutoff omega_c.

    delta tunneling amplitude, epsilon bias, alpha dissipation strength,
    s bath exponent (1 = Ohmic), omega_c the cutoff in rad/s kept only for
    record keeping; internally the cutoff is 1.
    """

    delta: float
    epsilon: float = 0.0
    alpha: float = 0.0
    s: float = 1.0
    omega_c: float = 1.0e14

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError("delta must be non-negative")
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if not 0.0 < self.s <= 1.0:
            raise ValueError("bath exponent s must lie in (0, 1]")
        if self.omega_c <= 0:
            raise ValueError("omega_c must be positive")
        if not all(math.isfinite(x) for x in
                   (self.delta, self.epsilon, self.alpha, self.s, self.omega_c)):
            raise ValueError("parameters must be finite")


@dataclass(frozen=True)
class LineModes:
    """Discrete modes of a finite transmission line of the given length.

    modes holds (omega_n in rad/s, lambda_n in J) pairs for n = 1..n_c;
    spacing is the free spectral range pi / (L sqrt(l c)).
    """

    modes: tuple[tuple[float, float], ...]
    length: float
    spacing: float


def qubit_spectrum(p: CircuitParams, constants: PhysicalConstants = CODATA,
                   ej_ec_threshold: float = 100.0) -> QubitSpectrum:
    """Evaluate the cubic-well spectrum of the biased junction.

    Uses omega_10 = 0.95 omega_p for the anharmonically softened level
    splitting and Delta = hbar omega_10.
    """
    phi0 = constants.flux_quantum
    ctot = p.c_total
    tilt = 1.0 - p.i_b / p.i_0
    barrier = (2.0 * math.sqrt(2.0) / (3.0 * math.pi)) * p.i_0 * phi0 * tilt ** 1.5
    omega_p = 2.0 ** 0.25 * math.sqrt(2.0 * math.pi * p.i_0 / (phi0 * ctot)) * tilt ** 0.25
    omega_10 = 0.95 * omega_p
    e_j = phi0 * p.i_0 / (2.0 * math.pi)
    e_c = constants.e_charge ** 2 / (2.0 * ctot)
    ratio = e_j / e_c
    return QubitSpectrum(
        omega_p=omega_p,
        omega_10=omega_10,
        barrier_height=barrier,
        delta=constants.h_bar * omega_10,
        e_j=e_j,
        e_c=e_c,
        barrier_ratio=barrier / (constants.h_bar * omega_p) if omega_p > 0 else 0.0,
        ej_ec_ratio=ratio,
        is_valid=ratio > ej_ec_threshold,
    )


def map_to_spin_boson(p: CircuitParams, omega_c: float,
                      constants: PhysicalConstants = CODATA,
                      delta_convention: str = "omega10",
                      alpha_window: tuple[float, float] = (0.2, 3.0)) -> SpinBosonParams:
    """Reduce the circuit to dimensionless spin-boson parameters.

    alpha = (Delta / hbar pi)(C_0^2 / C) sqrt(l/c) and delta is the
    splitting frequency over omega_c. The splitting follows
    delta_convention; see DELTA_CONVENTIONS. Bias epsilon starts at zero
    (see microwave_bias for driving). Warns when alpha leaves the
    experimentally motivated window.
    """
    if delta_convention not in DELTA_CONVENTIONS:
        raise ValueError(f"unknown delta convention {delta_convention!r}")
    spec = qubit_spectrum(p, constants)
    if omega_c <= spec.omega_10:
        raise ValueError("cutoff omega_c must lie above the qubit splitting")
    split = spec.omega_10 if delta_convention == "omega10" else 0.5 * spec.omega_p
    alpha = (split / math.pi) * (p.c_0 ** 2 / p.c_total) * p.impedance
    if alpha > 0 and not alpha_window[0] <= alpha <= alpha_window[1]:
        warnings.warn(
            f"alpha = {alpha:.3g} outside the window {alpha_window}",
            RuntimeWarning,
            stacklevel=2,
        )
    return SpinBosonParams(
        delta=split / omega_c,
        epsilon=0.0,
        alpha=alpha,
        s=1.0,
        omega_c=omega_c,
    )


def bias_from_splitting(omega_10: float, c_total: float, i_uw: float,
                        constants: PhysicalConstants = CODATA) -> float:
    """Static microwave bias epsilon = sqrt(hbar / (2 omega_10 C)) I_uw, in J."""
    if omega_10 <= 0:
        raise ValueError("omega_10 must be positive")
    if c_total <= 0:
        raise ValueError("total capacitance must be positive")
    return math.sqrt(constants.h_bar / (2.0 * omega_10 * c_total)) * i_uw


def microwave_bias(p: CircuitParams, i_uw: float,
                   constants: PhysicalConstants = CODATA) -> float:
    """Bias energy (J) a static microwave current amplitude produces."""
    spec = qubit_spectrum(p, constants)
    return bias_from_splitting(spec.omega_10, p.c_total, i_uw, constants)


def finite_line_modes(p: CircuitParams, length: float, n_c: int,
                      constants: PhysicalConstants = CODATA,
                      delta_convention: str = "omega10") -> LineModes:
    """Mode frequencies and couplings of a length-L open transmission line.

    omega_n = n pi / (L sqrt(l c)) and
    lambda_n = C_0 sqrt(2 Delta hbar omega_n / (C L c)). Per mode the
    Ohmic identity pi lambda_n^2 / (hbar^2 dOmega) = 2 pi alpha omega_n
    holds exactly with dOmega the mode spacing, which is what makes the
    discrete line equivalent to the continuous bath of map_to_spin_boson.
    """
    if length <= 0:
        raise ValueError("line length must be positive")
    if n_c < 1:
        raise ValueError("need at least one mode")
    if delta_convention not in DELTA_CONVENTIONS:
        raise ValueError(f"unknown delta convention {delta_convention!r}")
    spec = qubit_spectrum(p, constants)
    split = spec.omega_10 if delta_convention == "omega10" else 0.5 * spec.omega_p
    delta_energy = constants.h_bar * split
    spacing = math.pi / (length * math.sqrt(p.l * p.c))
    ctot = p.c_total
    modes = []
    for n in range(1, n_c + 1):
        omega_n = n * spacing
        lam = p.c_0 * math.sqrt(
            2.0 * delta_energy * constants.h_bar * omega_n / (ctot * length * p.c)
        )
        modes.append((omega_n, lam))
    return LineModes(modes=tuple(modes), length=length, spacing=spacing)
