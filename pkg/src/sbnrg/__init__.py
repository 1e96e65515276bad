"""Spin-boson NRG toolkit.

Maps superconducting phase-qubit/transmission-line circuits to the Ohmic
spin-boson model, solves it with the bosonic numerical renormalization
group (logarithmic discretization, Wilson chain, iterative diagonalization
with truncation), and extracts Kosterlitz-Thouless transition diagnostics
(level flows, crossover scale N*, critical coupling alpha_c, population
difference delta_p).
"""

import os as _os

# Pin BLAS to one thread unless the user says otherwise. Runs must be
# bit-reproducible and a single NRG iteration is serial anyway.
for _var in (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
):
    _os.environ.setdefault(_var, "1")

__version__ = "0.1.0"

from . import bath, circuit, criticality, numerics, nrg, oracle  # noqa: E402
from .bath import StarBath, WilsonChain, chain_map, discretize, spectral_density  # noqa: E402
from .circuit import (  # noqa: E402
    CODATA,
    CircuitParams,
    LineModes,
    PhysicalConstants,
    QubitSpectrum,
    SpinBosonParams,
    finite_line_modes,
    map_to_spin_boson,
    microwave_bias,
    qubit_spectrum,
)
from .criticality import (  # noqa: E402
    CriticalFit,
    CrossoverPoint,
    PhaseDiagnosis,
    classify_phase,
    extract_nstar,
    fit_alpha_c,
)
from .nrg import NrgConfig, NrgFlow, NrgResult, NrgState, run  # noqa: E402
from .oracle import EdProblem, EdResult, exact_diag, polaron_energy  # noqa: E402

__all__ = [
    "__version__",
    "bath",
    "circuit",
    "criticality",
    "numerics",
    "nrg",
    "oracle",
    "CODATA",
    "CircuitParams",
    "CriticalFit",
    "CrossoverPoint",
    "EdProblem",
    "EdResult",
    "LineModes",
    "NrgConfig",
    "NrgFlow",
    "NrgResult",
    "NrgState",
    "PhaseDiagnosis",
    "PhysicalConstants",
    "QubitSpectrum",
    "SpinBosonParams",
    "StarBath",
    "WilsonChain",
    "chain_map",
    "classify_phase",
    "discretize",
    "exact_diag",
    "extract_nstar",
    "finite_line_modes",
    "fit_alpha_c",
    "map_to_spin_boson",
    "microwave_bias",
    "polaron_energy",
    "qubit_spectrum",
    "run",
    "spectral_density",
]
