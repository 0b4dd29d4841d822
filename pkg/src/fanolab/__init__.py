"""Numerical checks of the Fano-Anderson model: bound mode, interlacing,
non-Markovian survival amplitude, conservation laws and coupling stability."""

from .boundstate import BoundState, residue, solve_pole
from .discrete import (
    ArrowheadMatrix,
    DiscretizedBath,
    SingleParticleSpectrum,
    arrowhead,
    diagonalize,
    discretize,
    interlacing_violations,
)
from .dynamics import (
    ConservationReport,
    PropagatorTrace,
    SteadyStateVector,
    conservation_audit,
    evolve_eigen,
    evolve_volterra,
    initial_state_energy,
    sector_ground_energies,
    steady_state,
)
from .spectral import (
    QuadratureSpec,
    SpectralDensity,
    evaluate,
    lamb_shift_and_decay,
    memory_kernel,
    pole_integral,
)
from .stability import CouplingForm, QuadraticModel, StabilityVerdict, analyze, critical_scan

__version__ = "0.1.0"
