"""Legendre-Fourier spectral solver for the 1D-1V Vlasov-Poisson system."""

from .basis import VelocityBasis, build_basis, eval_legendre, eval_phi
from .errors import ConfigurationError, FitError, SolverError
from .integrator import RunResult, SolverConfig, StepResult, cn_residual, jfnk_step, run
from .operators import Plasma, poisson_solve, semi_discrete_rhs
from .presets import RunConfig, execute, preset
from .state import DomainConfig, InitialProfile, SpectralState, Species, convolve

__all__ = [
    "VelocityBasis", "build_basis", "eval_legendre", "eval_phi",
    "ConfigurationError", "FitError", "SolverError",
    "RunResult", "SolverConfig", "StepResult", "cn_residual", "jfnk_step", "run",
    "Plasma", "poisson_solve", "semi_discrete_rhs",
    "RunConfig", "execute", "preset",
    "DomainConfig", "InitialProfile", "SpectralState", "Species", "convolve",
]

__version__ = "0.1.0"
