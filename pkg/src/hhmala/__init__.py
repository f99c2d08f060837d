# Adaptive MCMC with a Householder eigen-preconditioner
"""
hhmala: preconditioned MALA with an online-learned, sparsely parametrised
eigen-preconditioner, the competing adaptive schemes, experiment targets and
ESS diagnostics.
"""

__version__ = "0.1.0"

# Core components
from .config import AdaptConfig, Config, VIConfig
from .errors import HHMalaError
from .linalg import HouseholderChain, build_orthogonal_factor, chain_apply, gram_schmidt_project, householder_apply, sym_eig
from .preconditioners import DenseFactor, Diagonal, DiagLowRank, EigenChain, Identity, Preconditioner, ideal_eigen_preconditioner
from .targets import TargetModel, make_target, sample_exact
from .kernel import ChainState, StepOutcome, init_chain_state, step
from .adaptation import Adapter, AdaptIncrement, EigenBasis, average_increments, get_adapter
from .vi import VIState, run_vi, vi_to_preconditioner
from .diagnostics import EssReport, ess, median_over_coordinates, sin_squared

__all__ = [
    "AdaptConfig",
    "Config",
    "VIConfig",
    "HHMalaError",
    "HouseholderChain",
    "build_orthogonal_factor",
    "chain_apply",
    "gram_schmidt_project",
    "householder_apply",
    "sym_eig",
    "Preconditioner",
    "Identity",
    "Diagonal",
    "DenseFactor",
    "EigenChain",
    "DiagLowRank",
    "ideal_eigen_preconditioner",
    "TargetModel",
    "make_target",
    "sample_exact",
    "ChainState",
    "StepOutcome",
    "init_chain_state",
    "step",
    "Adapter",
    "AdaptIncrement",
    "EigenBasis",
    "average_increments",
    "get_adapter",
    "VIState",
    "run_vi",
    "vi_to_preconditioner",
    "EssReport",
    "ess",
    "median_over_coordinates",
    "sin_squared",
]
