"""Singularly perturbed two-well energies on thin films.

Discrete energies, optimal-profile solvers for the three thickness regimes,
explicit recovery fields, sharp-interface diagnostics and two-well rigidity
statistics.
"""

from .energy import EnergyReport, energy_2d, energy_3d, energy_limit
from .errors import (ConfigInvalid, DegenerateGrid, GammaFilmError, IncompatibleWells,
                     LayerOutsideDomain, LayersOverlap, LineSearchFailure, MissingArtifact,
                     NonConvergence, NotTwoWellCompatible, RegionOutsideDomain, ScheduleTooShort,
                     SquaresTooFew, TubeTooNarrow)
from .experiment import ExperimentConfig, ExperimentSummary, emit_plot_data, run_experiment
from .grid import Domain, Field2Pair, Field3, rescaled_gradient, rescaled_hessian
from .minimize import ConstraintSet, MinimizeResult, gradient_of_energy, minimize_energy
from .potential import (PotentialSpec, Wells, check_hypotheses, default_rho, eval_W,
                        eval_W_grad, eval_reduced_W, normalize_wells)
from .profiles import (MinimizeOptions, ProfileSolution1D, ProfileSolution2D,
                       mm_straight_path_bound, solve_K0, solve_Kgamma, solve_Kinfty)
from .recovery import (InterfaceGeometry, RecoveryMap, build_recovery_critical_layered,
                       build_recovery_critical_levelset, build_recovery_subcritical,
                       build_recovery_supercritical, build_reference_jump, limit_pair)
from .rigidity import RigidityReport, check_matos, dist_K, dist_SO3, rigidity_diagnostic
from .sharp_interface import (DiagnosticReport, PhaseMap, StructureReport, check_structure,
                              classify_phases, convergence_diagnostic, perimeter)

__version__ = "0.1.0"

__all__ = [
    "ConfigInvalid", "ConstraintSet", "DegenerateGrid", "DiagnosticReport", "Domain",
    "EnergyReport", "ExperimentConfig", "ExperimentSummary", "Field2Pair", "Field3",
    "GammaFilmError", "IncompatibleWells", "InterfaceGeometry", "LayerOutsideDomain",
    "LayersOverlap", "LineSearchFailure", "MinimizeOptions", "MinimizeResult", "MissingArtifact",
    "NonConvergence", "NotTwoWellCompatible", "PhaseMap", "PotentialSpec", "ProfileSolution1D",
    "ProfileSolution2D", "RecoveryMap", "RegionOutsideDomain", "RigidityReport",
    "ScheduleTooShort", "SquaresTooFew", "StructureReport", "TubeTooNarrow", "Wells",
    "build_recovery_critical_layered", "build_recovery_critical_levelset",
    "build_recovery_subcritical", "build_recovery_supercritical", "build_reference_jump",
    "check_hypotheses", "check_matos", "check_structure", "classify_phases",
    "convergence_diagnostic", "default_rho", "dist_K", "dist_SO3", "emit_plot_data", "energy_2d",
    "energy_3d", "energy_limit", "eval_W", "eval_W_grad", "eval_reduced_W", "gradient_of_energy",
    "limit_pair", "minimize_energy", "mm_straight_path_bound", "normalize_wells", "perimeter",
    "rescaled_gradient", "rescaled_hessian", "rigidity_diagnostic", "run_experiment", "solve_K0",
    "solve_Kgamma", "solve_Kinfty",
]
