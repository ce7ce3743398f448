"""Simulation and diagnostics for diffusions on a star junction built from vertex-jump approximations."""
__version__ = "0.1.0"

from .junction import (CoefficientField, Constant, Junction, JunctionPoint, LinearDecay, TimeRamp,
                       ValidationReport, VertexWeights, d_junction, eval_coeff,
                       validate_assumption_H)
from .paths import (PathRecord, load_pack, modulus_of_continuity, save_pack,
                    skorokhod_distance_upper, uniform_distance, validate_Ddelta_membership)
from .engine import (SimConfig, SimulationError, run_ensemble, simulate_batch,
                     simulate_coupled_refinement, simulate_delta_path, write_ensemble)
from .localtime import (LocalTimeSeries, jump_count_local_time, occupation_local_time,
                        occupation_time_near_zero, phi_decomposition_local_time, phi_epsilon)
from .ito import (ResidualSeries, TestFunction, catalog_function, dynkin_apply, ito_residual,
                  martingale_zero_mean_test, validate_test_function)
from .stats import fit_convergence_rate, ks_statistic
from .experiments import ExperimentConfig, SummaryRecord, run_experiment

__all__ = [
    "CoefficientField", "Constant", "Junction", "JunctionPoint", "LinearDecay", "TimeRamp",
    "ValidationReport", "VertexWeights", "d_junction", "eval_coeff", "validate_assumption_H",
    "PathRecord", "load_pack", "modulus_of_continuity", "save_pack", "skorokhod_distance_upper",
    "uniform_distance", "validate_Ddelta_membership",
    "SimConfig", "SimulationError", "run_ensemble", "simulate_batch",
    "simulate_coupled_refinement", "simulate_delta_path", "write_ensemble",
    "LocalTimeSeries", "jump_count_local_time", "occupation_local_time",
    "occupation_time_near_zero", "phi_decomposition_local_time", "phi_epsilon",
    "ResidualSeries", "TestFunction", "catalog_function", "dynkin_apply", "ito_residual",
    "martingale_zero_mean_test", "validate_test_function",
    "fit_convergence_rate", "ks_statistic",
    "ExperimentConfig", "SummaryRecord", "run_experiment",
]
