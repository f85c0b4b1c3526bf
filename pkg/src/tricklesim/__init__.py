"""Simulation and analysis workbench for generalized Trickle dissemination.

The package has three layers:

- event-level simulation of the protocol on single-cell and toroidal grid
  topologies (`core`, `topology`, `engine`),
- closed-form results for the inter-transmission time distribution in a
  single cell under the Poisson reference model (`analytic`), including
  large-n limit laws and multicell extrapolation,
- experiment drivers that sweep parameters, compare the two, and render
  tables plus figures (`stats`, `experiments`, `cli`).
"""

__version__ = "0.1.0"

from .analytic import (AnalyticParams, DensityTable, cdf_table, density_table,
                       expected_transmissions, expected_transmissions_asymptotic,
                       gaussian_cut, hazard, joint_density,
                       limit_density_eta0, limit_density_eta0_direct,
                       limit_density_eta_pos, limit_exponential_checks,
                       log_norm_constant, marginal_density, moment,
                       multicell_estimate, multicell_estimate_asymptotic,
                       norm_constant, stationarity_residual, sum_density)
from .core import (NodeState, TrickleConfig, init_node, on_hear_consistent,
                   on_hear_inconsistent, on_interval_end, on_interval_start,
                   on_timer_theta, partial_interval_theta)
from .engine import (TransmissionLog, attempt_times, node_stream,
                     run_simulation, two_node_overlap_run)
from .exceptions import (AcceptanceFailure, MalformedLogError, NumericError,
                         ParameterError, SpecError)
from .experiments import (PRESETS, ExperimentSpec, run_experiment, run_preset,
                          validate_spec)
from .stats import (SummaryStats, empirical_cdf, inter_transmission_times,
                    ks_distance, mean_tx_per_interval,
                    poisson_convergence_check, summarize_log, theta_ratio)
from .topology import Topology, build_topology, cell_size, grid, single_cell

__all__ = [
    "AcceptanceFailure", "AnalyticParams", "DensityTable", "ExperimentSpec",
    "MalformedLogError", "NodeState", "NumericError", "PRESETS",
    "ParameterError", "SpecError", "SummaryStats", "Topology",
    "TransmissionLog", "TrickleConfig", "__version__", "attempt_times",
    "build_topology", "cdf_table", "cell_size", "density_table",
    "empirical_cdf", "expected_transmissions",
    "expected_transmissions_asymptotic", "gaussian_cut", "grid", "hazard",
    "init_node", "inter_transmission_times", "joint_density", "ks_distance",
    "limit_density_eta0", "limit_density_eta0_direct", "limit_density_eta_pos",
    "limit_exponential_checks", "log_norm_constant", "marginal_density",
    "mean_tx_per_interval", "moment", "multicell_estimate",
    "multicell_estimate_asymptotic", "node_stream", "norm_constant",
    "on_hear_consistent", "on_hear_inconsistent", "on_interval_end",
    "on_interval_start", "on_timer_theta", "partial_interval_theta",
    "poisson_convergence_check", "run_experiment", "run_preset",
    "run_simulation", "single_cell", "stationarity_residual", "sum_density",
    "summarize_log", "theta_ratio", "two_node_overlap_run", "validate_spec",
]
