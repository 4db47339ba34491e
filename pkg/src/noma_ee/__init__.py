"""Energy-efficient NOMA power allocation for RSU-assisted V2X downlinks
under imperfect CSI: channel simulation, outage-constrained rate model,
transmit-power search, allocation solvers, baselines and sweep tooling."""

from .config import PathlossModel, ScenarioConfig, load_config, dump_config
from .channel import (
    LinkState, Scenario, generate_scenario, order_vehicles, pathloss_linear,
    load_scenario, save_scenario,
)
from .outage import (
    Allocation, OutageCoefficients, RateReport, achievable_rate,
    build_rate_report, compute_coefficients, compute_xyz, marcum_q1,
    monte_carlo_outage, noncentral_chi2_sq_magnitude_quantile,
    rsu_average_sumrate, scheduled_rate, sq_magnitude_cdf, transformed_sinr,
    transformed_sinr_all,
)
from .gabs import (
    GabsConfig, GabsResult, default_fractions, ee_derivative, ee_of_power,
    gabs_optimize, gabs_search, iteration_bound, sumrate, sumrate_derivative,
    sumrate_second_derivative,
)
from .alloc import (
    AllocResult, DualInfeasibleError, DualState, ScaPoint, binding_vertex,
    closed_form_alpha, dinkelbach_solve, lagrangian_alpha_grad,
    lagrangian_value, minimal_power_fractions, new_dual_state, qos_check,
    sca_coefficients, subgradient_update,
)
from .baselines import (
    BaselineResult, GridSpec, exhaustive_search, fixed_power_noma,
    ofdma_baseline, ofdma_ee, simplex_grid,
)
from .experiments import (
    SOLVER_NAMES, SweepSpec, SweepResult, derive_seed, emit_results,
    run_sweep, run_trial,
)

__version__ = "0.1.0"
