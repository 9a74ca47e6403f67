"""Multi-type Lambda-Wright-Fisher toolkit: lookdown simulation, fixation
lines, ancestral duals, closed-form fixation/stationary-time evaluators, and
a Monte Carlo validation harness."""

from .config import RunConfig, parse_config, parse_header
from .dual import CEMETERY, dual_moment, dual_rates, simulate_dual
from .estimation import (
    coalescence_experiment,
    duality_check,
    estimate_disappearance_order,
    estimate_fixation_time,
    estimate_fixline_rates,
    estimate_stationary_time,
    heatmap_grid,
    run_suite,
)
from .fixation_line import (
    FixationLinePath,
    explosion_times_beta,
    explosion_times_kingman,
    sample_explosion,
    simulate_path,
)
from .formulas import (
    coupon_pmf,
    disappearance_order_prob,
    first_to_disappear_prob,
    fixation_charfunc_kingman,
    mean_explosion_beta,
    mean_fixation_beta,
    mean_fixation_kingman,
    phi_generating,
    stationary_time_mean,
)
from .lookdown import LookdownRun, coupon_levels, run
from .measures import (
    BetaComponent,
    LambdaSpec,
    ModelParams,
    fixation_jump_rate,
    lambda_rate,
    total_up_rate,
)
from .reporting import ComparisonReport, Estimate

__version__ = "0.1.0"
