"""Explore-before-talk (EBT) multichannel uplink allocation for MTC.

Closed-form and simulated mean rates under selection diversity, Chernoff
outage bounds for Poisson traffic, and the (W, Wbar) / Wc optimizers.
"""

__version__ = "0.1.0"

from .errors import ConfigError, DomainError, InfeasibleError, QuadratureError
from .specfun import exp_integral_e1, order_stat_mean, order_stat_pdf
from .rate_model import (
    ConvPlan,
    EbtPlan,
    db_to_linear,
    equivalent_conventional_width,
    linear_to_db,
    mean_rate_conventional,
    mean_rate_ebt,
    mean_rate_ebt_approx,
    mean_rate_ebt_exact,
    mean_rate_ebt_lower_bound,
    mean_rate_ebt_quadrature,
)
from .outage_model import (
    PsiResult,
    SlotDistribution,
    TrafficRates,
    admitted_pmf,
    chernoff_outage_bound,
    derive_traffic_rates,
    feasibility_check,
    min_psi_conventional,
    minimize_psi,
    psi,
    residual_rates,
)
from .optimizer import (
    OptimizationOutcome,
    SystemParams,
    optimal_wbar_for_w,
    optimize,
    optimize_conventional,
    optimize_ebt,
)
from .simulator import (
    Policy,
    SimMetrics,
    draw_snrs,
    empirical_qos_exponent,
    run_simulation,
    select_best_channels,
    simulate_preamble_step,
)
