"""Value-at-Risk hedging with puts under regime-switching jump-diffusions."""

from .errors import (
    ExistenceViolated,
    InfeasibleError,
    InputError,
    ModelError,
    NumericalError,
    RsjdError,
    TargetUnattainable,
)
from .hedge import Boundary, HedgeSolution, efficient_frontier, min_cost_for_target, solve_hedge
from .model import (
    JumpLaw,
    MarketSetup,
    MeasureChangeSpec,
    RegimeModel,
    RegimeParams,
    apply_measure_change,
    gbm,
    identity_measure_change,
    load_model,
    merton,
    two_state,
)
from .risk import quantile, var_unhedged
from .transform import QuadratureSpec, put_price, tail_prob

__version__ = "0.1.0"
