"""Shapley-value data valuation for simulated federated-learning clients."""

from .baselines import cc_shapley, extended_tmc
from .coalition import (
    Coalition,
    binomial,
    enumerate_stratum,
    format_mask,
    parse_mask,
    random_permutation,
    sample_coalition,
    sample_stratum,
)
from .errors import (
    ConfigError,
    DataError,
    GuardError,
    MissingCoalitionError,
    ShapvalError,
    TableFormatError,
    UndefinedMetricError,
)
from .exact import exact_cc_sv, exact_mc_sv, exact_perm_sv
from .harness import (
    ExperimentConfig,
    ExperimentReport,
    MethodSpec,
    fairness_proxies,
    pareto_sweep,
    relative_error,
    run_experiment,
)
from .pruned import appearance_counts, balanced_extra, ipss, k_greedy, k_star
from .scenarios import ScenarioConfig, generate, with_duplicate, with_null_client
from .stratified import (
    SamplingPlan,
    Scheme,
    default_plan,
    stratified_estimate,
    unbiasedness_check,
    variance_comparison,
)
from .utility import (
    FunctionOracle,
    Memoized,
    RegressionFederation,
    RegressionOracle,
    TableOracle,
    UtilityOracle,
    UtilityTable,
    full_table,
    load_table,
    memoize,
    ols_fit,
    regression_oracle,
    save_table,
    table_oracle,
)
from .valuation import Valuation

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
