"""Simulation laboratory for online min-cost perfect matching with delays.

The package turns a concave delay function into a piecewise-linear lower
approximation, embeds finite metrics into random trees, builds the counter
forests that drive the online matching algorithms, simulates those
algorithms deterministically (exactly, under rational arithmetic), and
compares their cost against exact offline optima.
"""

__version__ = "0.1.0"

from .delay import (
    CappedLinearDelay,
    ConcaveDelaySpec,
    CustomPWLDelay,
    LinearDelay,
    Log1pDelay,
    PiecewiseLinearDelay,
    Sqrt1pDelay,
    linearize,
    parse_delay_spec,
    verify_sandwich,
)
from .embedding import Hst, estimate_distortion, frt_embed, tree_distance, verify_embedding
from .engine import (
    MatchedPair,
    RunResult,
    run_bpma,
    run_bpsla,
    run_greedy,
    run_ma,
    run_sla,
)
from .errors import (
    AuditFailure,
    BadParams,
    DelayMatchError,
    IncompatiblePolarity,
    MalformedHst,
    NegativeTime,
    NonConcaveSpec,
    NotPerfectMatching,
    ParseError,
    TooLarge,
    Unbalanced,
    Unterminated,
    ZeroDerivative,
)
from .experiment import ExperimentConfig, RatioReport, run_ratio_experiment
from .forest import CounterForest, CounterNode, build_forest, entry_counter, verify_forest
from .instances import (
    Instance,
    MetricSpace,
    Request,
    gen_greedy_bad,
    gen_random,
    load,
    save,
    validate,
)
from .oracle import OfflineSolution, eval_solution, opt_bichromatic, opt_mono, pair_cost

__all__ = [
    "AuditFailure",
    "BadParams",
    "CappedLinearDelay",
    "ConcaveDelaySpec",
    "CounterForest",
    "CounterNode",
    "CustomPWLDelay",
    "DelayMatchError",
    "ExperimentConfig",
    "Hst",
    "IncompatiblePolarity",
    "Instance",
    "LinearDelay",
    "Log1pDelay",
    "MalformedHst",
    "MatchedPair",
    "MetricSpace",
    "NegativeTime",
    "NonConcaveSpec",
    "NotPerfectMatching",
    "OfflineSolution",
    "ParseError",
    "PiecewiseLinearDelay",
    "RatioReport",
    "Request",
    "RunResult",
    "Sqrt1pDelay",
    "TooLarge",
    "Unbalanced",
    "Unterminated",
    "ZeroDerivative",
    "build_forest",
    "entry_counter",
    "estimate_distortion",
    "eval_solution",
    "frt_embed",
    "gen_greedy_bad",
    "gen_random",
    "linearize",
    "load",
    "opt_bichromatic",
    "opt_mono",
    "pair_cost",
    "parse_delay_spec",
    "run_bpma",
    "run_bpsla",
    "run_greedy",
    "run_ma",
    "run_ratio_experiment",
    "run_sla",
    "save",
    "tree_distance",
    "validate",
    "verify_embedding",
    "verify_forest",
    "verify_sandwich",
]
