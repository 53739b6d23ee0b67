"""Cost-aware bi-objective Bayesian optimization over finite discrete design spaces.

Per iteration the optimizer picks both the next design point and the single
objective to measure, maximizing the reduction of the Pareto-region volume per
unit of measurement cost. Ships with coupled baselines (active learning,
random search, single-objective search), front quality metrics, and a
synthetic benchmark harness.
"""

from .acquisition import (
    AcquisitionScore,
    BetaSchedule,
    beta,
    select_next,
    uncertainty_regions,
    volume_change_per_cost,
)
from .baselines import pal_run, rs_run, sobo_run
from .costs import CostModel, EvaluationRecord, psi
from .metrics import (
    ComparisonSet,
    DiversityGrid,
    contribution,
    cost_summary,
    diversity,
    volume_reduction,
)
from .optimizer import OptimizerState, RunResult, flexibo_run
from .pareto import (
    ParetoFront,
    ParetoRegion,
    Regions,
    UncertaintyRegion,
    build_fronts,
    dominates,
    front_of_points,
    hypervolume,
    pareto_region,
    region_volume,
    staircase_area,
    undominated_set,
)
from .problems import SyntheticProblem, builtin_problems, get_problem
from .space import (
    DesignPoint,
    DesignSpace,
    ObjectiveSpec,
    OptionDef,
    parse_space,
    sample_random,
)
from .surrogate import (
    GaussianProcessModel,
    GPHyper,
    RandomForestModel,
    SurrogatePrediction,
    gp_fit,
    gp_predict,
    posterior_override,
    rf_fit,
    rf_predict,
)

__version__ = "0.1.0"

__all__ = [
    "AcquisitionScore",
    "BetaSchedule",
    "ComparisonSet",
    "CostModel",
    "DesignPoint",
    "DesignSpace",
    "DiversityGrid",
    "EvaluationRecord",
    "GaussianProcessModel",
    "GPHyper",
    "ObjectiveSpec",
    "OptimizerState",
    "OptionDef",
    "ParetoFront",
    "ParetoRegion",
    "RandomForestModel",
    "Regions",
    "RunResult",
    "SurrogatePrediction",
    "SyntheticProblem",
    "UncertaintyRegion",
    "beta",
    "build_fronts",
    "builtin_problems",
    "contribution",
    "cost_summary",
    "diversity",
    "dominates",
    "flexibo_run",
    "front_of_points",
    "get_problem",
    "gp_fit",
    "gp_predict",
    "hypervolume",
    "pal_run",
    "pareto_region",
    "parse_space",
    "posterior_override",
    "psi",
    "region_volume",
    "rf_fit",
    "rf_predict",
    "rs_run",
    "sample_random",
    "select_next",
    "sobo_run",
    "staircase_area",
    "uncertainty_regions",
    "undominated_set",
    "volume_change_per_cost",
    "volume_reduction",
]
