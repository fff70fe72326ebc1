"""Convex simple bilevel optimization via bisection on the optimal value.

The solver finds a point that is eps_f-optimal for a composite convex upper
objective over the eps_g-approximate solution set of a composite convex
lower objective, returning certified interval bounds.  Inner subproblems
are handled by accelerated proximal gradient oracles; level-set projections
have closed-form or scalar-search proximal mappings.
"""

from .apg import ApgResult, FistaConfig, apg_oracle, fista_budget, fista_solve
from .baselines import AirgConfig, BigSamConfig, airg_run, bigsam_run
from .bilevel import (
    BisectionConfig,
    HolderDiagnostics,
    ValueFunctionDiagnostics,
    bisection_solve,
    check_infeasibility_condition,
    corollary1_epsg,
    holder_lower_bound,
    initial_bounds,
    toy_value_function,
    value_fn_lower_bound,
    verify_certificate,
)
from .core import (
    BilevelProblem,
    CompositeFunction,
    OracleTally,
    SolutionCertificate,
    evaluate_composite,
    finite_difference_check,
)
from .kernels import active_backend, use_backend
from .problems import ProblemSpec, from_config, make_lrp, make_mnp, make_ssp, make_toy
from .prox import (
    BallSpec,
    ElasticNetSpec,
    make_level_set_prox,
    project_elasticnet_levelset,
    project_l1_ball,
    project_l1l2_intersection,
    project_l2_ball,
    prox_nonneg_then_ball,
)
from .trace import TraceRecord, emit_svg_plot, emit_trace_csv

__version__ = "0.1.0"
