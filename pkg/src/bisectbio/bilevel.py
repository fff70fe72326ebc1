"""Level-set bisection solver for convex simple bilevel problems.

The solver maintains an interval [l, u] where l lower-bounds the bilevel
optimum and u upper-bounds the optimum of the relaxed problem (lower-level
optimality slackened by eps_g).  Each round solves

    minimize g(x)  subject to  f(x) <= c,   c = (l + u) / 2

with an accelerated proximal gradient oracle whose nonsmooth part is the
lower nonsmooth term plus the level-set indicator.  The verifiable test

    g(x_c) > g_ref + eps_g / 2

certifies that the system {f <= c, g <= g*} is infeasible, so c becomes
the new lower bound; otherwise f(x_c) (which is at most c) becomes the new
upper bound and x_c the incumbent.  The loop exits once u - l <= eps_f and
returns the incumbent with a certificate of both bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .apg import ApgResult, FistaConfig, fista_budget, fista_solve
from .core import (
    BilevelProblem,
    CompositeFunction,
    OracleTally,
    SolutionCertificate,
    evaluate_composite,
)

__all__ = [
    "BisectionConfig",
    "BisectionState",
    "RoundLog",
    "InitialBounds",
    "InconsistentBoundsError",
    "HolderDiagnostics",
    "ValueFunctionDiagnostics",
    "VerificationReport",
    "ceil_log2_plus",
    "initial_bounds",
    "check_infeasibility_condition",
    "bisection_solve",
    "verify_certificate",
    "holder_lower_bound",
    "corollary1_epsg",
    "value_fn_lower_bound",
    "toy_value_function",
]

LEVEL_SET_FEASIBILITY_TOL = 1e-9


class InconsistentBoundsError(RuntimeError):
    """Initial l exceeded initial u: an oracle missed its budget (bad R?)."""


@dataclass
class BisectionConfig:
    """Knobs for the outer loop and its inner oracles.

    ``residual_rule = "certified"`` lets each inner oracle stop early once
    its prox-gradient residual certifies the target gap (threshold
    eps / (2 R), since the residual bounds a subgradient norm); ``"off"``
    runs every oracle to its full iteration budget.
    """

    fista: FistaConfig = field(default_factory=lambda: FistaConfig(mode="greedy"))
    warm_start: bool = True
    residual_rule: str = "certified"

    def __post_init__(self):
        if self.residual_rule not in ("certified", "off"):
            raise ValueError("residual_rule must be 'certified' or 'off'")


@dataclass
class RoundLog:
    c: float
    condition_fired: bool
    g_at_candidate: float
    f_at_candidate: float
    inner_tally: OracleTally


@dataclass
class BisectionState:
    l: float
    u: float
    g_tilde: float
    incumbent: np.ndarray
    rounds: list[RoundLog] = field(default_factory=list)
    bounds_history: list[tuple[float, float]] = field(default_factory=list)
    init_f_result: ApgResult | None = None
    init_g_result: ApgResult | None = None
    driver_tally: OracleTally = field(default_factory=OracleTally)


@dataclass
class InitialBounds:
    l: float
    u: float
    x_f: np.ndarray
    x_g: np.ndarray
    g_tilde: float
    f_result: ApgResult
    g_result: ApgResult
    driver_tally: OracleTally


def ceil_log2_plus(ratio: float) -> int:
    """Smallest nonnegative integer >= log2(ratio); 0 for ratio <= 1."""
    if ratio <= 1.0:
        return 0
    return max(0, math.ceil(math.log2(ratio)))


def _oracle_config(config: BisectionConfig, x0: np.ndarray, epsilon: float) -> FistaConfig:
    fc = config.fista
    radius = fc.radius_bound
    if radius is None:
        radius = 10.0 + float(np.linalg.norm(x0))
    stop = fc.residual_stop
    if config.residual_rule == "certified":
        stop = epsilon / (2.0 * radius)
    elif config.residual_rule == "off":
        stop = 0.0
    return replace(fc, radius_bound=radius, residual_stop=stop)


def initial_bounds(
    problem: BilevelProblem,
    eps_f: float,
    eps_g: float,
    x0_f: np.ndarray,
    x0_g: np.ndarray,
    config: BisectionConfig | None = None,
) -> InitialBounds:
    """Oracle solves of both unconstrained levels, yielding [l, u] and g_ref.

    l = f(x_f) - eps_f/2 lower-bounds the bilevel optimum; u = f(x_g)
    upper-bounds the relaxed optimum because x_g is eps_g/2-optimal for g.
    """
    if eps_f <= 0 or eps_g <= 0:
        raise ValueError("eps_f and eps_g must be positive")
    config = config or BisectionConfig()
    x0_f = problem.check_point(x0_f)
    x0_g = problem.check_point(x0_g)
    driver = OracleTally()

    f_result = fista_solve(
        problem.upper, x0_f, eps_f / 2.0, _oracle_config(config, x0_f, eps_f / 2.0)
    )
    g_result = fista_solve(
        problem.lower, x0_g, eps_g / 2.0, _oracle_config(config, x0_g, eps_g / 2.0)
    )
    l = f_result.objective - eps_f / 2.0
    u = evaluate_composite(problem.upper, g_result.point, driver)
    g_tilde = g_result.objective
    if l > u:
        raise InconsistentBoundsError(
            f"initial lower bound {l} exceeds upper bound {u}; "
            "an APG oracle likely missed its accuracy (radius_bound too small?)"
        )
    return InitialBounds(
        l=l,
        u=u,
        x_f=f_result.point,
        x_g=g_result.point,
        g_tilde=g_tilde,
        f_result=f_result,
        g_result=g_result,
        driver_tally=driver,
    )


def check_infeasibility_condition(
    g_candidate: float, g_tilde: float, eps_g: float
) -> bool:
    """True when the candidate's g value certifies {f<=c, g<=g*} infeasible."""
    return g_candidate > g_tilde + eps_g / 2.0


def _subproblem(problem: BilevelProblem, c: float) -> CompositeFunction:
    upper = problem.upper
    lower = problem.lower
    prox_c = problem.level_set_prox(c)

    def value(x: np.ndarray) -> float:
        fval = float(upper.smooth_value(x)) + float(upper.nonsmooth_value(x))
        if fval > c + LEVEL_SET_FEASIBILITY_TOL:
            return math.inf
        return float(lower.nonsmooth_value(x))

    return CompositeFunction(
        smooth_value=lower.smooth_value,
        smooth_gradient=lower.smooth_gradient,
        lipschitz=lower.lipschitz,
        nonsmooth_value=value,
        prox=prox_c,
    )


def bisection_solve(
    problem: BilevelProblem,
    eps_f: float,
    eps_g: float,
    x0: np.ndarray | None = None,
    config: BisectionConfig | None = None,
    observer: Callable[[str, np.ndarray, OracleTally], None] | None = None,
) -> SolutionCertificate:
    """Run the full bisection and return a certified solution.

    The incumbent starts at the lower-level solve so that a zero-round exit
    (initial gap already within eps_f) still returns a valid point.  Inner
    oracles warm-start from the previous round's candidate.  ``observer``
    receives ("init"/"round", current point, cumulative tally snapshot)
    after the initial bounds and after every round.
    """
    config = config or BisectionConfig()
    if x0 is None:
        x0 = np.zeros(problem.dimension)
    init = initial_bounds(problem, eps_f, eps_g, x0, x0, config)

    state = BisectionState(
        l=init.l,
        u=init.u,
        g_tilde=init.g_tilde,
        incumbent=init.x_g,
        init_f_result=init.f_result,
        init_g_result=init.g_result,
        driver_tally=init.driver_tally,
    )
    state.bounds_history.append((state.l, state.u))
    total = init.f_result.tally.copy()
    total.add(init.g_result.tally)

    def cumulative() -> OracleTally:
        snap = total.copy()
        snap.add(state.driver_tally)
        return snap

    if observer is not None:
        observer("init", init.x_g, cumulative())

    round_cap = ceil_log2_plus((state.u - state.l) / eps_f)
    start = init.x_g
    while state.u - state.l > eps_f:
        if len(state.rounds) >= round_cap:
            raise RuntimeError(
                "bisection exceeded its round-count certificate; "
                "this indicates an internal logic error"
            )
        c = 0.5 * (state.l + state.u)
        phi_c = _subproblem(problem, c)
        inner_cfg = _oracle_config(config, start, eps_g / 2.0)
        result = fista_solve(phi_c, start, eps_g / 2.0, inner_cfg)
        candidate = result.point
        g_cand = evaluate_composite(problem.lower, candidate, state.driver_tally)
        f_cand = evaluate_composite(problem.upper, candidate, state.driver_tally)
        fired = check_infeasibility_condition(g_cand, state.g_tilde, eps_g)
        if fired:
            state.l = c
        else:
            state.u = f_cand
            state.incumbent = candidate
        state.rounds.append(
            RoundLog(
                c=c,
                condition_fired=fired,
                g_at_candidate=g_cand,
                f_at_candidate=f_cand,
                inner_tally=result.tally,
            )
        )
        state.bounds_history.append((state.l, state.u))
        total.add(result.tally)
        if observer is not None:
            observer("round", candidate, cumulative())
        if config.warm_start:
            start = candidate

    return SolutionCertificate(
        point=state.incumbent,
        upper_bound_u=state.u,
        lower_bound_l=state.l,
        g_reference=state.g_tilde,
        epsilon_f=eps_f,
        epsilon_g=eps_g,
        tally=cumulative(),
        bisection_rounds=len(state.rounds),
        state=state,
    )


@dataclass
class CheckResult:
    name: str
    passed: bool
    lhs: float
    rhs: float


@dataclass
class VerificationReport:
    checks: list[CheckResult]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]


def verify_certificate(
    problem: BilevelProblem,
    cert: SolutionCertificate,
    g_star_oracle: float | None = None,
    p_star_oracle: float | None = None,
) -> VerificationReport:
    """Re-check a certificate using only function evaluations.

    Internal checks never need reference optima; when ``g_star_oracle`` or
    ``p_star_oracle`` are supplied the corresponding gap bounds are checked
    as well.
    """
    x = problem.check_point(cert.point)
    f_hat = evaluate_composite(problem.upper, x)
    g_hat = evaluate_composite(problem.lower, x)
    checks = [
        CheckResult(
            "u - l <= eps_f",
            cert.upper_bound_u - cert.lower_bound_l <= cert.epsilon_f,
            cert.upper_bound_u - cert.lower_bound_l,
            cert.epsilon_f,
        ),
        CheckResult(
            "g(x) <= g_ref + eps_g/2",
            g_hat <= cert.g_reference + cert.epsilon_g / 2.0,
            g_hat,
            cert.g_reference + cert.epsilon_g / 2.0,
        ),
        CheckResult(
            "f(x) == u",
            abs(f_hat - cert.upper_bound_u) <= 1e-12 * (1.0 + abs(cert.upper_bound_u)),
            f_hat,
            cert.upper_bound_u,
        ),
    ]
    if g_star_oracle is not None:
        checks.append(
            CheckResult(
                "g(x) - g* <= eps_g",
                g_hat - g_star_oracle <= cert.epsilon_g,
                g_hat - g_star_oracle,
                cert.epsilon_g,
            )
        )
    if p_star_oracle is not None:
        checks.append(
            CheckResult(
                "f(x) - p* <= eps_f",
                f_hat - p_star_oracle <= cert.epsilon_f,
                f_hat - p_star_oracle,
                cert.epsilon_f,
            )
        )
    return VerificationReport(checks)


# ---------------------------------------------------------------------------
# diagnostic lower bounds on f(x_hat) - p*
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HolderDiagnostics:
    """Growth-condition constants for the lower-level objective.

    ``holder_alpha`` and ``holder_r`` satisfy
    (alpha/r) * dist(x, argmin g)^r <= g(x) - g*;  ``b_f1`` bounds the upper
    smooth gradient norm on the lower domain and ``l_f2`` is the Lipschitz
    constant of the upper nonsmooth part there.
    """

    holder_alpha: float
    holder_r: float
    b_f1: float = 0.0
    l_f2: float = 0.0

    def __post_init__(self):
        if self.holder_alpha <= 0:
            raise ValueError("holder_alpha must be positive")
        if self.holder_r < 1:
            raise ValueError("holder_r must be at least 1")
        if self.b_f1 < 0 or self.l_f2 < 0:
            raise ValueError("b_f1 and l_f2 must be nonnegative")

    @property
    def b_f(self) -> float:
        return self.b_f1 + self.l_f2


@dataclass(frozen=True)
class ValueFunctionDiagnostics:
    """Relaxation value-function data: v(eps) >= v(0) - l_eps * eps."""

    l_eps: float
    v0: float
    v_eps: float

    def __post_init__(self):
        if self.l_eps <= 0:
            raise ValueError("l_eps must be positive")
        if self.v_eps > self.v0:
            raise ValueError("v_eps cannot exceed v0 (relaxation only helps)")


def holder_lower_bound(diag: HolderDiagnostics, eps_g: float) -> float:
    """Lower bound on f(x) - p* for any eps_g-optimal lower-level point."""
    if eps_g < 0:
        raise ValueError("eps_g must be nonnegative")
    if eps_g == 0:
        return 0.0
    return -diag.b_f * (diag.holder_r * eps_g / diag.holder_alpha) ** (
        1.0 / diag.holder_r
    )


def corollary1_epsg(diag: HolderDiagnostics, eps_f: float, gamma: float | None = None) -> float:
    """The eps_g making the growth-condition lower bound match -eps_f.

    With gamma = holder_r (the default) the round trip through
    ``holder_lower_bound`` returns exactly -eps_f.
    """
    if eps_f <= 0:
        raise ValueError("eps_f must be positive")
    if gamma is None:
        gamma = diag.holder_r
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    return (diag.holder_alpha / gamma) * (eps_f / diag.b_f) ** diag.holder_r


def value_fn_lower_bound(diag: ValueFunctionDiagnostics, eps_g: float) -> float:
    """Lower bound -l_eps * eps_g on f(x) - p* from the value function."""
    if eps_g < 0:
        raise ValueError("eps_g must be nonnegative")
    return -diag.l_eps * eps_g


def toy_value_function(eps: float) -> float:
    """Relaxed optimal value 1 - sqrt(eps) of the two-dimensional toy
    instance (l1-norm upper objective over the minimizers of (z_1 - 1)^2);
    ground truth for the diagnostics tests."""
    if not 0.0 <= eps < 1.0:
        raise ValueError("eps must lie in [0, 1)")
    return 1.0 - math.sqrt(eps)
