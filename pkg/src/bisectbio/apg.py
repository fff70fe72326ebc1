"""Accelerated proximal gradient (FISTA) solvers and the oracle wrapper.

Three step modes:

* ``constant``     -- fixed step 1/L with the known Lipschitz constant;
* ``backtracking`` -- line search that grows L by factors of eta until the
  quadratic model majorizes the smooth part at the trial point;
* ``greedy``       -- constant step plus an adaptive momentum restart
  whenever the momentum direction turns against the last step.

Because epsilon-optimality cannot be certified without the optimal value,
the oracle runs a fixed iteration budget derived from the standard FISTA
rate, ceil(sqrt(2 * alpha * L * R^2 / eps)), where R bounds the distance
from the start to a minimizer (heuristic default ``10 + ||x0||``) and
alpha is 1 for constant steps, eta when backtracking.  An optional residual
early stop (``residual_stop > 0``) returns as soon as L * ||x_k - y_k||
falls below the threshold; it is off by default so rate experiments see
full trajectories.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .core import CompositeFunction, OracleTally, evaluate_composite

__all__ = [
    "FistaConfig",
    "ApgResult",
    "LineSearchError",
    "fista_budget",
    "prox_grad_step",
    "momentum_update",
    "backtrack_step",
    "fista_solve",
    "apg_oracle",
]

logger = logging.getLogger(__name__)

_MODES = ("constant", "backtracking", "greedy")


class LineSearchError(RuntimeError):
    """Backtracking exceeded its doubling budget: bad gradient or L inputs."""


@dataclass
class FistaConfig:
    mode: str = "constant"
    l0: float = 1.0
    eta: float = 2.0
    max_iters: int = 1_000_000
    radius_bound: float | None = None
    residual_stop: float = 0.0

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}")
        if self.eta <= 1:
            raise ValueError("eta must exceed 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.l0 <= 0:
            raise ValueError("l0 must be positive")
        if self.radius_bound is not None and self.radius_bound <= 0:
            raise ValueError("radius_bound must be positive")
        if self.residual_stop < 0:
            raise ValueError("residual_stop must be nonnegative")


@dataclass
class ApgResult:
    point: np.ndarray
    objective: float
    iters: int
    tally: OracleTally
    final_l: float


def fista_budget(
    lipschitz: float, radius: float, epsilon: float, rate_alpha: float = 1.0
) -> int:
    """Iterations guaranteeing an epsilon-optimal point at the FISTA rate."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    return math.ceil(math.sqrt(2.0 * rate_alpha * lipschitz * radius * radius / epsilon))


def prox_grad_step(
    phi: CompositeFunction, y: np.ndarray, l: float, tally: OracleTally | None = None
) -> np.ndarray:
    """One proximal gradient step from y with step constant l."""
    if l <= 0:
        raise ValueError("step constant l must be positive")
    grad = np.asarray(phi.smooth_gradient(y), dtype=float)
    if not np.all(np.isfinite(grad)):
        from .core import NumericDomainError

        raise NumericDomainError(f"gradient is non-finite at y={y!r}")
    if tally is not None:
        tally.grad_evals += 1
        tally.prox_calls += 1
    return np.asarray(phi.prox(y - grad / l, 1.0 / l), dtype=float)


def momentum_update(t_k: float) -> float:
    if t_k < 1.0:
        raise ValueError("momentum parameter must be at least 1")
    return (1.0 + math.sqrt(1.0 + 4.0 * t_k * t_k)) / 2.0


def backtrack_step(
    phi: CompositeFunction,
    y: np.ndarray,
    l_prev: float,
    eta: float,
    tally: OracleTally | None = None,
) -> tuple[float, np.ndarray]:
    """Smallest L = eta^i * l_prev whose quadratic model majorizes phi.

    Returns the accepted constant and the trial point.  The majorization
    test compares only the smooth parts; the nonsmooth term cancels.
    """
    if l_prev <= 0:
        raise ValueError("l_prev must be positive")
    if eta <= 1:
        raise ValueError("eta must exceed 1")
    y = np.asarray(y, dtype=float)
    grad = np.asarray(phi.smooth_gradient(y), dtype=float)
    fy = float(phi.smooth_value(y))
    if tally is not None:
        tally.grad_evals += 1
        tally.fn_evals += 1
    l = float(l_prev)
    for _ in range(101):
        x = np.asarray(phi.prox(y - grad / l, 1.0 / l), dtype=float)
        fx = float(phi.smooth_value(x))
        if tally is not None:
            tally.prox_calls += 1
            tally.fn_evals += 1
        d = x - y
        model = fy + float(grad @ d) + 0.5 * l * float(d @ d)
        if fx <= model + 1e-12:
            return l, x
        l *= eta
    raise LineSearchError(
        "majorization never held within 100 doublings; check the gradient"
    )


def fista_solve(
    phi: CompositeFunction,
    x0: np.ndarray,
    epsilon: float,
    config: FistaConfig | None = None,
    tally: OracleTally | None = None,
    callback: Callable[[int, np.ndarray, float], None] | None = None,
) -> ApgResult:
    """Run FISTA for the theory-derived budget and return the final iterate.

    ``callback(k, x_k, l_k)`` is invoked after every iteration; iterate
    sequences are bitwise deterministic for identical inputs.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    config = config or FistaConfig()
    tally = tally if tally is not None else OracleTally()
    x_prev = np.asarray(x0, dtype=float).copy()
    y = x_prev.copy()
    t = 1.0

    backtracking = config.mode == "backtracking"
    if backtracking:
        l = config.l0
        rate_alpha = config.eta
    else:
        l = phi.lipschitz
        if l <= 0:
            raise ValueError("constant/greedy mode requires a positive lipschitz")
        rate_alpha = 1.0
    radius = (
        config.radius_bound
        if config.radius_bound is not None
        else 10.0 + float(np.linalg.norm(x_prev))
    )

    def budget_for(l_now: float) -> int:
        b = fista_budget(l_now, radius, epsilon, rate_alpha)
        if b > config.max_iters:
            logger.warning(
                "iteration budget %d capped at max_iters=%d", b, config.max_iters
            )
            return config.max_iters
        return b

    budget = budget_for(l)
    if budget == 0:
        raise ValueError("iteration budget is 0; check lipschitz/radius inputs")

    k = 0
    x = x_prev
    while k < budget:
        k += 1
        if backtracking:
            l, x = backtrack_step(phi, y, l, config.eta, tally)
            budget = max(budget, budget_for(l))
        else:
            x = prox_grad_step(phi, y, l, tally)
        t_next = momentum_update(t)
        step = x - x_prev
        y_next = x + ((t - 1.0) / t_next) * step
        if config.mode == "greedy" and float((y - x) @ step) > 0.0:
            t_next = 1.0
            y_next = x.copy()
        residual = l * float(np.linalg.norm(x - y))
        if callback is not None:
            callback(k, x, l)
        x_prev = x
        y = y_next
        t = t_next
        if config.residual_stop > 0.0 and residual <= config.residual_stop:
            break

    objective = evaluate_composite(phi, x_prev, tally)
    return ApgResult(point=x_prev, objective=objective, iters=k, tally=tally, final_l=l)


def apg_oracle(
    smooth_value: Callable[[np.ndarray], float],
    smooth_gradient: Callable[[np.ndarray], np.ndarray],
    lipschitz: float,
    nonsmooth_value: Callable[[np.ndarray], float],
    nonsmooth_prox: Callable[[np.ndarray, float], np.ndarray],
    x0: np.ndarray,
    epsilon: float,
    config: FistaConfig | None = None,
    tally: OracleTally | None = None,
) -> ApgResult:
    """Oracle-style entry point taking the composite's pieces separately."""
    phi = CompositeFunction(
        smooth_value=smooth_value,
        smooth_gradient=smooth_gradient,
        lipschitz=lipschitz,
        nonsmooth_value=nonsmooth_value,
        prox=nonsmooth_prox,
    )
    return fista_solve(phi, x0, epsilon, config=config, tally=tally)
