"""Comparison methods sharing the oracle-accounting basis of the main solver.

Two first-order baselines are reproduced at the level needed for
qualitative convergence comparisons:

* an iteratively regularized proximal subgradient scheme with diminishing
  steps and a vanishing upper-level pull, reporting the running average of
  its iterates;
* a sequential averaging scheme that blends a prox-gradient step on the
  lower objective with a gradient step on a smooth, strongly convex upper
  objective.

Every constant is config-exposed; the defaults are reconstructions, so
benchmarks should read them as comparison curves, not replications.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import OracleTally, evaluate_composite
from .problems import ProblemSpec
from .trace import TraceRecord

__all__ = [
    "AirgConfig",
    "BigSamConfig",
    "UnsupportedProblemError",
    "airg_step",
    "bigsam_step",
    "airg_run",
    "bigsam_run",
    "default_alpha_sequence",
]

# step-size decay gamma_k = gamma0 / (k+1)^STEP_DECAY; the regularization
# decay exponent b is the config knob that trades the two levels' rates
AIRG_STEP_DECAY = 0.5


class UnsupportedProblemError(ValueError):
    """The baseline's structural requirements are not met by this problem."""


@dataclass
class AirgConfig:
    gamma0: float = 1.0
    eta0: float = 1.0
    exponent_b: float = 0.25
    max_iters: int = 50_000

    def __post_init__(self):
        if not 0.0 < self.exponent_b < 0.5:
            raise ValueError("exponent_b must lie in (0, 0.5)")
        if self.gamma0 <= 0 or self.eta0 < 0:
            raise ValueError("gamma0 must be positive and eta0 nonnegative")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")


def default_alpha_sequence(k: int) -> float:
    return min(1.0, 2.0 / k)


@dataclass
class BigSamConfig:
    step_g: float | None = None  # None -> 1 / L_g1
    step_f: float | None = None  # None -> 2 / (L_f1 + sigma_f)
    alpha_sequence: Callable[[int], float] = default_alpha_sequence
    max_iters: int = 50_000

    def __post_init__(self):
        if self.step_g is not None and self.step_g <= 0:
            raise ValueError("step_g must be positive")
        if self.step_f is not None and self.step_f <= 0:
            raise ValueError("step_f must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")


def airg_step(
    spec: ProblemSpec,
    x_k: np.ndarray,
    k: int,
    config: AirgConfig,
    tally: OracleTally | None = None,
) -> np.ndarray:
    """One regularized proximal subgradient step.

    gamma_k = gamma0 / (k+1)^0.5 and eta_k = eta0 / (k+1)^b; the combined
    direction is grad g1 + eta_k * (grad f1 + subgrad f2), followed by the
    lower prox.
    """
    problem = spec.problem
    gamma_k = config.gamma0 / (k + 1.0) ** AIRG_STEP_DECAY
    eta_k = config.eta0 / (k + 1.0) ** config.exponent_b
    direction = np.asarray(problem.lower.smooth_gradient(x_k), dtype=float)
    if tally is not None:
        tally.grad_evals += 1
    if eta_k != 0.0:
        sf = np.asarray(problem.upper.smooth_gradient(x_k), dtype=float)
        if tally is not None:
            tally.grad_evals += 1
        if not spec.upper_smooth:
            sf = sf + np.asarray(spec.f2_subgradient(x_k), dtype=float)
            if tally is not None:
                tally.grad_evals += 1
        direction = direction + eta_k * sf
    x_next = problem.lower.prox(x_k - gamma_k * direction, gamma_k)
    if tally is not None:
        tally.prox_calls += 1
    return np.asarray(x_next, dtype=float)


def bigsam_step(
    spec: ProblemSpec,
    x_k: np.ndarray,
    k: int,
    config: BigSamConfig,
    tally: OracleTally | None = None,
) -> np.ndarray:
    """One sequential-averaging step: blend a lower prox-gradient step with
    an upper gradient step using the vanishing weight alpha_{k+1}."""
    problem = spec.problem
    step_g = config.step_g if config.step_g is not None else 1.0 / problem.lower.lipschitz
    if config.step_f is not None:
        step_f = config.step_f
    else:
        sigma = spec.strong_convexity_f
        if sigma is None:
            raise UnsupportedProblemError(
                "step_f not set and the problem does not declare a strong "
                "convexity modulus for the upper objective"
            )
        step_f = 2.0 / (problem.upper.lipschitz + sigma)
    grad_g = np.asarray(problem.lower.smooth_gradient(x_k), dtype=float)
    y = np.asarray(problem.lower.prox(x_k - step_g * grad_g, step_g), dtype=float)
    grad_f = np.asarray(problem.upper.smooth_gradient(x_k), dtype=float)
    z = x_k - step_f * grad_f
    if tally is not None:
        tally.grad_evals += 2
        tally.prox_calls += 1
    alpha = config.alpha_sequence(k + 1)
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha_sequence values must lie in (0, 1]")
    return alpha * z + (1.0 - alpha) * y


def _trace_loop(
    spec: ProblemSpec,
    x0: np.ndarray,
    n_iters: int,
    solver_id: str,
    step,
    refs: tuple[float, float],
    sample_every: int,
    average: bool,
    timer: Callable[[], float] | None,
) -> tuple[list[TraceRecord], np.ndarray]:
    problem = spec.problem
    p_star, g_star = refs
    tally = OracleTally()
    x = problem.check_point(x0).copy()
    avg = x.copy()
    records: list[TraceRecord] = []
    t0 = timer() if timer is not None else 0.0

    def record(idx: int, point: np.ndarray) -> None:
        # measurement evaluations are not part of the solver's oracle work
        f_val = evaluate_composite(problem.upper, point)
        g_val = evaluate_composite(problem.lower, point)
        records.append(
            TraceRecord(
                solver=solver_id,
                iterate_index=idx,
                fn_evals=tally.fn_evals,
                grad_evals=tally.grad_evals,
                prox_calls=tally.prox_calls,
                wall_seconds=(timer() - t0) if timer is not None else 0.0,
                f_gap=f_val - p_star,
                g_gap=g_val - g_star,
            )
        )

    record(0, avg if average else x)
    for k in range(n_iters):
        x = step(x, k, tally)
        if average:
            avg += (x - avg) / (k + 2.0)
        point = avg if average else x
        if (k + 1) % sample_every == 0 or k + 1 == n_iters:
            record(k + 1, point)
    return records, (avg if average else x)


def airg_run(
    spec: ProblemSpec,
    x0: np.ndarray,
    config: AirgConfig,
    refs: tuple[float, float],
    sample_every: int = 100,
    timer: Callable[[], float] | None = None,
) -> tuple[list[TraceRecord], np.ndarray]:
    """Run the regularized subgradient baseline, tracing the running average."""

    def step(x, k, tally):
        return airg_step(spec, x, k, config, tally)

    return _trace_loop(
        spec, x0, config.max_iters, "airg", step, refs, sample_every, True, timer
    )


def bigsam_run(
    spec: ProblemSpec,
    x0: np.ndarray,
    config: BigSamConfig,
    refs: tuple[float, float],
    sample_every: int = 100,
    timer: Callable[[], float] | None = None,
) -> tuple[list[TraceRecord], np.ndarray]:
    """Run the sequential-averaging baseline (requires a smooth upper
    objective: no nonsmooth upper part)."""
    if not spec.upper_smooth:
        raise UnsupportedProblemError(
            "the sequential-averaging baseline requires the upper nonsmooth "
            "part to be identically zero"
        )

    def step(x, k, tally):
        return bigsam_step(spec, x, k, config, tally)

    return _trace_loop(
        spec, x0, config.max_iters, "bigsam", step, refs, sample_every, False, timer
    )
