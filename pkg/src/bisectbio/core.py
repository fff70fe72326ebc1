"""Problem-model abstractions shared by every solver in the package.

A composite objective is a smooth convex part (value, gradient, Lipschitz
constant of the gradient) plus a prox-friendly convex part (value, proximal
mapping).  Values of the nonsmooth part are extended reals: ``math.inf``
marks points outside the domain, and comparisons against it are exact in
IEEE arithmetic, so expressions like ``f(x) <= c`` never produce NaN.

All callables stored here must be pure functions of their input; mutable
bookkeeping (oracle tallies) is kept outside, confined to one solver run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "CompositeFunction",
    "BilevelProblem",
    "OracleTally",
    "SolutionCertificate",
    "NumericDomainError",
    "evaluate_composite",
    "finite_difference_check",
    "zero_value",
    "zero_gradient",
    "identity_prox",
]


class NumericDomainError(ArithmeticError):
    """The smooth part of an objective produced a non-finite value."""


def zero_value(x: np.ndarray) -> float:
    return 0.0


def zero_gradient(x: np.ndarray) -> np.ndarray:
    return np.zeros_like(x)


def identity_prox(y: np.ndarray, scale: float) -> np.ndarray:
    return np.asarray(y, dtype=float)


@dataclass(frozen=True)
class CompositeFunction:
    """A convex objective split into a smooth and a prox-friendly part.

    ``prox(point, scale)`` must return
    ``argmin_x nonsmooth_value(x) + ||x - point||^2 / (2 * scale)``.
    The defaults make the nonsmooth part identically zero.
    """

    smooth_value: Callable[[np.ndarray], float]
    smooth_gradient: Callable[[np.ndarray], np.ndarray]
    lipschitz: float
    nonsmooth_value: Callable[[np.ndarray], float] = zero_value
    prox: Callable[[np.ndarray, float], np.ndarray] = identity_prox

    def __post_init__(self):
        if self.lipschitz < 0:
            raise ValueError("lipschitz constant must be nonnegative")


@dataclass(frozen=True)
class BilevelProblem:
    """Upper- and lower-level composites plus the level-set prox family.

    ``level_set_prox(c)`` returns the proximal mapping of the subproblem's
    nonsmooth part at level ``c``, i.e. of the lower nonsmooth part plus the
    indicator of ``{x : upper(x) <= c}``.

    The solver assumes (and does not verify) that the lower-level objective
    is convex but not strongly convex, so its solution set is typically not
    a singleton; supplying a strongly convex lower level makes the bilevel
    problem degenerate but does not break the code.
    """

    upper: CompositeFunction
    lower: CompositeFunction
    level_set_prox: Callable[[float], Callable[[np.ndarray, float], np.ndarray]]
    dimension: int

    def __post_init__(self):
        if self.dimension <= 0:
            raise ValueError("dimension must be a positive integer")

    def check_point(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise ValueError(
                f"point has shape {x.shape}, expected ({self.dimension},)"
            )
        return x


@dataclass
class OracleTally:
    """Unit-operation counters: function values, gradients, prox calls."""

    fn_evals: int = 0
    grad_evals: int = 0
    prox_calls: int = 0

    def add(self, other: "OracleTally") -> None:
        self.fn_evals += other.fn_evals
        self.grad_evals += other.grad_evals
        self.prox_calls += other.prox_calls

    def copy(self) -> "OracleTally":
        return OracleTally(self.fn_evals, self.grad_evals, self.prox_calls)

    def total(self) -> int:
        return self.fn_evals + self.grad_evals + self.prox_calls

    def as_dict(self) -> dict:
        return {
            "fn_evals": self.fn_evals,
            "grad_evals": self.grad_evals,
            "prox_calls": self.prox_calls,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OracleTally":
        return cls(int(d["fn_evals"]), int(d["grad_evals"]), int(d["prox_calls"]))


@dataclass
class SolutionCertificate:
    """Output of the bisection solver with its verifiable guarantees.

    At termination ``upper_bound_u - lower_bound_l <= epsilon_f``,
    ``f(point) == upper_bound_u`` up to recording precision, and
    ``g(point) <= g_reference + epsilon_g / 2`` (the verifiable surrogate
    for lower-level near-optimality).
    """

    point: np.ndarray
    upper_bound_u: float
    lower_bound_l: float
    g_reference: float
    epsilon_f: float
    epsilon_g: float
    tally: OracleTally
    bisection_rounds: int
    state: object = field(default=None, repr=False, compare=False)

    def as_dict(self) -> dict:
        return {
            "point": [float(v) for v in np.asarray(self.point)],
            "upper_bound_u": float(self.upper_bound_u),
            "lower_bound_l": float(self.lower_bound_l),
            "g_reference": float(self.g_reference),
            "epsilon_f": float(self.epsilon_f),
            "epsilon_g": float(self.epsilon_g),
            "tally": self.tally.as_dict(),
            "bisection_rounds": int(self.bisection_rounds),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SolutionCertificate":
        return cls(
            point=np.asarray(d["point"], dtype=float),
            upper_bound_u=float(d["upper_bound_u"]),
            lower_bound_l=float(d["lower_bound_l"]),
            g_reference=float(d["g_reference"]),
            epsilon_f=float(d["epsilon_f"]),
            epsilon_g=float(d["epsilon_g"]),
            tally=OracleTally.from_dict(d["tally"]),
            bisection_rounds=int(d["bisection_rounds"]),
        )


def evaluate_composite(
    fn: CompositeFunction, x: np.ndarray, tally: OracleTally | None = None
) -> float:
    """Evaluate smooth + nonsmooth parts at ``x``; counts one fn_eval.

    Returns ``+inf`` when ``x`` is outside the nonsmooth domain.  A
    non-finite *smooth* value signals broken inputs and raises.
    """
    x = np.asarray(x, dtype=float)
    smooth = float(fn.smooth_value(x))
    if not math.isfinite(smooth):
        raise NumericDomainError(f"smooth part is non-finite at x={x!r}")
    if tally is not None:
        tally.fn_evals += 1
    nonsmooth = float(fn.nonsmooth_value(x))
    return smooth + nonsmooth


def finite_difference_check(
    fn: CompositeFunction, x: np.ndarray, h: float
) -> float:
    """Max relative mismatch between the gradient and central differences.

    Per coordinate: ``|central_diff - grad_i| / (1 + |grad_i|)``.
    """
    if h <= 0:
        raise ValueError("step size h must be positive")
    x = np.asarray(x, dtype=float)
    grad = np.asarray(fn.smooth_gradient(x), dtype=float)
    worst = 0.0
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        diff = (float(fn.smooth_value(x + e)) - float(fn.smooth_value(x - e))) / (
            2.0 * h
        )
        err = abs(diff - grad[i]) / (1.0 + abs(grad[i]))
        worst = max(worst, err)
    return worst
