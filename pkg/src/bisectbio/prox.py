"""Proximal mappings and projections for the level-set subproblems.

Every routine here returns an exact Euclidean projection (up to the stated
tolerances).  Because the level-set functions are indicators of convex
sets, their proximal mappings coincide with projections and ignore the
prox scale argument.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernels

__all__ = [
    "BallSpec",
    "ElasticNetSpec",
    "ProxConvergenceError",
    "EmptyLevelSetError",
    "soft_threshold",
    "project_l2_ball",
    "project_l1_ball",
    "project_nonneg",
    "prox_nonneg_then_ball",
    "project_l1l2_intersection",
    "project_elasticnet_levelset",
    "make_level_set_prox",
    "LEVEL_SET_KINDS",
]

LEVEL_SET_KINDS = (
    "mnp-free",
    "mnp-nonneg",
    "mnp-l1ball",
    "lrp-l1ball",
    "ssp-elasticnet",
    "toy",
)


class ProxConvergenceError(RuntimeError):
    """A multiplier search did not reach its tolerance within budget."""

    def __init__(self, message: str, last_iterate: np.ndarray):
        super().__init__(message)
        self.last_iterate = last_iterate


class EmptyLevelSetError(ValueError):
    """The requested level set {f <= c} contains no points."""


@dataclass(frozen=True)
class BallSpec:
    radius: float
    norm_kind: str = "l2"

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.norm_kind not in ("l1", "l2"):
            raise ValueError("norm_kind must be 'l1' or 'l2'")


@dataclass(frozen=True)
class ElasticNetSpec:
    """Level set {x : ||x||_1 + (alpha/2) ||x||^2 <= level}."""

    alpha: float
    level: float

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.level <= 0:
            raise ValueError("level must be positive")


def _as_vector(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.ndim != 1:
        raise ValueError("expected a 1-d real vector")
    return y


def soft_threshold(y, t: float) -> np.ndarray:
    y = _as_vector(y)
    return kernels.get_kernel("soft_threshold")(y, float(t))


def project_l2_ball(y, r: float) -> np.ndarray:
    """Radial projection onto {||x||_2 <= r}."""
    if r <= 0:
        raise ValueError("radius must be positive")
    y = _as_vector(y)
    nrm = float(np.linalg.norm(y))
    if nrm <= r:
        return y.copy()
    return (r / nrm) * y


def project_l1_ball(y, lam: float) -> np.ndarray:
    """Euclidean projection onto {||x||_1 <= lam}.

    Sort-based exact threshold search: shrink every coordinate toward zero
    by the unique theta >= 0 that makes the result's l1 norm equal lam
    (or return y when already inside).
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    y = _as_vector(y)
    return kernels.get_kernel("l1_ball")(y, float(lam))


def project_nonneg(y) -> np.ndarray:
    return np.maximum(_as_vector(y), 0.0)


def prox_nonneg_then_ball(y, c: float) -> np.ndarray:
    """Prox of the indicator of {x >= 0, ||x||^2 / 2 <= c}.

    Composite closed form: clip to the nonnegative orthant, then scale by
    sqrt(2c) / max(||clip||, sqrt(2c)).
    """
    if c < 0:
        raise EmptyLevelSetError("level c must be nonnegative")
    y = _as_vector(y)
    p = np.maximum(y, 0.0)
    r = float(np.sqrt(2.0 * c))
    nrm = float(np.linalg.norm(p))
    if r == 0.0 or nrm == 0.0:
        return np.zeros_like(y) if r == 0.0 else p
    return (r / max(nrm, r)) * p


def project_l1l2_intersection(y, lam: float, rho: float) -> np.ndarray:
    """Euclidean projection onto {||x||_1 <= lam} intersect {||x||_2 <= rho}.

    Two-phase scheme: if a single-constraint projection already satisfies
    the other constraint it is the answer; otherwise both constraints are
    active and the l2 multiplier can be eliminated in closed form, leaving
    a scalar root-finding problem on the l1 multiplier.
    """
    if lam <= 0 or rho <= 0:
        raise ValueError("lam and rho must be positive")
    y = _as_vector(y)
    x, status = kernels.get_kernel("l1l2_ball")(
        y, float(lam), float(rho), kernels.CONSTRAINT_TOL, kernels.MAX_HALVINGS
    )
    if status != 0:
        raise ProxConvergenceError(
            "l1/l2 intersection multiplier search did not converge", x
        )
    return x


def project_elasticnet_levelset(y, spec: ElasticNetSpec) -> np.ndarray:
    """Euclidean projection onto {||x||_1 + (alpha/2)||x||^2 <= level}.

    Scalar bisection on the Lagrange multiplier mu; the inner step is the
    closed-form scaled soft-threshold x = soft(y, mu) / (1 + mu * alpha).
    Terminates when the constraint residual drops below 1e-10 or after 200
    halvings (the bracket is then at machine precision).
    """
    y = _as_vector(y)
    x, status = kernels.get_kernel("elasticnet_levelset")(
        y,
        float(spec.alpha),
        float(spec.level),
        kernels.CONSTRAINT_TOL,
        kernels.MAX_HALVINGS,
    )
    if status != 0:
        raise ProxConvergenceError(
            "elastic-net level-set multiplier search did not converge", x
        )
    return x


def _zeros_prox(y, scale: float) -> np.ndarray:
    return np.zeros_like(np.asarray(y, dtype=float))


def make_level_set_prox(
    problem_kind: str, params: dict | None, c: float
) -> Callable[[np.ndarray, float], np.ndarray]:
    """Prox of the subproblem nonsmooth part for the given problem family.

    Dispatches on the shape of the upper objective and the lower-level
    constraint set:

    * ``mnp-free``      -- l2 ball of radius sqrt(2c);
    * ``mnp-nonneg``    -- nonnegative clip then l2-ball scaling;
    * ``mnp-l1ball`` / ``lrp-l1ball`` -- l1 ball (radius ``params['lam']``)
      intersected with the l2 ball of radius sqrt(2c);
    * ``ssp-elasticnet`` -- elastic-net level set at ``c``
      (weight ``params['alpha']``);
    * ``toy``           -- l1 ball of radius ``c``.

    A degenerate level (``c == 0`` for the norm-shaped uppers) collapses the
    set to the origin; negative levels are empty and rejected.
    """
    kind = problem_kind.lower()
    params = params or {}
    if kind not in LEVEL_SET_KINDS:
        raise ValueError(f"unknown problem kind {problem_kind!r}")
    if c < 0:
        raise EmptyLevelSetError(f"level set is empty for c={c} < 0")

    if kind == "mnp-free":
        if c == 0:
            return _zeros_prox
        r = float(np.sqrt(2.0 * c))
        return lambda y, scale: project_l2_ball(y, r)
    if kind == "mnp-nonneg":
        if c == 0:
            return _zeros_prox
        return lambda y, scale: prox_nonneg_then_ball(y, c)
    if kind in ("mnp-l1ball", "lrp-l1ball"):
        lam = float(params["lam"])
        if c == 0:
            return _zeros_prox
        rho = float(np.sqrt(2.0 * c))
        return lambda y, scale: project_l1l2_intersection(y, lam, rho)
    if kind == "ssp-elasticnet":
        alpha = float(params["alpha"])
        if c == 0:
            return _zeros_prox
        spec = ElasticNetSpec(alpha=alpha, level=float(c))
        return lambda y, scale: project_elasticnet_levelset(y, spec)
    # toy: upper objective is the plain l1 norm
    if c == 0:
        return _zeros_prox
    return lambda y, scale: project_l1_ball(y, float(c))
