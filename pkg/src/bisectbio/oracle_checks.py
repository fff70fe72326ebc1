"""Brute-force projection oracles and the oracle-equivalence suite.

These oracles deliberately avoid the production projection code paths
(no sorting tricks, no eliminated multipliers): they search multiplier
space on dense grids with iterative zoom-and-recenter refinement, so
agreement with the implementations is meaningful evidence of correctness.
Dimension is expected to be small (n <= 5); cost grows with the grid, not
with n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import prox

__all__ = [
    "oracle_l1_ball",
    "oracle_l1l2_intersection",
    "oracle_elasticnet_levelset",
    "nonneg_ball_reference",
    "FamilyResult",
    "run_prox_suite",
]

_GRID = 241
_ZOOMS = 10


def _soft(a: np.ndarray, t: float) -> np.ndarray:
    return np.maximum(a - t, 0.0)


def oracle_l1_ball(y: np.ndarray, lam: float) -> np.ndarray:
    """Scalar threshold located by grid scan plus bracket zooming."""
    y = np.asarray(y, dtype=float)
    a = np.abs(y)
    if a.sum() <= lam:
        return y.copy()
    lo, hi = 0.0, float(a.max())
    for _ in range(_ZOOMS):
        grid = np.linspace(lo, hi, _GRID)
        vals = _soft(a[None, :], grid[:, None]).sum(axis=1)
        idx = int(np.argmax(vals <= lam))
        lo = grid[max(idx - 1, 0)]
        hi = grid[idx]
    return np.sign(y) * _soft(a, hi)


def oracle_l1l2_intersection(y: np.ndarray, lam: float, rho: float) -> np.ndarray:
    """Two-dimensional multiplier grid search with zoom-and-recenter.

    Candidate points have the stationarity shape
    x(mu, nu) = sign(y) * max(|y| - mu, 0) / (1 + nu).  Their constraint
    norms and squared distance to y reduce to scalars per mu, so each pass
    evaluates the full mu x nu grid with broadcasting.  The window recenters
    on the best feasible point found so far and shrinks every pass, whether
    or not the pass improved it.
    """
    y = np.asarray(y, dtype=float)
    a = np.abs(y)
    if a.sum() <= lam and np.linalg.norm(y) <= rho:
        return y.copy()
    candidates = []
    xl1 = oracle_l1_ball(y, lam)
    if np.linalg.norm(xl1) <= rho:
        candidates.append(xl1)
    nrm = float(np.linalg.norm(y))
    if nrm > rho:
        xl2 = y * (rho / nrm)
        if np.abs(xl2).sum() <= lam:
            candidates.append(xl2)

    a_sq = float(a @ a)
    mu_rad = float(a.max())
    nu_rad = max(nrm / rho, 1.0)
    center = (0.5 * mu_rad, 0.5 * nu_rad)
    half = (0.5 * mu_rad, 0.5 * nu_rad)
    best_val = np.inf
    best_mu_nu = None
    grid = 161
    for _ in range(_ZOOMS):
        mus = np.linspace(max(0.0, center[0] - half[0]), center[0] + half[0], grid)
        nus = np.linspace(max(0.0, center[1] - half[1]), center[1] + half[1], grid)
        w = _soft(a[None, :], mus[:, None])
        w_l1 = w.sum(axis=1)
        w_sq = (w * w).sum(axis=1)
        w_dot = w @ a
        scale = 1.0 / (1.0 + nus)
        # feasibility and distance for every (mu, nu) pair via broadcasting
        l1 = w_l1[:, None] * scale[None, :]
        l2 = np.sqrt(w_sq)[:, None] * scale[None, :]
        d2 = (
            w_sq[:, None] * scale[None, :] ** 2
            - 2.0 * w_dot[:, None] * scale[None, :]
            + a_sq
        )
        feas = (l1 <= lam) & (l2 <= rho)
        d2 = np.where(feas, d2, np.inf)
        i, j = np.unravel_index(int(np.argmin(d2)), d2.shape)
        if d2[i, j] < best_val:
            best_val = float(d2[i, j])
            best_mu_nu = (float(mus[i]), float(nus[j]))
        if best_mu_nu is not None:
            center = best_mu_nu
        half = (half[0] / 8.0, half[1] / 8.0)
    if best_mu_nu is not None:
        mu, nu = best_mu_nu
        candidates.append(np.sign(y) * _soft(a, mu) / (1.0 + nu))
    if not candidates:
        return np.zeros_like(y)
    return min(candidates, key=lambda x: float(np.sum((x - y) ** 2)))


def oracle_elasticnet_levelset(y: np.ndarray, alpha: float, level: float) -> np.ndarray:
    """Dense multiplier grid with zooming; keeps the feasible bracket end."""
    y = np.asarray(y, dtype=float)
    a = np.abs(y)

    def point(mu: float) -> np.ndarray:
        return np.sign(y) * _soft(a, mu) / (1.0 + mu * alpha)

    def constraint(x: np.ndarray) -> float:
        return float(np.abs(x).sum() + 0.5 * alpha * np.sum(x * x))

    if constraint(y) <= level:
        return y.copy()
    lo, hi = 0.0, float(a.max())
    for _ in range(_ZOOMS):
        grid = np.linspace(lo, hi, _GRID)
        w = _soft(a[None, :], grid[:, None]) / (1.0 + grid[:, None] * alpha)
        vals = np.abs(w).sum(axis=1) + 0.5 * alpha * (w * w).sum(axis=1)
        idx = int(np.argmax(vals <= level))
        lo = grid[max(idx - 1, 0)]
        hi = grid[idx]
    return point(hi)


def nonneg_ball_reference(y: np.ndarray, c: float) -> np.ndarray:
    """Independent transcription of the clip-then-scale closed form."""
    y = np.asarray(y, dtype=float)
    clipped = np.where(y > 0.0, y, 0.0)
    radius = (2.0 * c) ** 0.5
    norm = float(np.sqrt(np.sum(clipped**2)))
    denom = norm if norm > radius else radius
    if denom == 0.0:
        return np.zeros_like(y)
    return (radius / denom) * clipped


@dataclass
class FamilyResult:
    family: str
    instances: int
    max_objective_gap: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return self.max_objective_gap <= self.tolerance


def _d2(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.sum((x - y) ** 2))


def run_prox_suite(instances: int = 100, seed: int = 0, max_dim: int = 5) -> list[FamilyResult]:
    """Compare every projection family against its brute-force oracle.

    Reports the worst absolute deviation in squared-distance objective per
    family (closed-form family compared directly, at 1e-12).
    """
    rng = np.random.default_rng(seed)
    results = []

    gap = 0.0
    for _ in range(instances):
        n = int(rng.integers(1, max_dim + 1))
        y = rng.normal(0.0, 1.5, size=n)
        lam = float(rng.uniform(0.3, 2.5))
        x = prox.project_l1_ball(y, lam)
        xo = oracle_l1_ball(y, lam)
        gap = max(gap, abs(_d2(x, y) - _d2(xo, y)))
    results.append(FamilyResult("l1-ball", instances, gap, 1e-6))

    gap = 0.0
    for _ in range(instances):
        n = int(rng.integers(1, max_dim + 1))
        y = rng.normal(0.0, 1.5, size=n)
        lam = float(rng.uniform(0.8, 3.0))
        rho = float(rng.uniform(0.4, 2.0))
        x = prox.project_l1l2_intersection(y, lam, rho)
        xo = oracle_l1l2_intersection(y, lam, rho)
        gap = max(gap, abs(_d2(x, y) - _d2(xo, y)))
    results.append(FamilyResult("l1/l2-intersection", instances, gap, 1e-6))

    gap = 0.0
    for _ in range(instances):
        n = int(rng.integers(1, max_dim + 1))
        y = rng.normal(0.0, 1.5, size=n)
        alpha = float(rng.uniform(0.01, 1.0))
        level = float(rng.uniform(0.3, 2.0))
        spec = prox.ElasticNetSpec(alpha=alpha, level=level)
        x = prox.project_elasticnet_levelset(y, spec)
        xo = oracle_elasticnet_levelset(y, alpha, level)
        gap = max(gap, abs(_d2(x, y) - _d2(xo, y)))
    results.append(FamilyResult("elasticnet-levelset", instances, gap, 1e-6))

    gap = 0.0
    for _ in range(instances):
        n = int(rng.integers(1, max_dim + 1))
        y = rng.normal(0.0, 1.5, size=n)
        c = float(rng.uniform(0.05, 2.0))
        x = prox.prox_nonneg_then_ball(y, c)
        xr = nonneg_ball_reference(y, c)
        gap = max(gap, float(np.max(np.abs(x - xr))) if n else 0.0)
    results.append(FamilyResult("nonneg-ball (closed form)", instances, gap, 1e-12))

    return results
