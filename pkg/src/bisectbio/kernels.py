"""Hot numeric kernels with a numba backend and a pure-numpy fallback.

The projection routines here sit inside FISTA inner loops, so they run
thousands of times per solve.  Each kernel has two implementations:

* loop-style functions compiled with ``numba.njit``;
* vectorized numpy equivalents.

The backend is chosen once at import from the environment variable
``BISECTBIO_BACKEND``:

* unset or ``auto`` -- numba when importable, numpy otherwise;
* ``numba`` -- require numba (falls back to numpy with a warning);
* ``numpy`` -- force the pure-numpy path.

``use_backend()`` re-selects at runtime (used by tests and the kernel
benchmark under ``benchmarks/``).

Iterative kernels return ``(x, status)`` with status 0 on success; callers
in :mod:`bisectbio.prox` turn nonzero statuses into exceptions.
"""

from __future__ import annotations

import os
import warnings

import numpy as np

__all__ = [
    "active_backend",
    "available_backends",
    "use_backend",
    "get_kernel",
    "get_impls",
]

_ENV_VAR = "BISECTBIO_BACKEND"

# Bisection budget for the multiplier searches.  200 halvings shrink a float
# bracket far below machine precision, so this is a hard cap, not a knob.
MAX_HALVINGS = 200
CONSTRAINT_TOL = 1e-10


# ---------------------------------------------------------------------------
# numpy implementations (vectorized)
# ---------------------------------------------------------------------------


def _soft_threshold_np(v, t):
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def _l1_ball_np(y, radius):
    a = np.abs(y)
    if a.sum() <= radius:
        return y.astype(np.float64).copy()
    u = np.sort(a, kind="stable")[::-1]
    css = np.cumsum(u)
    ks = np.arange(1, u.size + 1)
    thetas = (css - radius) / ks
    k = np.nonzero(u > thetas)[0][-1]
    theta = thetas[k]
    return np.sign(y) * np.maximum(a - theta, 0.0)


def _l1l2_np(y, lam, rho, tol, max_halvings):
    a = np.abs(y)
    l1 = float(a.sum())
    l2 = float(np.sqrt((y * y).sum()))
    if l1 <= lam and l2 <= rho:
        return y.astype(np.float64).copy(), 0
    x = _l1_ball_np(y, lam)
    if float(np.sqrt((x * x).sum())) <= rho:
        return x, 0
    if l2 > rho:
        x = y * (rho / l2)
        if float(np.abs(x).sum()) <= lam:
            return x, 0
    # Both constraints active.  With w(mu) = soft(|y|, mu), the scaled point
    # rho * w / ||w|| meets the quadratic constraint exactly, and its l1 norm
    # rho * ||w||_1 / ||w||_2 is non-increasing in mu (Cauchy-Schwarz), so a
    # scalar bisection on mu finds the l1 multiplier.
    lo, hi = 0.0, float(a.max())
    for _ in range(max_halvings):
        mu = 0.5 * (lo + hi)
        w = np.maximum(a - mu, 0.0)
        s2 = float(np.sqrt((w * w).sum()))
        if s2 == 0.0:
            hi = mu
            continue
        resid = rho * float(w.sum()) / s2 - lam
        if abs(resid) <= tol:
            break
        if resid > 0.0:
            lo = mu
        else:
            hi = mu
    mu = 0.5 * (lo + hi)
    w = np.maximum(a - mu, 0.0)
    s2 = float(np.sqrt((w * w).sum()))
    if s2 == 0.0:
        return np.zeros(y.size, dtype=np.float64), 1
    x = np.sign(y) * (rho / s2) * w
    status = 0 if abs(float(np.abs(x).sum()) - lam) <= 1e-8 * max(1.0, lam) else 1
    return x, status


def _elasticnet_np(y, alpha, c, tol, max_halvings):
    a = np.abs(y)

    def constraint(x):
        return float(np.abs(x).sum() + 0.5 * alpha * (x * x).sum())

    if constraint(y) <= c:
        return y.astype(np.float64).copy(), 0
    # x(mu) = soft(y, mu) / (1 + mu * alpha); the constraint value is
    # continuous and strictly decreasing in mu until x vanishes, so bisect.
    lo, hi = 0.0, float(a.max())
    for _ in range(max_halvings):
        mu = 0.5 * (lo + hi)
        x = _soft_threshold_np(y, mu) / (1.0 + mu * alpha)
        resid = constraint(x) - c
        if abs(resid) <= tol:
            return x, 0
        if resid > 0.0:
            lo = mu
        else:
            hi = mu
    x = _soft_threshold_np(y, hi) / (1.0 + hi * alpha)
    status = 0 if constraint(x) <= c + tol else 1
    return x, status


# ---------------------------------------------------------------------------
# loop implementations (compiled by the numba backend)
# ---------------------------------------------------------------------------


def _soft_threshold_loops(v, t):
    out = np.empty_like(v)
    for i in range(v.size):
        a = abs(v[i]) - t
        if a < 0.0:
            a = 0.0
        out[i] = a if v[i] >= 0.0 else -a
    return out


def _l1_ball_loops(y, radius):
    n = y.size
    a = np.abs(y)
    total = 0.0
    for i in range(n):
        total += a[i]
    if total <= radius:
        return y.copy()
    u = np.sort(a)[::-1]
    css = 0.0
    theta = 0.0
    for i in range(n):
        css += u[i]
        t = (css - radius) / (i + 1.0)
        if u[i] > t:
            theta = t
        else:
            break
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        w = a[i] - theta
        if w < 0.0:
            w = 0.0
        out[i] = w if y[i] >= 0.0 else -w
    return out


def _make_l1l2_loops(l1_ball_fn):
    # Factory so the same body can close over either the plain or the jitted
    # l1-ball routine.

    def _l1l2(y, lam, rho, tol, max_halvings):
        n = y.size
        a = np.abs(y)
        l1 = 0.0
        sq = 0.0
        amax = 0.0
        for i in range(n):
            l1 += a[i]
            sq += y[i] * y[i]
            if a[i] > amax:
                amax = a[i]
        l2 = np.sqrt(sq)
        if l1 <= lam and l2 <= rho:
            return y.copy(), 0
        x = l1_ball_fn(y, lam)
        xsq = 0.0
        for i in range(n):
            xsq += x[i] * x[i]
        if np.sqrt(xsq) <= rho:
            return x, 0
        if l2 > rho:
            scale = rho / l2
            x = y * scale
            xl1 = 0.0
            for i in range(n):
                xl1 += abs(x[i])
            if xl1 <= lam:
                return x, 0
        lo = 0.0
        hi = amax
        for _ in range(max_halvings):
            mu = 0.5 * (lo + hi)
            s1 = 0.0
            s2sq = 0.0
            for i in range(n):
                w = a[i] - mu
                if w > 0.0:
                    s1 += w
                    s2sq += w * w
            s2 = np.sqrt(s2sq)
            if s2 == 0.0:
                hi = mu
                continue
            resid = rho * s1 / s2 - lam
            if abs(resid) <= tol:
                break
            if resid > 0.0:
                lo = mu
            else:
                hi = mu
        mu = 0.5 * (lo + hi)
        out = np.empty(n, dtype=np.float64)
        s2sq = 0.0
        for i in range(n):
            w = a[i] - mu
            if w < 0.0:
                w = 0.0
            out[i] = w
            s2sq += w * w
        s2 = np.sqrt(s2sq)
        if s2 == 0.0:
            return np.zeros(n, dtype=np.float64), 1
        scale = rho / s2
        xl1 = 0.0
        for i in range(n):
            w = out[i] * scale
            out[i] = w if y[i] >= 0.0 else -w
            xl1 += abs(out[i])
        status = 0 if abs(xl1 - lam) <= 1e-8 * max(1.0, lam) else 1
        return out, status

    return _l1l2


def _elasticnet_loops(y, alpha, c, tol, max_halvings):
    n = y.size
    amax = 0.0
    val = 0.0
    for i in range(n):
        ai = abs(y[i])
        val += ai + 0.5 * alpha * y[i] * y[i]
        if ai > amax:
            amax = ai
    if val <= c:
        return y.copy(), 0
    lo = 0.0
    hi = amax
    mu = hi
    hit = False
    for _ in range(max_halvings):
        mu = 0.5 * (lo + hi)
        denom = 1.0 + mu * alpha
        resid = -c
        for i in range(n):
            w = abs(y[i]) - mu
            if w > 0.0:
                w /= denom
                resid += w + 0.5 * alpha * w * w
        if abs(resid) <= tol:
            hit = True
            break
        if resid > 0.0:
            lo = mu
        else:
            hi = mu
    if not hit:
        mu = hi
    denom = 1.0 + mu * alpha
    out = np.empty(n, dtype=np.float64)
    val = 0.0
    for i in range(n):
        w = abs(y[i]) - mu
        if w < 0.0:
            w = 0.0
        w /= denom
        out[i] = w if y[i] >= 0.0 else -w
        val += w + 0.5 * alpha * w * w
    status = 0 if val <= c + tol else 1
    return out, status


_KERNEL_NAMES = ("soft_threshold", "l1_ball", "l1l2_ball", "elasticnet_levelset")

_NUMPY_IMPLS = {
    "soft_threshold": _soft_threshold_np,
    "l1_ball": _l1_ball_np,
    "l1l2_ball": _l1l2_np,
    "elasticnet_levelset": _elasticnet_np,
}


def _build_numba_impls():
    from numba import njit

    soft = njit(cache=True)(_soft_threshold_loops)
    l1ball = njit(cache=True)(_l1_ball_loops)
    # closures over a dispatcher cannot be cached to disk
    l1l2 = njit(_make_l1l2_loops(l1ball))
    elastic = njit(cache=True)(_elasticnet_loops)
    return {
        "soft_threshold": soft,
        "l1_ball": l1ball,
        "l1l2_ball": l1l2,
        "elasticnet_levelset": elastic,
    }


_numba_impls = None
_numba_error = None


def _numba_available() -> bool:
    global _numba_impls, _numba_error
    if _numba_impls is not None:
        return True
    if _numba_error is not None:
        return False
    try:
        _numba_impls = _build_numba_impls()
        return True
    except Exception as exc:  # pragma: no cover - depends on install
        _numba_error = exc
        return False


def available_backends() -> list[str]:
    out = ["numpy"]
    if _numba_available():
        out.insert(0, "numba")
    return out


_active = {"name": None, "impls": None}


def use_backend(name: str) -> str:
    """Select the kernel backend; returns the backend actually in effect."""
    name = name.lower()
    if name in ("auto", ""):
        name = "numba" if _numba_available() else "numpy"
    if name == "numba":
        if not _numba_available():
            warnings.warn(
                f"numba backend unavailable ({_numba_error}); using numpy",
                RuntimeWarning,
            )
            name = "numpy"
    elif name != "numpy":
        raise ValueError(f"unknown kernel backend {name!r}")
    _active["name"] = name
    _active["impls"] = _numba_impls if name == "numba" else _NUMPY_IMPLS
    return name


def active_backend() -> str:
    if _active["name"] is None:
        use_backend(os.environ.get(_ENV_VAR, "auto"))
    return _active["name"]


def get_kernel(name: str):
    if name not in _KERNEL_NAMES:
        raise KeyError(name)
    if _active["impls"] is None:
        active_backend()
    return _active["impls"][name]


def get_impls(backend: str) -> dict:
    """All kernels for one backend (benchmark / equivalence-test hook)."""
    if backend == "numpy":
        return dict(_NUMPY_IMPLS)
    if backend == "numba":
        if not _numba_available():
            raise RuntimeError(f"numba backend unavailable: {_numba_error}")
        return dict(_numba_impls)
    raise ValueError(f"unknown kernel backend {backend!r}")
