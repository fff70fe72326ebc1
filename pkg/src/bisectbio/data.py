"""Dataset ingestion, preprocessing, and synthetic problem generators."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import TextIO

import numpy as np

__all__ = [
    "DesignMatrix",
    "PreprocessSpec",
    "ParseError",
    "parse_libsvm",
    "serialize_libsvm",
    "parse_csv_dense",
    "preprocess",
    "lipschitz_lsq",
    "lipschitz_logistic",
    "synth_mnp",
    "splitmix64_stream",
]


class ParseError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass
class DesignMatrix:
    """Feature matrix plus labels; dense array or sparse row-major triples."""

    m: int
    n: int
    labels: np.ndarray
    dense: np.ndarray | None = None
    rows: np.ndarray | None = None
    cols: np.ndarray | None = None
    vals: np.ndarray | None = None

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=float)
        if self.labels.shape != (self.m,):
            raise ValueError("labels must have length m")
        if not np.all(np.isfinite(self.labels)):
            raise ValueError("labels must be finite")
        if self.dense is not None:
            self.dense = np.asarray(self.dense, dtype=float)
            if self.dense.shape != (self.m, self.n):
                raise ValueError("dense matrix shape mismatch")
        else:
            self.rows = np.asarray(self.rows, dtype=np.int64)
            self.cols = np.asarray(self.cols, dtype=np.int64)
            self.vals = np.asarray(self.vals, dtype=float)
            if not (self.rows.shape == self.cols.shape == self.vals.shape):
                raise ValueError("sparse triples must have equal lengths")
            if self.rows.size and (self.cols.max() >= self.n or self.cols.min() < 0):
                raise ValueError("sparse column index out of range")
            if self.rows.size and (self.rows.max() >= self.m or self.rows.min() < 0):
                raise ValueError("sparse row index out of range")

    @property
    def is_sparse(self) -> bool:
        return self.dense is None

    def to_dense(self) -> np.ndarray:
        if self.dense is not None:
            return self.dense
        out = np.zeros((self.m, self.n))
        out[self.rows, self.cols] = self.vals
        return out

    def matvec(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if self.dense is not None:
            return self.dense @ v
        contrib = self.vals * v[self.cols]
        return np.bincount(self.rows, weights=contrib, minlength=self.m)

    def rmatvec(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if self.dense is not None:
            return self.dense.T @ u
        contrib = self.vals * u[self.rows]
        return np.bincount(self.cols, weights=contrib, minlength=self.n)


@dataclass
class PreprocessSpec:
    minmax_scale: bool = False
    add_intercept: bool = False
    colinear_copies: int = 0
    subsample: tuple[int, int] | None = None  # (count, seed)

    def __post_init__(self):
        if self.colinear_copies < 0:
            raise ValueError("colinear_copies must be nonnegative")


def _open_source(source) -> TextIO:
    if isinstance(source, str):
        return open(source, "r")
    return source


def parse_libsvm(source) -> DesignMatrix:
    """Parse LIBSVM sparse text: ``label idx:val idx:val ...``, 1-based,
    strictly increasing indices per line.  Accepts a path or a text stream.
    """
    stream = _open_source(source)
    close = isinstance(source, str)
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    labels: list[float] = []
    n = 0
    try:
        for lineno, raw in enumerate(stream, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split()
            try:
                label = float(parts[0])
            except ValueError:
                raise ParseError(f"non-numeric label {parts[0]!r}", lineno) from None
            row = len(labels)
            prev_idx = 0
            for token in parts[1:]:
                idx_s, _, val_s = token.partition(":")
                try:
                    idx = int(idx_s)
                    val = float(val_s)
                except ValueError:
                    raise ParseError(f"malformed feature token {token!r}", lineno) from None
                if idx <= prev_idx:
                    raise ParseError(
                        f"feature index {idx} not strictly increasing", lineno
                    )
                prev_idx = idx
                rows.append(row)
                cols.append(idx - 1)
                vals.append(val)
                n = max(n, idx)
            labels.append(label)
    finally:
        if close:
            stream.close()
    m = len(labels)
    return DesignMatrix(
        m=m,
        n=n,
        labels=np.asarray(labels, dtype=float),
        rows=np.asarray(rows, dtype=np.int64),
        cols=np.asarray(cols, dtype=np.int64),
        vals=np.asarray(vals, dtype=float),
    )


def serialize_libsvm(dm: DesignMatrix) -> str:
    """Canonical LIBSVM text (1-based indices, shortest float repr)."""
    per_row: list[list[tuple[int, float]]] = [[] for _ in range(dm.m)]
    if dm.is_sparse:
        for r, c, v in zip(dm.rows, dm.cols, dm.vals):
            per_row[int(r)].append((int(c), float(v)))
    else:
        for r in range(dm.m):
            for c in range(dm.n):
                v = dm.dense[r, c]
                if v != 0.0:
                    per_row[r].append((c, float(v)))
    lines = []
    for r in range(dm.m):
        toks = [repr(float(dm.labels[r]))]
        for c, v in sorted(per_row[r]):
            toks.append(f"{c + 1}:{v!r}")
        lines.append(" ".join(toks))
    return "\n".join(lines) + ("\n" if lines else "")


def parse_csv_dense(source, label_col: int = 0) -> DesignMatrix:
    """Parse a rectangular numeric CSV, extracting one column as labels."""
    stream = _open_source(source)
    close = isinstance(source, str)
    data: list[list[float]] = []
    width = None
    try:
        for lineno, raw in enumerate(stream, start=1):
            line = raw.strip()
            if not line:
                continue
            cells = line.split(",")
            if width is None:
                width = len(cells)
            elif len(cells) != width:
                raise ParseError(
                    f"ragged row: {len(cells)} cells, expected {width}", lineno
                )
            try:
                data.append([float(c) for c in cells])
            except ValueError:
                raise ParseError("non-numeric cell", lineno) from None
    finally:
        if close:
            stream.close()
    if not data:
        return DesignMatrix(m=0, n=0, labels=np.zeros(0), dense=np.zeros((0, 0)))
    arr = np.asarray(data)
    if not 0 <= label_col < arr.shape[1]:
        raise ValueError("label_col out of range")
    labels = arr[:, label_col]
    features = np.delete(arr, label_col, axis=1)
    return DesignMatrix(m=arr.shape[0], n=features.shape[1], labels=labels, dense=features)


# splitmix64: documented, cross-language PRNG for subsampling.  State update
# s += 0x9E3779B97F4A7C15; output z = s; z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9;
# z = (z ^ (z >> 27)) * 0x94D049BB133111EB; return z ^ (z >> 31).
_SM64_GAMMA = 0x9E3779B97F4A7C15
_SM64_M1 = 0xBF58476D1CE4E5B9
_SM64_M2 = 0x94D049BB133111EB
_U64 = (1 << 64) - 1


def splitmix64_stream(seed: int):
    """Infinite generator of 64-bit outputs from the splitmix64 recurrence."""
    s = seed & _U64
    while True:
        s = (s + _SM64_GAMMA) & _U64
        z = s
        z = ((z ^ (z >> 30)) * _SM64_M1) & _U64
        z = ((z ^ (z >> 27)) * _SM64_M2) & _U64
        yield z ^ (z >> 31)


def _subsample_indices(m: int, count: int, seed: int) -> np.ndarray:
    # Partial Fisher-Yates driven by splitmix64; rejection-free modulo draw
    # is fine here (bias ~ m / 2^64).
    idx = list(range(m))
    stream = splitmix64_stream(seed)
    for i in range(count):
        j = i + next(stream) % (m - i)
        idx[i], idx[j] = idx[j], idx[i]
    return np.asarray(sorted(idx[:count]), dtype=np.int64)


def preprocess(dm: DesignMatrix, spec: PreprocessSpec) -> DesignMatrix:
    """Row subsample, per-column min-max scaling, intercept, colinear copies.

    Applied in that order, so scaling statistics come from the sampled rows.
    Constant columns map to zero under min-max scaling.  The intercept is an
    appended all-ones column; colinear copies duplicate the first k columns
    (in order) after it.
    """
    if spec.colinear_copies > dm.n:
        raise ValueError("colinear_copies cannot exceed the column count")
    a = dm.to_dense()
    labels = dm.labels
    if spec.subsample is not None:
        count, seed = spec.subsample
        if count > dm.m:
            raise ValueError("subsample count exceeds the number of rows")
        keep = _subsample_indices(dm.m, count, seed)
        a = a[keep]
        labels = labels[keep]
    if spec.minmax_scale and a.size:
        lo = a.min(axis=0)
        hi = a.max(axis=0)
        span = hi - lo
        scaled = np.zeros_like(a)
        nz = span > 0
        scaled[:, nz] = (a[:, nz] - lo[nz]) / span[nz]
        a = scaled
    blocks = [a]
    if spec.add_intercept:
        blocks.append(np.ones((a.shape[0], 1)))
    if spec.colinear_copies:
        blocks.append(a[:, : spec.colinear_copies])
    out = np.hstack(blocks) if len(blocks) > 1 else a
    return DesignMatrix(m=out.shape[0], n=out.shape[1], labels=labels, dense=out)


def lipschitz_lsq(a: DesignMatrix | np.ndarray, rel_tol: float = 1e-8) -> float:
    """Largest eigenvalue of A^T A by power iteration (relative tolerance)."""
    dm = a if isinstance(a, DesignMatrix) else None
    arr = None if dm is not None else np.atleast_2d(np.asarray(a, dtype=float))
    n = dm.n if dm is not None else arr.shape[1]
    if n == 0:
        return 0.0

    def gram(v):
        if dm is not None:
            return dm.rmatvec(dm.matvec(v))
        return arr.T @ (arr @ v)

    rng = np.random.default_rng(0)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(10_000):
        w = gram(v)
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            warnings.warn("power iteration stagnated on a zero matrix", RuntimeWarning)
            return 0.0
        v = w / nw
        lam_new = float(v @ gram(v))
        if abs(lam_new - lam) <= rel_tol * max(abs(lam_new), 1e-300):
            return lam_new
        lam = lam_new
    return lam


def lipschitz_logistic(a: DesignMatrix | np.ndarray) -> float:
    """Gradient Lipschitz constant of the mean logistic loss: lam_max/(4m)."""
    m = a.m if isinstance(a, DesignMatrix) else np.atleast_2d(np.asarray(a)).shape[0]
    if m == 0:
        raise ValueError("matrix has no rows")
    return lipschitz_lsq(a) / (4.0 * m)


def synth_mnp(
    m: int, n: int, rank: int, seed: int
) -> tuple[DesignMatrix, float, float]:
    """Rank-deficient consistent least-squares instance with known optima.

    Returns the design matrix (b stored as labels), the squared-half-norm of
    the least-norm solution, and the lower-level optimum 0 (the system is
    consistent by construction).  Requires rank < n so the solution set is an
    affine subspace, not a point.  A is spectrally normalized so conditioning
    does not blow up iteration budgets; this leaves the least-norm solution,
    hence both optima, unchanged up to the same rescaling of b.
    """
    if rank >= n:
        raise ValueError("rank must be < n so the lower level has many solutions")
    if rank > m or rank < 1:
        raise ValueError("rank must lie in [1, min(m, n - 1)]")
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((m, rank))
    v = rng.standard_normal((rank, n))
    a = u @ v
    a *= 2.0 / np.linalg.norm(a, 2)
    x_seed = rng.standard_normal(n)
    x_seed *= 1.5 / np.linalg.norm(x_seed)
    b = a @ x_seed
    # least-norm solution via the Gram system on the row space:
    # x = A^T w with (A A^T) w = b solved in the least-squares sense
    w = np.linalg.lstsq(a @ a.T, b, rcond=None)[0]
    x_ln = a.T @ w
    p_star = 0.5 * float(x_ln @ x_ln)
    dm = DesignMatrix(m=m, n=n, labels=b, dense=a)
    return dm, p_star, 0.0
