"""Histogram kernels: chi-square distance, RBF kernels, the mean-distance
gamma heuristic, and Gram-matrix construction shared by the regressor and
the classifier."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

RBF_CHI2 = "rbf_chi2"
RBF_EUCLIDEAN = "rbf_euclidean"
KERNEL_KINDS = (RBF_CHI2, RBF_EUCLIDEAN)


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus bandwidth. ``chi2_halved`` selects the 1/2-factor
    chi-square convention (the unhalved variant is exposed for ablation)."""

    kind: str
    gamma: float
    chi2_halved: bool = True

    def __post_init__(self) -> None:
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise ValueError(f"gamma must be a positive finite real, got {self.gamma}")


def _as_histogram(x, name: str = "histogram") -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    if np.any(v < 0):
        raise ValueError(f"{name} contains negative entries")
    return v


def _as_matrix(x, name: str, require_nonnegative: bool) -> np.ndarray:
    m = np.asarray(x, dtype=np.float64)
    if m.ndim == 1:
        m = m[None, :]
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    if require_nonnegative and np.any(m < 0):
        raise ValueError(f"{name} contains negative entries")
    return m


def chi2_distance(a, b, halved: bool = True) -> float:
    """Chi-square histogram distance, sum over bins of (a-b)^2/(a+b).

    Bins with a+b == 0 contribute 0. ``halved`` applies the conventional
    1/2 factor.
    """
    a = _as_histogram(a, "a")
    b = _as_histogram(b, "b")
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    num = (a - b) ** 2
    den = a + b
    terms = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
    total = float(terms.sum())
    return 0.5 * total if halved else total


def squared_euclidean(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    d = a - b
    return float(d @ d)


def pair_distance(spec: KernelSpec, a, b) -> float:
    if spec.kind == RBF_CHI2:
        return chi2_distance(a, b, halved=spec.chi2_halved)
    return squared_euclidean(a, b)


def kernel_value(spec: KernelSpec, a, b) -> float:
    """exp(-gamma * D(a, b)); lies in (0, 1], equal to 1 iff D == 0."""
    return math.exp(-spec.gamma * pair_distance(spec, a, b))


def chi2_distance_matrix(rows: np.ndarray, cols: np.ndarray, halved: bool = True) -> np.ndarray:
    out = np.empty((rows.shape[0], cols.shape[0]), dtype=np.float64)
    for i in range(rows.shape[0]):
        num = (rows[i] - cols) ** 2
        den = rows[i] + cols
        terms = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
        out[i] = terms.sum(axis=1)
    return 0.5 * out if halved else out


def squared_euclidean_matrix(rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    rn = (rows * rows).sum(axis=1)
    cn = (cols * cols).sum(axis=1)
    d = rn[:, None] + cn[None, :] - 2.0 * (rows @ cols.T)
    return np.maximum(d, 0.0)


def distance_matrix(
    kind: str, rows, cols=None, chi2_halved: bool = True
) -> np.ndarray:
    """Pairwise base distances between two vector collections.

    With ``cols=None`` the matrix is computed against ``rows`` itself and
    explicitly symmetrized with an exactly-zero diagonal.
    """
    require_nonneg = kind == RBF_CHI2
    r = _as_matrix(rows, "rows", require_nonneg)
    symmetric = cols is None
    c = r if symmetric else _as_matrix(cols, "cols", require_nonneg)
    if r.shape[1] != c.shape[1]:
        raise ValueError(f"dimension mismatch: {r.shape[1]} vs {c.shape[1]}")
    if kind == RBF_CHI2:
        d = chi2_distance_matrix(r, c, halved=chi2_halved)
    elif kind == RBF_EUCLIDEAN:
        d = squared_euclidean_matrix(r, c)
    else:
        raise ValueError(f"unknown kernel kind {kind!r}")
    if symmetric:
        d = 0.5 * (d + d.T)
        np.fill_diagonal(d, 0.0)
    return d


def gram_matrix(spec: KernelSpec, rows, cols=None) -> np.ndarray:
    """Kernel matrix M[i][j] = kernel_value(rows[i], cols[j]).

    When ``cols`` is omitted the result is symmetric with unit diagonal.
    """
    d = distance_matrix(spec.kind, rows, cols, chi2_halved=spec.chi2_halved)
    return np.exp(-spec.gamma * d)


def heuristic_gamma(
    data,
    kind: str = RBF_CHI2,
    *,
    chi2_halved: bool = True,
    include_self_pairs: bool = False,
    max_pairs: int = 1_000_000,
    seed: int = 0,
) -> float:
    """Reciprocal of the mean pairwise base distance of ``data``.

    The mean is over ordered pairs i != j by default; including self pairs
    shrinks it by (n-1)/n and is exposed for comparison. When the ordered
    pair count exceeds ``max_pairs``, pairs are subsampled uniformly with
    a PCG64 generator seeded by ``seed``.
    """
    x = _as_matrix(data, "data", require_nonnegative=kind == RBF_CHI2)
    n = x.shape[0]
    if n < 2:
        raise ValueError("gamma heuristic needs at least 2 vectors")
    n_pairs = n * n if include_self_pairs else n * (n - 1)
    if n_pairs <= max_pairs:
        d = distance_matrix(kind, x, chi2_halved=chi2_halved)
        mean = float(d.sum()) / n_pairs  # diagonal is exactly zero
    else:
        rng = np.random.default_rng(seed)
        i = rng.integers(0, n, size=max_pairs)
        if include_self_pairs:
            j = rng.integers(0, n, size=max_pairs)
        else:
            j = (i + rng.integers(1, n, size=max_pairs)) % n
        total = 0.0
        chunk = 100_000
        for lo in range(0, max_pairs, chunk):
            a = x[i[lo : lo + chunk]]
            b = x[j[lo : lo + chunk]]
            if kind == RBF_CHI2:
                num = (a - b) ** 2
                den = a + b
                terms = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
                vals = terms.sum(axis=1)
                if chi2_halved:
                    vals *= 0.5
            else:
                diff = a - b
                vals = (diff * diff).sum(axis=1)
            total += float(vals.sum())
        mean = total / max_pairs
    if mean <= 0.0:
        raise ValueError("mean pairwise distance is zero (all vectors identical)")
    return 1.0 / mean
