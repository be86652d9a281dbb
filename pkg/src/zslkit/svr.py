"""Kernel epsilon-insensitive support vector regression, trained in the
dual and bundled per output dimension into a feature-to-embedding map."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import smo
from .kernels import KernelSpec, gram_matrix

_COEF_ZERO = 1e-12


@dataclass(frozen=True)
class SvrConfig:
    """Slack penalty, tube width, KKT stopping tolerance, iteration budget."""

    c: float = 2.0
    epsilon: float = 0.1
    tolerance: float = 1e-3
    max_passes: int = 1_000_000

    def __post_init__(self) -> None:
        if not (math.isfinite(self.c) and self.c > 0):
            raise ValueError(f"c must be positive, got {self.c}")
        if not (math.isfinite(self.epsilon) and self.epsilon >= 0):
            raise ValueError(f"epsilon must be non-negative, got {self.epsilon}")
        if not (math.isfinite(self.tolerance) and self.tolerance > 0):
            raise ValueError(f"tolerance must be positive, got {self.tolerance}")
        if self.max_passes < 1:
            raise ValueError("max_passes must be at least 1")


@dataclass
class SvrModel:
    """One trained single-output regressor.

    ``dual_coefficients`` holds alpha - alpha* at the support indices;
    prediction is sum_i coef_i K(x_i, x) + bias. ``dual_objective`` is the
    value of the maximized dual at the solution.
    """

    support_indices: np.ndarray
    dual_coefficients: np.ndarray
    bias: float
    kernel: KernelSpec | None
    n_train: int
    iterations: int
    dual_objective: float

    def coefficient_vector(self) -> np.ndarray:
        """Dense coefficients over all n_train training samples."""
        beta = np.zeros(self.n_train, dtype=np.float64)
        beta[self.support_indices] = self.dual_coefficients
        return beta


def _validate_gram(gram: np.ndarray) -> np.ndarray:
    g = np.asarray(gram, dtype=np.float64)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValueError(f"gram matrix must be square, got shape {g.shape}")
    if not np.allclose(g, g.T, atol=1e-8):
        raise ValueError("gram matrix is not symmetric")
    return g


def train_svr(
    gram: np.ndarray,
    targets: np.ndarray,
    config: SvrConfig,
    kernel: KernelSpec | None = None,
) -> SvrModel:
    """Solve the epsilon-SVR dual over a precomputed Gram matrix.

    The 2n-variable dual (one alpha and one alpha* per sample) is run
    through the decomposition solver; raises
    :class:`~zslkit.smo.ConvergenceError` if the budget is exhausted.
    """
    g = _validate_gram(gram)
    y = np.asarray(targets, dtype=np.float64).reshape(-1)
    n = g.shape[0]
    if y.size != n:
        raise ValueError(f"targets length {y.size} does not match gram size {n}")
    if n < 2:
        raise ValueError("need at least 2 training samples")
    if not np.all(np.isfinite(y)):
        raise ValueError("targets contain non-finite values")

    z = np.concatenate([np.ones(n), -np.ones(n)])
    p = np.concatenate([config.epsilon - y, config.epsilon + y])
    diag = np.diag(g)
    kdiag = np.concatenate([diag, diag])

    def kcol(t: int) -> np.ndarray:
        col = g[:, t % n]
        return np.concatenate([col, col])

    def kmatvec(v: np.ndarray) -> np.ndarray:
        w = g @ (v[:n] + v[n:])
        return np.concatenate([w, w])

    res = smo.solve(
        kcol, kdiag, z, p, config.c, config.tolerance, config.max_passes, kmatvec
    )
    if not res.converged:
        raise smo.ConvergenceError(
            f"SVR dual did not converge within {config.max_passes} passes "
            f"(remaining KKT violation {res.violation:.3e})",
            iterations=res.iterations,
            violation=res.violation,
            result=res,
        )
    beta = res.a[:n] - res.a[n:]
    beta[np.abs(beta) < _COEF_ZERO * max(1.0, config.c)] = 0.0
    support = np.flatnonzero(beta)
    return SvrModel(
        support_indices=support,
        dual_coefficients=beta[support],
        bias=res.bias,
        kernel=kernel,
        n_train=n,
        iterations=res.iterations,
        dual_objective=-res.objective,
    )


def predict_with_kernel_values(model: SvrModel, kernel_values: np.ndarray) -> np.ndarray:
    """Evaluate the regressor given precomputed kernel rows against the full
    training set (shape (..., n_train))."""
    kv = np.asarray(kernel_values, dtype=np.float64)
    if kv.shape[-1] != model.n_train:
        raise ValueError(
            f"kernel rows have {kv.shape[-1]} columns, model trained on {model.n_train}"
        )
    return kv[..., model.support_indices] @ model.dual_coefficients + model.bias


@dataclass
class SemanticRegressor:
    """Bundle of per-dimension SVR models sharing one support-vector pool.

    ``pool_features`` are the training samples used by at least one output
    dimension; ``coefficients`` is dense (dimension x pool size).
    """

    kernel: KernelSpec
    dimension: int
    feature_dim: int
    n_train: int
    models: list[SvrModel]
    pool_indices: np.ndarray
    pool_features: np.ndarray
    coefficients: np.ndarray
    biases: np.ndarray


def resolve_threads(n_threads: int | None = None) -> int:
    """Worker count for per-dimension training, capped by ZSLKIT_THREADS."""
    env = os.environ.get("ZSLKIT_THREADS")
    if env:
        cap = max(1, int(env))
        return cap if n_threads is None else max(1, min(n_threads, cap))
    return 1 if n_threads is None else max(1, n_threads)


def train_semantic_regressor(
    features: np.ndarray,
    embeddings: np.ndarray,
    config: SvrConfig,
    kernel: KernelSpec,
    n_threads: int | None = None,
) -> SemanticRegressor:
    """Train one SVR per embedding coordinate over a shared Gram matrix.

    Dimension j regresses coordinate j of the instance's label embedding.
    Trainings are independent; with n_threads > 1 they run on a thread
    pool with results identical to the sequential order.
    """
    x = np.asarray(features, dtype=np.float64)
    zt = np.asarray(embeddings, dtype=np.float64)
    if x.ndim != 2 or zt.ndim != 2:
        raise ValueError("features and embeddings must be 2-D arrays")
    if x.shape[0] != zt.shape[0]:
        raise ValueError(
            f"sample count mismatch: {x.shape[0]} features vs {zt.shape[0]} embeddings"
        )
    if not np.all(np.isfinite(zt)):
        raise ValueError("embeddings contain non-finite values")
    n, d_z = zt.shape[0], zt.shape[1]
    if d_z < 1:
        raise ValueError("embeddings must have at least one dimension")
    gram = gram_matrix(kernel, x)

    def fit(j: int) -> SvrModel:
        return train_svr(gram, zt[:, j], config, kernel)

    workers = resolve_threads(n_threads)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            models = list(pool.map(fit, range(d_z)))
    else:
        models = [fit(j) for j in range(d_z)]

    pool_idx = np.unique(np.concatenate([m.support_indices for m in models])).astype(int)
    coeffs = np.zeros((d_z, pool_idx.size), dtype=np.float64)
    for j, m in enumerate(models):
        coeffs[j, np.searchsorted(pool_idx, m.support_indices)] = m.dual_coefficients
    return SemanticRegressor(
        kernel=kernel,
        dimension=d_z,
        feature_dim=x.shape[1],
        n_train=n,
        models=models,
        pool_indices=pool_idx,
        pool_features=x[pool_idx].copy(),
        coefficients=coeffs,
        biases=np.array([m.bias for m in models]),
    )


def predict_batch(regressor: SemanticRegressor, features: np.ndarray) -> np.ndarray:
    """Project feature rows into the embedding space, (n, d_z)."""
    x = np.asarray(features, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != regressor.feature_dim:
        raise ValueError(
            f"feature dimension mismatch: {x.shape[1]} vs {regressor.feature_dim}"
        )
    if regressor.pool_features.shape[0] == 0:
        out = np.tile(regressor.biases, (x.shape[0], 1))
    else:
        kv = gram_matrix(regressor.kernel, x, regressor.pool_features)
        out = kv @ regressor.coefficients.T + regressor.biases
    return out[0] if single else out


def predict(regressor: SemanticRegressor, x: np.ndarray) -> np.ndarray:
    """Project a single feature vector, returning a d_z vector."""
    return predict_batch(regressor, np.asarray(x))
