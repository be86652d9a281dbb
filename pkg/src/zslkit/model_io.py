"""JSON persistence for trained models.

Both model families share one container: ``{"schema": "zslkit-model",
"version": 1, "type": <tag>, ...}`` with type tags ``semantic_regressor``
and ``svc_one_vs_rest``. Floats are written with shortest round-trip
repr, so a load(save(model)) round trip predicts identically.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .embedding import Label
from .kernels import KernelSpec
from .svc import SvcModel
from .svr import SemanticRegressor, SvrModel

SCHEMA = "zslkit-model"
VERSION = 1


def _kernel_doc(kernel: KernelSpec) -> dict:
    return {"kind": kernel.kind, "gamma": kernel.gamma, "chi2_halved": kernel.chi2_halved}


def _kernel_from_doc(doc: dict) -> KernelSpec:
    return KernelSpec(
        kind=doc["kind"], gamma=float(doc["gamma"]), chi2_halved=bool(doc.get("chi2_halved", True))
    )


def _matrix(a: np.ndarray) -> list[list[float]]:
    return [[float(v) for v in row] for row in np.asarray(a)]


def save_model(model: SemanticRegressor | SvcModel, path: str | Path) -> None:
    if isinstance(model, SemanticRegressor):
        doc = {
            "schema": SCHEMA,
            "version": VERSION,
            "type": "semantic_regressor",
            "kernel": _kernel_doc(model.kernel),
            "dimension": model.dimension,
            "feature_dim": model.feature_dim,
            "n_train": model.n_train,
            "pool_indices": [int(i) for i in model.pool_indices],
            "pool_features": _matrix(model.pool_features),
            "models": [
                {
                    "support_pool_positions": [
                        int(p) for p in np.searchsorted(model.pool_indices, m.support_indices)
                    ],
                    "dual_coefficients": [float(v) for v in m.dual_coefficients],
                    "bias": float(m.bias),
                    "iterations": int(m.iterations),
                    "dual_objective": float(m.dual_objective),
                }
                for m in model.models
            ],
        }
    elif isinstance(model, SvcModel):
        doc = {
            "schema": SCHEMA,
            "version": VERSION,
            "type": "svc_one_vs_rest",
            "kernel": _kernel_doc(model.kernel),
            "classes": [lab.slug for lab in model.classes],
            "train_points": _matrix(model.train_points),
            "coefficients": _matrix(model.coefficients),
            "biases": [float(v) for v in model.biases],
        }
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> SemanticRegressor | SvcModel:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid model file ({exc})") from None
    if not isinstance(doc, dict) or doc.get("schema") != SCHEMA:
        raise ValueError(f"{path}: not a zslkit model file")
    if doc.get("version") != VERSION:
        raise ValueError(
            f"{path}: unsupported model schema version {doc.get('version')!r}"
        )
    kind = doc.get("type")
    if kind == "semantic_regressor":
        return _load_regressor(doc, path)
    if kind == "svc_one_vs_rest":
        return _load_svc(doc, path)
    raise ValueError(f"{path}: unknown model type {kind!r}")


def _load_regressor(doc: dict, path: Path) -> SemanticRegressor:
    dimension = int(doc["dimension"])
    models_doc = doc["models"]
    if len(models_doc) != dimension:
        raise ValueError(
            f"{path}: declares dimension {dimension} but contains {len(models_doc)} models"
        )
    kernel = _kernel_from_doc(doc["kernel"])
    pool_indices = np.asarray(doc["pool_indices"], dtype=int)
    pool_features = np.asarray(doc["pool_features"], dtype=np.float64)
    if pool_features.size == 0:
        pool_features = pool_features.reshape(0, int(doc["feature_dim"]))
    n_train = int(doc["n_train"])
    models: list[SvrModel] = []
    coeffs = np.zeros((dimension, pool_indices.size), dtype=np.float64)
    for j, mdoc in enumerate(models_doc):
        positions = np.asarray(mdoc["support_pool_positions"], dtype=int)
        coefs = np.asarray(mdoc["dual_coefficients"], dtype=np.float64)
        if positions.size != coefs.size:
            raise ValueError(f"{path}: model {j} support/coefficient size mismatch")
        coeffs[j, positions] = coefs
        models.append(
            SvrModel(
                support_indices=pool_indices[positions],
                dual_coefficients=coefs,
                bias=float(mdoc["bias"]),
                kernel=kernel,
                n_train=n_train,
                iterations=int(mdoc.get("iterations", 0)),
                dual_objective=float(mdoc.get("dual_objective", 0.0)),
            )
        )
    return SemanticRegressor(
        kernel=kernel,
        dimension=dimension,
        feature_dim=int(doc["feature_dim"]),
        n_train=n_train,
        models=models,
        pool_indices=pool_indices,
        pool_features=pool_features,
        coefficients=coeffs,
        biases=np.array([m.bias for m in models]),
    )


def _load_svc(doc: dict, path: Path) -> SvcModel:
    classes = [Label.of(s) for s in doc["classes"]]
    coefficients = np.asarray(doc["coefficients"], dtype=np.float64)
    if coefficients.shape[0] != len(classes):
        raise ValueError(
            f"{path}: declares {len(classes)} classes but has "
            f"{coefficients.shape[0]} coefficient rows"
        )
    return SvcModel(
        classes=classes,
        kernel=_kernel_from_doc(doc["kernel"]),
        train_points=np.asarray(doc["train_points"], dtype=np.float64),
        coefficients=coefficients,
        biases=np.asarray(doc["biases"], dtype=np.float64),
        support_indices=[np.flatnonzero(row) for row in coefficients],
        iterations=[0] * len(classes),
        dual_objectives=[0.0] * len(classes),
    )
