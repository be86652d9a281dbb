"""Zero-shot machinery: class prototypes, nearest-prototype matching,
transductive self-training, and auxiliary-data augmentation."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .data import Dataset
from .embedding import EmbeddingStore, Label, embed_label, l2_normalize
from .svr import SemanticRegressor, predict_batch


@dataclass
class Prototype:
    """A labelled point in embedding space used as a classification target.

    ``adapted`` marks prototypes that were moved by self-training.
    """

    label: Label
    vector: np.ndarray
    adapted: bool = False


@dataclass(frozen=True)
class SelfTrainConfig:
    """Neighbour count for prototype adaptation; ``renormalize`` restores
    unit norm after averaging."""

    k: int = 10
    renormalize: bool = True

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError(f"k must be at least 1, got {self.k}")


def build_prototypes(
    store: EmbeddingStore, labels: Sequence[Label], normalize: bool = True
) -> list[Prototype]:
    """Embed each label and (by default) L2-normalize it into a prototype.

    Labels must be distinct; the unnormalized variant is kept for ablation.
    """
    seen: set[str] = set()
    protos: list[Prototype] = []
    for lab in labels:
        if lab.key in seen:
            raise ValueError(f"duplicate label {lab.key!r}")
        seen.add(lab.key)
        vec = embed_label(store, lab)
        if normalize:
            vec = l2_normalize(vec)
        protos.append(Prototype(label=lab, vector=vec, adapted=False))
    return protos


def prototype_matrix(prototypes: Sequence[Prototype]) -> np.ndarray:
    return np.vstack([p.vector for p in prototypes])


def nearest_prototype(
    prototypes: Sequence[Prototype], projection: np.ndarray
) -> tuple[int, float]:
    """Index and Euclidean distance of the closest prototype (first wins
    on exact ties)."""
    if not prototypes:
        raise ValueError("no prototypes to match against")
    mat = prototype_matrix(prototypes)
    v = np.asarray(projection, dtype=np.float64)
    if v.shape != (mat.shape[1],):
        raise ValueError(f"projection shape {v.shape} does not match prototypes ({mat.shape[1]},)")
    d = np.linalg.norm(mat - v, axis=1)
    idx = int(np.argmin(d))
    return idx, float(d[idx])


def nn_classify(prototypes: Sequence[Prototype], projection: np.ndarray) -> Label:
    """Label of the prototype at minimal Euclidean distance (equivalently
    cosine, after L2 normalization)."""
    idx, _ = nearest_prototype(prototypes, projection)
    return prototypes[idx].label


def self_train(
    prototypes: Sequence[Prototype],
    projections: np.ndarray,
    config: SelfTrainConfig,
) -> list[Prototype]:
    """Adapt each prototype to the mean of its K nearest test projections.

    Neighbour search is exact and runs over all projections independently
    per prototype (prototypes may share neighbours); ties on distance are
    resolved toward lower projection indices. A single adaptation round is
    applied; the input prototypes are left unmodified.
    """
    proj = np.asarray(projections, dtype=np.float64)
    if proj.ndim != 2 or proj.shape[0] == 0:
        raise ValueError("projections must be a non-empty 2-D array")
    if config.k > proj.shape[0]:
        raise ValueError(
            f"k={config.k} exceeds the number of test projections ({proj.shape[0]})"
        )
    adapted: list[Prototype] = []
    for proto in prototypes:
        d2 = ((proj - proto.vector) ** 2).sum(axis=1)
        neighbours = np.argsort(d2, kind="stable")[: config.k]
        vec = proj[neighbours].mean(axis=0)
        if config.renormalize:
            vec = l2_normalize(vec)
        adapted.append(Prototype(label=proto.label, vector=vec, adapted=True))
    return adapted


@dataclass
class ZslProblem:
    """A zero-shot task: seen-class training data, unseen-class test data
    (labels used only for scoring), and one prototype per unseen class."""

    train: Dataset
    test: Dataset
    prototypes: list[Prototype]

    def __post_init__(self) -> None:
        train_keys = {lab.key for lab in self.train.class_vocabulary}
        test_keys = {lab.key for lab in self.test.class_vocabulary}
        overlap = sorted(train_keys & test_keys)
        if overlap:
            raise ValueError(
                f"seen and unseen classes must be disjoint; {overlap[0]!r} is in both"
            )
        proto_keys = [p.label.key for p in self.prototypes]
        if len(set(proto_keys)) != len(proto_keys):
            raise ValueError("duplicate prototype labels")
        if set(proto_keys) != test_keys:
            raise ValueError("prototypes must cover exactly the unseen classes")


class Prediction(NamedTuple):
    instance_id: str
    label: Label
    distance: float


def zsl_predict(
    regressor: SemanticRegressor,
    problem: ZslProblem,
    config: SelfTrainConfig | None = None,
) -> list[Prediction]:
    """Project every test instance, L2-normalize, optionally self-train the
    prototypes on the projections, then nearest-prototype classify."""
    if len(problem.test) == 0:
        return []
    raw = predict_batch(regressor, problem.test.features)
    norms = np.linalg.norm(raw, axis=1)
    bad = np.flatnonzero(norms == 0.0)
    if bad.size:
        raise ValueError(
            f"projection of instance {problem.test.ids[int(bad[0])]!r} is the zero vector"
        )
    proj = raw / norms[:, None]
    prototypes = problem.prototypes
    if config is not None:
        prototypes = self_train(prototypes, proj, config)
    out: list[Prediction] = []
    for i, id_ in enumerate(problem.test.ids):
        idx, dist = nearest_prototype(prototypes, proj[i])
        out.append(Prediction(id_, prototypes[idx].label, dist))
    return out


def write_predictions_csv(predictions: Sequence[Prediction], path: str | Path) -> None:
    lines = ["instance_id,predicted_label,distance"]
    for pred in predictions:
        lines.append(f"{pred.instance_id},{pred.label.slug},{pred.distance!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass
class TrainingPair:
    """Features and matching label-embedding targets for regressor
    training, with per-row provenance ("target" or "auxiliary")."""

    features: np.ndarray
    embeddings: np.ndarray
    provenance: list[str] = field(default_factory=list)


def _label_targets(
    dataset: Dataset, store: EmbeddingStore, normalize: bool
) -> np.ndarray:
    cache: dict[str, np.ndarray] = {}
    rows = []
    for lab in dataset.labels:
        if lab.key not in cache:
            vec = embed_label(store, lab)
            cache[lab.key] = l2_normalize(vec) if normalize else vec
        rows.append(cache[lab.key])
    return np.vstack(rows) if rows else np.empty((0, store.dimension))


def training_pair(
    dataset: Dataset, store: EmbeddingStore, normalize_targets: bool = True
) -> TrainingPair:
    """Build (features, label embeddings) for one dataset."""
    return TrainingPair(
        features=dataset.features,
        embeddings=_label_targets(dataset, store, normalize_targets),
        provenance=["target"] * len(dataset),
    )


def augment_training(
    target: Dataset,
    auxiliary: Dataset | None,
    store: EmbeddingStore,
    *,
    unseen: Sequence[Label] | None = None,
    normalize_targets: bool = True,
) -> TrainingPair:
    """Concatenate target training data with an auxiliary dataset
    (target rows first), embedding labels as regression targets.

    Auxiliary classes may overlap the target's training classes but must
    be disjoint from the problem's unseen classes; pass those via
    ``unseen`` to enforce the guard before any training happens.
    """
    base = training_pair(target, store, normalize_targets)
    if auxiliary is None or len(auxiliary) == 0:
        return base
    if auxiliary.d_x != target.d_x:
        raise ValueError(
            f"feature dimension mismatch: target d_x={target.d_x}, "
            f"auxiliary d_x={auxiliary.d_x}"
        )
    if unseen is not None:
        unseen_keys = {lab.key for lab in unseen}
        for lab in auxiliary.class_vocabulary:
            if lab.key in unseen_keys:
                raise ValueError(
                    f"auxiliary class {lab.key!r} collides with an unseen class"
                )
    aux_targets = _label_targets(auxiliary, store, normalize_targets)
    return TrainingPair(
        features=np.vstack([base.features, auxiliary.features]),
        embeddings=np.vstack([base.embeddings, aux_targets]),
        provenance=base.provenance + ["auxiliary"] * len(auxiliary),
    )
