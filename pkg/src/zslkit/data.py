"""Dataset ingestion, category-split generation and the k-means
bag-of-words quantizer over precomputed descriptors.

File formats
------------
Feature CSV: header ``id,label,f0,...,f{d-1}``; one instance per row,
label cells use underscores for spaces, features are non-negative reals.

Descriptor CSV: headerless, one descriptor per row, optionally with a
leading non-numeric video-id column for grouped quantization.

Split JSON: ``{"dataset":..., "seed":..., "index":..., "seen":[...],
"unseen":[...]}`` with class slugs.

All randomness flows from explicit seeds through numpy's PCG64
generator (``np.random.default_rng``); split index i uses the seed
sequence ``[seed, i]`` so splits are independent and reproducible.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .embedding import Label


@dataclass
class Dataset:
    """Labelled feature vectors with a class vocabulary.

    The vocabulary may list classes with no instances (e.g. after
    restricting to a category split side); every instance label must be
    in the vocabulary.
    """

    name: str
    d_x: int
    ids: list[str]
    labels: list[Label]
    features: np.ndarray
    class_vocabulary: list[Label]

    def __len__(self) -> int:
        return len(self.ids)

    def instances(self):
        for i, id_ in enumerate(self.ids):
            yield id_, self.labels[i], self.features[i]

    def subset_classes(self, classes: list[Label], name: str | None = None) -> "Dataset":
        """Restrict to instances of the given classes; the subset's
        vocabulary is exactly ``classes`` (kept even if instance-free)."""
        keys = {c.key for c in classes}
        missing = [c.key for c in classes if c.key not in {v.key for v in self.class_vocabulary}]
        if missing:
            raise ValueError(f"class {missing[0]!r} not in dataset vocabulary")
        idx = [i for i, lab in enumerate(self.labels) if lab.key in keys]
        return Dataset(
            name=name or self.name,
            d_x=self.d_x,
            ids=[self.ids[i] for i in idx],
            labels=[self.labels[i] for i in idx],
            features=self.features[idx] if idx else np.empty((0, self.d_x)),
            class_vocabulary=list(classes),
        )

    def subset_ids(self, instance_ids: list[str], name: str | None = None) -> "Dataset":
        pos = {id_: i for i, id_ in enumerate(self.ids)}
        idx = []
        for id_ in instance_ids:
            if id_ not in pos:
                raise ValueError(f"instance id {id_!r} not in dataset {self.name!r}")
            idx.append(pos[id_])
        labels = [self.labels[i] for i in idx]
        return Dataset(
            name=name or self.name,
            d_x=self.d_x,
            ids=list(instance_ids),
            labels=labels,
            features=self.features[idx] if idx else np.empty((0, self.d_x)),
            class_vocabulary=list(dict.fromkeys(labels)),
        )


def load_dataset(path: str | Path, format: str = "csv", name: str | None = None) -> Dataset:
    """Parse a feature CSV into a :class:`Dataset`, validating shape,
    non-negativity and id uniqueness."""
    if format != "csv":
        raise ValueError(f"unsupported dataset format {format!r}")
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        if len(header) < 3 or header[0] != "id" or header[1] != "label":
            raise ValueError(f"{path}: header must be 'id,label,f0,...'")
        d_x = len(header) - 2
        expected = ["id", "label"] + [f"f{i}" for i in range(d_x)]
        if header != expected:
            raise ValueError(f"{path}: header must be 'id,label,f0,...,f{d_x - 1}'")
        ids: list[str] = []
        labels: list[Label] = []
        rows: list[np.ndarray] = []
        seen_ids: set[str] = set()
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != d_x + 2:
                raise ValueError(
                    f"{path}:{lineno}: expected {d_x + 2} cells, got {len(row)}"
                )
            id_ = row[0]
            if id_ in seen_ids:
                raise ValueError(f"{path}:{lineno}: duplicate id {id_!r}")
            seen_ids.add(id_)
            try:
                feats = np.array([float(v) for v in row[2:]], dtype=np.float64)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: unparseable feature value") from None
            if not np.all(np.isfinite(feats)):
                raise ValueError(f"{path}:{lineno}: non-finite feature value")
            if np.any(feats < 0):
                raise ValueError(f"{path}:{lineno}: negative feature value")
            ids.append(id_)
            labels.append(Label.of(row[1]))
            rows.append(feats)
    features = np.vstack(rows) if rows else np.empty((0, d_x))
    return Dataset(
        name=name or path.stem,
        d_x=d_x,
        ids=ids,
        labels=labels,
        features=features,
        class_vocabulary=list(dict.fromkeys(labels)),
    )


def write_features_csv(
    path: str | Path, ids: list[str], labels: list[Label], features: np.ndarray
) -> None:
    features = np.asarray(features, dtype=np.float64)
    d_x = features.shape[1]
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "label"] + [f"f{i}" for i in range(d_x)])
        for i, id_ in enumerate(ids):
            writer.writerow([id_, labels[i].slug] + [repr(float(v)) for v in features[i]])


@dataclass(frozen=True)
class SplitSpec:
    """One 50/50 category partition (seen rounds up on odd vocabularies)."""

    seed: int
    index: int
    seen: tuple[Label, ...]
    unseen: tuple[Label, ...]


def generate_splits(vocab: list[Label], count: int, seed: int) -> list[SplitSpec]:
    """Generate ``count`` independent random 50/50 category splits.

    The vocabulary is canonicalized by sorting on class key, then split i
    shuffles it with ``default_rng([seed, i])``, so the output is
    deterministic in (vocab set, count, seed) regardless of input order.
    """
    if not vocab:
        raise ValueError("empty vocabulary")
    ordered = sorted(dict.fromkeys(vocab), key=lambda lab: lab.key)
    if len(ordered) < 2:
        raise ValueError("need at least 2 classes to split")
    if count < 1:
        raise ValueError("count must be at least 1")
    if seed < 0:
        raise ValueError("seed must be non-negative")
    n_seen = math.ceil(len(ordered) / 2)
    splits = []
    for index in range(1, count + 1):
        rng = np.random.default_rng([seed, index])
        perm = rng.permutation(len(ordered))
        seen = sorted((ordered[i] for i in perm[:n_seen]), key=lambda lab: lab.key)
        unseen = sorted((ordered[i] for i in perm[n_seen:]), key=lambda lab: lab.key)
        splits.append(SplitSpec(seed=seed, index=index, seen=tuple(seen), unseen=tuple(unseen)))
    return splits


def save_split(split: SplitSpec, dataset_name: str, path: str | Path) -> None:
    doc = {
        "dataset": dataset_name,
        "seed": split.seed,
        "index": split.index,
        "seen": [lab.slug for lab in split.seen],
        "unseen": [lab.slug for lab in split.unseen],
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def load_split(path: str | Path) -> tuple[str, SplitSpec]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return doc["dataset"], SplitSpec(
        seed=int(doc["seed"]),
        index=int(doc["index"]),
        seen=tuple(Label.of(s) for s in doc["seen"]),
        unseen=tuple(Label.of(s) for s in doc["unseen"]),
    )


@dataclass
class Codebook:
    """K-means centroids over descriptor space."""

    k: int
    centroids: np.ndarray
    descriptor_dim: int
    inertia_history: list[float] = field(default_factory=list)


def _sq_distances(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    pn = (points * points).sum(axis=1)
    cn = (centers * centers).sum(axis=1)
    return np.maximum(pn[:, None] + cn[None, :] - 2.0 * (points @ centers.T), 0.0)


def kmeans_codebook(
    descriptors: np.ndarray, k: int, seed: int = 0, max_iters: int = 100
) -> Codebook:
    """Lloyd's algorithm with seeded k-means++ initialization.

    Stops when assignments are stable or ``max_iters`` is reached. Empty
    clusters are re-seeded to the point farthest from its assigned
    centroid. ``inertia_history`` records the (non-increasing) inertia at
    each assignment step.
    """
    x = np.asarray(descriptors, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"descriptors must be 2-D, got shape {x.shape}")
    n = x.shape[0]
    if k < 1:
        raise ValueError("k must be at least 1")
    if n < k:
        raise ValueError(f"need at least k={k} descriptors, got {n}")
    rng = np.random.default_rng(seed)

    centroids = np.empty((k, x.shape[1]), dtype=np.float64)
    centroids[0] = x[int(rng.integers(n))]
    closest = _sq_distances(x, centroids[:1])[:, 0]
    for c in range(1, k):
        total = closest.sum()
        if total <= 0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=closest / total))
        centroids[c] = x[idx]
        closest = np.minimum(closest, _sq_distances(x, centroids[c : c + 1])[:, 0])

    history: list[float] = []
    prev_assign: np.ndarray | None = None
    for _ in range(max_iters):
        d2 = _sq_distances(x, centroids)
        assign = np.argmin(d2, axis=1)
        history.append(float(d2[np.arange(n), assign].sum()))
        if prev_assign is not None and np.array_equal(assign, prev_assign):
            break
        prev_assign = assign
        assigned_d2 = d2[np.arange(n), assign].copy()
        for c in range(k):
            members = assign == c
            if members.any():
                centroids[c] = x[members].mean(axis=0)
            else:
                far = int(np.argmax(assigned_d2))
                centroids[c] = x[far]
                assigned_d2[far] = 0.0
    return Codebook(k=k, centroids=centroids, descriptor_dim=x.shape[1], inertia_history=history)


def quantize(codebook: Codebook, descriptors: np.ndarray, normalize: bool = False) -> np.ndarray:
    """Histogram of nearest-centroid assignments (ties take the lowest
    centroid index). With ``normalize`` the bins sum to 1. An empty
    descriptor list yields a zero histogram and a warning."""
    x = np.asarray(descriptors, dtype=np.float64)
    if x.size == 0:
        warnings.warn("quantize: empty descriptor list, returning zero histogram")
        return np.zeros(codebook.k, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != codebook.descriptor_dim:
        raise ValueError(
            f"descriptor dimension {x.shape[1]} does not match codebook "
            f"dimension {codebook.descriptor_dim}"
        )
    assign = np.argmin(_sq_distances(x, codebook.centroids), axis=1)
    hist = np.bincount(assign, minlength=codebook.k).astype(np.float64)
    if normalize:
        hist /= x.shape[0]
    return hist


def save_codebook(codebook: Codebook, path: str | Path, seed: int | None = None) -> None:
    doc = {
        "schema": "zslkit-codebook",
        "version": 1,
        "k": codebook.k,
        "descriptor_dim": codebook.descriptor_dim,
        "seed": seed,
        "centroids": [[float(v) for v in row] for row in codebook.centroids],
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def load_codebook(path: str | Path) -> Codebook:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("schema") != "zslkit-codebook":
        raise ValueError(f"{path}: not a codebook file")
    centroids = np.asarray(doc["centroids"], dtype=np.float64)
    return Codebook(k=int(doc["k"]), centroids=centroids, descriptor_dim=int(doc["descriptor_dim"]))


def read_descriptor_file(path: str | Path) -> list[tuple[str | None, np.ndarray]]:
    """Read a descriptor CSV, returning (group id, descriptor matrix) pairs.

    A leading non-numeric column is treated as a per-row video id and rows
    are grouped by it in order of first appearance; otherwise the whole
    file is one anonymous group.
    """
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise ValueError(f"{path}: empty descriptor file")
    try:
        float(rows[0][0])
        has_id = False
    except ValueError:
        has_id = True
    width = len(rows[0])
    groups: dict[str | None, list[list[float]]] = {}
    for lineno, row in enumerate(rows, start=1):
        if len(row) != width:
            raise ValueError(f"{path}:{lineno}: expected {width} cells, got {len(row)}")
        key = row[0] if has_id else None
        try:
            values = [float(v) for v in (row[1:] if has_id else row)]
        except ValueError:
            raise ValueError(f"{path}:{lineno}: unparseable descriptor value") from None
        groups.setdefault(key, []).append(values)
    return [(key, np.asarray(vals, dtype=np.float64)) for key, vals in groups.items()]
