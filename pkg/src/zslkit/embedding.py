"""Word-embedding store: file loading, label composition, vector geometry.

The on-disk format is the plain-text word-vector layout: a header line
``<count> <dim>`` followed by one ``<token> v1 ... v<dim>`` line per entry,
UTF-8, newline-terminated.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


def tokenize(raw: str) -> tuple[str, ...]:
    """Lowercase, split on whitespace and underscores, strip ASCII punctuation."""
    parts = raw.lower().replace("_", " ").split()
    return tuple(t for t in (p.translate(_PUNCT_TABLE) for p in parts) if t)


@dataclass(frozen=True, eq=False)
class Label:
    """A category name and its token decomposition.

    Identity (equality/hash) is by token sequence, so ``Brush_Hair`` and
    ``brush hair`` denote the same class regardless of the raw spelling.
    """

    raw: str
    tokens: tuple[str, ...]

    @classmethod
    def of(cls, raw: str) -> "Label":
        tokens = tokenize(raw)
        if not tokens:
            raise ValueError(f"label {raw!r} has no tokens after tokenization")
        return cls(raw=raw, tokens=tokens)

    @property
    def key(self) -> str:
        """Canonical space-joined form, used for identity and display."""
        return " ".join(self.tokens)

    @property
    def slug(self) -> str:
        """Underscore-joined form, used in CSV/JSON outputs."""
        return "_".join(self.tokens)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Label):
            return NotImplemented
        return self.tokens == other.tokens

    def __hash__(self) -> int:
        return hash(self.tokens)

    def __repr__(self) -> str:
        return f"Label({self.key!r})"


@dataclass
class EmbeddingStore:
    """Token -> vector table with a fixed dimension.

    Immutable by convention after loading; all lookups are read-only and
    safe to share across threads.
    """

    dimension: int
    table: dict[str, np.ndarray] = field(default_factory=dict)
    duplicates_replaced: int = 0

    def __contains__(self, token: str) -> bool:
        return token in self.table

    def __len__(self) -> int:
        return len(self.table)

    def vector(self, token: str) -> np.ndarray:
        try:
            return self.table[token]
        except KeyError:
            raise ValueError(f"token {token!r} not in embedding vocabulary") from None


def load_embeddings(path: str | Path, format: str = "text") -> EmbeddingStore:
    """Parse a text word-vector file into an :class:`EmbeddingStore`.

    Duplicate tokens are resolved last-wins and counted in
    ``duplicates_replaced``. Malformed headers, rows with the wrong number
    of values, non-finite values and entry-count mismatches all raise
    ``ValueError`` with the offending line number.
    """
    if format != "text":
        raise ValueError(f"unsupported embedding format {format!r}")
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        header = fh.readline().split()
        try:
            if len(header) != 2:
                raise ValueError
            count, dim = int(header[0]), int(header[1])
            if count < 0 or dim < 1:
                raise ValueError
        except ValueError:
            raise ValueError(f"{path}: malformed header") from None
        table: dict[str, np.ndarray] = {}
        duplicates = 0
        parsed = 0
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.split()
            token, values = parts[0], parts[1:]
            if len(values) != dim:
                raise ValueError(
                    f"{path}:{lineno}: expected {dim} values for token "
                    f"{token!r}, got {len(values)}"
                )
            try:
                vec = np.array([float(v) for v in values], dtype=np.float64)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: unparseable value") from None
            if not np.all(np.isfinite(vec)):
                raise ValueError(f"{path}:{lineno}: non-finite value for token {token!r}")
            if token in table:
                duplicates += 1
            table[token] = vec
            parsed += 1
        if parsed != count:
            raise ValueError(f"{path}: header declares {count} entries, found {parsed}")
    return EmbeddingStore(dimension=dim, table=table, duplicates_replaced=duplicates)


def save_embeddings(store: EmbeddingStore, path: str | Path) -> None:
    """Write the store in the text format. Values use shortest round-trip
    decimal repr, so load(save(store)) reproduces every float bit-exactly."""
    path = Path(path)
    lines = [f"{len(store.table)} {store.dimension}"]
    for token, vec in store.table.items():
        lines.append(token + " " + " ".join(repr(float(v)) for v in vec))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def embed_label(store: EmbeddingStore, label: Label) -> np.ndarray:
    """Arithmetic mean of the embeddings of the label's distinct tokens.

    Repeated tokens count once. The result is not normalized.
    """
    if not label.tokens:
        raise ValueError(f"label {label.raw!r} has an empty token list")
    unique = list(dict.fromkeys(label.tokens))
    for tok in unique:
        if tok not in store.table:
            raise ValueError(
                f"token {tok!r} of label {label.raw!r} not in embedding vocabulary"
            )
    return np.mean([store.table[t] for t in unique], axis=0)


def l2_normalize(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise ValueError("cannot normalize zero vector")
    return v / norm


def cosine_distance(a: np.ndarray, b: np.ndarray) -> float:
    """1 - cos(a, b), in [0, 2]. For unit vectors this is half the squared
    Euclidean distance, so Euclidean and cosine nearest neighbours agree
    after L2 normalization."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine distance undefined for zero vector")
    return float(np.clip(1.0 - float(a @ b) / (na * nb), 0.0, 2.0))
