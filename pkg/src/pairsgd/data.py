"""LIBSVM ingestion, label binarization, normalization, splits and folds."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .rng import SHUFFLE, RngStream


class DataError(ValueError):
    """Malformed or degenerate input data."""


class ParseError(DataError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


@dataclass(frozen=True)
class Example:
    """One labelled instance with a sparse feature vector (0-based indices)."""

    indices: tuple
    values: tuple
    label: float

    def __post_init__(self):
        if len(self.indices) != len(self.values):
            raise DataError("indices and values differ in length")
        if any(b <= a for a, b in zip(self.indices, self.indices[1:])):
            raise DataError("feature indices must be strictly increasing")
        if not all(math.isfinite(v) for v in self.values):
            raise DataError("non-finite feature value")

    def dense(self, d: int) -> np.ndarray:
        x = np.zeros(d)
        x[list(self.indices)] = self.values
        return x


@dataclass(frozen=True)
class Dataset:
    """Immutable labelled data; ``X`` is dense ``(n, d)``, ``y`` holds labels."""

    X: np.ndarray
    y: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        X = np.array(self.X, dtype=np.float64)
        y = np.array(self.y)
        if X.ndim != 2 or len(X) != len(y):
            raise DataError("X must be (n, d) with one label per row")
        if len(X) == 0:
            raise DataError("empty dataset")
        if not np.all(np.isfinite(X)):
            raise DataError("non-finite feature value")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    def __len__(self) -> int:
        return len(self.y)

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def example(self, i: int) -> Example:
        idx = np.flatnonzero(self.X[i])
        return Example(tuple(int(j) for j in idx), tuple(float(v) for v in self.X[i, idx]),
                       float(self.y[i]))

    @property
    def examples(self) -> list:
        return [self.example(i) for i in range(self.n)]

    @classmethod
    def from_examples(cls, examples, d: int | None = None, meta: dict | None = None):
        examples = list(examples)
        if not examples:
            raise DataError("empty dataset")
        if d is None:
            d = max((e.indices[-1] + 1 for e in examples if e.indices), default=0)
        X = np.zeros((len(examples), d))
        for i, e in enumerate(examples):
            X[i, list(e.indices)] = e.values
        y = np.array([e.label for e in examples])
        return cls(X, y, dict(meta or {}))

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.X[idx], self.y[idx], dict(self.meta))

    def with_meta(self, **kw) -> "Dataset":
        return Dataset(self.X, self.y, {**self.meta, **kw})


# --------------------------------------------------------------------- parse


def parse_libsvm(text: str, source: str | None = None) -> Dataset:
    """Parse ``<label> <index>:<value> ...`` lines (1-based indices).

    Blank lines and ``#`` comments are skipped.  Labels stay raw reals.
    """
    examples = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            label = float(tokens[0])
        except ValueError:
            raise ParseError(lineno, f"bad label {tokens[0]!r}") from None
        if not math.isfinite(label):
            raise ParseError(lineno, "non-finite label")
        indices, values = [], []
        for tok in tokens[1:]:
            key, sep, val = tok.partition(":")
            if not sep:
                raise ParseError(lineno, f"malformed token {tok!r}")
            try:
                j = int(key)
                v = float(val)
            except ValueError:
                raise ParseError(lineno, f"malformed token {tok!r}") from None
            if j < 1:
                raise ParseError(lineno, f"index must be >= 1, got {j}")
            if indices and j - 1 <= indices[-1]:
                raise ParseError(lineno, f"indices not strictly increasing at {tok!r}")
            if not math.isfinite(v):
                raise ParseError(lineno, f"non-finite value in {tok!r}")
            indices.append(j - 1)
            values.append(v)
        examples.append(Example(tuple(indices), tuple(values), label))
    if not examples:
        raise DataError("no examples found")
    meta = {"source": source} if source else {}
    return Dataset.from_examples(examples, meta=meta)


def serialize_libsvm(ds: Dataset) -> str:
    lines = []
    for i in range(ds.n):
        e = ds.example(i)
        label = e.label
        head = str(int(label)) if float(label).is_integer() else repr(label)
        toks = [head] + [f"{j + 1}:{v!r}" for j, v in zip(e.indices, e.values)]
        lines.append(" ".join(toks))
    return "\n".join(lines) + "\n"


def load_libsvm(path) -> Dataset:
    path = Path(path)
    with open(path, encoding="utf-8", newline=None) as fh:
        return parse_libsvm(fh.read(), source=str(path))


BUILTIN = {
    "diabetes": "diabetes_scale",
    "german": "german.numer_scale",
    "diabetes_raw": "diabetes",
    "german_raw": "german.numer",
}


def load_builtin(name: str) -> Dataset:
    """Bundled LIBSVM copies of the UCI ``diabetes`` and ``german`` data."""
    try:
        fname = BUILTIN[name]
    except KeyError:
        raise DataError(f"unknown builtin dataset {name!r}; have {sorted(BUILTIN)}") from None
    text = resources.files("pairsgd.datasets").joinpath(fname).read_text("utf-8")
    return parse_libsvm(text, source=f"builtin:{fname}")


# ----------------------------------------------------------------- transform


def binarize_labels(ds: Dataset) -> Dataset:
    """Map the first ceil(c/2) classes (ascending) to +1, the rest to -1.

    Data already labelled exactly {+1, -1} is returned unchanged.
    """
    classes = np.unique(ds.y)
    if len(classes) < 2:
        raise DataError("degenerate labels: need at least two classes")
    if set(classes.tolist()) == {-1.0, 1.0}:
        y = ds.y.astype(np.int64)
        rule = "already binary"
    else:
        cut = math.ceil(len(classes) / 2)
        positive = classes[:cut]
        y = np.where(np.isin(ds.y, positive), 1, -1).astype(np.int64)
        rule = f"first {cut} of {len(classes)} ascending classes -> +1"
    return Dataset(ds.X, y, {**ds.meta, "binarization": rule})


def normalize_features(ds: Dataset) -> Dataset:
    """Scale each row by ``1 / max(1, ||x||)`` so every ``||x|| <= 1``."""
    norms = np.linalg.norm(ds.X, axis=1)
    X = ds.X / np.maximum(1.0, norms)[:, None]
    return Dataset(X, ds.y, {**ds.meta, "normalization": "per-example unit ball"})


def standard_pipeline(ds: Dataset) -> Dataset:
    return normalize_features(binarize_labels(ds))


def split(ds: Dataset, train_frac: float, seed) -> tuple:
    """Seeded shuffle then prefix split into (train, test)."""
    if not 0.0 < train_frac < 1.0:
        raise ValueError(f"train_frac must lie in (0, 1), got {train_frac}")
    if ds.n < 2:
        raise DataError("need at least two examples to split")
    perm = RngStream(seed, SHUFFLE).permutation(ds.n)
    n_train = min(max(int(round(train_frac * ds.n)), 1), ds.n - 1)
    train, test = ds.subset(perm[:n_train]), ds.subset(perm[n_train:])
    labels = set(np.unique(ds.y).tolist())
    for name, part in (("train", train), ("test", test)):
        if set(np.unique(part.y).tolist()) != labels:
            warnings.warn(f"{name} split is missing a class", stacklevel=2)
            train = train.with_meta(stratification_warning=True)
            test = test.with_meta(stratification_warning=True)
    return train, test


def kfold_indices(n: int, k: int, seed) -> list:
    """``k`` disjoint index arrays covering ``range(n)``; first ``n % k`` folds get one extra."""
    if k < 2:
        raise ValueError("k must be >= 2")
    if k > n:
        raise ValueError(f"k={k} exceeds n={n}")
    perm = RngStream(seed, SHUFFLE).child("kfold").permutation(n)
    sizes = [n // k + (1 if f < n % k else 0) for f in range(k)]
    bounds = np.cumsum([0] + sizes)
    return [np.sort(perm[bounds[f]:bounds[f + 1]]) for f in range(k)]
