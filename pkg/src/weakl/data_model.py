"""Datasets, column kinds, torus rescaling, splitting and group partitions.

Raw values are stored untouched; a :class:`Scaling` fitted on the training
rows maps numeric columns, categorical columns and timestamps onto
``[-pi, pi]``. Split datasets share one ``Scaling`` instance so no statistic
of the validation or test rows leaks into the model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

from .errors import DataError

NUMERIC = "numeric"
CATEGORICAL = "categorical"
KINDS = (NUMERIC, CATEGORICAL)


def _is_missing(value) -> bool:
    if value is None:
        return True
    try:
        return bool(pd.isna(value))
    except (TypeError, ValueError):
        return False


@dataclass(frozen=True)
class Rescaler:
    """Affine map sending ``[lo, hi]`` onto ``[-pi, pi]``.

    A degenerate column (``hi == lo``) maps every value to 0.
    """

    lo: float
    hi: float

    @property
    def degenerate(self) -> bool:
        return not self.hi > self.lo

    @property
    def slope(self) -> float:
        return 0.0 if self.degenerate else 2.0 * math.pi / (self.hi - self.lo)

    @property
    def intercept(self) -> float:
        return 0.0 if self.degenerate else -math.pi - self.slope * self.lo

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.degenerate:
            return np.zeros_like(x)
        return self.slope * x + self.intercept

    def inverse(self, z):
        z = np.asarray(z, dtype=float)
        if self.degenerate:
            return np.full_like(z, self.lo)
        return (z - self.intercept) / self.slope

    def to_dict(self) -> dict:
        return {"lo": self.lo, "hi": self.hi}

    @classmethod
    def from_dict(cls, d: Mapping) -> "Rescaler":
        return cls(float(d["lo"]), float(d["hi"]))


def fit_rescaler(column) -> Rescaler:
    values = np.asarray(column, dtype=float).ravel()
    if values.size == 0:
        raise DataError("cannot fit a rescaler on an empty column")
    if not np.all(np.isfinite(values)):
        raise DataError("cannot fit a rescaler on non-finite values")
    return Rescaler(float(values.min()), float(values.max()))


@dataclass(frozen=True)
class CategoryMap:
    """Bijection from raw categories to ``1..|E|`` (first-appearance order),
    followed by the affine rescale of ``[1, |E|]`` onto the torus."""

    levels: tuple

    @classmethod
    def fit(cls, values) -> "CategoryMap":
        seen = dict.fromkeys(_as_key(v) for v in values)
        if not seen:
            raise DataError("cannot fit categories on an empty column")
        return cls(tuple(seen))

    @property
    def cardinality(self) -> int:
        return len(self.levels)

    def index(self, values) -> np.ndarray:
        lookup = {level: i + 1 for i, level in enumerate(self.levels)}
        out = np.empty(len(values), dtype=int)
        for j, v in enumerate(values):
            try:
                out[j] = lookup[_as_key(v)]
            except KeyError:
                raise DataError(f"unknown category {v!r}") from None
        return out

    def scaled(self, values) -> np.ndarray:
        return Rescaler(1.0, float(self.cardinality))(self.index(values))

    def to_dict(self) -> dict:
        return {"levels": list(self.levels)}

    @classmethod
    def from_dict(cls, d: Mapping) -> "CategoryMap":
        return cls(tuple(_as_key(v) for v in d["levels"]))


def _as_key(v):
    # numpy scalars and python scalars must hash alike; JSON round trips too
    if isinstance(v, np.generic):
        v = v.item()
    if isinstance(v, float) and v.is_integer():
        v = int(v)
    return v


@dataclass(frozen=True)
class Scaling:
    columns: Mapping[str, Rescaler]
    categories: Mapping[str, CategoryMap]
    time: Rescaler

    @classmethod
    def fit(cls, dataset: "Dataset", horizon_end: float | None = None) -> "Scaling":
        columns, categories = {}, {}
        for name, kind in dataset.kinds.items():
            if kind == NUMERIC:
                columns[name] = fit_rescaler(dataset.features[name])
            else:
                categories[name] = CategoryMap.fit(dataset.features[name])
        t0 = float(dataset.timestamps[0])
        t1 = float(dataset.timestamps[-1]) if horizon_end is None else float(horizon_end)
        return cls(columns, categories, Rescaler(t0, max(t0, t1)))

    def transform(self, name: str, values) -> np.ndarray:
        if name in self.columns:
            return self.columns[name](np.asarray(values, dtype=float))
        if name in self.categories:
            return self.categories[name].scaled(values)
        raise DataError(f"column {name!r} is not part of the fitted schema")

    def cardinality(self, name: str) -> int:
        return self.categories[name].cardinality

    def to_dict(self) -> dict:
        return {
            "columns": {k: r.to_dict() for k, r in self.columns.items()},
            "categories": {k: c.to_dict() for k, c in self.categories.items()},
            "time": self.time.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "Scaling":
        return cls(
            {k: Rescaler.from_dict(v) for k, v in d["columns"].items()},
            {k: CategoryMap.from_dict(v) for k, v in d["categories"].items()},
            Rescaler.from_dict(d["time"]),
        )


@dataclass(frozen=True, eq=False)
class Dataset:
    """Time-indexed feature columns plus one or more real targets.

    ``features`` holds raw values; use :meth:`scaled` for torus coordinates.
    ``targets`` is always stored as an ``n x d2`` float array.
    """

    timestamps: np.ndarray
    features: Mapping[str, np.ndarray]
    targets: np.ndarray
    kinds: Mapping[str, str]
    target_names: tuple = ()
    scaling: Scaling | None = field(default=None, compare=False)

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=float).ravel()
        targets = np.asarray(self.targets, dtype=float)
        if targets.ndim == 1:
            targets = targets[:, None]
        n = ts.size
        if targets.shape[0] != n:
            raise DataError(f"{targets.shape[0]} target rows for {n} timestamps")
        if not np.all(np.isfinite(ts)) or not np.all(np.isfinite(targets)):
            raise DataError("missing or non-finite timestamps/targets")
        if n > 1 and np.any(np.diff(ts) < 0):
            raise DataError("timestamps must be non-decreasing")
        kinds = dict(self.kinds)
        features = {}
        for name, values in self.features.items():
            kind = kinds.get(name)
            if kind not in KINDS:
                raise DataError(f"column {name!r} has undeclared or invalid kind {kind!r}")
            if kind == NUMERIC:
                arr = np.asarray(values, dtype=float).ravel()
                if not np.all(np.isfinite(arr)):
                    raise DataError(f"missing values in column {name!r}")
            else:
                arr = np.empty(len(values), dtype=object)
                arr[:] = [_as_key(v) for v in values]
                if any(_is_missing(v) for v in arr):
                    raise DataError(f"missing values in column {name!r}")
            if arr.shape[0] != n:
                raise DataError(f"column {name!r} has {arr.shape[0]} rows, expected {n}")
            arr.setflags(write=False)
            features[name] = arr
        missing = set(kinds) - set(features)
        if missing:
            raise DataError(f"declared columns without data: {sorted(missing)}")
        names = tuple(self.target_names) or tuple(f"y{j}" for j in range(targets.shape[1]))
        if len(names) != targets.shape[1]:
            raise DataError("target_names length does not match target columns")
        ts.setflags(write=False)
        targets.setflags(write=False)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "kinds", kinds)
        object.__setattr__(self, "target_names", names)

    @property
    def n(self) -> int:
        return self.timestamps.size

    def __len__(self) -> int:
        return self.n

    @property
    def d2(self) -> int:
        return self.targets.shape[1]

    @property
    def y(self) -> np.ndarray:
        """Targets as a flat vector when ``d2 == 1``."""
        if self.d2 != 1:
            raise DataError("dataset has several targets; use .targets")
        return self.targets[:, 0]

    def _scaling(self) -> Scaling:
        return self.scaling if self.scaling is not None else Scaling.fit(self)

    def scaled(self, name: str) -> np.ndarray:
        if name not in self.features:
            raise DataError(f"unknown column {name!r}")
        return self._scaling().transform(name, self.features[name])

    def scaled_time(self) -> np.ndarray:
        return self._scaling().time(self.timestamps)

    def with_scaling(self, scaling: Scaling | None) -> "Dataset":
        return Dataset(self.timestamps, self.features, self.targets, self.kinds,
                       self.target_names, scaling)

    def take(self, index) -> "Dataset":
        index = np.asarray(index)
        if index.dtype == bool:
            index = np.flatnonzero(index)
        index = np.sort(index.astype(int))
        return Dataset(
            self.timestamps[index],
            {k: v[index] for k, v in self.features.items()},
            self.targets[index],
            self.kinds,
            self.target_names,
            self.scaling,
        )

    def rows(self, start: int, stop: int) -> "Dataset":
        return self.take(np.arange(start, stop))

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, time: str, targets: Sequence[str],
                   kinds: Mapping[str, str]) -> "Dataset":
        for col in [time, *targets, *kinds]:
            if col not in frame.columns:
                raise DataError(f"column {col!r} not found in data")
        used = frame[[time, *targets, *kinds]]
        if used.isna().any().any():
            bad = used.columns[used.isna().any()].tolist()
            raise DataError(f"missing values in columns {bad}")
        ts = frame[time]
        if not pd.api.types.is_numeric_dtype(ts):
            try:
                ts = pd.to_datetime(ts).astype("int64") / 1e9
            except (ValueError, TypeError) as exc:
                raise DataError(f"cannot parse time column {time!r}: {exc}") from None
        features = {}
        for name, kind in kinds.items():
            col = frame[name]
            features[name] = col.to_numpy(dtype=float) if kind == NUMERIC else col.to_list()
        return cls(np.asarray(ts, dtype=float), features,
                   frame[list(targets)].to_numpy(dtype=float), kinds, tuple(targets))


def read_csv(path, time: str, targets: Sequence[str], kinds: Mapping[str, str]) -> Dataset:
    bad = {k: v for k, v in kinds.items() if v not in KINDS}
    if bad:
        raise DataError(f"invalid column kinds {bad}")
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    return Dataset.from_frame(frame, time, targets, kinds)


def concat(datasets: Iterable[Dataset]) -> Dataset:
    """Stack datasets row-wise, keeping the scaling of the first one."""
    datasets = [d for d in datasets]
    if not datasets:
        raise DataError("nothing to concatenate")
    first = datasets[0]
    return Dataset(
        np.concatenate([d.timestamps for d in datasets]),
        {k: np.concatenate([d.features[k] for d in datasets]) for k in first.features},
        np.concatenate([d.targets for d in datasets]),
        first.kinds,
        first.target_names,
        first.scaling,
    )


@dataclass(frozen=True)
class SplitSpec:
    """Half-open index intervals ``[start, stop)`` for the three windows."""

    train: tuple[int, int]
    validation: tuple[int, int] = (0, 0)
    test: tuple[int, int] = (0, 0)

    def validate(self, n: int) -> None:
        ranges = [("train", self.train), ("validation", self.validation), ("test", self.test)]
        for name, (a, b) in ranges:
            if not (0 <= a <= b <= n):
                raise DataError(f"{name} range [{a}, {b}) outside [0, {n})")
        if self.train[1] <= self.train[0]:
            raise DataError("training range is empty")
        nonempty = [(name, r) for name, r in ranges if r[1] > r[0]]
        for (n1, r1), (n2, r2) in zip(nonempty, nonempty[1:]):
            if r1[1] > r2[0]:
                raise DataError(f"{n1} range {r1} overlaps or follows {n2} range {r2}")


def split(dataset: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset, Dataset]:
    """Cut the dataset into train/validation/test windows.

    The scaling is fitted on the training rows; the time axis spans from the
    first training timestamp to the last timestamp of any window.
    """
    spec.validate(dataset.n)
    last = max(r[1] for r in (spec.train, spec.validation, spec.test)) - 1
    train = dataset.rows(*spec.train)
    scaling = Scaling.fit(train, horizon_end=dataset.timestamps[last])
    return tuple(dataset.rows(*r).with_scaling(scaling)
                 for r in (spec.train, spec.validation, spec.test))


def group_partition(dataset: Dataset, key: str) -> list[tuple[object, Dataset]]:
    """Partition rows by the value of a categorical column.

    Groups appear in first-appearance order and keep their row order.
    """
    if key not in dataset.features:
        raise DataError(f"group key {key!r} not found")
    if dataset.kinds[key] != CATEGORICAL:
        raise DataError(f"group key {key!r} must be categorical")
    values = dataset.features[key]
    if any(_is_missing(v) for v in values):
        raise DataError(f"group key {key!r} has missing values")
    groups: dict[object, list[int]] = {}
    for i, v in enumerate(values):
        groups.setdefault(v, []).append(i)
    return [(v, dataset.take(idx)) for v, idx in groups.items()]
