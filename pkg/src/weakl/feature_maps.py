"""Per-effect feature maps and the block-diagonal design matrices built from them.

Inner products follow the convention ``<phi, theta> = phi^* theta``, so a
Fourier effect evaluates ``sum_k theta_k exp(-i <x, k> / 2)``. Design rows
therefore hold the *conjugated* map values.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .data_model import Dataset, Scaling
from .errors import ConfigError, DataError

LINEAR = "linear"
FOURIER = "fourier"
CATEGORICAL = "categorical"
MAP_KINDS = (LINEAR, FOURIER, CATEGORICAL)


@dataclass(frozen=True)
class FeatureMapSpec:
    kind: str
    columns: tuple
    m: int = 0
    s: int = 2
    cardinality: int | None = None

    def __post_init__(self):
        cols = (self.columns,) if isinstance(self.columns, str) else tuple(self.columns)
        object.__setattr__(self, "columns", cols)
        if self.kind not in MAP_KINDS:
            raise ConfigError(f"unknown feature map kind {self.kind!r}")
        if not cols:
            raise ConfigError("a feature map needs at least one input column")
        if self.kind in (LINEAR, CATEGORICAL) and len(cols) != 1:
            raise ConfigError(f"{self.kind} maps take exactly one column")
        if self.m < 0 or self.s < 1:
            raise ConfigError(f"need m >= 0 and s >= 1, got m={self.m}, s={self.s}")
        if self.cardinality is not None and self.cardinality < 1:
            raise ConfigError("categorical cardinality must be >= 1")

    @property
    def q(self) -> int:
        return len(self.columns)

    @property
    def order(self) -> int:
        """Frequency truncation actually used by the map."""
        if self.kind == CATEGORICAL:
            if self.cardinality is None:
                raise ConfigError(f"cardinality of {self.columns[0]!r} is unresolved")
            return self.cardinality // 2
        return self.m

    @property
    def dim(self) -> int:
        if self.kind == LINEAR:
            return 1
        return (2 * self.order + 1) ** self.q

    @property
    def is_complex(self) -> bool:
        return self.kind != LINEAR

    def frequencies(self) -> np.ndarray:
        return frequency_grid(self.order, self.q)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "columns": list(self.columns)}
        if self.kind == FOURIER:
            d.update(m=self.m, s=self.s)
        if self.kind == CATEGORICAL:
            d["cardinality"] = self.cardinality
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "FeatureMapSpec":
        return cls(d["kind"], tuple(d["columns"]), int(d.get("m", 0)), int(d.get("s", 2)),
                   d.get("cardinality"))


def frequency_grid(m: int, q: int = 1) -> np.ndarray:
    """All integer vectors with ``max|k_i| <= m``, odometer order, first axis slowest."""
    axis = range(-m, m + 1)
    return np.array(list(itertools.product(axis, repeat=q)), dtype=float).reshape(-1, q)


def resolve_specs(specs: Sequence[FeatureMapSpec], scaling: Scaling) -> list[FeatureMapSpec]:
    """Fill categorical cardinalities from a fitted scaling."""
    out = []
    for spec in specs:
        if spec.kind == CATEGORICAL:
            name = spec.columns[0]
            if name not in scaling.categories:
                raise DataError(f"column {name!r} is not categorical in the data")
            card = scaling.cardinality(name)
            if spec.cardinality is not None and spec.cardinality != card:
                raise DataError(f"{name!r}: declared {spec.cardinality} categories, found {card}")
            spec = replace(spec, cardinality=card)
        out.append(spec)
    return out


def eval_map(spec: FeatureMapSpec, x) -> np.ndarray:
    """Evaluate one map at rescaled inputs.

    ``x`` is a scalar (or length-``q`` vector) for a single point, or an
    ``n x q`` array (``n`` vector when ``q == 1``) for a batch.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 0 or (x.ndim == 1 and spec.q > 1)
    pts = x.reshape(-1, spec.q)
    if pts.shape[1] != spec.q:
        raise DataError(f"map over {spec.q} columns got input of shape {x.shape}")
    if spec.kind == LINEAR:
        out = pts.copy()
    else:
        out = np.exp(0.5j * pts @ spec.frequencies().T)
    return out[0] if single else out


def map_inputs(spec: FeatureMapSpec, data, scaling: Scaling | None = None) -> np.ndarray:
    """Rescaled ``n x q`` inputs of a map.

    ``data`` is either a :class:`Dataset` (raw values, rescaled with
    ``scaling`` or the dataset's own scaling) or a mapping of already
    rescaled columns.
    """
    if isinstance(data, Dataset):
        sc = scaling if scaling is not None else data.scaling
        for c in spec.columns:
            if c not in data.features:
                raise DataError(f"column {c!r} missing from data")
        if sc is None:
            cols = [data.scaled(c) for c in spec.columns]
        else:
            cols = [sc.transform(c, data.features[c]) for c in spec.columns]
    else:
        try:
            cols = [np.atleast_1d(np.asarray(data[c], dtype=float)) for c in spec.columns]
        except KeyError as exc:
            raise DataError(f"column {exc.args[0]!r} missing from data") from None
    return np.column_stack(cols) if cols[0].size else np.empty((0, spec.q))


def effect_matrix(specs: Sequence[FeatureMapSpec], data, scaling: Scaling | None = None) -> np.ndarray:
    """Concatenated (unconjugated) map values, one row per observation."""
    blocks = [eval_map(s, map_inputs(s, data, scaling)).reshape(-1, s.dim) for s in specs]
    if any(np.iscomplexobj(b) for b in blocks):
        blocks = [b.astype(complex) for b in blocks]
    return np.hstack(blocks)


def block_offsets(specs: Sequence[FeatureMapSpec]) -> np.ndarray:
    return np.concatenate([[0], np.cumsum([s.dim for s in specs])]).astype(int)


def _as_target_lists(specs) -> list[list[FeatureMapSpec]]:
    if specs and isinstance(specs[0], FeatureMapSpec):
        return [list(specs)]
    return [list(s) for s in specs]


def build_feature_matrix(specs_per_target, x_row: Mapping) -> np.ndarray:
    """The ``d2 x dim(theta)`` block-diagonal matrix for one time step.

    Row ``l`` holds ``phi_l(x)^*`` in the columns of block ``l``, zero elsewhere.
    """
    per_target = _as_target_lists(specs_per_target)
    rows = [effect_matrix(specs, x_row).reshape(-1) for specs in per_target]
    dims = [r.size for r in rows]
    dtype = complex if any(np.iscomplexobj(r) for r in rows) else float
    out = np.zeros((len(rows), sum(dims)), dtype=dtype)
    start = 0
    for i, r in enumerate(rows):
        out[i, start:start + r.size] = np.conj(r)
        start += r.size
    return out


def feature_tensor(specs_per_target, data, scaling: Scaling | None = None) -> np.ndarray:
    """Stack of the per-step matrices, shape ``n x d2 x dim(theta)``."""
    per_target = _as_target_lists(specs_per_target)
    blocks = [np.conj(effect_matrix(specs, data, scaling)) for specs in per_target]
    n = blocks[0].shape[0]
    dims = [b.shape[1] for b in blocks]
    dtype = complex if any(np.iscomplexobj(b) for b in blocks) else float
    out = np.zeros((n, len(blocks), sum(dims)), dtype=dtype)
    start = 0
    for i, b in enumerate(blocks):
        out[:, i, start:start + b.shape[1]] = b
        start += b.shape[1]
    return out


def stack_design(specs, data, scaling: Scaling | None = None) -> np.ndarray:
    """Classical ``n x dim(theta)`` design for a single target: row j is ``phi(X_j)^*``."""
    per_target = _as_target_lists(specs)
    if len(per_target) != 1:
        raise DataError(f"stack_design needs a single target, got {len(per_target)}")
    return np.conj(effect_matrix(per_target[0], data, scaling))
