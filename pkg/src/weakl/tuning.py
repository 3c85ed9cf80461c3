"""Grid search over hyperparameters with a train/validation split."""

from __future__ import annotations

import itertools
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
import pandas as pd

from .data_model import Dataset, concat
from .errors import ConfigError, DataError, NumericalError

FitFn = Callable[[Dataset, dict], object]


@dataclass(frozen=True)
class GridSpec:
    """Named axes; points enumerate the cartesian product with the first axis slowest."""

    axes: tuple

    def __init__(self, axes: Mapping | Sequence):
        items = tuple((str(k), tuple(v)) for k, v in (axes.items() if isinstance(axes, Mapping) else axes))
        if not items:
            raise ConfigError("grid has no axes")
        for name, values in items:
            if not values:
                raise ConfigError(f"grid axis {name!r} is empty")
        if len({k for k, _ in items}) != len(items):
            raise ConfigError("duplicate grid axis names")
        object.__setattr__(self, "axes", items)

    @property
    def names(self) -> list[str]:
        return [k for k, _ in self.axes]

    @property
    def size(self) -> int:
        return int(np.prod([len(v) for _, v in self.axes]))

    def points(self) -> list[dict]:
        values = [v for _, v in self.axes]
        return [dict(zip(self.names, combo)) for combo in itertools.product(*values)]


def _plain(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_plain(x) for x in v]
    return v


@dataclass(eq=False)
class TuneResult:
    points: list
    mse: np.ndarray
    flags: list
    names: list
    elapsed: float = 0.0
    point_seconds: list = field(default_factory=list)

    @property
    def best_index(self) -> int | None:
        finite = np.isfinite(self.mse)
        if not finite.any():
            return None
        # argmin returns the first occurrence, so ties go to the earliest point
        return int(np.argmin(np.where(finite, self.mse, np.inf)))

    @property
    def best_point(self) -> dict | None:
        i = self.best_index
        return None if i is None else self.points[i]

    @property
    def best_mse(self) -> float:
        i = self.best_index
        return float("inf") if i is None else float(self.mse[i])

    def table(self) -> pd.DataFrame:
        rows = []
        for i, (p, m, f) in enumerate(zip(self.points, self.mse, self.flags)):
            row = {"index": i}
            row.update({k: _plain(v) if not isinstance(v, (list, tuple, np.ndarray)) else str(_plain(v))
                        for k, v in p.items()})
            row.update(mse=float(m), flag=f or "")
            rows.append(row)
        return pd.DataFrame(rows)

    def to_csv(self, path) -> None:
        self.table().to_csv(path, index=False, float_format="%.12g")

    def summary(self) -> dict:
        return {"best_index": self.best_index,
                "best_point": None if self.best_point is None
                else {k: _plain(v) for k, v in self.best_point.items()},
                "best_mse": self.best_mse, "grid_size": len(self.points),
                "failed": sum(1 for f in self.flags if f)}


def validation_mse(model, validation: Dataset) -> float:
    pred = np.asarray(model.predict(validation), dtype=float).reshape(validation.n, -1)
    return float(np.mean((pred - validation.targets) ** 2))


def grid_search(fit: FitFn, grid: GridSpec, train: Dataset, validation: Dataset,
                workers: int = 1, score: Callable | None = None) -> TuneResult:
    """Fit on ``train`` at every grid point and score MSE on ``validation``.

    Points whose system is singular (or otherwise numerically unusable) get
    an infinite score and a flag instead of aborting the search.
    """
    if not isinstance(grid, GridSpec):
        grid = GridSpec(grid)
    if validation.n == 0:
        raise DataError("validation window is empty")
    score = validation_mse if score is None else score
    points = grid.points()

    def evaluate(point):
        start = time.perf_counter()
        try:
            value, flag = float(score(fit(train, dict(point)), validation)), None
            if not np.isfinite(value):
                value, flag = np.inf, "non-finite validation error"
        except NumericalError as exc:
            value, flag = np.inf, f"{type(exc).__name__}: {exc}"
        return value, flag, time.perf_counter() - start

    start = time.perf_counter()
    if workers > 1 and len(points) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(evaluate, points))
    else:
        results = [evaluate(p) for p in points]
    return TuneResult(points, np.array([r[0] for r in results]), [r[1] for r in results],
                      grid.names, time.perf_counter() - start, [r[2] for r in results])


def refit_best(result: TuneResult, fit: FitFn, train: Dataset, validation: Dataset):
    """Refit the selected point on the merged train and validation windows."""
    if result.best_point is None:
        raise NumericalError("no grid point produced a usable fit")
    merged = concat([train, validation]) if validation.n else train
    return fit(merged, dict(result.best_point))
