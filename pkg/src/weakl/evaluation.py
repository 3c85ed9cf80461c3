"""Forecast metrics, block bootstraps and the MAE skill-score test."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.stats import norm

from .errors import ConfigError, DataError, NumericalError

FIXED = "fixed"
STATIONARY = "stationary"

# one-sided normal quantiles used for the usual levels
Z_TABLE = {0.1: 1.28, 0.05: 1.64, 0.01: 2.33}


def z_alpha(alpha: float) -> float:
    if not 0 < alpha < 1:
        raise ConfigError("alpha must lie in (0, 1)")
    for a, z in Z_TABLE.items():
        if np.isclose(alpha, a):
            return z
    return float(norm.ppf(1 - alpha))


def _pair(y, yhat) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=float).ravel()
    yhat = np.asarray(yhat, dtype=float).ravel()
    if y.shape != yhat.shape:
        raise DataError(f"length mismatch: {y.size} targets, {yhat.size} forecasts")
    if y.size == 0:
        raise DataError("no observations to score")
    return y, yhat


def metrics(y, yhat, mape: bool = True) -> dict:
    """RMSE, MAE, MSE and (unless disabled) MAPE as a fraction."""
    y, yhat = _pair(y, yhat)
    err = yhat - y
    out = {"mse": float(np.mean(err ** 2)), "mae": float(np.mean(np.abs(err)))}
    out["rmse"] = float(np.sqrt(out["mse"]))
    if mape:
        if np.any(y == 0):
            raise DataError("MAPE is undefined when a target is zero")
        out["mape"] = float(np.mean(np.abs(err) / np.abs(y)))
    return out


@dataclass(frozen=True)
class BootstrapConfig:
    """``block_length`` is the fixed block length (fixed mode) or the mean
    block length (stationary mode); ``None`` means ``floor(n ** 0.25)``."""

    block_length: float | None = None
    resamples: int = 1000
    mode: str = FIXED
    seed: int = 0
    level: float = 0.9

    def __post_init__(self):
        if self.mode not in (FIXED, STATIONARY):
            raise ConfigError(f"unknown bootstrap mode {self.mode!r}")
        if self.resamples < 1:
            raise ConfigError("need at least one resample")
        if self.block_length is not None and self.block_length < 1:
            raise ConfigError("block length must be >= 1")
        if not 0 < self.level < 1:
            raise ConfigError("confidence level must lie in (0, 1)")

    def resolve_length(self, n: int) -> float:
        if self.block_length is None:
            return max(1, int(np.floor(n ** 0.25)))
        if self.mode == FIXED:
            if int(self.block_length) != self.block_length:
                raise ConfigError("fixed-mode block length must be an integer")
            if self.block_length > n:
                raise ConfigError(f"block length {self.block_length} exceeds series length {n}")
            return int(self.block_length)
        return float(self.block_length)


@dataclass(frozen=True, eq=False)
class BootstrapSummary:
    point: float
    stats: np.ndarray
    sd: float
    ci: tuple
    normal_ci: tuple
    block_length: float

    def to_dict(self) -> dict:
        return {"point": self.point, "sd": self.sd, "ci": list(self.ci),
                "normal_ci": list(self.normal_ci), "block_length": self.block_length,
                "resamples": int(self.stats.size)}


def _series(Z) -> np.ndarray:
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    if Z.ndim != 2 or Z.shape[0] == 0:
        raise DataError("bootstrap needs a non-empty series")
    if not np.all(np.isfinite(Z)):
        raise DataError("non-finite values in bootstrap series")
    return Z


def fixed_block_indices(n: int, length: int, resamples: int, rng: np.random.Generator) -> np.ndarray:
    """``resamples x n`` indices: ``n // length + 1`` non-circular blocks, truncated to ``n``."""
    if not 1 <= length <= n:
        raise ConfigError(f"block length {length} outside [1, {n}]")
    b = n // length + 1
    starts = rng.integers(0, n - length + 1, size=(resamples, b))
    idx = (starts[:, :, None] + np.arange(length)).reshape(resamples, b * length)
    return idx[:, :n]


def stationary_indices(n: int, mean_length: float, resamples: int,
                       rng: np.random.Generator) -> np.ndarray:
    """Circular blocks with geometric lengths of mean ``mean_length``."""
    if mean_length < 1:
        raise ConfigError("mean block length must be >= 1")
    p = 1.0 / mean_length
    restart = rng.random((resamples, n)) < p
    restart[:, 0] = True
    jumps = rng.integers(0, n, size=(resamples, n))
    idx = np.empty((resamples, n), dtype=int)
    idx[:, 0] = jumps[:, 0]
    for t in range(1, n):
        idx[:, t] = np.where(restart[:, t], jumps[:, t], (idx[:, t - 1] + 1) % n)
    return idx


def _summarize(Z: np.ndarray, g: Callable, idx: np.ndarray, level: float, length) -> BootstrapSummary:
    point = float(g(Z.mean(axis=0)))
    means = Z[idx].mean(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        stats = np.array([g(m) for m in means], dtype=float)
    if not np.all(np.isfinite(stats)):
        raise NumericalError("statistic is undefined on some resamples")
    sd = float(np.std(stats, ddof=1)) if stats.size > 1 else 0.0
    tail = (1 - level) / 2
    lo, hi = np.quantile(stats, [tail, 1 - tail])
    z = float(norm.ppf(1 - tail))
    return BootstrapSummary(point, stats, sd, (float(lo), float(hi)),
                            (point - z * sd, point + z * sd), length)


def _mean_stat(z):
    return z[0]


def block_bootstrap(Z, g: Callable | None = None, config: BootstrapConfig = BootstrapConfig()) -> BootstrapSummary:
    """Bootstrap distribution of ``g(mean of Z)`` (``Z`` is ``n`` or ``n x k``).

    Uses fixed blocks unless ``config.mode`` is stationary.
    """
    Z = _series(Z)
    g = _mean_stat if g is None else g
    n = Z.shape[0]
    length = config.resolve_length(n)
    rng = np.random.default_rng(config.seed)
    if config.mode == STATIONARY:
        idx = stationary_indices(n, length, config.resamples, rng)
    else:
        idx = fixed_block_indices(n, int(length), config.resamples, rng)
    return _summarize(Z, g, idx, config.level, length)


def stationary_bootstrap(Z, g: Callable | None = None,
                         config: BootstrapConfig = BootstrapConfig(mode=STATIONARY)) -> BootstrapSummary:
    if config.mode != STATIONARY:
        config = BootstrapConfig(config.block_length, config.resamples, STATIONARY, config.seed,
                                 config.level)
    return block_bootstrap(Z, g, config)


def _skill(z):
    return 1.0 - z[0] / z[1]


def skill_test(err1, err2, config: BootstrapConfig = BootstrapConfig(), alpha: float = 0.1) -> dict:
    """Is model 1 better than model 2 in MAE?

    ``skill = 1 - MAE1 / MAE2``; the verdict uses the one-sided interval
    ``[skill - z_alpha * sd, +inf)``.
    """
    e1, e2 = _pair(np.abs(np.asarray(err1, dtype=float)), np.abs(np.asarray(err2, dtype=float)))
    if np.mean(e2) == 0:
        raise DataError("reference model has zero MAE")
    summary = block_bootstrap(np.column_stack([e1, e2]), _skill, config)
    z = z_alpha(alpha)
    lower = summary.point - z * summary.sd
    return {"skill": summary.point, "sd": summary.sd, "ci_lower": lower, "z": z,
            "alpha": alpha, "significant": bool(lower > 0),
            "mae1": float(np.mean(e1)), "mae2": float(np.mean(e2))}


def metric_report(y, yhat, config: BootstrapConfig = BootstrapConfig()) -> dict:
    """Each metric with its bootstrap standard deviation."""
    y, yhat = _pair(y, yhat)
    err = yhat - y
    with_mape = not np.any(y == 0)
    series = {
        "rmse": (err ** 2, lambda z: np.sqrt(z[0])),
        "mae": (np.abs(err), _mean_stat),
        "mse": (err ** 2, _mean_stat),
    }
    if with_mape:
        series["mape"] = (np.abs(err) / np.abs(y), _mean_stat)
    report = {}
    for name, (z, g) in series.items():
        s = block_bootstrap(z, g, config)
        report[name] = {"value": s.point, "sd": s.sd}
    return report
