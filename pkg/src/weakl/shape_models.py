"""Additive, online (time-varying correction) and forecast-combination models."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .constraints import PenaltyBlock, assemble_block_penalty, sobolev_weights
from .data_model import Dataset, Rescaler, Scaling, fit_rescaler
from .errors import ConfigError, DataError, NumericalError
from .feature_maps import (
    CATEGORICAL,
    FOURIER,
    FeatureMapSpec,
    block_offsets,
    eval_map,
    map_inputs,
    resolve_specs,
    stack_design,
)
from .solver import FittedModel, WeaklProblem, fit_weakl

DEFAULT_S = 2


def _broadcast(value, size: int, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1:
        arr = np.full(size, arr[0])
    if arr.size != size:
        raise ConfigError(f"{name}: expected {size} values, got {arr.size}")
    return arr


def additive_penalty(specs: Sequence[FeatureMapSpec], lam):
    lam = _broadcast(lam, len(specs), "lambda")
    if np.any(lam < 0):
        raise ConfigError("penalty weights must be non-negative")
    return assemble_block_penalty([PenaltyBlock.for_map(s, l) for s, l in zip(specs, lam)])


def _with_orders(specs, m):
    if m is None:
        return list(specs)
    fourier = [i for i, s in enumerate(specs) if s.kind == FOURIER]
    m = np.atleast_1d(np.asarray(m, dtype=int))
    if m.size == 1:
        m = np.full(len(fourier), m[0])
    if m.size != len(fourier):
        raise ConfigError(f"{m.size} frequency orders for {len(fourier)} Fourier effects")
    out = list(specs)
    for i, mi in zip(fourier, m):
        out[i] = replace(out[i], m=int(mi))
    return out


@dataclass(eq=False)
class AdditiveModel:
    """Sum of per-feature effects ``g_l(x_l) = <phi_l(x_l), theta_l>``."""

    specs: list
    lambdas: np.ndarray
    fitted: FittedModel

    @property
    def theta(self) -> np.ndarray:
        return self.fitted.theta

    @property
    def scaling(self) -> Scaling:
        return self.fitted.scaling

    @property
    def offsets(self) -> np.ndarray:
        return block_offsets(self.specs)

    def block(self, l: int) -> np.ndarray:
        if not 0 <= l < len(self.specs):
            raise IndexError(f"effect index {l} out of range")
        a, b = self.offsets[l], self.offsets[l + 1]
        return self.theta[a:b]

    def _effect_from_inputs(self, l: int, inputs) -> np.ndarray:
        phi = eval_map(self.specs[l], inputs).reshape(-1, self.specs[l].dim)
        return np.conj(phi) @ self.block(l)

    def effect_values(self, data) -> np.ndarray:
        """``n x d1`` matrix of fitted effects evaluated on the rows of ``data``."""
        cols = [self._effect_from_inputs(l, map_inputs(s, data, self.scaling)).real
                for l, s in enumerate(self.specs)]
        return np.column_stack(cols) if cols else np.zeros((len(data), 0))

    def predict(self, data) -> np.ndarray:
        phi = stack_design(self.specs, data, self.scaling)
        return (phi @ self.theta).real

    def effect_curve(self, l: int, grid, scaled: bool = False, return_imag: bool = False):
        """Effect ``l`` on a grid of raw values (or torus coordinates if ``scaled``)."""
        if not 0 <= l < len(self.specs):
            raise IndexError(f"effect index {l} out of range")
        spec = self.specs[l]
        if scaled:
            inputs = np.asarray(grid, dtype=float)
        elif spec.q == 1:
            values = list(grid) if spec.kind == CATEGORICAL else np.asarray(grid, dtype=float)
            inputs = self.scaling.transform(spec.columns[0], values)
        else:
            grid = np.asarray(grid, dtype=float).reshape(-1, spec.q)
            inputs = np.column_stack([self.scaling.transform(c, grid[:, i])
                                      for i, c in enumerate(spec.columns)])
        vals = self._effect_from_inputs(l, inputs)
        imag = float(np.max(np.abs(np.imag(vals)))) if vals.size else 0.0
        return (vals.real, imag) if return_imag else vals.real


def fit_additive(train: Dataset, specs: Sequence[FeatureMapSpec], lam, m=None,
                 constraint=None) -> AdditiveModel:
    """Additive model with one penalty weight per effect.

    ``m`` optionally overrides the frequency order of the Fourier effects
    (one value per Fourier effect, in order). ``constraint`` is an optional
    inexact :class:`~weakl.constraints.ConstraintSpec`.
    """
    if train.d2 != 1:
        raise DataError("additive models take a single target")
    scaling = train.scaling if train.scaling is not None else Scaling.fit(train)
    specs = resolve_specs(_with_orders(specs, m), scaling)
    lam = _broadcast(lam, len(specs), "lambda")
    Phi = stack_design(specs, train, scaling)
    M = additive_penalty(specs, lam)
    if constraint is not None:
        M = constraint.apply(M)
    fitted = fit_weakl(WeaklProblem(Phi, train.y, M), [specs], scaling)
    return AdditiveModel(specs, lam, fitted)


class FunctionEffects:
    """Base effects given as plain callables ``g_l(dataset) -> n values``."""

    def __init__(self, functions: Sequence[Callable]):
        self.functions = list(functions)

    def effect_values(self, data) -> np.ndarray:
        return np.column_stack([np.asarray(f(data), dtype=float) for f in self.functions])


def _time_block(t: np.ndarray, m: int) -> np.ndarray:
    k = np.arange(-m, m + 1)
    return np.exp(0.5j * np.outer(t, k))


@dataclass(eq=False)
class OnlineModel:
    """Frozen base effects corrected by smooth functions of time:

    ``y = h_0(t) + sum_l (1 + h_l(t)) g_l(x_l)``.
    """

    base: object
    orders: tuple
    lambdas: np.ndarray
    s: int
    include_h0: bool
    time_scaler: Rescaler
    theta: np.ndarray
    meta: dict = field(default_factory=dict)

    def _scaled_time(self, data) -> np.ndarray:
        ts = data.timestamps if isinstance(data, Dataset) else np.asarray(data, dtype=float)
        return self.time_scaler(ts)

    def design(self, data) -> np.ndarray:
        return _online_features(self.base.effect_values(data), self._scaled_time(data),
                                self.orders, self.include_h0)

    def predict(self, data) -> np.ndarray:
        g = self.base.effect_values(data)
        phi = _online_features(g, self._scaled_time(data), self.orders, self.include_h0)
        return g.sum(axis=1) + (np.conj(phi) @ self.theta).real

    def corrections(self, times) -> np.ndarray:
        """Values of the correction functions (``h_0`` first when present) at raw times."""
        t = self.time_scaler(np.asarray(times, dtype=float))
        out, start = [], 0
        for m in self.orders:
            size = 2 * m + 1
            out.append((np.conj(_time_block(t, m)) @ self.theta[start:start + size]).real)
            start += size
        return np.column_stack(out)


def _online_features(g: np.ndarray, t: np.ndarray, orders, include_h0: bool) -> np.ndarray:
    if not np.all(np.isfinite(g)):
        raise NumericalError("base effects produced non-finite values")
    cols = list(g.T)
    factors = ([np.ones_like(t)] if include_h0 else []) + cols
    if len(factors) != len(orders):
        raise ConfigError(f"{len(orders)} correction orders for {len(factors)} corrections")
    blocks = [f[:, None] * _time_block(t, m) for f, m in zip(factors, orders)]
    return np.hstack(blocks)


def _online_penalty(orders, lambdas, s):
    blocks = [PenaltyBlock("sobolev", lam, m=m, s=s) for m, lam in zip(orders, lambdas)]
    return assemble_block_penalty(blocks)


def fit_online(train: Dataset, base, lam, m=0, s: int = DEFAULT_S, include_h0: bool = True,
               time_scaler: Rescaler | None = None) -> OnlineModel:
    """Fit time-varying corrections on top of frozen effects.

    ``base`` is an :class:`AdditiveModel` or any object with
    ``effect_values(dataset)``. ``lam`` and ``m`` give one value per correction
    (``h_0`` first when ``include_h0``); scalars are broadcast.
    """
    if train.d2 != 1:
        raise DataError("online models take a single target")
    if time_scaler is None:
        time_scaler = train.scaling.time if train.scaling is not None else fit_rescaler(train.timestamps)
    g = np.asarray(base.effect_values(train), dtype=float)
    n_corr = g.shape[1] + int(include_h0)
    lam = _broadcast(lam, n_corr, "lambda")
    orders = tuple(int(v) for v in _broadcast(m, n_corr, "m"))
    if any(o < 0 for o in orders):
        raise ConfigError("frequency orders must be >= 0")
    t = time_scaler(train.timestamps)
    phi = _online_features(g, t, orders, include_h0)
    W = train.y - g.sum(axis=1)
    fitted = fit_weakl(WeaklProblem(np.conj(phi), W, _online_penalty(orders, lam, s)))
    return OnlineModel(base, orders, lam, s, include_h0, time_scaler, fitted.theta,
                       dict(fitted.meta))


def rolling_refit(dataset: Dataset, fit: Callable[[Dataset], object], start: int,
                  window: int | None = None, stride: int = 1, workers: int = 1) -> np.ndarray:
    """One-step-ahead forecasts for rows ``start .. n-1``.

    The model is refitted every ``stride`` steps on the ``window`` rows
    preceding the forecast time (all rows since the beginning when
    ``window`` is None); ``fit(dataset)`` must return an object with
    ``predict(dataset)``.
    """
    n = dataset.n
    if not 0 <= start <= n:
        raise ConfigError(f"start {start} outside [0, {n}]")
    if stride < 1:
        raise ConfigError("stride must be >= 1")
    refit_at = list(range(start, n, stride))
    for i in refit_at:
        if window is not None and window > i:
            raise ConfigError(f"window {window} longer than the {i} rows available at step {i}")
        if i == 0:
            raise ConfigError("no history before the first forecast")

    def fit_at(i):
        lo = 0 if window is None else i - window
        return fit(dataset.rows(lo, i))

    if workers > 1 and len(refit_at) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            models = list(pool.map(fit_at, refit_at))
    else:
        models = [fit_at(i) for i in refit_at]
    out = np.empty(n - start)
    for j, (i, model) in enumerate(zip(refit_at, models)):
        stop = min(i + stride, n)
        out[i - start:stop - start] = model.predict(dataset.rows(i, stop))
    return out


@dataclass(eq=False)
class CombinationModel:
    """Time-varying convex-ish weighting of ``p`` expert forecasts:
    ``y = sum_l (1/p + h_l(t)) yhat_l``."""

    p: int
    m: int
    s: int
    lambdas: np.ndarray
    time_scaler: Rescaler
    theta: np.ndarray
    meta: dict = field(default_factory=dict)

    def weights(self, times) -> np.ndarray:
        t = self.time_scaler(np.asarray(times, dtype=float))
        basis = np.conj(_time_block(t, self.m))
        size = 2 * self.m + 1
        h = [(basis @ self.theta[l * size:(l + 1) * size]).real for l in range(self.p)]
        return 1.0 / self.p + np.column_stack(h)

    def predict(self, experts, times) -> np.ndarray:
        experts = _check_experts(experts, self.p)
        return np.sum(self.weights(times) * experts, axis=1)


def _check_experts(experts, p=None) -> np.ndarray:
    E = np.asarray(experts, dtype=float)
    if E.ndim == 1:
        E = E[:, None]
    if E.ndim != 2 or E.shape[1] == 0:
        raise DataError("need at least one expert stream")
    if p is not None and E.shape[1] != p:
        raise DataError(f"expected {p} expert streams, got {E.shape[1]}")
    if not np.all(np.isfinite(E)):
        raise DataError("non-finite expert forecasts")
    return E


def fit_combination(experts, y, times=None, lam=1.0, m: int = 0, s: int = DEFAULT_S,
                    time_scaler: Rescaler | None = None) -> CombinationModel:
    """Learn smooth expert weights on a window that the experts were not trained on."""
    E = _check_experts(experts)
    y = np.asarray(y, dtype=float).ravel()
    n, p = E.shape
    if y.size != n:
        raise DataError(f"{n} expert rows but {y.size} targets")
    times = np.arange(n, dtype=float) if times is None else np.asarray(times, dtype=float)
    if times.size != n:
        raise DataError("times and experts differ in length")
    if time_scaler is None:
        time_scaler = fit_rescaler(times)
    lam = _broadcast(lam, p, "lambda")
    t = time_scaler(times)
    basis = _time_block(t, m)
    phi = np.hstack([E[:, [l]] * basis for l in range(p)])
    W = y - E.mean(axis=1)
    M = _online_penalty([m] * p, lam, s)
    fitted = fit_weakl(WeaklProblem(np.conj(phi), W, M))
    return CombinationModel(p, m, s, lam, time_scaler, fitted.theta, dict(fitted.meta))


__all__ = [
    "AdditiveModel", "CombinationModel", "FunctionEffects", "OnlineModel",
    "additive_penalty", "fit_additive", "fit_combination", "fit_online", "rolling_refit",
    "sobolev_weights",
]
