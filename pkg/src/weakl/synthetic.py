"""Synthetic additive series for demos and tests."""

from __future__ import annotations

import numpy as np
import pandas as pd

from .data_model import CATEGORICAL, NUMERIC, Dataset

DAY_EFFECT = np.array([0.3, 0.2, 0.2, 0.1, 0.0, -0.6, -0.8])
KINDS = {"temp": NUMERIC, "load_lag": NUMERIC, "day": CATEGORICAL}


def additive_effects(temp, load_lag, day) -> np.ndarray:
    """``n x 3`` true effects: smooth in temperature, linear in the lag, categorical in the day."""
    temp = np.asarray(temp, dtype=float)
    g_temp = 1.5 * np.cos(temp / 8.0) + 0.02 * (temp - 15.0) ** 2 / 10.0
    g_lag = 0.5 * np.asarray(load_lag, dtype=float)
    g_day = DAY_EFFECT[np.asarray(day, dtype=int)]
    return np.column_stack([g_temp, g_lag, g_day])


def make_additive_frame(n: int = 600, seed: int = 0, noise: float = 0.1,
                        break_at: int | None = None, break_scale: float = 1.5) -> pd.DataFrame:
    """Daily series ``y = s(t) * (g_temp + g_lag + g_day) + noise``.

    ``s(t)`` is 1, or ``break_scale`` from row ``break_at`` on.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(n, dtype=float)
    temp = 15.0 + 10.0 * np.sin(2 * np.pi * t / 365.0) + 2.0 * rng.standard_normal(n)
    load_lag = rng.standard_normal(n)
    day = (np.arange(n) % 7).astype(int)
    effects = additive_effects(temp, load_lag, day)
    scale = np.ones(n)
    if break_at is not None:
        scale[break_at:] = break_scale
    y = scale * effects.sum(axis=1) + noise * rng.standard_normal(n)
    return pd.DataFrame({"t": t, "temp": temp, "load_lag": load_lag,
                         "day": [f"d{k}" for k in day], "y": y})


def make_additive_data(n: int = 600, seed: int = 0, noise: float = 0.1,
                       break_at: int | None = None, break_scale: float = 1.5) -> Dataset:
    frame = make_additive_frame(n, seed, noise, break_at, break_scale)
    return Dataset.from_frame(frame, "t", ["y"], KINDS)
