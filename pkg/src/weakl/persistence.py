"""Versioned JSON model files."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .data_model import Rescaler, Scaling
from .errors import DataError
from .feature_maps import FeatureMapSpec
from .hierarchy import HierModel, Hierarchy, build_summation_matrix
from .shape_models import AdditiveModel, CombinationModel, OnlineModel
from .solver import FittedModel

FORMAT = "weakl-model"
VERSION = 1


def encode_complex(z) -> dict:
    z = np.asarray(z)
    return {"real": np.real(z).tolist(), "imag": np.imag(z).tolist()}


def decode_complex(d) -> np.ndarray:
    re = np.asarray(d["real"], dtype=float)
    im = np.asarray(d["imag"], dtype=float)
    return re if not np.any(im) else re + 1j * im


def _fitted_to_dict(f: FittedModel) -> dict:
    specs = None
    if f.specs is not None:
        specs = [[s.to_dict() for s in node] for node in f.specs]
    return {"theta": encode_complex(f.theta), "specs": specs,
            "scaling": None if f.scaling is None else f.scaling.to_dict(),
            "diagnostics": f.meta.get("diagnostics", {})}


def _fitted_from_dict(d) -> FittedModel:
    specs = None
    if d.get("specs") is not None:
        specs = [[FeatureMapSpec.from_dict(s) for s in node] for node in d["specs"]]
    scaling = None if d.get("scaling") is None else Scaling.from_dict(d["scaling"])
    return FittedModel(decode_complex(d["theta"]), specs, scaling,
                       {"diagnostics": d.get("diagnostics", {})})


def model_to_dict(model) -> dict:
    if isinstance(model, AdditiveModel):
        body = {"type": "additive", "lambdas": model.lambdas.tolist(),
                "fitted": _fitted_to_dict(model.fitted)}
    elif isinstance(model, OnlineModel):
        if not isinstance(model.base, AdditiveModel):
            raise DataError("only online models over an additive base can be saved")
        body = {"type": "online", "base": model_to_dict(model.base)["model"],
                "orders": list(model.orders), "lambdas": model.lambdas.tolist(), "s": model.s,
                "include_h0": model.include_h0, "time_scaler": model.time_scaler.to_dict(),
                "theta": encode_complex(model.theta)}
    elif isinstance(model, CombinationModel):
        body = {"type": "combination", "p": model.p, "m": model.m, "s": model.s,
                "lambdas": model.lambdas.tolist(), "time_scaler": model.time_scaler.to_dict(),
                "theta": encode_complex(model.theta)}
    elif isinstance(model, HierModel):
        h = model.hierarchy
        body = {"type": "hierarchy", "method": model.method,
                "tree": [[lab, par, lev] for lab, par, lev in zip(h.labels, h.parents, h.levels)],
                "fitted": _fitted_to_dict(model.fitted), "meta": model.meta}
    else:
        raise DataError(f"cannot serialize {type(model).__name__}")
    return {"format": FORMAT, "version": VERSION, "model": body}


def model_from_dict(d) -> object:
    if d.get("format") != FORMAT:
        raise DataError("not a model file")
    if d.get("version") != VERSION:
        raise DataError(f"unsupported model file version {d.get('version')}")
    return _build(d["model"])


def _build(body):
    kind = body["type"]
    if kind == "additive":
        fitted = _fitted_from_dict(body["fitted"])
        return AdditiveModel(fitted.specs[0], np.asarray(body["lambdas"]), fitted)
    if kind == "online":
        return OnlineModel(_build(body["base"]), tuple(body["orders"]), np.asarray(body["lambdas"]),
                           body["s"], body["include_h0"], Rescaler.from_dict(body["time_scaler"]),
                           decode_complex(body["theta"]).astype(complex))
    if kind == "combination":
        return CombinationModel(body["p"], body["m"], body["s"], np.asarray(body["lambdas"]),
                                Rescaler.from_dict(body["time_scaler"]),
                                decode_complex(body["theta"]).astype(complex))
    if kind == "hierarchy":
        h: Hierarchy = build_summation_matrix([tuple(r) for r in body["tree"]])
        fitted = _fitted_from_dict(body["fitted"])
        return HierModel(body["method"], h, fitted.specs, fitted, body.get("meta", {}))
    raise DataError(f"unknown model type {kind!r}")


def save_model(model, path, extra: dict | None = None) -> None:
    d = model_to_dict(model)
    if extra:
        d["extra"] = extra
    Path(path).write_text(json.dumps(d, indent=1, sort_keys=True))


def load_model(path):
    """Returns ``(model, extra)``."""
    try:
        d = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read model file {path}: {exc}") from None
    return model_from_dict(d), d.get("extra", {})
