"""``weakl`` command line: fit, tune, toy-benchmark, compare, predict.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical error.
"""

from __future__ import annotations

import argparse
import copy
import json
import platform
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np
import pandas as pd
import scipy
import yaml

from . import __version__
from .data_model import KINDS, Dataset, SplitSpec, concat, read_csv, split
from .errors import ConfigError, DataError, WeaklError
from .evaluation import BootstrapConfig, metric_report, metrics, skill_test
from .feature_maps import MAP_KINDS, FeatureMapSpec
from .hierarchy import (
    TOY_METHODS,
    HierModel,
    build_summation_matrix,
    fit_weakl_bu,
    fit_weakl_g,
    fit_weakl_t,
    read_hierarchy,
    run_toy_benchmark,
)
from .persistence import load_model, save_model
from .shape_models import AdditiveModel, fit_additive, fit_combination, fit_online, rolling_refit
from .tuning import GridSpec, grid_search, refit_best

FAMILIES = ("additive", "online", "combination", "hier-bu", "hier-g", "hier-t")
COMMANDS = ("fit", "tune", "toy-benchmark", "compare", "predict")

DEFAULT_TOY = {"d": 20, "n_train": 80, "n_test": 20, "sigma2": [0.25, 0.5, 0.75, 1.0],
               "runs": 200, "methods": list(TOY_METHODS), "mint_shrinkage": 0.0}
DEFAULT_BOOTSTRAP = {"block_length": None, "resamples": 200, "mode": "fixed", "level": 0.9}


# --- configuration ------------------------------------------------------------

def load_config(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        cfg = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a mapping")
    cfg["_base_dir"] = str(path.resolve().parent)
    return cfg


def _resolve_path(cfg: dict, p) -> Path:
    p = Path(p)
    if p.is_absolute():
        return p
    if str(p).startswith("package:"):
        return Path(str(resources.files("weakl") / "data" / str(p)[len("package:"):]))
    return Path(cfg.get("_base_dir", ".")) / p


def _require(section: dict, key: str, where: str):
    if key not in section:
        raise ConfigError(f"missing {where}.{key}")
    return section[key]


def validate_data_section(cfg: dict) -> dict:
    data = cfg.get("data")
    if not isinstance(data, dict):
        raise ConfigError("missing data section")
    _require(data, "path", "data")
    _require(data, "time", "data")
    targets = _require(data, "targets", "data")
    if isinstance(targets, str):
        data["targets"] = [targets]
    kinds = data.setdefault("kinds", {})
    if not isinstance(kinds, dict):
        raise ConfigError("data.kinds must map column names to kinds")
    bad = {k: v for k, v in kinds.items() if v not in KINDS}
    if bad:
        raise ConfigError(f"invalid column kinds {bad}; allowed: {list(KINDS)}")
    return data


def _effects(model: dict, key: str = "effects") -> list[FeatureMapSpec]:
    raw = model.get(key)
    if not raw:
        raise ConfigError(f"model.{key} must list at least one effect")
    out = []
    for e in raw:
        if not isinstance(e, dict) or e.get("kind") not in MAP_KINDS:
            raise ConfigError(f"bad effect {e!r}; kind must be one of {list(MAP_KINDS)}")
        cols = e.get("columns", e.get("column"))
        if cols is None:
            raise ConfigError(f"effect {e!r} has no columns")
        out.append(FeatureMapSpec(e["kind"], cols, int(e.get("m", 0)), int(e.get("s", 2))))
    return out


def validate_model_section(cfg: dict) -> dict:
    model = cfg.get("model")
    if not isinstance(model, dict):
        raise ConfigError("missing model section")
    family = model.get("family")
    if family not in FAMILIES:
        raise ConfigError(f"model.family must be one of {list(FAMILIES)}")
    if family == "combination":
        if not model.get("experts"):
            raise ConfigError("combination models need model.experts (forecast columns)")
    else:
        specs = _effects(model)
        kinds = cfg["data"]["kinds"]
        for s in specs:
            for c in s.columns:
                if c not in kinds:
                    raise ConfigError(f"effect column {c!r} is not declared in data.kinds")
                if (s.kind == "categorical") != (kinds[c] == "categorical"):
                    raise ConfigError(f"effect kind {s.kind!r} does not match column kind of {c!r}")
    if family.startswith("hier") and "hierarchy" not in model:
        raise ConfigError("hierarchical models need model.hierarchy")
    model.setdefault("lam", 1e-3)
    return model


def _split_spec(cfg: dict, n: int) -> SplitSpec:
    sp = cfg.get("split", {"train": 0.6, "validation": 0.2, "test": 0.2})
    if not isinstance(sp, dict):
        raise ConfigError("split must be a mapping")
    if all(isinstance(sp.get(k, 0), (int, float)) and not isinstance(sp.get(k, 0), bool)
           and 0 <= sp.get(k, 0) <= 1 for k in ("train", "validation", "test")) \
            and any(isinstance(sp.get(k), float) for k in ("train", "validation", "test")):
        a = int(round(sp.get("train", 0) * n))
        b = a + int(round(sp.get("validation", 0) * n))
        c = min(n, b + int(round(sp.get("test", 0) * n)))
        return SplitSpec((0, a), (a, b), (b, c))
    try:
        return SplitSpec(*(tuple(int(v) for v in sp.get(k, (0, 0)))
                           for k in ("train", "validation", "test")))
    except (TypeError, ValueError):
        raise ConfigError(f"cannot read split {sp!r}") from None


def _bootstrap(cfg: dict, seed: int) -> BootstrapConfig:
    b = {**DEFAULT_BOOTSTRAP, **(cfg.get("bootstrap") or {})}
    try:
        return BootstrapConfig(b["block_length"], int(b["resamples"]), b["mode"], seed,
                               float(b["level"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad bootstrap settings: {exc}") from None


def _set_path(d: dict, dotted: str, value):
    keys = dotted.split(".")
    for k in keys[:-1]:
        d = d.setdefault(k, {})
    d[keys[-1]] = value


# --- model families -------------------------------------------------------------

class OnlineForecaster:
    """Frozen additive base plus online corrections refitted on a trailing window."""

    def __init__(self, base: AdditiveModel, model_cfg: dict):
        self.base = base
        o = model_cfg.get("online", {})
        self.lam = o.get("lam", 1e-2)
        self.m = o.get("m", 0)
        self.s = int(o.get("s", 2))
        self.include_h0 = bool(o.get("include_h0", True))
        self.window = o.get("window")
        self.stride = int(o.get("stride", 1))
        self.last = None

    def fit_corrections(self, rows: Dataset):
        self.last = fit_online(rows, self.base, self.lam, self.m, self.s, self.include_h0)
        return self.last

    def stream(self, data: Dataset, start: int, workers: int = 1) -> np.ndarray:
        return rolling_refit(data, self.fit_corrections, start, self.window, self.stride, workers)


class FamilyFit:
    """``fit(train, overrides)`` for the configured model family."""

    def __init__(self, cfg: dict):
        self.cfg = cfg

    def model_cfg(self, overrides: dict) -> dict:
        model = copy.deepcopy(self.cfg["model"])
        for k, v in overrides.items():
            _set_path(model, k, v)
        return model

    def __call__(self, train: Dataset, overrides: dict | None = None):
        model = self.model_cfg(overrides or {})
        family = model["family"]
        if family == "additive":
            return fit_additive(train, _effects(model), model["lam"], model.get("m"))
        if family == "online":
            base = fit_additive(train, _effects(model), model["lam"], model.get("m"))
            return _OnlineTrained(OnlineForecaster(base, model), train)
        if family == "combination":
            return _CombinationTrained(train, model)
        hierarchy = _hierarchy(self.cfg, model)
        specs = _effects(model)
        if family == "hier-bu":
            return fit_weakl_bu(train, hierarchy, specs, model["lam"], model.get("weights"))
        if family == "hier-g":
            return fit_weakl_g(train, hierarchy, specs, model["lam"], model.get("gamma"))
        t = model.get("transfer") or {}
        return fit_weakl_t(train, hierarchy, specs, model["lam"], model.get("weights"),
                           t.get("nodes", ()), t.get("alpha"), float(t.get("strength", 0.0)))


class _OnlineTrained:
    def __init__(self, forecaster: OnlineForecaster, train: Dataset):
        self.forecaster = forecaster
        window = forecaster.window
        rows = train if window is None else train.rows(max(0, train.n - int(window)), train.n)
        self.model = forecaster.fit_corrections(rows)

    def predict(self, data: Dataset) -> np.ndarray:
        return self.model.predict(data)


class _CombinationTrained:
    def __init__(self, train: Dataset, model: dict):
        self.columns = list(model["experts"])
        self.model = fit_combination(self._experts(train), train.y, train.timestamps,
                                     model.get("lam", 1.0), int(model.get("m", 0)),
                                     int(model.get("s", 2)), train.scaling.time if train.scaling else None)

    def _experts(self, data: Dataset) -> np.ndarray:
        missing = [c for c in self.columns if c not in data.features]
        if missing:
            raise DataError(f"expert columns {missing} not in data")
        return np.column_stack([np.asarray(data.features[c], dtype=float) for c in self.columns])

    def predict(self, data: Dataset) -> np.ndarray:
        return self.model.predict(self._experts(data), data.timestamps)


def _hierarchy(cfg: dict, model: dict):
    h = model["hierarchy"]
    if isinstance(h, str):
        return read_hierarchy(_resolve_path(cfg, h))
    if isinstance(h, list):
        return build_summation_matrix([tuple(r) for r in h])
    raise ConfigError("model.hierarchy must be a CSV path or a list of [node, parent, level] rows")


def _read_dataset(cfg: dict) -> Dataset:
    data = cfg["data"]
    kinds = dict(data["kinds"])
    model = cfg.get("model", {})
    if model.get("family") == "combination":
        for c in model.get("experts", []):
            kinds.setdefault(c, "numeric")
    return read_csv(_resolve_path(cfg, data["path"]), data["time"], data["targets"], kinds)


# --- output helpers ----------------------------------------------------------------

def _versions() -> dict:
    return {"weakl": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "pandas": pd.__version__}


def _public(cfg: dict) -> dict:
    return {k: v for k, v in cfg.items() if not k.startswith("_")}


class Output:
    """Collects files in memory and writes them only once the command succeeded."""

    def __init__(self, out_dir, command: str, cfg: dict, seed: int, workers: int):
        self.dir = Path(out_dir)
        self.command = command
        self.cfg = cfg
        self.seed = seed
        self.workers = workers
        self.files: dict[str, object] = {}
        self.timings: dict[str, float] = {}
        self.start = time.perf_counter()

    def add(self, name: str, content):
        self.files[name] = content

    def timed(self, name: str, t0: float):
        self.timings[name] = round(time.perf_counter() - t0, 6)

    def write(self) -> None:
        self.dir.mkdir(parents=True, exist_ok=True)
        self.add("config.resolved.json", json.dumps(_public(self.cfg), indent=1, sort_keys=True,
                                                    default=str))
        self.timings["total"] = round(time.perf_counter() - self.start, 6)
        manifest = {"command": self.command, "seed": self.seed, "workers": self.workers,
                    "versions": _versions(), "timings": self.timings,
                    "files": sorted(self.files) + ["manifest.json"]}
        self.add("manifest.json", json.dumps(manifest, indent=1, sort_keys=True))
        for name, content in self.files.items():
            path = self.dir / name
            if isinstance(content, pd.DataFrame):
                content.to_csv(path, index=False, float_format="%.10g")
            elif callable(content):
                content(path)
            else:
                path.write_text(content)


def _prediction_frame(data: Dataset, pred: np.ndarray, label: str) -> pd.DataFrame:
    pred = np.asarray(pred, dtype=float).reshape(data.n, -1)
    frame = {"time": data.timestamps, "split": [label] * data.n}
    for j, name in enumerate(data.target_names):
        frame[name] = data.targets[:, j]
        frame[f"pred_{name}"] = pred[:, j]
    return pd.DataFrame(frame)


def _score(data: Dataset, pred: np.ndarray, boot: BootstrapConfig) -> dict:
    pred = np.asarray(pred, dtype=float).reshape(data.n, -1)
    if data.d2 == 1:
        return metric_report(data.y, pred[:, 0], boot)
    return {name: metric_report(data.targets[:, j], pred[:, j], boot)
            for j, name in enumerate(data.target_names)}


def _predict_windows(cfg, fitted, windows: dict, full: Dataset, spec: SplitSpec, workers: int):
    """Predictions per non-empty window; online models stream the test window."""
    out = {}
    for label, data in windows.items():
        if data.n == 0:
            continue
        if label == "test" and isinstance(fitted, _OnlineTrained):
            full_scaled = full.with_scaling(data.scaling)
            upto = full_scaled.rows(0, spec.test[1])
            out[label] = fitted.forecaster.stream(upto, spec.test[0], workers)
        else:
            out[label] = fitted.predict(data)
    return out


def _save(fitted, cfg) -> callable:
    model = fitted.model if isinstance(fitted, (_OnlineTrained, _CombinationTrained)) else fitted
    extra = {"data": {k: v for k, v in cfg["data"].items() if k != "path"},
             "experts": cfg["model"].get("experts")}
    return lambda path: save_model(model, path, extra)


# --- commands ------------------------------------------------------------------------

def cmd_fit(cfg: dict, args) -> Output:
    validate_data_section(cfg)
    validate_model_section(cfg)
    out = Output(args.out, "fit", cfg, args.seed, args.workers)
    boot = _bootstrap(cfg, args.seed)
    dataset = _read_dataset(cfg)
    spec = _split_spec(cfg, dataset.n)
    train, val, test = split(dataset, spec)
    t0 = time.perf_counter()
    fit = FamilyFit(cfg)
    fitted = fit(concat([train, val]) if val.n else train)
    out.timed("fit", t0)
    windows = {"train": train, "validation": val, "test": test}
    preds = _predict_windows(cfg, fitted, windows, dataset, spec, args.workers)
    frames = [_prediction_frame(windows[k], p, k) for k, p in preds.items()]
    out.add("predictions.csv", pd.concat(frames, ignore_index=True))
    report = {k: _score(windows[k], p, boot) for k, p in preds.items()}
    out.add("metrics.json", json.dumps(report, indent=1, sort_keys=True))
    out.add("model.json", _save(fitted, cfg))
    return out


def cmd_tune(cfg: dict, args) -> Output:
    validate_data_section(cfg)
    validate_model_section(cfg)
    grid_cfg = cfg.get("grid")
    if not isinstance(grid_cfg, dict) or not grid_cfg:
        raise ConfigError("tune needs a non-empty grid section")
    grid = GridSpec(grid_cfg)
    out = Output(args.out, "tune", cfg, args.seed, args.workers)
    dataset = _read_dataset(cfg)
    spec = _split_spec(cfg, dataset.n)
    train, val, test = split(dataset, spec)
    if val.n == 0:
        raise ConfigError("tune needs a non-empty validation window")
    fit = FamilyFit(cfg)
    t0 = time.perf_counter()
    result = grid_search(fit, grid, train, val, args.workers)
    out.timed("grid_search", t0)
    out.add("grid.csv", result.table())
    out.add("best.json", json.dumps(result.summary(), indent=1, sort_keys=True, default=str))
    t0 = time.perf_counter()
    refit = refit_best(result, fit, train, val)
    out.timed("refit", t0)
    out.add("model.json", _save(refit, cfg))
    if test.n:
        pred = refit.predict(test)
        out.add("predictions.csv", _prediction_frame(test, pred, "test"))
        out.add("metrics.json", json.dumps(_score(test, pred, _bootstrap(cfg, args.seed)),
                                           indent=1, sort_keys=True))
    return out


def cmd_toy_benchmark(cfg: dict, args) -> Output:
    toy = {**DEFAULT_TOY, **(cfg.get("toy") or {})}
    cfg["toy"] = toy
    try:
        d, runs = int(toy["d"]), int(toy["runs"])
        sigmas = [float(s) for s in toy["sigma2"]]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad toy settings: {exc}") from None
    out = Output(args.out, "toy-benchmark", cfg, args.seed, args.workers)
    t0 = time.perf_counter()
    res = run_toy_benchmark(d, int(toy["n_train"]), int(toy["n_test"]), sigmas, runs,
                            toy["methods"], args.seed, args.workers, float(toy["mint_shrinkage"]))
    out.timed("benchmark", t0)
    out.add("toy_table.csv", res.table)
    panels = {"mse_y1": "Y1", "mse_y2": "Y2", "mse_sum": "Y1+Y2", "mse_hier": "hierarchical"}
    curves = []
    for col, panel in panels.items():
        part = res.table[["method", "sigma2", col, "applicable"]].rename(columns={"sigma2": "x", col: "y"})
        part.insert(0, "panel", panel)
        curves.append(part)
        out.add(f"curve_{col[4:]}.csv", part.drop(columns="panel"))
    out.add("curves.csv", pd.concat(curves, ignore_index=True))
    return out


def _read_forecast(path, time_col: str, column: str) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    for c in (time_col, column):
        if c not in frame.columns:
            raise DataError(f"column {c!r} missing from {path}")
    return frame


def cmd_compare(cfg: dict, args) -> Output:
    c = cfg.get("compare")
    if not isinstance(c, dict):
        raise ConfigError("missing compare section")
    for key in ("truth", "forecast1", "forecast2"):
        _require(c, key, "compare")
    time_col = c.get("time", "time")
    target = c.get("target", "y")
    column = c.get("column", "prediction")
    alpha = float(c.get("alpha", 0.1))
    truth = _read_forecast(_resolve_path(cfg, c["truth"]), time_col, target)
    f1 = _read_forecast(_resolve_path(cfg, c["forecast1"]), time_col, column)
    f2 = _read_forecast(_resolve_path(cfg, c["forecast2"]), time_col, column)
    t = truth[time_col].to_numpy()
    for name, f in (("forecast1", f1), ("forecast2", f2)):
        if len(f) != len(t) or np.any(f[time_col].to_numpy() != t):
            raise DataError(f"{name} timestamps are not aligned with the truth file")
    y = truth[target].to_numpy(dtype=float)
    e1 = f1[column].to_numpy(dtype=float) - y
    e2 = f2[column].to_numpy(dtype=float) - y
    boot = _bootstrap(cfg, args.seed)
    out = Output(args.out, "compare", cfg, args.seed, args.workers)
    report = skill_test(e1, e2, boot, alpha)
    report["metrics1"] = metrics(y, y + e1, mape=not np.any(y == 0))
    report["metrics2"] = metrics(y, y + e2, mape=not np.any(y == 0))
    out.add("skill.json", json.dumps(report, indent=1, sort_keys=True))
    return out


def cmd_predict(cfg: dict, args) -> Output:
    p = cfg.get("predict") or {}
    model_path = args.model or p.get("model")
    data_path = args.data or p.get("data")
    if not model_path or not data_path:
        raise ConfigError("predict needs a model file and a data file")
    model, extra = load_model(_resolve_path(cfg, model_path) if not args.model else model_path)
    schema = extra.get("data")
    if not schema:
        raise DataError("model file carries no data schema")
    kinds = dict(schema["kinds"])
    for col in extra.get("experts") or []:
        kinds.setdefault(col, "numeric")
    path = data_path if args.data else _resolve_path(cfg, data_path)
    frame_targets = schema["targets"]
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    for t in frame_targets:
        if t not in frame.columns:
            frame[t] = 0.0
    data = Dataset.from_frame(frame, schema["time"], frame_targets, kinds)
    out = Output(args.out, "predict", cfg, args.seed, args.workers)
    if isinstance(model, (AdditiveModel, HierModel)):
        pred = model.predict(data)
    elif hasattr(model, "weights"):
        experts = np.column_stack([np.asarray(data.features[c], dtype=float) for c in extra["experts"]])
        pred = model.predict(experts, data.timestamps)
    else:
        pred = model.predict(data)
    frame = _prediction_frame(data, pred, "predict")
    out.add("predictions.csv", frame.drop(columns=list(data.target_names)))
    return out


HANDLERS = {"fit": cmd_fit, "tune": cmd_tune, "toy-benchmark": cmd_toy_benchmark,
            "compare": cmd_compare, "predict": cmd_predict}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="weakl", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="YAML or JSON experiment config")
        p.add_argument("--seed", type=int, default=None, help="master seed (overrides config)")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--out", default="weakl-out", help="output directory")
        if name == "predict":
            p.add_argument("--model", help="model.json written by fit or tune")
            p.add_argument("--data", help="CSV with the model's feature columns")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config:
            cfg = load_config(args.config)
        elif args.command in ("toy-benchmark", "predict"):
            cfg = {}
        else:
            raise ConfigError(f"{args.command} needs --config")
        if args.seed is None:
            args.seed = int(cfg.get("seed", 0))
        cfg["seed"] = args.seed
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        out = HANDLERS[args.command](cfg, args)
        out.write()
    except WeaklError as exc:
        print(json.dumps({"error": exc.category, "message": str(exc)}), file=sys.stderr)
        return exc.exit_code
    print(json.dumps({"status": "ok", "out": str(out.dir), "files": sorted(out.files)}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
