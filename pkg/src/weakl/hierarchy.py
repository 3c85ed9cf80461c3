"""Hierarchies, hierarchy-aware estimators and the reconciliation baselines.

Nodes are always ordered bottom-first: the ``l2`` leaves come first (in
input order), then the aggregates from the deepest to the shallowest, so
that ``S = (I | 1^(1) | ... )^T`` and ``Y = S Y_b``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import pandas as pd
import scipy.linalg

from .constraints import PenaltyMatrix, assemble_block_penalty, transfer_rows
from .data_model import Dataset, Scaling
from .errors import ConfigError, DataError, NumericalError
from .feature_maps import FeatureMapSpec, feature_tensor, resolve_specs
from .shape_models import additive_penalty
from .solver import FittedModel, WeaklProblem, fit_weakl

DEFAULT_SHRINKAGE = 0.1


@dataclass(frozen=True, eq=False)
class Hierarchy:
    labels: tuple
    parents: tuple
    levels: tuple
    S: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.S.shape[0]

    @property
    def n_bottom(self) -> int:
        return self.S.shape[1]

    @property
    def bottom_labels(self) -> tuple:
        return self.labels[:self.n_bottom]

    def index(self, label) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ConfigError(f"unknown node {label!r}") from None

    def level_nodes(self) -> dict:
        """Level name -> node indices, levels in order of first appearance."""
        out: dict = {}
        for i, lev in enumerate(self.levels):
            out.setdefault(lev, []).append(i)
        return out

    def aggregate(self, bottom: np.ndarray) -> np.ndarray:
        bottom = np.asarray(bottom)
        return bottom @ self.S.T if bottom.ndim > 1 else self.S @ bottom

    def coherence_residual(self, Y: np.ndarray) -> float:
        Y = np.atleast_2d(np.asarray(Y))
        return float(np.max(np.abs(Y - Y[:, :self.n_bottom] @ self.S.T))) if Y.size else 0.0

    def bottom_selector(self) -> np.ndarray:
        """``Pi_b``: the ``l2 x l1`` matrix keeping the bottom entries."""
        return np.eye(self.n_bottom, self.n_nodes)


def _parse_tree(tree) -> list[tuple]:
    if isinstance(tree, Mapping):
        rows = [(node, parent, None) for node, parent in tree.items()]
    elif isinstance(tree, pd.DataFrame):
        missing = {"node", "parent"} - set(tree.columns)
        if missing:
            raise DataError(f"hierarchy table lacks columns {sorted(missing)}")
        lev = tree["level"] if "level" in tree.columns else [None] * len(tree)
        rows = list(zip(tree["node"], tree["parent"], lev))
    else:
        rows = [tuple(r) + (None,) * (3 - len(r)) for r in tree]
    out = []
    for node, parent, level in rows:
        if parent is not None and (isinstance(parent, float) and np.isnan(parent) or parent == ""):
            parent = None
        if level is not None and isinstance(level, float) and np.isnan(level):
            level = None
        out.append((node, parent, level))
    return out


def build_summation_matrix(tree) -> Hierarchy:
    """Build ``S`` from a node/parent table.

    ``tree`` is a mapping ``node -> parent`` (``None`` for roots), an iterable
    of ``(node, parent[, level])`` rows, or a DataFrame with ``node``,
    ``parent`` and optionally ``level`` columns.
    """
    rows = _parse_tree(tree)
    if not rows:
        raise ConfigError("empty hierarchy")
    order = [r[0] for r in rows]
    if len(set(order)) != len(order):
        raise ConfigError("duplicate node labels")
    parent = {r[0]: r[1] for r in rows}
    given_level = {r[0]: r[2] for r in rows}
    for node, p in parent.items():
        if p is not None and p not in parent:
            raise ConfigError(f"orphan node {node!r}: parent {p!r} is not declared")

    depth: dict = {}
    for node in order:
        seen, cur = [], node
        while cur is not None and cur not in depth:
            if cur in seen:
                raise ConfigError(f"cycle through node {cur!r}")
            seen.append(cur)
            cur = parent[cur]
        base = -1 if cur is None else depth[cur]
        for i, v in enumerate(reversed(seen)):
            depth[v] = base + 1 + i

    children: dict = {n: [] for n in order}
    for node in order:
        if parent[node] is not None:
            children[parent[node]].append(node)
    leaves = [n for n in order if not children[n]]
    aggregates = [n for n in order if children[n]]
    pos = {n: i for i, n in enumerate(order)}
    aggregates.sort(key=lambda n: (-depth[n], pos[n]))
    labels = leaves + aggregates
    col = {n: j for j, n in enumerate(leaves)}

    def descendants(n):
        if not children[n]:
            return [n]
        return [leaf for c in children[n] for leaf in descendants(c)]

    S = np.zeros((len(labels), len(leaves)))
    for i, n in enumerate(labels):
        for leaf in descendants(n):
            S[i, col[leaf]] = 1.0
    S.setflags(write=False)
    levels = tuple(given_level[n] if given_level[n] is not None else f"depth{depth[n]}"
                   for n in labels)
    return Hierarchy(tuple(labels), tuple(parent[n] for n in labels), levels, S)


def read_hierarchy(path) -> Hierarchy:
    """Hierarchy from a CSV with ``node``, ``parent`` (empty for roots) and ``level`` columns."""
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (OSError, pd.errors.ParserError) as exc:
        raise DataError(f"cannot read hierarchy file {path}: {exc}") from None
    return build_summation_matrix(frame)


def australia_tree(zone_counts: Sequence[int] = (6, 5, 4, 4, 3, 3, 2)) -> list[tuple]:
    """Country / 7 states / 27 zones rows, usable with :func:`build_summation_matrix`."""
    rows = [("Australia", None, "country")]
    for s, count in enumerate(zone_counts, start=1):
        rows.append((f"state{s}", "Australia", "state"))
        rows.extend((f"state{s}_zone{z}", f"state{s}", "zone") for z in range(1, count + 1))
    return rows


def node_weights(hierarchy: Hierarchy, weights) -> np.ndarray:
    """Diagonal of ``Lambda`` (or ``Gamma``) over all nodes.

    ``weights`` is ``None`` (all ones), a scalar, a mapping level name -> scalar
    (unlisted levels get 1) or a full vector of length ``l1``.
    """
    l1 = hierarchy.n_nodes
    if weights is None:
        w = np.ones(l1)
    elif isinstance(weights, Mapping):
        unknown = set(weights) - set(hierarchy.levels)
        if unknown:
            raise ConfigError(f"unknown levels {sorted(map(str, unknown))}")
        w = np.array([float(weights.get(lev, 1.0)) for lev in hierarchy.levels])
    else:
        w = np.atleast_1d(np.asarray(weights, dtype=float))
        if w.size == 1:
            w = np.full(l1, w[0])
        if w.size != l1:
            raise ConfigError(f"{w.size} node weights for {l1} nodes")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ConfigError("node weights must be finite and non-negative")
    return w


def _node_specs(specs, count: int) -> list[list[FeatureMapSpec]]:
    if specs and isinstance(specs[0], FeatureMapSpec):
        return [list(specs) for _ in range(count)]
    specs = [list(s) for s in specs]
    if len(specs) != count:
        raise ConfigError(f"{len(specs)} spec lists for {count} nodes")
    return specs


def _node_penalty(specs: list[list[FeatureMapSpec]], lam) -> PenaltyMatrix:
    if np.isscalar(lam):
        lam = [lam] * len(specs)
    if len(lam) != len(specs):
        raise ConfigError(f"{len(lam)} penalty entries for {len(specs)} nodes")
    blocks = []
    for node_specs, node_lam in zip(specs, lam):
        blocks.extend(additive_penalty(node_specs, node_lam).blocks)
    return assemble_block_penalty(blocks)


def _check_targets(train: Dataset, hierarchy: Hierarchy):
    if train.d2 != hierarchy.n_nodes:
        raise DataError(f"data has {train.d2} targets, hierarchy has {hierarchy.n_nodes} nodes")
    names = tuple(train.target_names)
    if set(names) == set(map(str, hierarchy.labels)) and names != tuple(map(str, hierarchy.labels)):
        raise DataError("target columns must follow the bottom-first node order")


def bottom_up_problem(Phi: np.ndarray, Y: np.ndarray, S: np.ndarray, weights=None,
                      penalty=None) -> WeaklProblem:
    """Risk ``(1/n) sum ||Lambda (S Phi_t theta - Y_t)||^2 + ||M theta||^2``."""
    SPhi = np.einsum("ab,nbd->nad", S, np.asarray(Phi))
    return WeaklProblem(SPhi, Y, penalty, None if weights is None else np.asarray(weights))


@dataclass(eq=False)
class HierModel:
    method: str
    hierarchy: Hierarchy
    specs: list
    fitted: FittedModel
    meta: dict = field(default_factory=dict)

    @property
    def theta(self) -> np.ndarray:
        return self.fitted.theta

    def node_predictions(self, data: Dataset) -> np.ndarray:
        """Per-model-node forecasts (bottom nodes for BU/T, all nodes for G)."""
        Phi = feature_tensor(self.specs, data, self.fitted.scaling)
        return np.einsum("nrd,d->nr", Phi, self.theta).real

    def predict(self, data: Dataset) -> np.ndarray:
        """``n x l1`` forecasts in node order."""
        out = self.node_predictions(data)
        if self.method == "weakl-g":
            return out
        return out @ self.hierarchy.S.T


def _scaling(train: Dataset) -> Scaling:
    return train.scaling if train.scaling is not None else Scaling.fit(train)


def fit_weakl_bu(train: Dataset, hierarchy: Hierarchy, specs, lam=0.0, weights=None) -> HierModel:
    """Bottom-node models learned against every node of the hierarchy.

    ``specs`` holds one spec list per bottom node (or one list shared by all);
    ``lam`` gives penalty weights per node (scalar, or per-node per-effect);
    ``weights`` is the diagonal of ``Lambda`` (see :func:`node_weights`).
    """
    return _fit_bu_like("weakl-bu", train, hierarchy, specs, lam, weights)


def fit_weakl_t(train: Dataset, hierarchy: Hierarchy, specs, lam=0.0, weights=None,
                transfer: Sequence = (), alpha=None, strength: float = 0.0) -> HierModel:
    """Bottom-up fit plus a transfer penalty tying the blocks of the nodes in
    ``transfer`` (labels or bottom indices) to a common, ``alpha``-weighted value."""
    return _fit_bu_like("weakl-t", train, hierarchy, specs, lam, weights, transfer, alpha, strength)


def _fit_bu_like(method, train, hierarchy, specs, lam, weights, transfer=(), alpha=None,
                 strength=0.0) -> HierModel:
    _check_targets(train, hierarchy)
    scaling = _scaling(train)
    specs = [resolve_specs(s, scaling) for s in _node_specs(specs, hierarchy.n_bottom)]
    Phi = feature_tensor(specs, train, scaling)
    M = _node_penalty(specs, lam)
    meta = {}
    if method == "weakl-t":
        if strength < 0:
            raise ConfigError("transfer strength must be non-negative")
        J = _bottom_indices(hierarchy, transfer)
        dims = {sum(s.dim for s in specs[j]) for j in J}
        if len(dims) != 1:
            raise ConfigError("transfer nodes must share the same block dimension")
        alpha = np.ones(len(J)) if alpha is None else np.asarray(alpha, dtype=float)
        offsets = np.concatenate([[0], np.cumsum([sum(s.dim for s in sp) for sp in specs])])
        R = transfer_rows(dims.pop(), J, alpha, offsets, M.dim)
        if strength > 0:
            M = M.with_constraint(R, strength)
        meta.update(transfer=list(J), alpha=alpha.tolist(), strength=float(strength))
    Lam = node_weights(hierarchy, weights)
    problem = bottom_up_problem(Phi, train.targets, hierarchy.S, Lam, M)
    fitted = fit_weakl(problem, specs, scaling)
    meta["weights"] = Lam.tolist()
    return HierModel(method, hierarchy, specs, fitted, meta)


def _bottom_indices(hierarchy: Hierarchy, nodes) -> list[int]:
    out = []
    for v in nodes:
        i = v if isinstance(v, (int, np.integer)) and v not in hierarchy.labels else hierarchy.index(v)
        if not 0 <= i < hierarchy.n_bottom:
            raise ConfigError(f"transfer node {v!r} is not a bottom node")
        out.append(int(i))
    return out


def fit_weakl_g(train: Dataset, hierarchy: Hierarchy, specs, lam=0.0, gamma=None) -> HierModel:
    """One model per node (all ``l1`` of them) with the coherence penalty
    ``(1/n) sum ||Gamma (S Pi_b - I) Phi_t theta||^2``."""
    _check_targets(train, hierarchy)
    scaling = _scaling(train)
    specs = [resolve_specs(s, scaling) for s in _node_specs(specs, hierarchy.n_nodes)]
    Phi = feature_tensor(specs, train, scaling)
    Gam = node_weights(hierarchy, 0.0 if gamma is None else gamma)
    A = Gam[:, None] * (hierarchy.S @ hierarchy.bottom_selector() - np.eye(hierarchy.n_nodes))
    rows = np.concatenate([Phi, np.einsum("ab,nbd->nad", A, Phi)], axis=1)
    Y = np.concatenate([train.targets, np.zeros_like(train.targets)], axis=1)
    fitted = fit_weakl(WeaklProblem(rows, Y, _node_penalty(specs, lam)), specs, scaling)
    return HierModel("weakl-g", hierarchy, specs, fitted, {"gamma": Gam.tolist()})


def shrink_covariance(W: np.ndarray, shrinkage: float = DEFAULT_SHRINKAGE) -> np.ndarray:
    if not 0 <= shrinkage <= 1:
        raise ConfigError("shrinkage intensity must lie in [0, 1]")
    W = np.asarray(W, dtype=float)
    return (1 - shrinkage) * W + shrinkage * np.diag(np.diag(W))


def projection_matrix(S: np.ndarray, method: str = "ols", W=None,
                      shrinkage: float = DEFAULT_SHRINKAGE) -> np.ndarray:
    """Reconciliation matrix onto ``Im(S)``: orthogonal (``ols``) or
    trace-minimizing (``mint``, ``S (S^T W^-1 S)^-1 S^T W^-1``)."""
    S = np.asarray(S, dtype=float)
    if method == "ols":
        return S @ np.linalg.solve(S.T @ S, S.T)
    if method != "mint":
        raise ConfigError(f"unknown reconciliation method {method!r}")
    if W is None:
        raise ConfigError("mint needs an error covariance W")
    W = np.asarray(W, dtype=float)
    if W.shape != (S.shape[0], S.shape[0]):
        raise DataError(f"W has shape {W.shape}, expected {(S.shape[0],) * 2}")
    Ws = shrink_covariance(0.5 * (W + W.T), shrinkage)
    try:
        factor = scipy.linalg.cho_factor(Ws)
    except np.linalg.LinAlgError:
        raise NumericalError("error covariance is not positive definite after shrinkage") from None
    WiS = scipy.linalg.cho_solve(factor, S)
    return S @ np.linalg.solve(S.T @ WiS, WiS.T)


def reconcile(Yhat, S, method: str = "ols", W=None, shrinkage: float = DEFAULT_SHRINKAGE) -> np.ndarray:
    """Project base forecasts (``l1`` vector or ``n x l1`` rows) onto ``Im(S)``."""
    Yhat = np.asarray(Yhat, dtype=float)
    if Yhat.shape[-1] != np.shape(S)[0]:
        raise DataError(f"forecasts have {Yhat.shape[-1]} nodes, S has {np.shape(S)[0]} rows")
    P = projection_matrix(S, method, W, shrinkage)
    return Yhat @ P.T


def level_mse(hierarchy: Hierarchy, y_true, y_pred) -> dict:
    """Mean squared error per level plus their sum under ``"All levels"``."""
    err = (np.asarray(y_true) - np.asarray(y_pred)) ** 2
    out = {lev: float(np.mean(err[:, idx])) for lev, idx in hierarchy.level_nodes().items()}
    out["All levels"] = float(sum(out.values()))
    return out


# --- toy benchmark -----------------------------------------------------------

TOY_S = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
TOY_METHODS = ("BU", "Rec", "MinT", "WeaKL")


@dataclass(frozen=True, eq=False)
class ToyHierarchyData:
    """Train/test draws of ``(X1, X2)`` and targets ``(Y1, Y2, Y1 + Y2)`` (bottom-first)."""

    X1: np.ndarray
    X2: np.ndarray
    Y: np.ndarray
    theta1: np.ndarray
    theta2: np.ndarray
    n_train: int

    def train(self):
        n = self.n_train
        return self.X1[:n], self.X2[:n], self.Y[:n]

    def test(self):
        n = self.n_train
        return self.X1[n:], self.X2[n:], self.Y[n:]


def toy_rng(seed: int, run: int) -> np.random.Generator:
    """Generator for Monte Carlo run ``run``; independent of scheduling."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(run)]))


def gen_toy_hierarchy(d: int, n_train: int, n_test: int, sigma2: float, seed=0) -> ToyHierarchyData:
    """Two linear bottom series sharing the noise ``eps1`` with opposite signs
    (``sigma1 = 1``), so their sum only carries ``eps2 ~ N(0, sigma2^2)``."""
    if d < 1 or n_train < 1 or n_test < 0:
        raise ConfigError("need d >= 1, n_train >= 1, n_test >= 0")
    if not 0 <= sigma2 <= 1:
        raise ConfigError("sigma2 must lie in [0, 1]")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n = n_train + n_test
    theta1 = rng.standard_normal(d)
    theta2 = rng.standard_normal(d)
    X1 = rng.standard_normal((n, d))
    X2 = rng.standard_normal((n, d))
    eps1 = rng.standard_normal(n)
    eps2 = sigma2 * rng.standard_normal(n)
    y1 = X1 @ theta1 + eps1
    y2 = X2 @ theta2 - eps1 + eps2
    Y = np.column_stack([y1, y2, y1 + y2])
    return ToyHierarchyData(X1, X2, Y, theta1, theta2, n_train)


def _ols(X, y):
    return np.linalg.lstsq(X, y, rcond=None)[0]


def toy_forecasts(data: ToyHierarchyData, sigma2: float, methods=TOY_METHODS,
                  mint_shrinkage: float = 0.0, weakl_weight: float | None = None) -> dict:
    """Test-period forecasts (``n_test x 3``, bottom-first) per method; ``None``
    when a method cannot be computed on this draw."""
    X1, X2, Y = data.train()
    T1, T2, _ = data.test()
    d = X1.shape[1]
    out = {}
    t1, t2 = _ols(X1, Y[:, 0]), _ols(X2, Y[:, 1])
    bu_test = np.column_stack([T1 @ t1, T2 @ t2])
    if "BU" in methods:
        out["BU"] = bu_test @ TOY_S.T
    if {"Rec", "MinT"} & set(methods):
        X = np.hstack([X1, X2])
        applicable = np.linalg.matrix_rank(X) == 2 * d
        if applicable:
            t3 = _ols(X, Y[:, 2])
            base_test = np.column_stack([bu_test, np.hstack([T1, T2]) @ t3])
            base_train = np.column_stack([X1 @ t1, X2 @ t2, X @ t3])
        for name in ("Rec", "MinT"):
            if name not in methods:
                continue
            if not applicable:
                out[name] = None
            elif name == "Rec":
                out[name] = reconcile(base_test, TOY_S, "ols")
            else:
                W = np.cov(Y - base_train, rowvar=False)
                out[name] = reconcile(base_test, TOY_S, "mint", W, mint_shrinkage)
    if "WeaKL" in methods:
        if weakl_weight is None:
            if sigma2 <= 0:
                raise ConfigError("the default aggregate weight 1/sigma2^2 needs sigma2 > 0")
            weakl_weight = sigma2 ** -2.0
        n = X1.shape[0]
        Phi = np.zeros((n, 2, 2 * d))
        Phi[:, 0, :d] = X1
        Phi[:, 1, d:] = X2
        # loss weight on the aggregate enters Lambda as its square root
        Lam = np.array([1.0, 1.0, np.sqrt(weakl_weight)])
        theta = fit_weakl(bottom_up_problem(Phi, Y, TOY_S, Lam)).theta
        out["WeaKL"] = np.column_stack([T1 @ theta[:d], T2 @ theta[d:]]) @ TOY_S.T
    return out


@dataclass
class ToyBenchmarkResult:
    """Mean test MSEs per (method, sigma2): columns ``mse_y1``, ``mse_y2``,
    ``mse_sum``, ``mse_hier``; inapplicable methods hold NaN."""

    table: pd.DataFrame
    d: int
    n_train: int
    n_test: int
    runs: int
    seed: int

    def row(self, method: str, sigma2: float) -> pd.Series:
        t = self.table
        hit = t[(t.method == method) & np.isclose(t.sigma2, sigma2)]
        if hit.empty:
            raise KeyError((method, sigma2))
        return hit.iloc[0]

    def hier(self, method: str) -> np.ndarray:
        return self.table[self.table.method == method].sort_values("sigma2").mse_hier.to_numpy()

    def applicable(self, method: str) -> bool:
        return bool(self.table[self.table.method == method].applicable.all())

    def to_csv(self, path) -> None:
        self.table.to_csv(path, index=False, float_format="%.10g")


def _toy_run(args):
    run, d, n_train, n_test, sigmas, methods, seed, shrink = args
    rows = []
    for s in sigmas:
        data = gen_toy_hierarchy(d, n_train, n_test, s, toy_rng(seed, run))
        _, _, Yt = data.test()
        preds = toy_forecasts(data, s, methods, shrink)
        for m in methods:
            p = preds[m]
            if p is None:
                rows.append(None)
                continue
            mse = np.mean((Yt - p) ** 2, axis=0)
            rows.append(np.append(mse, mse.sum()))
    return rows


def run_toy_benchmark(d: int = 20, n_train: int = 80, n_test: int = 20,
                      sigma2_grid: Sequence[float] = (0.25, 0.5, 0.75, 1.0), runs: int = 200,
                      methods: Sequence[str] = TOY_METHODS, seed: int = 0, workers: int = 1,
                      mint_shrinkage: float = 0.0) -> ToyBenchmarkResult:
    """Monte Carlo comparison of the toy-hierarchy estimators.

    Run ``r`` draws its data from ``(seed, r)`` and every sigma2 reuses the
    same standard-normal draws, so tables do not depend on ``workers``.
    """
    methods = tuple(methods)
    bad = set(methods) - set(TOY_METHODS)
    if bad:
        raise ConfigError(f"unknown toy methods {sorted(bad)}")
    if runs < 1:
        raise ConfigError("runs must be >= 1")
    sigmas = [float(s) for s in sigma2_grid]
    if not sigmas:
        raise ConfigError("empty sigma2 grid")
    jobs = [(r, d, n_train, n_test, sigmas, methods, seed, mint_shrinkage) for r in range(runs)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_toy_run, jobs))
    else:
        results = [_toy_run(j) for j in jobs]

    records = []
    for si, s in enumerate(sigmas):
        for mi, m in enumerate(methods):
            k = si * len(methods) + mi
            vals = [res[k] for res in results]
            ok = all(v is not None for v in vals)
            mean = np.mean(vals, axis=0) if ok else np.full(4, np.nan)
            records.append(dict(method=m, sigma2=s, mse_y1=mean[0], mse_y2=mean[1],
                                mse_sum=mean[2], mse_hier=mean[3], applicable=ok, runs=runs))
    return ToyBenchmarkResult(pd.DataFrame.from_records(records), d, n_train, n_test, runs, seed)


def ols_aggregate_mse(d: int = 20, n_train: int = 80, n_test: int = 20, sigma2: float = 0.5,
                      runs: int = 1000, seed: int = 0) -> float:
    """Mean test MSE of a plain OLS of ``Y1 + Y2`` on ``(X1 | X2)``."""
    total = 0.0
    for r in range(runs):
        data = gen_toy_hierarchy(d, n_train, n_test, sigma2, toy_rng(seed, r))
        X1, X2, Y = data.train()
        T1, T2, Yt = data.test()
        beta = _ols(np.hstack([X1, X2]), Y[:, 2])
        total += np.mean((Yt[:, 2] - np.hstack([T1, T2]) @ beta) ** 2)
    return total / runs
