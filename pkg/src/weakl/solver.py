"""Closed-form minimizer of the weighted, penalized least-squares risk

    L(theta) = (1/n) sum_j ||Lambda (Phi_j theta - Y_j)||^2 + ||M theta||^2,

whose unique minimizer (when the regularized Gram matrix is invertible) is

    theta = (sum_j Phi_j^* Lambda^* Lambda Phi_j + n M^* M)^{-1} sum_j Phi_j^* Lambda^* Lambda Y_j.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .constraints import PenaltyMatrix
from .data_model import Scaling
from .errors import DataError, NumericalError, SingularSystemError
from .feature_maps import feature_tensor

log = logging.getLogger(__name__)

# Gram matrices conditioned worse than this are treated as singular.
COND_LIMIT = 1e13
JITTER = 1e-10
RESIDUAL_TOL = 1e-8


def _all_real(*arrays) -> bool:
    return not any(np.iscomplexobj(a) for a in arrays if a is not None)


@dataclass(frozen=True, eq=False)
class WeaklProblem:
    """Inputs of the generic risk.

    ``features`` is ``n x r x dim`` (one ``r x dim`` matrix per time step) or
    ``n x dim`` for a scalar target. ``weights`` is ``None`` (identity), a
    vector (diagonal ``Lambda``) or a ``k x r`` matrix. ``penalty`` is ``M``
    (any number of rows) or ``None`` for no penalty.
    """

    features: np.ndarray
    targets: np.ndarray
    penalty: object = None
    weights: np.ndarray | None = None

    def __post_init__(self):
        Phi = np.asarray(self.features)
        Y = np.asarray(self.targets)
        if Phi.ndim == 2:
            Phi = Phi[:, None, :]
        if Y.ndim == 1:
            Y = Y[:, None]
        if Phi.ndim != 3 or Y.ndim != 2 or Phi.shape[:2] != Y.shape:
            raise DataError(f"features {Phi.shape} and targets {Y.shape} are inconsistent")
        dim = Phi.shape[2]
        M = self.penalty
        zero_blocks = ()
        if isinstance(M, PenaltyMatrix):
            zero_blocks = M.zero_blocks
            M = M.matrix
        M = np.zeros((0, dim)) if M is None else np.atleast_2d(np.asarray(M))
        if M.shape[1] != dim:
            raise DataError(f"penalty has {M.shape[1]} columns, expected {dim}")
        W = self.weights
        if W is not None:
            W = np.asarray(W)
            if W.ndim == 1:
                W = np.diag(W)
            if W.ndim != 2 or W.shape[1] != Y.shape[1]:
                raise DataError(f"weight matrix of shape {W.shape} for {Y.shape[1]} outputs")
        for name, a in (("features", Phi), ("targets", Y), ("penalty", M), ("weights", W)):
            if a is not None and not np.all(np.isfinite(a)):
                raise NumericalError(f"non-finite values in {name}")
        object.__setattr__(self, "features", Phi)
        object.__setattr__(self, "targets", Y)
        object.__setattr__(self, "penalty", M)
        object.__setattr__(self, "weights", W)
        object.__setattr__(self, "_zero_blocks", zero_blocks)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[2]

    @property
    def is_complex(self) -> bool:
        return not _all_real(self.features, self.targets, self.penalty, self.weights)

    def weighted_system(self) -> tuple[np.ndarray, np.ndarray]:
        """``Lambda Phi_j`` and ``Lambda Y_j`` stacked over time steps."""
        Phi, Y, W = self.features, self.targets, self.weights
        if W is not None:
            Phi = np.einsum("kr,nrd->nkd", W, Phi)
            Y = Y @ W.T
        return Phi.reshape(-1, self.dim), Y.reshape(-1)

    def normal_equations(self) -> tuple[np.ndarray, np.ndarray]:
        B, z = self.weighted_system()
        M = self.penalty
        G = B.conj().T @ B + self.n * (M.conj().T @ M)
        rhs = B.conj().T @ z
        G = 0.5 * (G + G.conj().T)
        return G, rhs


@dataclass(eq=False)
class FittedModel:
    """Coefficients plus whatever is needed to predict from raw data."""

    theta: np.ndarray
    specs: list | None = None
    scaling: Scaling | None = None
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.theta.size


def solve_gram(G: np.ndarray, rhs: np.ndarray, zero_blocks=()) -> tuple[np.ndarray, dict]:
    """Solve ``G theta = rhs`` for Hermitian positive definite ``G``."""
    dim = G.shape[0]
    if dim == 0:
        return np.zeros(0, dtype=rhs.dtype), {"cond": 1.0, "jitter": 0.0, "rel_residual": 0.0}
    hint = f" (penalty blocks with lambda=0: {list(zero_blocks)})" if zero_blocks else ""
    eig = np.linalg.eigvalsh(G)
    top = eig[-1]
    cond = np.inf if eig[0] <= 0 else top / eig[0]
    if top <= 0 or cond > COND_LIMIT:
        raise SingularSystemError(f"regularized Gram matrix is singular (cond={cond:.3g}){hint}",
                                  zero_blocks)
    jitter = 0.0
    try:
        factor = scipy.linalg.cho_factor(G, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        jitter = JITTER * np.trace(G).real / dim
        log.warning("Cholesky failed; retrying with jitter %.3g", jitter)
        try:
            factor = scipy.linalg.cho_factor(G + jitter * np.eye(dim), lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            raise SingularSystemError(f"Gram matrix not positive definite{hint}", zero_blocks) from None
    theta = scipy.linalg.cho_solve(factor, rhs, check_finite=False)
    scale = np.linalg.norm(rhs)
    rel = np.linalg.norm(G @ theta - rhs) / scale if scale > 0 else np.linalg.norm(G @ theta)
    if not np.all(np.isfinite(theta)) or rel > RESIDUAL_TOL:
        raise SingularSystemError(f"solve residual {rel:.3g} too large{hint}", zero_blocks)
    return theta, {"cond": float(cond), "jitter": float(jitter), "rel_residual": float(rel)}


def fit_weakl(problem: WeaklProblem, specs=None, scaling: Scaling | None = None) -> FittedModel:
    """Exact risk minimizer. Raises :class:`SingularSystemError` when the
    regularized Gram matrix is not invertible."""
    G, rhs = problem.normal_equations()
    theta, info = solve_gram(G, rhs, problem._zero_blocks)
    info.update(n=problem.n, dim=problem.dim, complex=problem.is_complex)
    return FittedModel(theta, specs, scaling, {"diagnostics": info})


def empirical_risk(theta, problem: WeaklProblem) -> float:
    theta = np.asarray(theta)
    R = np.einsum("nrd,d->nr", problem.features, theta) - problem.targets
    if problem.weights is not None:
        R = R @ problem.weights.T
    data = np.sum(np.abs(R) ** 2) / problem.n
    pen = np.sum(np.abs(problem.penalty @ theta) ** 2)
    return float(data + pen)


def predict(model: FittedModel, X, return_imag: bool = False):
    """Real part of ``Phi_t theta`` for each row (``n x d2``).

    With ``return_imag=True`` also returns the largest imaginary magnitude,
    which should be negligible for real targets.
    """
    if model.specs is None:
        raise DataError("model carries no feature specs")
    Phi = feature_tensor(model.specs, X, model.scaling)
    if Phi.shape[2] != model.dim:
        raise DataError(f"features give {Phi.shape[2]} columns, model has {model.dim}")
    out = np.einsum("nrd,d->nr", Phi, model.theta)
    imag = float(np.max(np.abs(out.imag))) if out.size and np.iscomplexobj(out) else 0.0
    if return_imag:
        return out.real, imag
    return out.real
