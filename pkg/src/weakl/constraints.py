"""Penalty matrices, projectors and linear-constraint helpers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import ConfigError, NumericalError
from .feature_maps import CATEGORICAL, FOURIER, LINEAR, FeatureMapSpec, frequency_grid

RIDGE = "ridge"
SOBOLEV = "sobolev"

# Above this, (P^* P)^{-1} is numerically meaningless.
GRAM_COND_LIMIT = 1e12


def sobolev_weights(m: int, s: int, q: int = 1) -> np.ndarray:
    """``1 + ||k||_2^{2s}`` over the frequency grid, in map order."""
    k = frequency_grid(m, q)
    return 1.0 + np.sum(k ** 2, axis=1) ** s


def sobolev_diagonal(m: int, s: int, lam: float, q: int = 1) -> np.ndarray:
    if m < 0 or s < 1 or lam < 0:
        raise ConfigError(f"need m >= 0, s >= 1, lambda >= 0 (got {m}, {s}, {lam})")
    return np.diag(np.sqrt(lam * sobolev_weights(m, s, q)))


@dataclass(frozen=True)
class PenaltyBlock:
    kind: str
    lam: float
    dim: int = 1
    m: int = 0
    s: int = 2
    q: int = 1

    def __post_init__(self):
        if self.kind not in (RIDGE, SOBOLEV):
            raise ConfigError(f"unknown penalty kind {self.kind!r}")
        if self.lam < 0:
            raise ConfigError("penalty weights must be non-negative")
        if self.kind == SOBOLEV:
            object.__setattr__(self, "dim", (2 * self.m + 1) ** self.q)

    def matrix(self) -> np.ndarray:
        if self.kind == RIDGE:
            return np.sqrt(self.lam) * np.eye(self.dim)
        return sobolev_diagonal(self.m, self.s, self.lam, self.q)

    @classmethod
    def for_map(cls, spec: FeatureMapSpec, lam: float) -> "PenaltyBlock":
        """Default penalty of an effect: ridge for linear and categorical maps,
        Sobolev for Fourier maps."""
        if spec.kind == FOURIER:
            return cls(SOBOLEV, lam, m=spec.m, s=spec.s, q=spec.q)
        if spec.kind in (LINEAR, CATEGORICAL):
            return cls(RIDGE, lam, dim=spec.dim)
        raise ConfigError(spec.kind)


@dataclass(frozen=True, eq=False)
class PenaltyMatrix:
    """The matrix ``M`` of the risk, remembering which blocks it came from."""

    matrix: np.ndarray
    blocks: tuple = ()
    extra_rows: int = field(default=0)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def zero_blocks(self) -> tuple:
        return tuple(i for i, b in enumerate(self.blocks) if b.lam == 0)

    @property
    def injective(self) -> bool:
        if self.blocks and not self.extra_rows:
            return not self.zero_blocks
        return np.linalg.matrix_rank(self.matrix) == self.dim

    def with_constraint(self, C: np.ndarray, lam_c: float) -> "PenaltyMatrix":
        """Stack ``sqrt(lam_c) C`` on top of ``M`` (inexact linear constraint)."""
        rows = augment_penalty(self.matrix, C, lam_c)
        return PenaltyMatrix(rows, self.blocks, self.extra_rows + C.shape[0])

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)


def assemble_block_penalty(blocks: Sequence[PenaltyBlock], dim: int | None = None) -> PenaltyMatrix:
    mats = [b.matrix() for b in blocks]
    total = sum(m.shape[0] for m in mats)
    if dim is not None and total != dim:
        raise ConfigError(f"penalty blocks cover {total} coefficients, expected {dim}")
    mat = scipy.linalg.block_diag(*mats) if mats else np.zeros((0, 0))
    return PenaltyMatrix(mat, tuple(blocks))


def augment_penalty(M, C: np.ndarray, lam_c: float) -> np.ndarray:
    if lam_c < 0:
        raise ConfigError("constraint weight must be non-negative")
    M = np.asarray(M)
    if C.shape[1] != M.shape[1]:
        raise ConfigError(f"constraint has {C.shape[1]} columns, penalty {M.shape[1]}")
    return np.vstack([np.sqrt(lam_c) * C, M])


def _check_injective(P: np.ndarray) -> np.ndarray:
    P = np.atleast_2d(np.asarray(P))
    if P.shape[0] < P.shape[1]:
        raise NumericalError(f"P of shape {P.shape} cannot be injective")
    sv = np.linalg.svd(P, compute_uv=False)
    if sv.size and (sv[-1] == 0 or (sv[0] / sv[-1]) ** 2 > GRAM_COND_LIMIT):
        raise NumericalError("P is rank deficient (cond(P^*P) above 1e12)")
    return P


def orthogonal_complement_projector(P) -> np.ndarray:
    """``C = I - P (P^* P)^{-1} P^*``, the orthogonal projector onto Im(P)^perp."""
    P = _check_injective(P)
    Q, _ = np.linalg.qr(P)
    C = np.eye(P.shape[0], dtype=Q.dtype) - Q @ Q.conj().T
    # exact Hermitian symmetry
    return 0.5 * (C + C.conj().T)


def exact_constraint_reparam(Phi_t: np.ndarray, P) -> np.ndarray:
    """Feature matrix for the reduced parameter ``theta'`` with ``theta = P theta'``."""
    P = _check_injective(P)
    Phi_t = np.asarray(Phi_t)
    if Phi_t.shape[-1] != P.shape[0]:
        raise ConfigError(f"feature matrix has {Phi_t.shape[-1]} columns, P has {P.shape[0]} rows")
    return Phi_t @ P


def lift(theta_reduced, P) -> np.ndarray:
    return np.asarray(P) @ np.asarray(theta_reduced)


def transfer_rows(D: int, J: Sequence[int], alpha: Sequence[float],
                  offsets: Sequence[int] | None = None, dim: int | None = None) -> np.ndarray:
    """Rows ``(I - P_J) Pi_J`` whose squared norm is the transfer penalty.

    Node ``J[i]`` owns coefficients ``offsets[J[i]] : offsets[J[i]] + D``;
    by default node ``j`` starts at ``j * D``.
    """
    J = list(J)
    alpha = np.asarray(alpha, dtype=float)
    if len(J) < 2:
        raise ConfigError("a transfer group needs at least two nodes")
    if alpha.shape != (len(J),):
        raise ConfigError("one weight per transfer node is required")
    if np.any(alpha == 0):
        raise ConfigError("transfer weights must be non-zero")
    if len(set(J)) != len(J):
        raise ConfigError("transfer nodes must be distinct")
    starts = [j * D for j in J] if offsets is None else [int(offsets[j]) for j in J]
    if dim is None:
        dim = max(starts) + D
    Pi = np.zeros((D * len(J), dim))
    for i, a in enumerate(starts):
        if a + D > dim:
            raise ConfigError("transfer block exceeds the parameter vector")
        Pi[i * D:(i + 1) * D, a:a + D] = np.eye(D)
    M_J = np.kron(alpha[:, None], np.eye(D))
    return orthogonal_complement_projector(M_J) @ Pi


def transfer_penalty(D: int, J: Sequence[int], alpha: Sequence[float],
                     offsets: Sequence[int] | None = None, dim: int | None = None) -> np.ndarray:
    """``Pi_J^* (I - P_J) Pi_J`` as a ``dim x dim`` matrix."""
    R = transfer_rows(D, J, alpha, offsets, dim)
    return R.conj().T @ R


@dataclass(frozen=True, eq=False)
class ConstraintSpec:
    """A linear prior ``theta in Im(P)``, enforced exactly or through a penalty."""

    P: np.ndarray | None = None
    C: np.ndarray | None = None
    exact: bool = False
    weight: float = 0.0

    def __post_init__(self):
        if self.P is None and self.C is None:
            raise ConfigError("constraint needs P or C")
        if self.exact and self.P is None:
            raise ConfigError("exact constraints need a basis P")
        if self.weight < 0:
            raise ConfigError("constraint weight must be non-negative")

    def projector(self) -> np.ndarray:
        if self.C is not None:
            return np.asarray(self.C)
        return orthogonal_complement_projector(self.P)

    def apply(self, penalty: PenaltyMatrix) -> PenaltyMatrix:
        if self.exact:
            raise ConfigError("exact constraints lower to reparameterization, not a penalty")
        return penalty.with_constraint(self.projector(), self.weight)
