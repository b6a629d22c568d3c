"""Domain types for multi-task AUC preference learning.

A dataset is a list of per-user annotation tasks (feature matrix + binary
labels). The model for user i is the linear scorer w_i = theta + g_i + p_i,
where theta is shared across users, the columns of G carry the co-clustered
group structure, and the columns of P carry sparse personal deviations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Literal, Sequence

import numpy as np


class ValidationError(ValueError):
    """Raised when a dataset or model fails its consistency checks."""

    def __init__(self, issues: Sequence[str]):
        self.issues = list(issues)
        super().__init__("; ".join(self.issues))


def _freeze(obj, name, arr):
    object.__setattr__(obj, name, arr)
    arr.flags.writeable = False


@dataclass(frozen=True)
class UserTask:
    """One user's annotations: an n x d feature matrix and labels in {-1,+1}."""

    id: str
    features: np.ndarray
    labels: np.ndarray
    n_pos: int = field(init=False)
    n_neg: int = field(init=False)

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels)
        if feats.ndim != 2:
            raise ValueError(f"user {self.id!r}: features must be 2-D, got ndim={feats.ndim}")
        if labels.ndim != 1 or labels.shape[0] != feats.shape[0]:
            raise ValueError(
                f"user {self.id!r}: labels length {labels.shape} does not match "
                f"{feats.shape[0]} feature rows"
            )
        if labels.size and not np.all(np.isin(labels, (-1, 1))):
            bad = labels[~np.isin(labels, (-1, 1))][0]
            raise ValueError(f"user {self.id!r}: labels must be -1 or +1, got {bad!r}")
        labels = labels.astype(np.int8)
        _freeze(self, "features", feats)
        _freeze(self, "labels", labels)
        object.__setattr__(self, "n_pos", int(np.sum(labels == 1)))
        object.__setattr__(self, "n_neg", int(np.sum(labels == -1)))

    @property
    def n(self) -> int:
        return self.labels.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class Dataset:
    """Ordered collection of user tasks sharing one feature dimensionality."""

    users: tuple[UserTask, ...]
    dim: int

    def __post_init__(self):
        object.__setattr__(self, "users", tuple(self.users))
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim!r}")
        object.__setattr__(self, "dim", int(self.dim))

    @property
    def n_users(self) -> int:
        return len(self.users)

    @property
    def user_ids(self) -> tuple[str, ...]:
        return tuple(u.id for u in self.users)

    def total_instances(self) -> int:
        return sum(u.n for u in self.users)


def validate_dataset(ds: Dataset, for_fit: bool = True) -> list[str]:
    """Check dataset invariants; return one message per violation.

    An empty return value means the dataset is valid. With ``for_fit`` the
    both-classes requirement (n_pos >= 1 and n_neg >= 1 per user) is
    enforced; evaluation-only datasets may relax it, in which case AUC for
    a single-class user is reported as missing rather than rejected here.
    """
    issues: list[str] = []
    if ds.n_users == 0:
        issues.append("dataset has no users")
        return issues
    seen: set[str] = set()
    for u in ds.users:
        if not u.id:
            issues.append("user with empty id")
        elif u.id in seen:
            issues.append(f"duplicate user id {u.id!r}")
        seen.add(u.id)
        if u.dim != ds.dim:
            issues.append(f"user {u.id!r}: dimension mismatch (d={u.dim}, dataset d={ds.dim})")
        if for_fit:
            if u.n_pos < 1:
                issues.append(f"user {u.id!r}: no positive labels (need n_pos >= 1)")
            if u.n_neg < 1:
                issues.append(f"user {u.id!r}: no negative labels (need n_neg >= 1)")
    return issues


@dataclass(frozen=True)
class ModelParams:
    """Model parameters (theta, G, P) with a fixed user-column order.

    The per-user weight vector theta + G[:, i] + P[:, i] is always derived,
    never stored.
    """

    theta: np.ndarray
    g: np.ndarray
    p: np.ndarray
    user_order: tuple[str, ...]

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=np.float64)
        g = np.asarray(self.g, dtype=np.float64)
        p = np.asarray(self.p, dtype=np.float64)
        order = tuple(self.user_order)
        if theta.ndim != 1:
            raise ValueError("theta must be a vector")
        d = theta.shape[0]
        n_users = len(order)
        if g.shape != (d, n_users):
            raise ValueError(f"g must have shape ({d}, {n_users}), got {g.shape}")
        if p.shape != (d, n_users):
            raise ValueError(f"p must have shape ({d}, {n_users}), got {p.shape}")
        _freeze(self, "theta", theta)
        _freeze(self, "g", g)
        _freeze(self, "p", p)
        object.__setattr__(self, "user_order", order)

    @classmethod
    def zeros(cls, dim: int, user_order: Sequence[str]) -> "ModelParams":
        n_users = len(user_order)
        return cls(np.zeros(dim), np.zeros((dim, n_users)), np.zeros((dim, n_users)),
                   tuple(user_order))

    @property
    def dim(self) -> int:
        return self.theta.shape[0]

    @property
    def n_users(self) -> int:
        return len(self.user_order)

    def user_weights(self, i: int) -> np.ndarray:
        """Derived weight vector theta + G[:, i] + P[:, i] for user index i."""
        if not 0 <= i < self.n_users:
            raise IndexError(f"user index {i} out of range [0, {self.n_users})")
        return self.theta + self.g[:, i] + self.p[:, i]

    def weight_matrix(self) -> np.ndarray:
        """All derived weights as a d x U matrix (column i is user i)."""
        return self.theta[:, None] + self.g + self.p

    def weights_for(self, user_id: str) -> tuple[np.ndarray, bool]:
        """Weights for a user id; unknown ids fall back to the consensus theta.

        Returns (weights, known). The consensus fallback is flagged so callers
        can surface it in reports.
        """
        try:
            i = self.user_order.index(user_id)
        except ValueError:
            return self.theta.copy(), False
        return self.user_weights(i), True


@dataclass(frozen=True)
class Hyperparams:
    """Regularization weights and optimizer knobs.

    kappa is the group count: the top-kappa singular values of G escape
    shrinkage. Values above min(d, U) are clamped at fit time with a warning.
    """

    lambda1: float = 0.0
    lambda2: float = 0.0
    lambda3: float = 0.0
    kappa: int = 5
    rho0: float = 1.0
    alpha: float = 2.0
    max_iters: int = 500
    tol: float = 1e-6

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "lambda3"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative, got {getattr(self, name)}")
        if self.kappa < 1:
            raise ValueError(f"kappa must be a positive integer, got {self.kappa}")
        if self.rho0 <= 0:
            raise ValueError(f"rho0 must be positive, got {self.rho0}")
        if self.alpha <= 1:
            raise ValueError(f"alpha must be > 1 for the line search to grow, got {self.alpha}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be positive, got {self.max_iters}")
        if self.tol <= 0:
            raise ValueError(f"tol must be positive, got {self.tol}")


@dataclass(frozen=True)
class UserLossCache:
    """Cached class means that make the linear-time loss/gradient possible.

    With ytilde = (y + 1)/2, the bipartite mis-ranking Laplacian is
    diag(ytilde/n_pos + (1 - ytilde)/n_neg) minus a rank-2 coupling built
    from the class indicator vectors; caching the per-class feature means
    removes every pairwise term.
    """

    mean_pos_x: np.ndarray
    mean_neg_x: np.ndarray
    diag_weights: np.ndarray
    ytilde: np.ndarray

    def __post_init__(self):
        for name in ("mean_pos_x", "mean_neg_x", "diag_weights", "ytilde"):
            _freeze(self, name, np.asarray(getattr(self, name), dtype=np.float64))


StopReason = Literal["tolerance", "max_iters"]


@dataclass(frozen=True)
class IterRecord:
    """One solver iteration: objective split, accepted step scale, deltas.

    d_theta/d_g/d_p are squared norms of the parameter changes, the
    quantities whose running minimum the convergence theory bounds by C_T/T.
    """

    iter: int
    objective: float
    loss: float
    reg1: float
    reg2: float
    reg3: float
    rho: float
    d_theta: float
    d_g: float
    d_p: float


@dataclass(frozen=True)
class FitReport:
    iterations: tuple[IterRecord, ...]
    converged: bool
    stop_reason: StopReason

    def __post_init__(self):
        object.__setattr__(self, "iterations", tuple(self.iterations))

    def objectives(self) -> np.ndarray:
        return np.array([r.objective for r in self.iterations])


FitCallback = Callable[[IterRecord, ModelParams], None]
