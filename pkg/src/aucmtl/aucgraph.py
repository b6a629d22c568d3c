"""Pairwise AUC surrogate loss and gradient over the bipartite ranking graph.

For user i with scores f = X w, the squared-surrogate ranking loss

    l_i = 0.5 * (1/(n_pos*n_neg)) * sum_{p in pos} sum_{q in neg} (1 - (f_p - f_q))^2

equals 0.5 * tau' L tau with tau = ytilde - f, where L is the Laplacian of
the complete bipartite graph between the user's positive and negative
instances with edge weight 1/(n_pos*n_neg). L has the factored form

    L = diag(ytilde/n_pos + (1-ytilde)/n_neg) - rank-2 coupling,

so L v costs O(n) per vector and the whole loss/gradient costs O(n*d)
instead of O(n_pos*n_neg*d). The dense-Laplacian and explicit-pairwise
routines are kept as verification oracles and as the "original" baseline
for the evaluation benchmark.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import Dataset, ModelParams, UserLossCache, UserTask


class SingleClassError(ValueError):
    """Pairwise ranking quantities are undefined without both classes."""

    def __init__(self, user_id: str):
        self.user_id = user_id
        super().__init__(f"user {user_id!r} has a single label class; "
                         "the pairwise AUC loss needs at least one positive "
                         "and one negative instance")


@dataclass(frozen=True)
class LossGrad:
    """Total loss with gradients for theta (vector) and G, P (d x U).

    grad_p is the same object as grad_g (the per-user gradient is identical
    for both factors) and grad_theta is its exact column sum.
    """

    loss: float
    grad_theta: np.ndarray
    grad_g: np.ndarray
    grad_p: np.ndarray


def _require_both_classes(u: UserTask):
    if u.n_pos < 1 or u.n_neg < 1:
        raise SingleClassError(u.id)


def build_cache(u: UserTask) -> UserLossCache:
    """Precompute the class-mean vectors and diagonal weights for one user.

    O(n*d); rebuilt only when the dataset changes, never per iteration.
    """
    _require_both_classes(u)
    ytilde = (u.labels.astype(np.float64) + 1.0) / 2.0
    pos_mask = ytilde
    neg_mask = 1.0 - ytilde
    mean_pos_x = u.features.T @ pos_mask / u.n_pos
    mean_neg_x = u.features.T @ neg_mask / u.n_neg
    diag_weights = pos_mask / u.n_pos + neg_mask / u.n_neg
    return UserLossCache(mean_pos_x, mean_neg_x, diag_weights, ytilde)


def apply_laplacian(cache: UserLossCache, v: np.ndarray) -> np.ndarray:
    """Factored product L v in O(n), shared by the loss and gradient paths."""
    ytilde = cache.ytilde
    n_pos = ytilde.sum()
    n_neg = ytilde.shape[0] - n_pos
    mean_pos_v = ytilde @ v / n_pos
    mean_neg_v = (v.sum() - ytilde @ v) / n_neg
    return (cache.diag_weights * v
            - ytilde * (mean_neg_v / n_pos)
            - (1.0 - ytilde) * (mean_pos_v / n_neg))


def loss_user_fast(u: UserTask, cache: UserLossCache, w: np.ndarray) -> float:
    """Ranking loss 0.5 * tau' L tau via the factored quadratic form, O(n*d)."""
    if w.shape[0] != u.dim:
        raise ValueError(f"weight length {w.shape[0]} != feature dim {u.dim}")
    tau = cache.ytilde - u.features @ w
    ytilde = cache.ytilde
    mean_pos = ytilde @ tau / u.n_pos
    mean_neg = (tau.sum() - ytilde @ tau) / u.n_neg
    quad = cache.diag_weights @ (tau * tau) - 2.0 * mean_pos * mean_neg
    return 0.5 * quad


def loss_user_naive(u: UserTask, w: np.ndarray) -> float:
    """Explicit pairwise ranking loss; the quadratic-time reference oracle.

    0.5 * mean over all (positive, negative) pairs of (1 - (f_p - f_q))^2.
    """
    _require_both_classes(u)
    f = u.features @ w
    pos = f[u.labels == 1]
    neg = f[u.labels == -1]
    margins = pos[:, None] - neg[None, :]
    return 0.5 * float(np.mean((1.0 - margins) ** 2))


def laplacian_dense(u: UserTask) -> np.ndarray:
    """Materialize the n x n bipartite Laplacian (oracle/benchmark use only)."""
    _require_both_classes(u)
    ytilde = (u.labels.astype(np.float64) + 1.0) / 2.0
    coupling = np.outer(ytilde, 1.0 - ytilde)
    coupling += coupling.T
    coupling /= u.n_pos * u.n_neg
    lap = -coupling
    diag = ytilde / u.n_pos + (1.0 - ytilde) / u.n_neg
    lap[np.diag_indices_from(lap)] += diag
    return lap


def laplacian_spectral_norm(u: UserTask) -> float:
    """Closed-form top eigenvalue of the bipartite Laplacian: n/(n_pos*n_neg)."""
    _require_both_classes(u)
    return u.n / (u.n_pos * u.n_neg)


def _grad_user_fast(u: UserTask, cache: UserLossCache, w: np.ndarray) -> np.ndarray:
    # delta_i = X' L (X w) - X' L ytilde, evaluated right-to-left so no n x n
    # or d x n intermediate is ever formed; the constant second term reduces
    # to the difference of the cached class means.
    f = u.features @ w
    return u.features.T @ apply_laplacian(cache, f) - (cache.mean_pos_x - cache.mean_neg_x)


def _grad_user_naive(u: UserTask, w: np.ndarray) -> np.ndarray:
    lap = laplacian_dense(u)
    ytilde = (u.labels.astype(np.float64) + 1.0) / 2.0
    return u.features.T @ (lap @ (u.features @ w - ytilde))


def _map_users(fn, args, threads: int):
    # Per-user work is independent; results are collected in dataset order so
    # every reduction below is deterministic regardless of scheduling.
    if threads > 1 and len(args) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, args))
    return [fn(a) for a in args]


def _check_caches(ds: Dataset, caches) -> None:
    if len(caches) != ds.n_users:
        raise ValueError(f"have {len(caches)} caches for {ds.n_users} users")


def total_loss(ds: Dataset, caches: list[UserLossCache], m: ModelParams,
               threads: int = 1) -> float:
    """Sum of per-user fast losses at the derived weights."""
    _check_caches(ds, caches)
    per_user = _map_users(
        lambda iu: loss_user_fast(ds.users[iu], caches[iu], m.user_weights(iu)),
        range(ds.n_users), threads)
    return float(sum(per_user))


def gradient_fast(ds: Dataset, caches: list[UserLossCache], m: ModelParams,
                  threads: int = 1) -> LossGrad:
    """Loss and full gradient in O(sum_i n_i * d) via the factored Laplacian."""
    _check_caches(ds, caches)

    def one(iu):
        u, cache = ds.users[iu], caches[iu]
        w = m.user_weights(iu)
        return loss_user_fast(u, cache, w), _grad_user_fast(u, cache, w)

    results = _map_users(one, range(ds.n_users), threads)
    grad_g = np.column_stack([g for _, g in results])
    grad_theta = grad_g.sum(axis=1)
    loss = float(sum(l for l, _ in results))
    return LossGrad(loss, grad_theta, grad_g, grad_g)


def gradient_naive(ds: Dataset, m: ModelParams) -> LossGrad:
    """Dense-Laplacian gradient oracle; O(n_i^2 * d) per user."""
    cols = []
    loss = 0.0
    for iu, u in enumerate(ds.users):
        w = m.user_weights(iu)
        cols.append(_grad_user_naive(u, w))
        loss += loss_user_naive(u, w)
    grad_g = np.column_stack(cols)
    return LossGrad(loss, grad_g.sum(axis=1), grad_g, grad_g)
