"""The 0-1 AUC metric (mis-ranking frequency, ties count one half).

Two interchangeable routes: an explicit pairwise count for small inputs and
a midrank-based O(n log n) computation above a size threshold. They agree to
floating-point accuracy including on ties, which the test suite asserts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .core import Dataset, ModelParams

PAIRWISE_SIZE_LIMIT = 512


def _split(scores, labels):
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be 1-D and the same length")
    if labels.size and not np.all(np.isin(labels, (-1, 1))):
        raise ValueError("labels must be -1 or +1")
    pos = scores[labels == 1]
    neg = scores[labels == -1]
    return pos, neg


def _auc_pairwise(pos, neg):
    diff = pos[:, None] - neg[None, :]
    wins = np.count_nonzero(diff > 0) + 0.5 * np.count_nonzero(diff == 0)
    return wins / (pos.size * neg.size)


def _auc_rank(scores, labels):
    ranks = rankdata(scores, method="average")
    n_pos = int(np.sum(labels == 1))
    n_neg = labels.shape[0] - n_pos
    rank_sum = float(ranks[np.asarray(labels) == 1].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def auc_user(scores, labels, method: str = "auto") -> float | None:
    """AUC of one user's scores: P(random positive outscores random negative).

    Ties contribute one half. Returns None when a class is absent (the AUC
    is undefined, which downstream reports list as missing rather than 0).
    """
    pos, neg = _split(scores, labels)
    if pos.size == 0 or neg.size == 0:
        return None
    if method == "auto":
        method = "pairwise" if len(scores) <= PAIRWISE_SIZE_LIMIT else "rank"
    if method == "pairwise":
        return float(_auc_pairwise(pos, neg))
    if method == "rank":
        return float(_auc_rank(np.asarray(scores, dtype=np.float64), labels))
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True)
class UserAuc:
    user_id: str
    auc: float | None
    n_pos: int
    n_neg: int
    consensus_fallback: bool


@dataclass(frozen=True)
class MacroAuc:
    """Per-user AUC table with the unweighted mean/std over defined values."""

    per_user: tuple[UserAuc, ...]
    mean: float | None
    std: float | None
    missing: tuple[str, ...]


def auc_macro(ds: Dataset, m: ModelParams) -> MacroAuc:
    """Macro (unweighted) AUC of the derived per-user weights on ds.

    Users absent from the model are scored with the consensus theta alone
    and flagged; users with a single label class have no AUC and are listed
    under missing.
    """
    rows = []
    missing = []
    for u in ds.users:
        w, known = m.weights_for(u.id)
        auc = auc_user(u.features @ w, u.labels)
        rows.append(UserAuc(u.id, auc, u.n_pos, u.n_neg, not known))
        if auc is None:
            missing.append(u.id)
    defined = np.array([r.auc for r in rows if r.auc is not None])
    mean = float(defined.mean()) if defined.size else None
    std = float(defined.std()) if defined.size else None
    return MacroAuc(tuple(rows), mean, std, tuple(missing))
