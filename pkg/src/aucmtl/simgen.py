"""Synthetic personalized-annotation generator.

Per user, features are standard normal and scores come from the true model
s = X (theta + g_i + p_i) + noise; the top-k scores are labeled +1 and the
rest -1, so every user has exactly k positives before splitting. theta is
uniform-plus-normal, G carries block-constant-mean structure on a handful
of feature x user rectangles, and P is nonzero only on a few user columns.

Randomness uses the counter-based Philox generator with explicit stream
splitting: spawn key (0,) drives the global parameters and spawn key (1, i)
drives everything for user i (features, noise, split shuffle), so per-user
data does not depend on how many users are generated.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import Dataset, ModelParams, UserTask

Range = tuple[int, int]  # 1-based inclusive, matching the block notation G(lo:hi, lo:hi)
Block = tuple[Range, Range]  # (feature range, user range)

# Paper-layout rectangles as fractions of (dim, n_users); scaling these and
# rounding reproduces the original spans exactly at 80 features x 100 users.
_BLOCK_FRACTIONS = (
    ((0.0, 0.25), (0.0, 0.2)),
    ((0.25, 0.5), (0.2, 0.4)),
    ((0.5, 0.625), (0.4, 0.6)),
    ((0.625, 0.875), (0.6, 0.8)),
    ((0.875, 1.0), (0.8, 1.0)),
)
_P_COL_FRACTIONS = ((0.0, 0.05), (0.09, 0.15), (0.19, 0.25))


def _scale_range(frac: tuple[float, float], n: int) -> Range:
    lo = int(frac[0] * n) + 1
    hi = int(frac[1] * n)
    return lo, hi


def default_block_spec(dim: int, n_users: int) -> list[Block]:
    """Co-cluster rectangles laid out proportionally to the original grid.

    Rectangles that collapse to nothing at very small scales are dropped, so
    tiny configurations still generate (with a sparser or even zero G).
    """
    blocks = [(_scale_range(f, dim), _scale_range(u, n_users))
              for f, u in _BLOCK_FRACTIONS]
    return [(f, u) for f, u in blocks if f[1] >= f[0] and u[1] >= u[0]]


def default_p_col_spec(n_users: int) -> list[Range]:
    cols = [_scale_range(f, n_users) for f in _P_COL_FRACTIONS]
    return [r for r in cols if r[1] >= r[0]]


@dataclass(frozen=True)
class SimConfig:
    """Generator settings; defaults are a desk-scale version of the protocol."""

    n_users: int = 20
    n_samples: int = 500
    dim: int = 40
    n_top_pos: int = 50
    noise_sd: float = 0.01
    seed: int = 0
    train_fraction: float = 0.85
    block_spec: tuple[Block, ...] | None = None
    p_col_spec: tuple[Range, ...] | None = None

    def __post_init__(self):
        if self.n_users < 1 or self.n_samples < 2 or self.dim < 1:
            raise ValueError("need n_users >= 1, n_samples >= 2, dim >= 1")
        if not 0 < self.n_top_pos < self.n_samples:
            raise ValueError(f"n_top_pos must be in (0, n_samples), got {self.n_top_pos}")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be non-negative")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must be in (0, 1)")
        if self.block_spec is not None:
            object.__setattr__(self, "block_spec",
                               tuple((tuple(f), tuple(u)) for f, u in self.block_spec))
            for (flo, fhi), (ulo, uhi) in self.block_spec:
                if not (1 <= flo <= fhi <= self.dim and 1 <= ulo <= uhi <= self.n_users):
                    raise ValueError(
                        f"infeasible block ({flo},{fhi})x({ulo},{uhi}) for "
                        f"dim={self.dim}, n_users={self.n_users}")
        if self.p_col_spec is not None:
            object.__setattr__(self, "p_col_spec",
                               tuple(tuple(r) for r in self.p_col_spec))
            for lo, hi in self.p_col_spec:
                if not 1 <= lo <= hi <= self.n_users:
                    raise ValueError(f"infeasible personalized column range ({lo},{hi}) "
                                     f"for n_users={self.n_users}")

    @classmethod
    def paper_scale(cls, seed: int = 0) -> "SimConfig":
        """100 users x 5000 samples x 80 features, top-100 positives."""
        return cls(n_users=100, n_samples=5000, dim=80, n_top_pos=100,
                   noise_sd=0.01, seed=seed)

    def blocks(self) -> list[Block]:
        if self.block_spec is not None:
            return list(self.block_spec)
        return default_block_spec(self.dim, self.n_users)

    def p_cols(self) -> list[Range]:
        if self.p_col_spec is not None:
            return list(self.p_col_spec)
        return default_p_col_spec(self.n_users)

    @property
    def total_annotations(self) -> int:
        return self.n_users * self.n_samples


@dataclass(frozen=True)
class SimResult:
    train: Dataset
    test: Dataset
    truth: ModelParams
    config: SimConfig


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


def _user_id(i: int) -> str:
    return f"u{i:04d}"


def _draw_truth(cfg: SimConfig, rng: np.random.Generator) -> ModelParams:
    d, n_users = cfg.dim, cfg.n_users
    theta = rng.uniform(0.0, 5.0, size=d) + rng.normal(0.0, 0.5, size=d)
    g = np.zeros((d, n_users))
    for (flo, fhi), (ulo, uhi) in cfg.blocks():
        center = rng.uniform(0.0, 10.0)
        g[flo - 1:fhi, ulo - 1:uhi] = rng.normal(
            center, 2.5, size=(fhi - flo + 1, uhi - ulo + 1))
    p = np.zeros((d, n_users))
    for lo, hi in cfg.p_cols():
        p[:, lo - 1:hi] = rng.uniform(0.0, 10.0, size=(d, hi - lo + 1))
    return ModelParams(theta, g, p, tuple(_user_id(i) for i in range(n_users)))


def generate(cfg: SimConfig) -> SimResult:
    """Generate the train/test split and the ground-truth model."""
    truth = _draw_truth(cfg, _stream(cfg.seed, 0))
    n = cfg.n_samples
    n_train = int(cfg.train_fraction * n + 0.5)
    train_users, test_users = [], []
    for i in range(cfg.n_users):
        rng = _stream(cfg.seed, 1, i)
        x = rng.normal(size=(n, cfg.dim))
        noise = rng.normal(0.0, cfg.noise_sd, size=n)
        scores = x @ truth.user_weights(i) + noise
        labels = np.full(n, -1, dtype=np.int8)
        # stable sort on -scores: boundary ties resolve to the lower index
        top = np.argsort(-scores, kind="stable")[:cfg.n_top_pos]
        labels[top] = 1
        perm = rng.permutation(n)
        tr = np.sort(perm[:n_train])
        te = np.sort(perm[n_train:])
        uid = _user_id(i)
        train_users.append(UserTask(uid, x[tr], labels[tr]))
        test_users.append(UserTask(uid, x[te], labels[te]))
    return SimResult(Dataset(tuple(train_users), cfg.dim),
                     Dataset(tuple(test_users), cfg.dim), truth, cfg)


@dataclass(frozen=True)
class BlockStat:
    feature_range: Range
    user_range: Range
    true_mean: float
    learned_mean: float


@dataclass(frozen=True)
class StructureReport:
    """Entrywise comparison of the derived weight matrices W = theta + G + P."""

    w_true: np.ndarray
    w_learned: np.ndarray
    abs_err: np.ndarray
    corr: float
    block_stats: tuple[BlockStat, ...] = field(default=())

    def write_csv(self, heat_path, block_path=None):
        """Long-form heat data (feature, user, w_true, w_learned, abs_err)."""
        d, n_users = self.w_true.shape
        with open(heat_path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["feature", "user", "w_true", "w_learned", "abs_err"])
            for j in range(n_users):
                for r in range(d):
                    wr.writerow([r + 1, j + 1,
                                 f"{self.w_true[r, j]:.17g}",
                                 f"{self.w_learned[r, j]:.17g}",
                                 f"{self.abs_err[r, j]:.17g}"])
        if block_path is not None:
            with open(block_path, "w", newline="") as fh:
                wr = csv.writer(fh, lineterminator="\n")
                wr.writerow(["feature_lo", "feature_hi", "user_lo", "user_hi",
                             "true_mean", "learned_mean"])
                for b in self.block_stats:
                    wr.writerow([b.feature_range[0], b.feature_range[1],
                                 b.user_range[0], b.user_range[1],
                                 f"{b.true_mean:.17g}", f"{b.learned_mean:.17g}"])


def structure_report(true: ModelParams, learned: ModelParams,
                     blocks: Sequence[Block] | None = None) -> StructureReport:
    """Compare a learned model's derived weights against the ground truth."""
    if true.dim != learned.dim or true.n_users != learned.n_users:
        raise ValueError(f"shape mismatch: true is {true.dim}x{true.n_users}, "
                         f"learned is {learned.dim}x{learned.n_users}")
    w_true = true.weight_matrix()
    w_learned = learned.weight_matrix()
    abs_err = np.abs(w_true - w_learned)
    corr = float(np.corrcoef(w_true.ravel(), w_learned.ravel())[0, 1])
    stats = []
    for (flo, fhi), (ulo, uhi) in (blocks or ()):
        t = w_true[flo - 1:fhi, ulo - 1:uhi]
        l = w_learned[flo - 1:fhi, ulo - 1:uhi]
        stats.append(BlockStat((flo, fhi), (ulo, uhi),
                               float(t.mean()), float(l.mean())))
    return StructureReport(w_true, w_learned, abs_err, corr, tuple(stats))
