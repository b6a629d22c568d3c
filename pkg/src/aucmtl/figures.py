"""Figure rendering for the CLI report paths.

Each report command writes its delimited output and, unless disabled, a
companion PNG next to it: convergence panels from a fit trace, a per-user
AUC chart from an evaluation, timing curves from the benchmark, and
weight-structure heatmaps from a simulation comparison.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .core import FitReport
from .metrics import MacroAuc
from .simgen import StructureReport


def save_trace_figure(report: FitReport, path) -> None:
    """Two panels: objective/loss decay and squared parameter deltas."""
    recs = report.iterations
    iters = [r.iter for r in recs]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.4))
    ax1.plot(iters, [r.objective for r in recs], label="objective")
    ax1.plot(iters, [r.loss for r in recs], label="loss", ls="--")
    ax1.set_xlabel("iteration")
    ax1.set_yscale("log")
    ax1.legend(frameon=False)
    ax1.set_title("loss convergence")
    for name in ("d_theta", "d_g", "d_p"):
        vals = np.array([getattr(r, name) for r in recs])
        ax2.plot(iters, np.maximum(vals, 1e-300), label=name)
    ax2.set_xlabel("iteration")
    ax2.set_yscale("log")
    ax2.legend(frameon=False)
    ax2.set_title("parameter convergence")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_auc_figure(result: MacroAuc, path) -> None:
    defined = [(r.user_id, r.auc) for r in result.per_user if r.auc is not None]
    fig, ax = plt.subplots(figsize=(max(4.0, 0.25 * len(defined) + 1.5), 3.2))
    if defined:
        defined.sort(key=lambda t: t[1])
        ids, aucs = zip(*defined)
        ax.bar(range(len(aucs)), aucs, color="steelblue")
        if result.mean is not None:
            ax.axhline(result.mean, color="crimson", ls="--",
                       label=f"macro mean {result.mean:.4f}")
            ax.legend(frameon=False)
        ax.set_xticks(range(len(ids)))
        ax.set_xticklabels(ids, rotation=90, fontsize=6)
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("AUC")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_bench_figure(rows: list[dict], path) -> None:
    """Timing curves, log-log; naive entries recorded as nan are skipped."""
    ns = np.array([r["n"] for r in rows], dtype=float)
    t_fast = np.array([r["t_fast"] for r in rows], dtype=float)
    t_naive = np.array([r["t_naive"] for r in rows], dtype=float)
    fig, ax = plt.subplots(figsize=(4.5, 3.4))
    ax.loglog(ns, t_fast, "o-", label="factored")
    ok = ~np.isnan(t_naive)
    if ok.any():
        ax.loglog(ns[ok], t_naive[ok], "s-", label="dense/naive")
    ax.set_xlabel("instances per user")
    ax.set_ylabel("seconds per evaluation")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_structure_figure(rep: StructureReport, path) -> None:
    fig, axes = plt.subplots(1, 3, figsize=(10.5, 3.2))
    lo = min(rep.w_true.min(), rep.w_learned.min())
    hi = max(rep.w_true.max(), rep.w_learned.max())
    for ax, mat, title, kw in (
            (axes[0], rep.w_true, "ground truth", dict(vmin=lo, vmax=hi)),
            (axes[1], rep.w_learned, "learned", dict(vmin=lo, vmax=hi)),
            (axes[2], rep.abs_err, "|error|", {})):
        im = ax.imshow(mat, aspect="auto", **kw)
        ax.set_title(title)
        ax.set_xlabel("user")
        ax.set_ylabel("feature")
        fig.colorbar(im, ax=ax, shrink=0.85)
    fig.suptitle(f"weight recovery, corr = {rep.corr:.3f}", fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
