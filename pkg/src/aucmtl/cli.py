"""Command-line interface.

Subcommands: ``simulate`` (synthetic dataset + ground truth), ``fit``
(train a model, optionally tracing convergence), ``evaluate`` (per-user and
macro AUC report), ``bench-eval`` (factored vs naive evaluation timings).
Report paths write a companion PNG figure next to each CSV/JSON output
unless --no-plots is given.

Exit codes: 0 success (fit: converged), 1 invalid input, 2 fit stopped at
the iteration cap.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from statistics import median

import numpy as np

from . import aucgraph, dataio, figures, metrics, simgen, solver
from .core import Dataset, Hyperparams, ModelParams, UserTask, ValidationError
from .dataio import DatasetFormatError, ModelSchemaError

NAIVE_BENCH_SIZE_CAP = 5000

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_MAX_ITERS = 2


def _resolve_threads(value: int | None) -> int:
    if value is not None:
        return max(1, value)
    env = os.environ.get("AUCMTL_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            print(f"warning: ignoring non-integer AUCMTL_THREADS={env!r}", file=sys.stderr)
    return os.cpu_count() or 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aucmtl",
        description="Multi-task AUC preference learning: consensus + grouped "
                    "+ personalized linear scoring models.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate a synthetic annotation dataset")
    sim.add_argument("--out", required=True, metavar="DIR",
                     help="output directory for train.csv/test.csv/truth_model.json/simconfig.json")
    sim.add_argument("--users", type=int, default=20, help="number of users (default 20)")
    sim.add_argument("--samples", type=int, default=500,
                     help="instances per user (default 500)")
    sim.add_argument("--dim", type=int, default=40, help="feature dimension (default 40)")
    sim.add_argument("--top-pos", type=int, default=50,
                     help="positives per user: top scores get +1 (default 50)")
    sim.add_argument("--noise-sd", type=float, default=0.01,
                     help="score noise standard deviation (default 0.01)")
    sim.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    sim.add_argument("--paper-scale", action="store_true",
                     help="use the full protocol scale: 100 users x 5000 samples, "
                          "80 features, top-100 positives")

    fit = sub.add_parser("fit", help="fit a model with the proximal gradient solver")
    fit.add_argument("--data", required=True, help="training dataset CSV")
    fit.add_argument("--lambda1", type=float, default=0.0, help="ridge weight on theta (default 0)")
    fit.add_argument("--lambda2", type=float, default=0.0,
                     help="tail singular-value weight on G (default 0)")
    fit.add_argument("--lambda3", type=float, default=0.0,
                     help="column-sparsity weight on P (default 0)")
    fit.add_argument("--kappa", type=int, default=5,
                     help="group count: top singular values of G kept unshrunk (default 5)")
    fit.add_argument("--rho0", type=float, default=1.0, help="initial step scale (default 1)")
    fit.add_argument("--alpha", type=float, default=2.0,
                     help="line-search growth factor, must be > 1 (default 2)")
    fit.add_argument("--max-iters", type=int, default=500, help="iteration cap (default 500)")
    fit.add_argument("--tol", type=float, default=1e-6,
                     help="relative objective-change stopping threshold (default 1e-6)")
    fit.add_argument("--out", required=True, metavar="MODEL", help="output model JSON")
    fit.add_argument("--trace", metavar="CSV", help="write per-iteration convergence trace")
    fit.add_argument("--init", metavar="MODEL", help="warm-start model JSON")
    fit.add_argument("--threads", type=int, default=None,
                     help="per-user parallelism (default: AUCMTL_THREADS or all cores)")
    fit.add_argument("--no-plots", action="store_true",
                     help="skip the PNG figure next to the trace CSV")

    ev = sub.add_parser("evaluate", help="score a model on a dataset")
    ev.add_argument("--data", required=True, help="evaluation dataset CSV")
    ev.add_argument("--model", required=True, help="model JSON")
    ev.add_argument("--out", required=True, metavar="JSON", help="output report JSON")
    ev.add_argument("--threads", type=int, default=None,
                    help="per-user parallelism (default: AUCMTL_THREADS or all cores)")
    ev.add_argument("--no-plots", action="store_true",
                    help="skip the PNG figure next to the report")

    bench = sub.add_parser("bench-eval",
                           help="time the factored vs naive loss+gradient evaluation")
    bench.add_argument("--sizes", default="1000,2000,4000",
                       help="comma-separated instance counts (default 1000,2000,4000); "
                            f"the naive path is skipped (nan) above {NAIVE_BENCH_SIZE_CAP}")
    bench.add_argument("--dim", type=int, default=50, help="feature dimension (default 50)")
    bench.add_argument("--repeats", type=int, default=5,
                       help="timing repetitions; medians are reported (default 5)")
    bench.add_argument("--out", required=True, metavar="CSV", help="output timing CSV")
    bench.add_argument("--no-plots", action="store_true",
                       help="skip the PNG figure next to the CSV")
    return parser


def _cmd_simulate(args) -> int:
    try:
        if args.paper_scale:
            cfg = simgen.SimConfig.paper_scale(seed=args.seed)
        else:
            cfg = simgen.SimConfig(n_users=args.users, n_samples=args.samples,
                                   dim=args.dim, n_top_pos=args.top_pos,
                                   noise_sd=args.noise_sd, seed=args.seed)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        result = simgen.generate(cfg)
        dataio.write_dataset(result.train, out / "train.csv")
        dataio.write_dataset(result.test, out / "test.csv")
        dataio.write_model(result.truth, out / "truth_model.json",
                           meta={"seed": cfg.seed, "role": "ground-truth"})
        dataio.write_simconfig(cfg, out / "simconfig.json")
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print(f"simulated {cfg.n_users} users x {cfg.n_samples} samples "
          f"({cfg.total_annotations} annotations, d={cfg.dim}) -> {out}")
    return EXIT_OK


def _cmd_fit(args) -> int:
    threads = _resolve_threads(args.threads)
    try:
        hp = Hyperparams(lambda1=args.lambda1, lambda2=args.lambda2,
                         lambda3=args.lambda3, kappa=args.kappa, rho0=args.rho0,
                         alpha=args.alpha, max_iters=args.max_iters, tol=args.tol)
        ds = dataio.read_dataset(args.data)
        init = dataio.read_model(args.init).params if args.init else None
        params, report = solver.fit(ds, hp, init=init, threads=threads)
    except (ValidationError, DatasetFormatError, ModelSchemaError, ValueError,
            solver.LineSearchError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID

    dataio.write_model(params, args.out, hyperparams=hp,
                       meta={"created": time.strftime("%Y-%m-%dT%H:%M:%S"),
                             "data": str(args.data)})
    if args.trace:
        dataio.write_trace(report, args.trace)
        if not args.no_plots:
            figures.save_trace_figure(report, Path(args.trace).with_suffix(".png"))

    train_auc = metrics.auc_macro(ds, params)
    last = report.iterations[-1] if report.iterations else None
    print(f"fit: {len(report.iterations)} iterations, stop_reason={report.stop_reason}")
    if last is not None:
        print(f"final objective: {last.objective:.10g} "
              f"(loss {last.loss:.10g}, rho {last.rho:.6g})")
    if train_auc.mean is not None:
        print(f"training macro AUC: {train_auc.mean:.4f}")
    print(f"model written: {args.out}")
    return EXIT_OK if report.converged else EXIT_MAX_ITERS


def _cmd_evaluate(args) -> int:
    threads = _resolve_threads(args.threads)
    try:
        ds = dataio.read_dataset(args.data)
        saved = dataio.read_model(args.model)
        result = metrics.auc_macro(ds, saved.params)
        loss = _eval_surrogate_loss(ds, saved.params, threads)
    except (DatasetFormatError, ModelSchemaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID

    unknown = [r.user_id for r in result.per_user if r.consensus_fallback]
    payload = {
        "per_user": [{"user_id": r.user_id, "auc": r.auc, "n_pos": r.n_pos,
                      "n_neg": r.n_neg, "consensus_fallback": r.consensus_fallback}
                     for r in result.per_user],
        "macro_mean": result.mean,
        "macro_std": result.std,
        "missing": list(result.missing),
        "unknown_users": unknown,
        "surrogate_loss": loss,
    }
    with open(args.out, "w") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")
    if not args.no_plots:
        figures.save_auc_figure(result, Path(args.out).with_suffix(".png"))
    mean = "undefined" if result.mean is None else f"{result.mean:.4f}"
    print(f"macro AUC: {mean} over {len(result.per_user)} users "
          f"({len(result.missing)} missing, {len(unknown)} consensus-fallback)")
    print(f"report written: {args.out}")
    return EXIT_OK


def _eval_surrogate_loss(ds, params, threads: int) -> float | None:
    # loss is defined only for users carrying both classes; sum over those
    eligible = [u for u in ds.users if u.n_pos >= 1 and u.n_neg >= 1]
    if not eligible:
        return None

    def one(u):
        cache = aucgraph.build_cache(u)
        w, _ = params.weights_for(u.id)
        return aucgraph.loss_user_fast(u, cache, w)

    if threads > 1 and len(eligible) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return float(sum(pool.map(one, eligible)))
    return float(sum(one(u) for u in eligible))


def _bench_user(n: int, dim: int, rng: np.random.Generator):
    labels = np.concatenate([np.ones(n // 2, dtype=np.int8),
                             -np.ones(n - n // 2, dtype=np.int8)])
    u = UserTask("bench", rng.normal(size=(n, dim)), labels)
    ds = Dataset((u,), dim)
    w = rng.normal(size=dim) / np.sqrt(dim)
    m = ModelParams(w, np.zeros((dim, 1)), np.zeros((dim, 1)), ("bench",))
    return ds, u, m


def _time_call(fn, repeats: int, inner: int) -> float:
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn()
        samples.append((time.perf_counter() - t0) / inner)
    return median(samples)


def run_bench(sizes: list[int], dim: int, repeats: int,
              naive_cap: int = NAIVE_BENCH_SIZE_CAP, seed: int = 7) -> list[dict]:
    """Median times for one loss+gradient evaluation, factored vs naive."""
    rows = []
    rng = np.random.Generator(np.random.Philox(seed))
    for n in sizes:
        ds, u, m = _bench_user(n, dim, rng)

        def fast():
            cache = aucgraph.build_cache(u)
            aucgraph.loss_user_fast(u, cache, m.theta)
            aucgraph.gradient_fast(ds, [cache], m)

        inner = max(3, 2_000_000 // (n * dim))
        t_fast = _time_call(fast, repeats, inner)
        if n <= naive_cap:
            def naive():
                aucgraph.loss_user_naive(u, m.theta)
                aucgraph.gradient_naive(ds, m)

            t_naive = _time_call(naive, repeats, 1)
            ratio = t_naive / t_fast
        else:
            t_naive = float("nan")
            ratio = float("nan")
        rows.append({"n": n, "t_fast": t_fast, "t_naive": t_naive, "ratio": ratio})
    return rows


def _cmd_bench_eval(args) -> int:
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
        if not sizes or any(s < 4 for s in sizes):
            raise ValueError(f"--sizes must list integers >= 4, got {args.sizes!r}")
        if args.repeats < 1:
            raise ValueError("--repeats must be >= 1")
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    rows = run_bench(sizes, args.dim, args.repeats)
    with open(args.out, "w", newline="") as fh:
        fh.write("n,t_fast,t_naive,ratio\n")
        for r in rows:
            fh.write(f"{r['n']},{r['t_fast']:.6e},{r['t_naive']:.6e},{r['ratio']:.3f}\n")
    if not args.no_plots:
        figures.save_bench_figure(rows, Path(args.out).with_suffix(".png"))
    for r in rows:
        print(f"n={r['n']:>7}  fast {r['t_fast']:.3e}s  naive {r['t_naive']:.3e}s  "
              f"speedup {r['ratio']:.1f}x")
    print(f"benchmark written: {args.out}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"simulate": _cmd_simulate, "fit": _cmd_fit,
                "evaluate": _cmd_evaluate, "bench-eval": _cmd_bench_eval}
    return handlers[args.command](args)


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
