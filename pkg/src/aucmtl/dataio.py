"""Serialization: dataset CSV, model JSON, fit-trace CSV, simulator config.

Datasets travel as a single CSV with header ``user_id,label,f1,...,fd``;
rows may be grouped arbitrarily (the reader buckets by user id in order of
first appearance) and the writer emits users in order with instances in
their original order. All floats are written with 17 significant digits so
round trips are exact at float64 precision.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass

import numpy as np

from .core import Dataset, FitReport, Hyperparams, IterRecord, ModelParams, UserTask
from .simgen import SimConfig

TRACE_COLUMNS = ("iter", "objective", "loss", "reg1", "reg2", "reg3",
                 "rho", "d_theta", "d_g", "d_p")


class DatasetFormatError(ValueError):
    """Malformed dataset CSV; message carries the offending line number."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class ModelSchemaError(ValueError):
    """Malformed model JSON; message carries a JSON-pointer path."""

    def __init__(self, pointer: str, message: str):
        self.pointer = pointer
        super().__init__(f"{pointer}: {message}")


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_dataset(ds: Dataset, path) -> None:
    d = ds.dim
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["user_id", "label"] + [f"f{j + 1}" for j in range(d)])
        for u in ds.users:
            for k in range(u.n):
                wr.writerow([u.id, int(u.labels[k])] + [_fmt(v) for v in u.features[k]])


def read_dataset(path) -> Dataset:
    """Parse a dataset CSV, reporting the first problem with its line number."""
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetFormatError(1, "empty file") from None
        if len(header) < 3 or header[0] != "user_id" or header[1] != "label":
            raise DatasetFormatError(1, f"malformed header: expected "
                                        f"'user_id,label,f1,...', got {','.join(header)!r}")
        d = len(header) - 2
        expected = [f"f{j + 1}" for j in range(d)]
        if header[2:] != expected:
            raise DatasetFormatError(1, f"malformed header: feature columns must be "
                                        f"f1..f{d} in order")
        feats: dict[str, list] = {}
        labels: dict[str, list] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != d + 2:
                raise DatasetFormatError(lineno, f"ragged row: expected {d + 2} cells, "
                                                 f"got {len(row)}")
            uid = row[0]
            if not uid:
                raise DatasetFormatError(lineno, "empty user_id")
            try:
                label = float(row[1])
            except ValueError:
                raise DatasetFormatError(lineno, f"non-numeric label {row[1]!r}") from None
            if label not in (-1.0, 1.0):
                raise DatasetFormatError(lineno, f"label must be -1 or 1, got {row[1]}")
            try:
                values = [float(c) for c in row[2:]]
            except ValueError:
                bad = next(c for c in row[2:] if not _is_number(c))
                raise DatasetFormatError(lineno, f"non-numeric cell {bad!r}") from None
            feats.setdefault(uid, []).append(values)
            labels.setdefault(uid, []).append(int(label))
    if not feats:
        raise DatasetFormatError(2, "no data rows")
    users = tuple(UserTask(uid, np.array(feats[uid]), np.array(labels[uid]))
                  for uid in feats)
    return Dataset(users, d)


def _is_number(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


@dataclass(frozen=True)
class SavedModel:
    params: ModelParams
    hyperparams: Hyperparams | None
    meta: dict


def write_model(m: ModelParams, path, hyperparams: Hyperparams | None = None,
                meta: dict | None = None) -> None:
    """Model JSON: theta plus G and P stored column-major (one list per user)."""
    payload = {
        "dim": m.dim,
        "user_order": list(m.user_order),
        "theta": m.theta.tolist(),
        "g": m.g.T.tolist(),
        "p": m.p.T.tolist(),
        "hyperparams": asdict(hyperparams) if hyperparams is not None else None,
        "meta": meta or {},
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def _expect(cond: bool, pointer: str, message: str):
    if not cond:
        raise ModelSchemaError(pointer, message)


def _number_list(obj, pointer: str, length: int) -> list[float]:
    _expect(isinstance(obj, list), pointer, f"expected a list, got {type(obj).__name__}")
    _expect(len(obj) == length, pointer, f"expected {length} values, got {len(obj)}")
    for j, v in enumerate(obj):
        _expect(isinstance(v, (int, float)) and not isinstance(v, bool),
                f"{pointer}/{j}", f"expected a number, got {v!r}")
    return [float(v) for v in obj]


def read_model(path) -> SavedModel:
    with open(path, "r") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelSchemaError("", f"invalid JSON: {exc}") from None
    _expect(isinstance(payload, dict), "", "top level must be an object")
    for key in ("dim", "user_order", "theta", "g", "p"):
        _expect(key in payload, f"/{key}", "missing required key")
    dim = payload["dim"]
    _expect(isinstance(dim, int) and dim >= 1, "/dim", f"expected a positive integer, got {dim!r}")
    order = payload["user_order"]
    _expect(isinstance(order, list) and all(isinstance(s, str) and s for s in order),
            "/user_order", "expected a list of non-empty strings")
    _expect(len(set(order)) == len(order), "/user_order", "user ids must be unique")
    n_users = len(order)
    theta = _number_list(payload["theta"], "/theta", dim)
    cols = {}
    for key in ("g", "p"):
        mat = payload[key]
        _expect(isinstance(mat, list), f"/{key}", "expected a list of per-user columns")
        _expect(len(mat) == n_users, f"/{key}",
                f"expected {n_users} columns to match user_order, got {len(mat)}")
        cols[key] = [_number_list(col, f"/{key}/{i}", dim) for i, col in enumerate(mat)]
    hp = None
    if payload.get("hyperparams") is not None:
        raw = payload["hyperparams"]
        _expect(isinstance(raw, dict), "/hyperparams", "expected an object or null")
        try:
            hp = Hyperparams(**{k: raw[k] for k in (
                "lambda1", "lambda2", "lambda3", "kappa", "rho0", "alpha",
                "max_iters", "tol") if k in raw})
        except (TypeError, ValueError) as exc:
            raise ModelSchemaError("/hyperparams", str(exc)) from None
    g = np.array(cols["g"], dtype=np.float64).T if n_users else np.zeros((dim, 0))
    p = np.array(cols["p"], dtype=np.float64).T if n_users else np.zeros((dim, 0))
    params = ModelParams(np.array(theta), g, p, tuple(order))
    meta = payload.get("meta") or {}
    _expect(isinstance(meta, dict), "/meta", "expected an object")
    return SavedModel(params, hp, meta)


def write_trace(report: FitReport, path) -> None:
    """One CSV row per iteration; plot-ready convergence trace."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(TRACE_COLUMNS)
        for r in report.iterations:
            wr.writerow([r.iter] + [_fmt(getattr(r, c)) for c in TRACE_COLUMNS[1:]])


def read_trace(path) -> list[IterRecord]:
    with open(path, "r", newline="") as fh:
        reader = csv.DictReader(fh)
        rows = []
        for row in reader:
            rows.append(IterRecord(
                iter=int(row["iter"]),
                **{c: float(row[c]) for c in TRACE_COLUMNS[1:]}))
        return rows


def write_simconfig(cfg: SimConfig, path) -> None:
    payload = asdict(cfg)
    payload["block_spec"] = [list(map(list, b)) for b in cfg.blocks()]
    payload["p_col_spec"] = [list(r) for r in cfg.p_cols()]
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def read_simconfig(path) -> SimConfig:
    with open(path, "r") as fh:
        payload = json.load(fh)
    payload["block_spec"] = tuple((tuple(f), tuple(u)) for f, u in payload["block_spec"])
    payload["p_col_spec"] = tuple(tuple(r) for r in payload["p_col_spec"])
    return SimConfig(**payload)
