"""Model, dataset, basis, trace and manifest files.

Models, bases and manifests are JSON documents; datasets are JSON lines with
one transition per row; traces are comma-separated with a header row. Every
float is written with 17 significant digits so files round-trip exactly.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from config import VERSION
from edmd import ObservableBasis, Trajectory, TrajectoryDataset
from errors import DatasetError, ModelInvalidError, ModelParseError
from model import KoopmanModel, positive_int
from utils.text_utils import fmt_float

logger = logging.getLogger(__name__)

TRACE_HEADER = ["sweep", "beta_index", "beta", "cost", "best_cost", "flipped_up", "flipped_down"]


def _load_json(path, what: str):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ModelParseError(f"cannot read {what}: {e.strerror or e}", path=path)
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelParseError(e.msg, path=path, line=e.lineno, column=e.colno)


def _dump_json(path, document) -> None:
    Path(path).write_text(json.dumps(document, indent=2) + "\n", encoding="utf-8")


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


# ---------------------------------------------------------------------------
# model files
# ---------------------------------------------------------------------------

def model_to_dict(model: KoopmanModel) -> dict:
    n = model.n_psi
    document = {
        "n_psi": n,
        "horizon": model.horizon,
        "actions": list(model.actions),
        "A": {label: [float(v) for v in model.A[k].reshape(n * n)] for k, label in enumerate(model.actions)},
        "c": [float(v) for v in model.c],
        "psi1": [float(v) for v in model.psi1],
    }
    if model.action_mask is not None:
        document["action_mask"] = [[model.actions[a] for a in step] for step in model.action_mask]
    return document


def _matrix(value, n: int, label: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.shape == (n * n,):
        return arr.reshape(n, n)
    if arr.shape == (n, n):
        return arr
    raise ModelInvalidError(f"A[{label!r}] must hold {n * n} numbers (row-major), got shape {arr.shape}")


def model_from_dict(document: dict) -> KoopmanModel:
    if not isinstance(document, dict):
        raise ModelInvalidError("model document must be a JSON object")
    missing = [k for k in ("n_psi", "horizon", "A", "c", "psi1") if k not in document]
    if missing:
        raise ModelInvalidError(f"model document is missing {', '.join(missing)}")
    n = positive_int("n_psi", document["n_psi"])

    raw_A = document["A"]
    if isinstance(raw_A, dict):
        actions = [str(a) for a in document.get("actions") or raw_A.keys()]
        unknown = set(map(str, raw_A.keys())) - set(actions)
        if unknown:
            raise ModelInvalidError(f"A has matrices for undeclared actions {sorted(unknown)}")
        absent = [a for a in actions if a not in raw_A]
        if absent:
            raise ModelInvalidError(f"no matrix for action {absent[0]!r}")
        matrices = [_matrix(raw_A[a], n, a) for a in actions]
    else:
        actions = [str(a) for a in document.get("actions") or range(len(raw_A))]
        if len(actions) != len(raw_A):
            raise ModelInvalidError(f"{len(raw_A)} matrices for {len(actions)} action labels")
        matrices = [_matrix(m, n, a) for m, a in zip(raw_A, actions)]

    mask = document.get("action_mask")
    if mask is not None:
        index = {label: k for k, label in enumerate(actions)}
        resolved = []
        for t, step in enumerate(mask):
            row = []
            for a in step:
                if isinstance(a, str):
                    if a not in index:
                        raise ModelInvalidError(f"action_mask step {t} names unknown action {a!r}")
                    row.append(index[a])
                else:
                    row.append(int(a))
            resolved.append(row)
        mask = resolved

    try:
        matrices = np.stack(matrices)
    except ValueError as e:
        raise ModelInvalidError(f"cannot stack A: {e}")
    return KoopmanModel(A=matrices, c=document["c"], psi1=document["psi1"],
                        horizon=document["horizon"], actions=tuple(actions), action_mask=mask)


def read_model(path) -> KoopmanModel:
    """Parse a model file; any failure names the path."""
    document = _load_json(path, "model file")
    try:
        model = model_from_dict(document)
    except ModelParseError:
        raise
    except (ModelInvalidError, TypeError, ValueError) as e:
        raise ModelParseError(str(e), path=path)
    logger.debug("loaded %s: n_psi=%d T=%d |U|=%d", path, model.n_psi, model.horizon, model.n_actions)
    return model


def write_model(model: KoopmanModel, path) -> None:
    _dump_json(path, model_to_dict(model))


def model_digest(model: KoopmanModel) -> str:
    """sha256 of the canonical model document."""
    canonical = json.dumps(model_to_dict(model), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# observable bases
# ---------------------------------------------------------------------------

def read_basis(path) -> ObservableBasis:
    document = _load_json(path, "basis file")
    try:
        return ObservableBasis(centers=document["centers"], lam=float(document["lambda"]),
                               extra_affine=bool(document.get("extra_affine", False)))
    except KeyError as e:
        raise ModelParseError(f"basis is missing {e.args[0]!r}", path=path)


def write_basis(basis: ObservableBasis, path) -> None:
    _dump_json(path, {"centers": basis.centers.tolist(), "lambda": basis.lam,
                      "extra_affine": basis.extra_affine})


# ---------------------------------------------------------------------------
# trajectory datasets (JSON lines)
# ---------------------------------------------------------------------------

def read_dataset(path, actions: Optional[Sequence[str]] = None) -> TrajectoryDataset:
    """One transition per line.

    Raw rows are {"state", "action", "next_state"} with optional "cost" and
    "next_cost"; pre-lifted rows are {"psi", "action", "next_psi"}. An
    optional first line {"actions": [...]} declares the action labels and
    their order; otherwise labels are taken in order of first appearance.
    Blank lines and lines starting with '#' are skipped.
    """
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise DatasetError(f"{path}: cannot read dataset: {e.strerror or e}")

    labels: List[str] = [str(a) for a in actions] if actions else []
    declared = bool(labels)
    rows = []
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as e:
            raise DatasetError(f"{path} (line {lineno} column {e.colno}): {e.msg}")
        if not isinstance(row, dict):
            raise DatasetError(f"{path} (line {lineno}): expected a JSON object")
        if "actions" in row and "action" not in row:
            if not declared:
                labels = [str(a) for a in row["actions"]]
                declared = True
            continue
        rows.append((lineno, row))

    if not rows:
        raise DatasetError(f"{path}: dataset has no transitions")

    trajectories = []
    for lineno, row in rows:
        lifted = "psi" in row
        keys = ("psi", "next_psi") if lifted else ("state", "next_state")
        if "action" not in row or any(k not in row for k in keys):
            raise DatasetError(f"{path} (line {lineno}): a row needs action and {' and '.join(keys)}")
        label = str(row["action"])
        if label not in labels:
            if declared:
                raise DatasetError(f"{path} (line {lineno}): unknown action {label!r}")
            labels.append(label)
        costs = None
        if "cost" in row or "next_cost" in row:
            costs = [float(row["cost"]), float(row["next_cost"])]
        trajectories.append(Trajectory(states=[row[keys[0]], row[keys[1]]],
                                       actions=[labels.index(label)], costs=costs))
    return TrajectoryDataset(trajectories, actions=tuple(labels))


def write_dataset(dataset: TrajectoryDataset, path) -> None:
    """Write every transition as a pre-lifted row (raw point sets are written as nested lists)."""
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps({"actions": list(dataset.actions)}) + "\n")
        for tr in dataset.trajectories:
            for t, a in enumerate(tr.actions):
                here, there = np.asarray(tr.states[t]), np.asarray(tr.states[t + 1])
                if here.ndim == 1:
                    row = {"psi": here.tolist(), "action": dataset.actions[a], "next_psi": there.tolist()}
                else:
                    row = {"state": here.tolist(), "action": dataset.actions[a], "next_state": there.tolist()}
                if tr.costs is not None:
                    row["cost"] = tr.costs[t]
                    row["next_cost"] = tr.costs[t + 1]
                f.write(json.dumps(row) + "\n")


# ---------------------------------------------------------------------------
# traces
# ---------------------------------------------------------------------------

def solve_trace_rows(result) -> List[list]:
    """One row per recorded sweep per replica slot."""
    rows = []
    M = len(result.betas)
    for rec in result.trace:
        for j in range(M):
            up = int(rec.flips_this_sweep[j]) if j < M - 1 else 0
            down = int(rec.flips_this_sweep[j - 1]) if j > 0 else 0
            rows.append([rec.sweep_index, j, result.betas[j], rec.per_replica_cost[j],
                         rec.per_replica_best[j], up, down])
    return rows


def history_trace_rows(history: Iterable[tuple]) -> List[list]:
    """Baseline histories in the trace schema: iteration as sweep, one slot, beta 0, no flips."""
    return [[k, 0, 0.0, J, best, 0, 0] for k, _elapsed, J, best in history]


def write_trace(rows: Iterable[Sequence], path) -> str:
    """Write trace rows and return the file's sha256."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for sweep, j, beta, J, best, up, down in rows:
            writer.writerow([int(sweep), int(j), fmt_float(beta), fmt_float(J), fmt_float(best), int(up), int(down)])
    return sha256_file(path)


def read_trace(path) -> List[Dict[str, float]]:
    """Parse a trace file and check its schema; raises DatasetError naming the offending line."""
    out = []
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != TRACE_HEADER:
            raise DatasetError(f"{path}: trace header must be {','.join(TRACE_HEADER)}, got {header}")
        for lineno, fields in enumerate(reader, start=2):
            if len(fields) != len(TRACE_HEADER):
                raise DatasetError(f"{path} (line {lineno}): expected {len(TRACE_HEADER)} fields, got {len(fields)}")
            try:
                row = {
                    "sweep": int(fields[0]), "beta_index": int(fields[1]), "beta": float(fields[2]),
                    "cost": float(fields[3]), "best_cost": float(fields[4]),
                    "flipped_up": int(fields[5]), "flipped_down": int(fields[6]),
                }
            except ValueError as e:
                raise DatasetError(f"{path} (line {lineno}): {e}")
            if row["flipped_up"] not in (0, 1) or row["flipped_down"] not in (0, 1):
                raise DatasetError(f"{path} (line {lineno}): flip markers must be 0 or 1")
            if math.isnan(row["cost"]) or math.isnan(row["best_cost"]) or row["best_cost"] > row["cost"]:
                raise DatasetError(f"{path} (line {lineno}): best_cost {fields[4]} exceeds cost {fields[3]}")
            out.append(row)
    return out


# ---------------------------------------------------------------------------
# run manifests
# ---------------------------------------------------------------------------

def write_manifest(path, command: str, settings: dict, model: Optional[KoopmanModel] = None,
                   output_digest: Optional[str] = None) -> None:
    document = {"version": VERSION, "command": command, "settings": settings}
    if model is not None:
        document["model_sha256"] = model_digest(model)
    if output_digest is not None:
        document["output_sha256"] = output_digest
    _dump_json(path, document)


def read_manifest(path) -> dict:
    document = _load_json(path, "manifest")
    if not isinstance(document, dict) or "settings" not in document:
        raise ModelParseError("manifest has no settings", path=path)
    if document.get("version") != VERSION:
        logger.warning("manifest was written by version %s, this is %s", document.get("version"), VERSION)
    return document
