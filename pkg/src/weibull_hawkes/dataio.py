"""CSV/JSON persistence for event data, models, ground truth and reports.

Dataset: ``<name>.csv`` with header ``seq_id,time,type`` (types 1-based, times
with 12 significant digits) plus sidecar ``<name>.meta.json`` holding
``c_count``, ``time_unit`` and per-sequence ``windows`` ``[[T_b, T_e], ...]``.
"""
import csv
import io
import json
from pathlib import Path

import numpy as np

from .basis import BasisConfig
from .intensity import EventSequence, ModelParams
from .simulate import GroundTruth

HEADER = ["seq_id", "time", "type"]


class DataError(ValueError):
    """Malformed or inconsistent input file."""


def sidecar_path(path):
    path = Path(path)
    return path.with_name(path.stem + ".meta.json")


def _fmt(x):
    return f"{x:.12g}"


def write_dataset(sequences, path, c_count, time_unit="time"):
    path = Path(path)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    for k, s in enumerate(sequences):
        for t, c in zip(s.times, s.types):
            w.writerow([k, _fmt(t), int(c) + 1])
    path.write_text(buf.getvalue())
    meta = {
        "c_count": int(c_count),
        "time_unit": time_unit,
        "windows": [[float(s.t_begin), float(s.t_end)] for s in sequences],
    }
    write_json(meta, sidecar_path(path))


def read_metadata(path):
    side = sidecar_path(path)
    try:
        meta = json.loads(side.read_text())
    except FileNotFoundError:
        raise DataError(f"{side}: metadata sidecar not found") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{side}: invalid JSON ({exc})") from None
    for key in ("c_count", "windows"):
        if key not in meta:
            raise DataError(f"{side}: missing field '{key}'")
    return meta


def read_dataset(path):
    """Validated sequences; errors name the offending CSV row (1 = header)."""
    path = Path(path)
    meta = read_metadata(path)
    c_count = int(meta["c_count"])
    windows = meta["windows"]
    per_seq = [([], []) for _ in windows]
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != HEADER:
            raise DataError(f"{path}: row 1: expected header {','.join(HEADER)}, got {header}")
        last_seq = -1
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise DataError(f"{path}: row {row_no}: expected 3 fields, got {len(row)}")
            try:
                k, t, c = int(row[0]), float(row[1]), int(row[2])
            except ValueError:
                raise DataError(f"{path}: row {row_no}: malformed values {row}") from None
            if not 0 <= k < len(windows):
                raise DataError(f"{path}: row {row_no}: seq_id {k} has no window in metadata")
            if k < last_seq:
                raise DataError(f"{path}: row {row_no}: rows not grouped by seq_id")
            last_seq = k
            if not 1 <= c <= c_count:
                raise DataError(f"{path}: row {row_no}: type {c} outside 1..{c_count}")
            t_b, t_e = windows[k]
            if not (t > 0 and t_b < t <= t_e):
                raise DataError(f"{path}: row {row_no}: time {t} outside ({t_b}, {t_e}] or not > 0")
            times, types = per_seq[k]
            if times and t <= times[-1]:
                raise DataError(f"{path}: row {row_no}: time {t} not increasing within sequence {k}")
            times.append(t)
            types.append(c - 1)
    return [EventSequence(np.array(ts), np.array(cs, dtype=np.int64), w[0], w[1])
            for (ts, cs), w in zip(per_seq, windows)]


def write_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def model_to_dict(params):
    b = params.basis
    return {
        "c_count": params.c_count,
        "basis": {"m_count": b.m_count, "centers": b.centers.tolist(),
                  "bandwidth": b.bandwidth, "support": b.support},
        "mu": params.mu.tolist(),
        "rho": params.rho.tolist(),
        "a": params.coef.tolist(),
    }


def _require(doc, key, where):
    if key not in doc:
        raise DataError(f"{where}: missing field '{key}'")
    return doc[key]


def model_from_dict(doc, where="model"):
    c = int(_require(doc, "c_count", where))
    bd = _require(doc, "basis", where)
    m = int(_require(bd, "m_count", f"{where}.basis"))
    try:
        basis = BasisConfig(m, _require(bd, "centers", f"{where}.basis"),
                            float(_require(bd, "bandwidth", f"{where}.basis")),
                            float(_require(bd, "support", f"{where}.basis")))
    except ValueError as exc:
        raise DataError(f"{where}.basis: {exc}") from None
    mu = np.asarray(_require(doc, "mu", where), dtype=float)
    rho = np.asarray(_require(doc, "rho", where), dtype=float)
    try:
        a = np.asarray(_require(doc, "a", where), dtype=float)
    except ValueError:
        raise DataError(f"{where}.a: ragged array, expected {c}x{c}x{m}") from None
    if mu.shape != (c,):
        raise DataError(f"{where}.mu: expected {c} values, got shape {mu.shape}")
    if rho.shape != (c,):
        raise DataError(f"{where}.rho: expected {c} values, got shape {rho.shape}")
    if a.shape != (c, c, m):
        raise DataError(f"{where}.a: expected shape {(c, c, m)}, got {a.shape}")
    try:
        return ModelParams(a, mu, rho, basis)
    except ValueError as exc:
        raise DataError(f"{where}: {exc}") from None


def write_model(params, path):
    write_json(model_to_dict(params), path)


def read_model(path):
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from None
    return model_from_dict(doc, str(path))


def truth_to_dict(truth):
    return {
        "c_count": truth.c_count,
        "kinds": truth.kinds.tolist(),
        "amplitude": truth.amplitude.tolist(),
        "omega": truth.omega.tolist(),
        "phase": truth.phase.tolist(),
        "mu": truth.mu.tolist(),
        "rho": truth.rho.tolist(),
        "square_level": truth.square_level,
        "horizon": truth.horizon,
        "epsilon": truth.epsilon,
    }


def write_truth(truth, path):
    write_json(truth_to_dict(truth), path)


def read_truth(path):
    """GroundTruth file, or a model file (fields ``a`` and ``basis``) used as truth."""
    where = str(path)
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{where}: invalid JSON ({exc})") from None
    if "a" in doc and "basis" in doc:
        return model_from_dict(doc, where)
    fields = ["kinds", "amplitude", "omega", "phase", "mu", "rho"]
    kw = {f: _require(doc, f, where) for f in fields}
    for f in ("square_level", "horizon", "epsilon"):
        if f in doc:
            kw[f] = doc[f]
    try:
        return GroundTruth(**kw)
    except ValueError as exc:
        raise DataError(f"{where}: {exc}") from None
