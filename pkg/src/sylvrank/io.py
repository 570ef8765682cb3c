"""JSON and CSV readers/writers for models, sample sets, traces and reports.

Floats are written with their shortest round-trip representation, so every
file reads back to bit-identical arrays. Complex arrays are stored as
``{"real": ..., "imag": ...}`` objects of nested lists; real arrays as plain
nested lists. The dtype therefore survives a round trip.
"""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path

import numpy as np

from .compression import CompressionReport
from .constraints import SampleSet
from .model import AlphaFunction, EvalPoint, StructuredModel

FORMAT_VERSION = 1

try:  # Python 3.11+
    import tomllib as _toml
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as _toml


def encode_array(M) -> object:
    M = np.asarray(M)
    if np.iscomplexobj(M):
        return {"real": M.real.tolist(), "imag": M.imag.tolist()}
    return M.astype(float).tolist()


def decode_array(obj) -> np.ndarray:
    if isinstance(obj, dict):
        return np.asarray(obj["real"], dtype=float) + 1j * np.asarray(obj["imag"], dtype=float)
    return np.asarray(obj, dtype=float)


def _complex_pair(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def encode_alpha(f: AlphaFunction) -> dict:
    d = {"kind": f.kind, "scale": f.scale}
    for key in ("power", "tau", "index"):
        v = getattr(f, key)
        if v is not None:
            d[key] = v
    return d


def decode_alpha(d: dict) -> AlphaFunction:
    return AlphaFunction(d["kind"], power=d.get("power"), tau=d.get("tau"), index=d.get("index"),
                         scale=float(d.get("scale", 1.0)))


def model_to_dict(model: StructuredModel) -> dict:
    return {
        "format": "structured-model",
        "version": FORMAT_VERSION,
        "alphas": [encode_alpha(f) for f in model.alphas],
        "A": [encode_array(a) for a in model.A],
        "B": encode_array(model.B),
        "C": encode_array(model.C),
        "symmetric": bool(model.symmetric),
        "meta": jsonable(model.meta),
    }


def model_from_dict(d: dict) -> StructuredModel:
    return StructuredModel(
        tuple(decode_alpha(a) for a in d["alphas"]),
        [decode_array(a) for a in d["A"]],
        decode_array(d["B"]),
        decode_array(d["C"]),
        symmetric=bool(d.get("symmetric", False)),
        meta=dict(d.get("meta", {})),
    )


def _encode_point(x: EvalPoint) -> dict:
    if x.s is not None:
        return {"s": _complex_pair(x.s)}
    return {"p": list(x.p)}


def _decode_point(d: dict) -> EvalPoint:
    if "s" in d:
        re, im = d["s"]
        return EvalPoint(s=complex(re, im))
    return EvalPoint(p=tuple(d["p"]))


def samples_to_dict(samples: SampleSet) -> dict:
    rows = []
    for j, x in enumerate(samples.points):
        row = {"point": _encode_point(x), "H": encode_array(samples.responses[j])}
        if samples.has_directions:
            row["b"] = encode_array(samples.right_dirs[j])
            row["c"] = encode_array(samples.left_dirs[j])
        rows.append(row)
    return {
        "format": "sample-set",
        "version": FORMAT_VERSION,
        "l": samples.l,
        "m": samples.m,
        "conjugate_closed": bool(samples.conjugate_closed),
        "samples": rows,
    }


def samples_from_dict(d: dict) -> SampleSet:
    rows = d["samples"]
    l, m = int(d["l"]), int(d["m"])
    pts = [_decode_point(r["point"]) for r in rows]
    H = np.array([decode_array(r["H"]).reshape(l, m) for r in rows], dtype=complex)
    b = c = None
    if rows and "b" in rows[0]:
        b = np.array([decode_array(r["b"]) for r in rows], dtype=complex)
        c = np.array([decode_array(r["c"]) for r in rows], dtype=complex)
    return SampleSet(pts, H, b, c, conjugate_closed=bool(d.get("conjugate_closed", False)))


def write_json(path, obj) -> None:
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, allow_nan=True)
        fh.write("\n")


def read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def save_model(path, model: StructuredModel) -> None:
    write_json(path, model_to_dict(model))


def load_model(path) -> StructuredModel:
    return model_from_dict(read_json(path))


def save_samples(path, samples: SampleSet) -> None:
    write_json(path, samples_to_dict(samples))


def load_samples(path) -> SampleSet:
    return samples_from_dict(read_json(path))


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_csv(path, header, rows, comment: str | None = None) -> None:
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        if comment:
            for line in comment.splitlines():
                fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else _fmt(v) for v in row])


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    return rows[0], rows[1:]


def read_csv_columns(path) -> dict[str, np.ndarray]:
    """Numeric CSV as a dict of float columns."""
    header, rows = read_csv(path)
    data = np.array([[float(v) for v in r] for r in rows], dtype=float).reshape(len(rows), len(header))
    return {h: data[:, i] for i, h in enumerate(header)}


TRACE_HEADER = ("step", "objective", "residual_l2", "wnn_term")


def save_trace(path, trace) -> None:
    write_csv(path, TRACE_HEADER, [(int(t[0]), *t[1:]) for t in trace])


def load_trace(path) -> list[tuple]:
    cols = read_csv_columns(path)
    return [(int(s), float(j), float(r), float(w)) for s, j, r, w in
            zip(*(cols[h] for h in TRACE_HEADER))]


SPECTRA_HEADER = ("index", "sv_horizontal", "sv_vertical")


def save_spectra(path, report: CompressionReport) -> None:
    write_csv(path, SPECTRA_HEADER, report.rows())


def load_spectra(path) -> tuple[np.ndarray, np.ndarray]:
    cols = read_csv_columns(path)
    h, v = cols["sv_horizontal"], cols["sv_vertical"]
    return h[~np.isnan(h)], v[~np.isnan(v)]


def point_columns(points) -> tuple[list[str], list[list[float]]]:
    """Header fragment and per-point values describing evaluation points."""
    if points and points[0].s is not None:
        return ["s_real", "s_imag"], [[x.s.real, x.s.imag] for x in points]
    dim = len(points[0].p) if points else 0
    return [f"p{i + 1}" for i in range(dim)], [list(x.p) for x in points]


ERROR_NOTE = "error = ||H - H_r||_F / max(||H||_F, 1e-300) (relative Frobenius error)"


def save_errors(path, points, errors, absolute: bool = False) -> None:
    head, vals = point_columns(list(points))
    note = "error = ||H - H_r||_F (absolute error)" if absolute else ERROR_NOTE
    write_csv(path, ["index", *head, "error"],
              [(i, *v, e) for i, (v, e) in enumerate(zip(vals, errors))], comment=note)


def load_errors(path) -> tuple[list[EvalPoint], np.ndarray]:
    cols = read_csv_columns(path)
    err = cols["error"]
    if "s_real" in cols:
        pts = [EvalPoint(s=complex(a, b)) for a, b in zip(cols["s_real"], cols["s_imag"])]
    else:
        keys = sorted((k for k in cols if k.startswith("p")), key=lambda k: int(k[1:]))
        pts = [EvalPoint(p=tuple(row)) for row in zip(*(cols[k] for k in keys))]
    return pts, err


def load_config(path) -> dict:
    """Flat or sectioned option dictionary from a TOML or JSON file."""
    path = os.fspath(path)
    if path.endswith(".toml"):
        with open(path, "rb") as fh:
            return _toml.load(fh)
    if path.endswith(".json"):
        return read_json(path)
    raise ValueError(f"config must be .toml or .json, got {path}")


def jsonable(obj):
    """Recursively convert numpy scalars/arrays and non-finite floats for json.dump."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return _complex_pair(obj)
    return obj

