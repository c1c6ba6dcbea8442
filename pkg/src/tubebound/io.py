"""Problem-spec JSON, inline cross-section syntax and CSV/JSON report files."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import jsonschema

from . import cross_section as csm
from .curve import CurveSpec, PiecewisePolynomial
from .tube import ENDS, TubeProblem


class SpecError(ValueError):
    """Malformed or invalid problem specification (exit code 2)."""


_piece = {
    "type": "object",
    "properties": {
        "s_range": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        "poly_coeffs": {"type": "array", "items": {"type": "number"}, "minItems": 1},
    },
    "required": ["s_range", "poly_coeffs"],
    "additionalProperties": False,
}

_curvature = {
    "type": "object",
    "properties": {
        "pieces": {"type": "array", "items": _piece, "minItems": 1},
        "samples": {
            "type": "object",
            "properties": {"s": {"type": "array", "items": {"type": "number"}, "minItems": 2},
                           "values": {"type": "array", "items": {"type": "number"}, "minItems": 2}},
            "required": ["s", "values"],
            "additionalProperties": False,
        },
    },
    "oneOf": [{"required": ["pieces"]}, {"required": ["samples"]}],
    "additionalProperties": False,
}

SCHEMA = {
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "dimension": {"type": "integer", "enum": [2, 3]},
        "cross_section": {
            "type": "object",
            "properties": {"kind": {"enum": ["interval", "rectangle", "square", "disk", "polygon"]},
                           "params": {"type": "object"}},
            "required": ["kind", "params"],
            "additionalProperties": False,
        },
        "interval": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        "curvatures": {"type": "array", "items": _curvature, "minItems": 1},
        "ends": {"enum": list(ENDS)},
        "mesh": {
            "type": "object",
            "properties": {"s_cells": {"type": "integer", "minimum": 1},
                           "cross_cells": {"type": "integer", "minimum": 2},
                           "levels": {"type": "integer", "minimum": 2}},
            "additionalProperties": False,
        },
        "solver": {
            "type": "object",
            "properties": {"tol": {"type": "number", "exclusiveMinimum": 0},
                           "k": {"type": "integer", "minimum": 1},
                           "levels": {"type": "integer", "minimum": 2},
                           "seed": {"type": "integer", "minimum": 0},
                           "threads": {"type": "integer", "minimum": 1},
                           "deterministic": {"type": "boolean"},
                           "method": {"enum": ["auto", "lobpcg", "shift-invert"]}},
            "additionalProperties": False,
        },
    },
    "required": ["dimension", "cross_section", "interval", "curvatures"],
    "additionalProperties": False,
}


def load_json(path) -> dict:
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def _positive_lengths(cs_raw: dict):
    p = cs_raw.get("params", {})
    for key in ("length", "width", "height", "side", "radius"):
        if key in p and not (isinstance(p[key], (int, float)) and p[key] > 0):
            raise SpecError(f"cross_section.params.{key} must be a positive length")


def parse_problem(doc: dict) -> TubeProblem:
    """Validate a problem-spec document and build the TubeProblem it describes."""
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(x) for x in exc.absolute_path) or "<root>"
        raise SpecError(f"spec invalid at {where}: {exc.message}") from exc
    _positive_lengths(doc["cross_section"])
    s0, s1 = doc["interval"]
    if not s1 > s0:
        raise SpecError("interval length must be positive")
    d = doc["dimension"]
    curv = []
    for c in doc["curvatures"]:
        if "pieces" in c:
            curv.append(PiecewisePolynomial.from_pieces(c["pieces"]))
        else:
            curv.append(PiecewisePolynomial.from_samples(c["samples"]["s"], c["samples"]["values"]))
    if len(curv) != d - 1:
        raise SpecError(f"dimension {d} needs {d - 1} curvature entries, got {len(curv)}")
    cs = csm.normalize(doc["cross_section"])
    curve = CurveSpec(d, (float(s0), float(s1)), tuple(curv), name=doc.get("name", ""))
    mesh = doc.get("mesh", {})
    solver = doc.get("solver", {})
    return TubeProblem(
        curve, cs, ends=doc.get("ends", "neumann"),
        s_cells=mesh.get("s_cells"), cross_cells=mesh.get("cross_cells"),
        n_levels=mesh.get("levels", solver.get("levels", 2)),
        k=solver.get("k", 1), tol=solver.get("tol", 1e-9), seed=solver.get("seed", 0),
        method=solver.get("method", "auto"), name=doc.get("name", ""),
    )


def problem_to_dict(p: TubeProblem) -> dict:
    out = {"dimension": p.curve.d, "cross_section": p.cs.to_dict(),
           "interval": list(p.curve.interval),
           "curvatures": [k.to_dict() for k in p.curve.curvatures], "ends": p.ends,
           "mesh": {"s_cells": p.mesh[0], "cross_cells": p.mesh[1], "levels": p.n_levels},
           "solver": {"tol": p.tol, "k": p.k, "seed": p.seed, "method": p.method}}
    if p.name:
        out["name"] = p.name
    return out


def parse_cs_inline(text: str) -> csm.CrossSection:
    """``interval:L``, ``square:a``, ``rectangle:WxH``, ``disk:R`` or
    ``polygon:x,y;x,y;...``."""
    try:
        kind, _, arg = text.partition(":")
        if kind == "interval":
            return csm.normalize({"kind": "interval", "params": {"length": float(arg)}})
        if kind == "square":
            return csm.normalize({"kind": "square", "params": {"side": float(arg)}})
        if kind == "rectangle":
            w, h = (float(x) for x in arg.lower().split("x"))
            return csm.normalize({"kind": "rectangle", "params": {"width": w, "height": h}})
        if kind == "disk":
            return csm.normalize({"kind": "disk", "params": {"radius": float(arg)}})
        if kind == "polygon":
            verts = [[float(x) for x in v.split(",")] for v in arg.split(";") if v]
            return csm.normalize({"kind": "polygon", "params": {"vertices": verts}})
    except (ValueError, KeyError) as exc:
        raise SpecError(f"bad cross-section {text!r}: {exc}") from exc
    raise SpecError(f"unknown cross-section kind in {text!r}")


def parse_range(text: str):
    """``lo:hi:n`` -> (lo, hi, n)."""
    try:
        lo, hi, n = text.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError as exc:
        raise SpecError(f"range must be lo:hi:n, got {text!r}") from exc
    if n < 2 or not hi > lo:
        raise SpecError("range needs hi > lo and n >= 2")
    return lo, hi, n


def fmt(x: float) -> str:
    """17 significant digits: lossless for doubles."""
    return format(float(x), ".17g")


def _round_trip(o):
    if isinstance(o, float):
        return o if math.isfinite(o) else str(o)
    if isinstance(o, dict):
        return {k: _round_trip(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_round_trip(v) for v in o]
    if hasattr(o, "item"):
        return _round_trip(o.item())
    return o


def write_json(obj, path) -> None:
    # Python's float repr is the shortest string that round-trips exactly
    Path(path).write_text(json.dumps(_round_trip(obj), indent=2) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())


SWEEP_COLUMNS = ["kappa", "lambda0", "error_estimate", "mesh_level"]


def write_sweep_csv(sweep, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SWEEP_COLUMNS)
        for k, v, e, lv in sweep.rows():
            w.writerow([fmt(k), fmt(v), fmt(e), lv])


def read_sweep_csv(path) -> list:
    with open(path, newline="") as fh:
        r = csv.DictReader(fh)
        if r.fieldnames != SWEEP_COLUMNS:
            raise SpecError(f"unexpected sweep columns {r.fieldnames}")
        return [{"kappa": float(row["kappa"]), "lambda0": float(row["lambda0"]),
                 "error_estimate": float(row["error_estimate"]), "mesh_level": row["mesh_level"]}
                for row in r]


def read_field_csv(path):
    import numpy as np

    with open(path, newline="") as fh:
        header = next(csv.reader(fh))
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data
