"""Problem, trace and certificate serialization.

Formats:

* Problem files are JSON objects {name, d, p, rho, atoms, A, b} with optional
  smooth_quad, witness_x0, lambda_star, phi_star.  Each atom record is
  {kind, params, range}; range is a 0-based half-open [lo, hi) coordinate
  window and the atom kinds are zero, quadratic, l1, box, nonneg, l2ball,
  linear.  JSON has no Infinity literal, so unbounded box edges are null.
* Traces are CSV with the exact header ``k,phi_est,grad_norm,primal_obj,
  inner_iters`` and floats printed with 17 significant digits, which
  round-trips doubles losslessly.
* Certificate reports are JSON arrays of certificate records (the dataclass
  field passed serializes under the key "pass").

Serialization is deterministic: identical objects produce identical bytes.
"""

import csv
import json
import math

import numpy as np

from .atoms import (
    Atom,
    Box,
    CompositeFunction,
    L1,
    L2Ball,
    Linear,
    Nonneg,
    Quadratic,
    SmoothQuadratic,
    ValidationError,
    Zero,
)
from .dual import SolveTrace
from .problem import ProblemInstance
from .verify import Certificate

__all__ = [
    "problem_to_dict", "problem_from_dict",
    "write_problem", "read_problem",
    "write_trace", "read_trace",
    "write_report", "read_report",
    "certificate_to_dict",
    "TRACE_HEADER",
]

TRACE_HEADER = ("k", "phi_est", "grad_norm", "primal_obj", "inner_iters")


def _fmt17(x) -> str:
    return format(float(x), ".17g")


def _flist(v):
    return [float(t) for t in np.asarray(v, dtype=float)]


def _fmat(M):
    return [_flist(row) for row in np.asarray(M, dtype=float)]


def _bound_list(v):
    out = []
    for t in np.asarray(v, dtype=float):
        out.append(None if math.isinf(t) else float(t))
    return out


def _bound_array(lst, fill, name):
    if not isinstance(lst, list):
        raise ValidationError(f"{name} must be a list")
    out = np.empty(len(lst))
    for i, t in enumerate(lst):
        if t is None:
            out[i] = fill
        elif isinstance(t, (int, float)):
            out[i] = float(t)
        else:
            raise ValidationError(f"{name}[{i}] must be a number or null")
    return out


def _atom_to_dict(atom: Atom) -> dict:
    if isinstance(atom, Zero):
        return {"kind": "zero", "params": {}}
    if isinstance(atom, Quadratic):
        return {"kind": "quadratic",
                "params": {"Q": _fmat(atom.Q), "q": _flist(atom.q),
                           "c": float(atom.c)}}
    if isinstance(atom, L1):
        return {"kind": "l1", "params": {"weight": float(atom.weight)}}
    if isinstance(atom, Box):
        return {"kind": "box", "params": {"lo": _bound_list(atom.lo),
                                          "hi": _bound_list(atom.hi)}}
    if isinstance(atom, Nonneg):
        return {"kind": "nonneg", "params": {}}
    if isinstance(atom, L2Ball):
        return {"kind": "l2ball", "params": {"radius": float(atom.radius),
                                             "center": _flist(atom.center)}}
    if isinstance(atom, Linear):
        return {"kind": "linear", "params": {"c": _flist(atom.c)}}
    raise ValidationError(f"cannot serialize atom type {type(atom).__name__}")


def _atom_from_dict(rec, n):
    kind = rec.get("kind")
    params = rec.get("params", {})
    if kind == "zero":
        return Zero(n)
    if kind == "quadratic":
        return Quadratic(np.asarray(params["Q"], dtype=float),
                         np.asarray(params["q"], dtype=float),
                         float(params.get("c", 0.0)))
    if kind == "l1":
        return L1(n, float(params.get("weight", 1.0)))
    if kind == "box":
        return Box(_bound_array(params["lo"], -np.inf, "box lo"),
                   _bound_array(params["hi"], np.inf, "box hi"))
    if kind == "nonneg":
        return Nonneg(n)
    if kind == "l2ball":
        return L2Ball(float(params["radius"]),
                      np.asarray(params["center"], dtype=float))
    if kind == "linear":
        return Linear(np.asarray(params["c"], dtype=float))
    raise ValidationError(f"unknown atom kind {kind!r}")


def problem_to_dict(pb: ProblemInstance) -> dict:
    doc = {
        "name": pb.name,
        "d": pb.d,
        "p": pb.p,
        "rho": float(pb.rho),
        "atoms": [],
    }
    for atom, (lo, hi) in pb.f.blocks:
        rec = _atom_to_dict(atom)
        rec["range"] = [int(lo), int(hi)]
        doc["atoms"].append(rec)
    sq = pb.f.smooth_quad
    if sq is not None:
        doc["smooth_quad"] = {
            "Q": None if sq.Q is None else _fmat(sq.Q),
            "q": None if sq.q is None else _flist(sq.q),
            "c": float(sq.c),
        }
    doc["A"] = _fmat(pb.A)
    doc["b"] = _flist(pb.b)
    if pb.witness_x0 is not None:
        doc["witness_x0"] = _flist(pb.witness_x0)
    if pb.lambda_star is not None:
        doc["lambda_star"] = _flist(pb.lambda_star)
    if pb.phi_star is not None:
        doc["phi_star"] = float(pb.phi_star)
    return doc


def problem_from_dict(doc) -> ProblemInstance:
    if not isinstance(doc, dict):
        raise ValidationError("problem document must be a JSON object")
    for key in ("name", "d", "p", "rho", "atoms", "A", "b"):
        if key not in doc:
            raise ValidationError(f"problem file missing field {key!r}")
    d = doc["d"]
    if not isinstance(d, int) or d < 1:
        raise ValidationError("d must be a positive integer")
    blocks = []
    for i, rec in enumerate(doc["atoms"]):
        if "range" not in rec:
            raise ValidationError(f"atom {i} missing field 'range'")
        lo, hi = rec["range"]
        if not (isinstance(lo, int) and isinstance(hi, int) and 0 <= lo < hi <= d):
            raise ValidationError(
                f"atom {i} range must be an integer window [lo, hi) inside [0, {d})"
            )
        try:
            atom = _atom_from_dict(rec, hi - lo)
        except KeyError as exc:
            raise ValidationError(f"atom {i} missing parameter {exc}") from exc
        blocks.append((atom, (lo, hi)))
    sq = None
    if doc.get("smooth_quad") is not None:
        rec = doc["smooth_quad"]
        sq = SmoothQuadratic(
            d,
            Q=None if rec.get("Q") is None else np.asarray(rec["Q"], dtype=float),
            q=None if rec.get("q") is None else np.asarray(rec["q"], dtype=float),
            c=float(rec.get("c", 0.0)),
        )
    f = CompositeFunction(blocks, dim=d, smooth_quad=sq)
    A = np.asarray(doc["A"], dtype=float)
    if A.ndim != 2:
        raise ValidationError("A must be an array of equal-length rows")
    witness = doc.get("witness_x0")
    lam_star = doc.get("lambda_star")
    return ProblemInstance(
        f, A, np.asarray(doc["b"], dtype=float), float(doc["rho"]),
        name=str(doc["name"]),
        witness_x0=None if witness is None else np.asarray(witness, dtype=float),
        lambda_star=None if lam_star is None else np.asarray(lam_star, dtype=float),
        phi_star=None if doc.get("phi_star") is None else float(doc["phi_star"]),
    )


def _dump_json(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, allow_nan=False)
        fh.write("\n")


def write_problem(pb: ProblemInstance, path) -> None:
    _dump_json(problem_to_dict(pb), path)


def read_problem(path) -> ProblemInstance:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"malformed problem JSON: {exc}") from exc
    return problem_from_dict(doc)


def write_trace(trace: SolveTrace, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(TRACE_HEADER) + "\n")
        for r in trace.records:
            fh.write(f"{r.k},{_fmt17(r.phi_est)},{_fmt17(r.grad_norm)},"
                     f"{_fmt17(r.primal_obj)},{r.inner_iters}\n")


def read_trace(path) -> list:
    """Rows as dicts with Python ints/floats; header is checked exactly."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header != TRACE_HEADER:
            raise ValidationError(
                f"trace header must be {','.join(TRACE_HEADER)!r}, got {','.join(header)!r}"
            )
        rows = []
        for row in reader:
            if len(row) != 5:
                raise ValidationError(f"trace row {len(rows)} has {len(row)} fields")
            rows.append({
                "k": int(row[0]),
                "phi_est": float(row[1]),
                "grad_norm": float(row[2]),
                "primal_obj": float(row[3]),
                "inner_iters": int(row[4]),
            })
    return rows


def _json_safe(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return _flist(value)
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def certificate_to_dict(cert: Certificate) -> dict:
    return {
        "check_name": cert.check_name,
        "instance_name": cert.instance_name,
        "num_samples": int(cert.num_samples),
        "worst_violation": float(cert.worst_violation),
        "threshold": float(cert.threshold),
        "pass": bool(cert.passed),
        "witnesses": list(cert.witnesses),
        "rng_seed": int(cert.rng_seed),
        "details": _json_safe(cert.details),
    }


def write_report(certs, path) -> None:
    _dump_json([certificate_to_dict(c) for c in certs], path)


def read_report(path) -> list:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, list):
        raise ValidationError("certificate report must be a JSON array")
    return doc
