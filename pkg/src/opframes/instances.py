"""JSON instance files.

Layout::

    {
      "format_version": 1,
      "algebra_dim": d,
      "module_rank": n,
      "measure": [{"weight": w, "operator": M}, ...],
      "k_operator": K,                      # optional
      "families": {"R": [M_1, ..., M_m]}    # optional, same measure
    }

Matrices are lists of rows of ``[re, im]`` pairs with side ``n * d``.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, ValidationError
from .frames import KOperator, MeasureSpace, OperatorFrame
from .reporting import canonical_json

FORMAT_VERSION = 1


@dataclass(eq=False)
class Instance:
    frame: OperatorFrame
    k: KOperator | None = None
    families: dict = field(default_factory=dict)

    def family(self, name: str) -> OperatorFrame:
        if name == "main":
            return self.frame
        try:
            return self.families[name]
        except KeyError:
            raise ValidationError(f"instance has no family named {name!r}") from None


def _line_of(text: str, key: str, occurrence: int = 0) -> int | None:
    hits = list(re.finditer(r'"%s"\s*:' % re.escape(key), text))
    if occurrence < len(hits):
        return text.count("\n", 0, hits[occurrence].start()) + 1
    return None


def _matrix(raw, side, where, line):
    if not isinstance(raw, list) or len(raw) != side:
        got = len(raw) if isinstance(raw, list) else type(raw).__name__
        raise ValidationError(f"{where}: expected {side} rows, got {got}", line)
    out = np.empty((side, side), complex)
    for i, row in enumerate(raw):
        if not isinstance(row, list) or len(row) != side:
            got = len(row) if isinstance(row, list) else type(row).__name__
            raise ValidationError(f"{where}: row {i} should have {side} entries, got {got}", line)
        for j, z in enumerate(row):
            if (
                not isinstance(z, list)
                or len(z) != 2
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in z)
            ):
                raise ValidationError(f"{where}: entry ({i}, {j}) must be a [re, im] pair of numbers", line)
            if not all(math.isfinite(v) for v in z):
                raise ValidationError(f"{where}: entry ({i}, {j}) is not finite", line)
            out[i, j] = complex(z[0], z[1])
    return out


def _positive_int(doc, key, text):
    v = doc.get(key)
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        raise ValidationError(f"{key} must be a positive integer", _line_of(text, key))
    return v


def parse_instance(text: str) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno) from None
    if not isinstance(doc, dict):
        raise ParseError("top level must be a JSON object", 1)

    version = doc.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise ValidationError(f"unsupported format_version {version!r}", _line_of(text, "format_version"))
    d = _positive_int(doc, "algebra_dim", text)
    n = _positive_int(doc, "module_rank", text)
    side = n * d

    measure = doc.get("measure")
    if not isinstance(measure, list) or not measure:
        raise ValidationError("measure must be a non-empty list", _line_of(text, "measure"))
    weights, ops = [], []
    for j, point in enumerate(measure):
        line = _line_of(text, "weight", j) or _line_of(text, "measure")
        if not isinstance(point, dict) or "weight" not in point or "operator" not in point:
            raise ValidationError(f"measure point {j} needs 'weight' and 'operator'", line)
        w = point["weight"]
        if isinstance(w, bool) or not isinstance(w, (int, float)) or not math.isfinite(w) or w <= 0:
            raise ValidationError(f"measure point {j}: weight must be a finite number > 0, got {w!r}", line)
        weights.append(float(w))
        ops.append(_matrix(point["operator"], side, f"measure point {j} operator", _line_of(text, "operator", j)))
    frame = OperatorFrame(MeasureSpace(np.array(weights)), np.stack(ops), d, n)

    k = None
    if doc.get("k_operator") is not None:
        k = KOperator.from_matrix(_matrix(doc["k_operator"], side, "k_operator", _line_of(text, "k_operator")), d)

    families = {}
    raw_fams = doc.get("families") or {}
    if not isinstance(raw_fams, dict):
        raise ValidationError("families must be an object mapping names to operator lists", _line_of(text, "families"))
    for name, mats in raw_fams.items():
        line = _line_of(text, name)
        if name == "main":
            raise ValidationError("'main' is reserved for the measure operators", line)
        if not isinstance(mats, list) or len(mats) != len(ops):
            raise ValidationError(f"family {name!r} needs one operator per measure point ({len(ops)})", line)
        stack = np.stack([_matrix(M, side, f"family {name!r} operator {j}", line) for j, M in enumerate(mats)])
        families[name] = frame.with_stack(stack)
    return Instance(frame, k, families)


def _encode_matrix(M):
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(M)]


def instance_to_dict(inst: Instance) -> dict:
    F = inst.frame
    doc = {
        "format_version": FORMAT_VERSION,
        "algebra_dim": F.algebra_dim,
        "module_rank": F.module_rank,
        "measure": [{"weight": float(w), "operator": _encode_matrix(M)} for w, M in zip(F.weights, F.stack)],
    }
    if inst.k is not None:
        doc["k_operator"] = _encode_matrix(inst.k.matrix)
    if inst.families:
        doc["families"] = {name: [_encode_matrix(M) for M in fam.stack] for name, fam in inst.families.items()}
    return doc


def dump_instance(inst: Instance) -> str:
    return canonical_json(instance_to_dict(inst))


def read_instance(path) -> Instance:
    with open(path, encoding="utf-8") as fh:
        return parse_instance(fh.read())
