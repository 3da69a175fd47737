"""Report emission: canonical JSON, CSV and plain text.

Canonical JSON sorts keys, writes floats with 17 significant digits and maps
non-finite floats (unbounded constants) to ``null``.

CSV columns, in order::

    theorem, trial, d, n, m, hypothesis_ok, hypothesis_margin,
    certified_lower, certified_upper, observed_lower, observed_upper,
    lower_slack, upper_slack, enclosure_violated, path, error
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math

import numpy as np

CSV_COLUMNS = (
    "theorem",
    "trial",
    "d",
    "n",
    "m",
    "hypothesis_ok",
    "hypothesis_margin",
    "certified_lower",
    "certified_upper",
    "observed_lower",
    "observed_upper",
    "lower_slack",
    "upper_slack",
    "enclosure_violated",
    "path",
    "error",
)


def _float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    s = format(x, ".17g")
    return "0" if s == "-0" else s


def _plain(obj):
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()] if obj.dtype.kind != "c" else [_plain(v) for v in obj]
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    return obj


def canonical_json(obj, indent: int | None = 1) -> str:
    obj = _plain(obj)
    nl = "\n" if indent else ""

    def enc(o, level):
        pad = " " * (indent * (level + 1)) if indent else ""
        end = " " * (indent * level) if indent else ""
        if o is None:
            return "null"
        if isinstance(o, bool):
            return "true" if o else "false"
        if isinstance(o, int):
            return str(o)
        if isinstance(o, float):
            return _float(o)
        if isinstance(o, str):
            return json.dumps(o, ensure_ascii=False)
        if isinstance(o, list):
            if not o:
                return "[]"
            # matrices and short numeric rows stay on one line
            if all(not isinstance(v, (dict, list)) for v in o) or all(
                isinstance(v, list) and all(not isinstance(u, (dict, list)) for u in v) for v in o
            ):
                return "[" + ", ".join(enc(v, level + 1) for v in o) + "]"
            return "[" + nl + ("," + nl).join(pad + enc(v, level + 1) for v in o) + nl + end + "]"
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = sorted(o.items())
            sep = ": " if indent else ":"
            body = ("," + nl).join(pad + json.dumps(k, ensure_ascii=False) + sep + enc(v, level + 1) for k, v in items)
            return "{" + nl + body + nl + end + "}"
        raise TypeError(f"cannot encode {type(o).__name__}")

    return enc(obj, 0) + "\n"


def bounds_dict(b) -> dict:
    return {"lower": b.lower, "upper": b.upper}


def certificate_dict(c) -> dict:
    return {
        "theorem_id": c.theorem_id,
        "hypothesis_ok": c.hypothesis_ok,
        "hypothesis_margin": c.hypothesis_margin,
        "certified": bounds_dict(c.certified),
        "observed": bounds_dict(c.observed),
        "lower_slack": c.lower_slack,
        "upper_slack": c.upper_slack,
        "enclosure_violated": c.enclosure_violated(),
        "notes": list(c.notes),
        "extras": c.extras,
    }


def report_dict(report, timing: bool = False) -> dict:
    cfg = report.config
    out = {
        "config": {
            "seed": cfg.seed,
            "trials": cfg.trials,
            "dims": [list(t) for t in cfg.dims],
            "theorems": list(cfg.theorems),
            "tolerance": {"rel": cfg.tolerance.rel, "abs_floor": cfg.tolerance.abs_floor},
        },
        "summaries": {name: dataclasses.asdict(s) for name, s in report.summaries.items()},
        "enclosure_failures": report.enclosure_failures,
        "records": [record_row(r) for r in report.records],
    }
    if timing:
        out["wall_time"] = report.wall_time
    return out


def record_row(r) -> dict:
    c = r.certificate
    row = {"theorem": r.theorem, "trial": r.trial, "d": r.d, "n": r.n, "m": r.m, "error": r.error or ""}
    row.update(_cert_columns(c))
    return row


def _cert_columns(c) -> dict:
    if c is None:
        return {k: None for k in CSV_COLUMNS[5:15]}
    return {
        "hypothesis_ok": c.hypothesis_ok,
        "hypothesis_margin": c.hypothesis_margin,
        "certified_lower": c.certified.lower,
        "certified_upper": c.certified.upper,
        "observed_lower": c.observed.lower,
        "observed_upper": c.observed.upper,
        "lower_slack": c.lower_slack,
        "upper_slack": c.upper_slack,
        "enclosure_violated": c.enclosure_violated(),
        "path": c.extras.get("path", "exact"),
    }


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return _float(v) if math.isfinite(v) else str(v)
    return str(v)


def _csv(rows, columns=CSV_COLUMNS) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_csv_cell(row.get(col)) for col in columns])
    return buf.getvalue()


def _text_certificate(c) -> str:
    lines = [
        f"theorem            {c.theorem_id}",
        f"hypothesis         {'satisfied' if c.hypothesis_ok else 'NOT satisfied'} (margin {c.hypothesis_margin:.6g})",
        f"certified bounds   [{c.certified.lower:.10g}, {c.certified.upper:.10g}]",
        f"observed bounds    [{c.observed.lower:.10g}, {c.observed.upper:.10g}]",
        f"slacks             lower {c.lower_slack:.3g}, upper {c.upper_slack:.3g}",
        f"enclosure          {'VIOLATED' if c.enclosure_violated() else 'ok'}",
    ]
    for k, v in sorted(c.extras.items()):
        lines.append(f"  {k:<18} {v}")
    lines += [f"  note: {note}" for note in c.notes]
    return "\n".join(lines) + "\n"


def _text_report(report) -> str:
    lines = [
        f"campaign seed={report.config.seed} trials={report.config.trials} "
        f"theorems={len(report.config.theorems)} wall={report.wall_time:.2f}s",
        f"{'theorem':<18}{'trials':>7}{'hyp ok':>8}{'fail':>6}{'err':>5}{'min lo slack':>15}{'min up slack':>15}",
    ]
    for name, s in report.summaries.items():
        lines.append(
            f"{name:<18}{s.trials:>7}{s.hypotheses_satisfied:>8}{s.enclosure_failures:>6}{s.errors:>5}"
            f"{s.min_lower_slack:>15.3g}{s.min_upper_slack:>15.3g}"
        )
    lines.append(f"enclosure failures: {report.enclosure_failures}")
    return "\n".join(lines) + "\n"


def _flatten(prefix, obj, out):
    if isinstance(obj, dict):
        for k in sorted(obj):
            _flatten(f"{prefix}.{k}" if prefix else str(k), obj[k], out)
    elif isinstance(obj, list) and obj and isinstance(obj[0], dict):
        for i, v in enumerate(obj):
            _flatten(f"{prefix}[{i}]", v, out)
    else:
        out.append({"key": prefix, "value": obj})
    return out


def emit_report(obj, fmt: str = "json", timing: bool = False) -> str:
    """Render a Certificate, CampaignReport or plain dict."""
    from .harness import CampaignReport
    from .perturbation import Certificate

    if fmt not in ("json", "csv", "text"):
        raise ValueError(f"unknown format {fmt!r}")
    if isinstance(obj, Certificate):
        if fmt == "json":
            return canonical_json(certificate_dict(obj))
        if fmt == "csv":
            row = {"theorem": obj.theorem_id, "error": ""}
            row.update(_cert_columns(obj))
            return _csv([row])
        return _text_certificate(obj)
    if isinstance(obj, CampaignReport):
        if fmt == "json":
            return canonical_json(report_dict(obj, timing))
        if fmt == "csv":
            return _csv([record_row(r) for r in obj.records])
        return _text_report(obj)
    obj = _plain(obj)
    if fmt == "json":
        return canonical_json(obj)
    rows = _flatten("", obj, [])
    if fmt == "csv":
        return _csv([{k: _plain_cell(v) for k, v in r.items()} for r in rows], ("key", "value"))
    return "\n".join(f"{r['key']:<32} {r['value']}" for r in rows) + "\n"


def _plain_cell(v):
    if isinstance(v, list):
        return json.dumps(v)
    return v
