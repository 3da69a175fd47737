"""Command-line entry point.

Exit codes: 0 all certificates enclose, 2 a hypothesis is unsatisfied,
3 an enclosure violation (or a crashed campaign trial), 1 usage/parse errors.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys

import numpy as np

from . import frames, perturbation
from .cstar import Tolerance, pencil_inf, pencil_sup
from .errors import OpFramesError, ParseError, ValidationError
from .frames import FrameBounds, KOperator
from .harness import DEFAULT_DIMS, CampaignConfig, run_campaign, sampling_oracle
from .instances import read_instance
from .perturbation import THEOREMS
from .reporting import bounds_dict, emit_report

log = logging.getLogger("opframes")

EXIT_OK, EXIT_USAGE, EXIT_HYPOTHESIS, EXIT_ENCLOSURE = 0, 1, 2, 3

CERTIFY_IDS = (
    "bessel_sum",
    "min_condition",
    "combination",
    "extension",
    "weighted",
    "k_perturbation",
    "k_corollary",
)


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _complexes(text):
    return [complex(v.strip().replace(" ", "")) for v in text.split(",") if v.strip()]


def _names(text):
    return [v.strip() for v in text.split(",") if v.strip()]


def _dims(text):
    out = []
    for item in _names(text):
        parts = item.lower().split("x")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"bad dims entry {item!r}, expected dxnxm")
        out.append(tuple(int(p) for p in parts))
    return out


def _bounds(text):
    vals = _floats(text)
    if len(vals) != 2:
        raise argparse.ArgumentTypeError("--bounds takes A,B")
    return FrameBounds(*vals)


def _tol(args):
    return Tolerance(args.tol_rel, args.tol_abs)


def _write(text):
    sys.stdout.write(text)


# -- analyze ------------------------------------------------------------------


def cmd_analyze(args):
    inst = read_instance(args.file)
    t = _tol(args)
    out = {"algebra_dim": inst.frame.algebra_dim, "module_rank": inst.frame.module_rank, "families": {}}
    for name in ["main", *inst.families]:
        F = inst.family(name)
        c = frames.classify(F, t)
        entry = {
            "bounds": bounds_dict(c.bounds),
            "is_bessel": c.is_bessel,
            "is_frame": c.is_frame,
            "is_tight": c.is_tight,
            "is_parseval": c.is_parseval,
        }
        if inst.k is not None:
            kb, is_k = frames.k_frame_bounds(F, inst.k, t)
            entry["k_bounds"] = bounds_dict(kb)
            entry["is_k_frame"] = is_k
            if c.is_frame and frames.operator_norm(inst.k.op) > t.abs_floor:
                entry["remark_bound"] = frames.remark_bound(F, inst.k, t)
        out["families"][name] = entry
    _write(emit_report(out, args.format))
    return EXIT_OK


# -- certify --------------------------------------------------------------------


def _certify(args, inst, t):
    theorem = args.theorem
    K = inst.k
    T = inst.frame
    R = lambda: inst.family(args.r_family)  # noqa: E731
    if theorem.startswith("bessel_sum"):
        sign = {"bessel_sum_plus": 1, "bessel_sum_minus": -1}.get(theorem, args.sign)
        return perturbation.certify_bessel_sum(T, R(), sign, t, args.bounds)
    if theorem.startswith("min_condition"):
        return perturbation.certify_min_condition(T, R(), K, t, args.bounds)
    if theorem.startswith("combination"):
        names = args.families or ["main", *inst.families]
        fams = [inst.family(nm) for nm in names]
        alphas = args.alphas if args.alphas is not None else [1.0] * len(fams)
        return perturbation.certify_combination(fams, alphas, args.p, K, t, args.samples, args.seed)
    if theorem.startswith("extension"):
        Ts = [inst.family(nm) for nm in (args.t_families or ["main"])]
        Rs = [inst.family(nm) for nm in (args.r_families or [args.r_family])]
        return perturbation.certify_extension(Ts, Rs, args.p, args.lam, K, t)
    m = T.measure.point_count
    if theorem == "weighted":
        aw = args.alpha_w if args.alpha_w is not None else [1.0] * m
        bw = args.beta_w if args.beta_w is not None else [1.0] * m
        return perturbation.certify_weighted(
            T, R(), aw, bw, args.lam, args.mu, K, args.samples, args.seed, t, args.bounds
        )
    K = K if K is not None else KOperator.from_matrix(np.eye(T.size), T.algebra_dim)
    if theorem == "k_perturbation":
        return perturbation.certify_k_perturbation(
            T, R(), K, args.alpha, args.beta, t, args.bounds, args.samples, args.seed
        )
    if theorem == "k_corollary":
        return perturbation.certify_k_corollary(
            T, R(), K, args.alpha, t, bounds=args.bounds, samples=args.samples, seed=args.seed
        )
    raise ValidationError(f"unknown theorem id {theorem!r}")


def cmd_certify(args):
    inst = read_instance(args.file)
    cert = _certify(args, inst, _tol(args))
    _write(emit_report(cert, args.format))
    if cert.enclosure_violated():
        return EXIT_ENCLOSURE
    if not cert.hypothesis_ok:
        return EXIT_HYPOTHESIS
    return EXIT_OK


# -- campaign -------------------------------------------------------------------


def cmd_campaign(args):
    cfg = CampaignConfig(
        seed=args.seed,
        trials=args.trials,
        dims=tuple(args.dims) if args.dims else DEFAULT_DIMS,
        theorems=tuple(args.theorems) if args.theorems is not None else THEOREMS,
        tolerance=_tol(args),
        workers=args.workers,
    )
    report = run_campaign(cfg)
    log.info("campaign finished in %.2fs", report.wall_time)
    _write(emit_report(report, args.format, timing=args.timing))
    if report.enclosure_failures or any(s.errors for s in report.summaries.values()):
        return EXIT_ENCLOSURE
    if report.hypothesis_failures:
        return EXIT_HYPOTHESIS
    return EXIT_OK


# -- oracle -----------------------------------------------------------------------


def _pairs(inst):
    G = frames.frame_gram(inst.frame)
    eye = np.eye(G.shape[0])
    yield "frame_lower", G, eye, "inf"
    yield "frame_upper", G, eye, "sup"
    if inst.k is not None:
        yield "k_lower", G, inst.k.gram(), "inf"
    for name, F in inst.families.items():
        G_F = frames.frame_gram(F)
        yield f"{name}_over_main", G_F, G, "sup"
        yield f"main_over_{name}", G, G_F, "sup"


def cmd_oracle(args):
    inst = read_instance(args.file)
    t = _tol(args)
    rows, ok = [], True
    for i, (label, P, Q, mode) in enumerate(_pairs(inst)):
        pencil = (pencil_sup if mode == "sup" else pencil_inf)(P, Q, t).value
        sampled = sampling_oracle(P, Q, args.samples, [args.seed, i], mode)
        scale = max(1.0, abs(pencil)) if math.isfinite(pencil) else 1.0
        if math.isfinite(pencil):
            agree = abs(pencil - sampled) <= 1e-6 * scale
            if mode == "sup":
                agree = agree and sampled <= pencil + 1e-9 * scale
        else:
            agree = True  # the oracle only sees finite directions
        ok = ok and agree
        rows.append({"pair": label, "mode": mode, "pencil": pencil, "oracle": sampled, "agree": agree})
    _write(emit_report({"checks": rows}, args.format))
    return EXIT_OK if ok else EXIT_ENCLOSURE


# -- parser ---------------------------------------------------------------------


def _global_flags(p, suppress):
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--tol-rel", type=float, default=default(1e-9), help="relative tolerance")
    p.add_argument("--tol-abs", type=float, default=default(1e-12), help="absolute tolerance floor")
    p.add_argument("--format", choices=("json", "csv", "text"), default=default("json"))
    p.add_argument("--seed", type=int, default=default(0))
    p.add_argument("-v", "--verbose", action="store_true", default=default(False))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="opframes", description=__doc__.splitlines()[0])
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common], help="bounds and classification of an instance")
    p.add_argument("file")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("certify", parents=[common], help="run one theorem certifier on an instance")
    p.add_argument("theorem", choices=sorted(set(CERTIFY_IDS) | set(THEOREMS)))
    p.add_argument("file")
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--p", type=int, default=1, help="1-based index of the dominating family")
    p.add_argument("--sign", type=int, choices=(1, -1), default=1)
    p.add_argument("--bounds", type=_bounds, default=None, help="override A,B of the base frame")
    p.add_argument("--alphas", type=_complexes, default=None, help="combination coefficients")
    p.add_argument("--alpha-w", type=_floats, default=None, help="pointwise weights on T")
    p.add_argument("--beta-w", type=_floats, default=None, help="pointwise weights on R")
    p.add_argument("--r-family", default="R", help="family used as the perturbation")
    p.add_argument("--families", type=_names, default=None, help="families combined, in order")
    p.add_argument("--t-families", type=_names, default=None)
    p.add_argument("--r-families", type=_names, default=None)
    p.add_argument("--samples", type=int, default=256)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("campaign", parents=[common], help="seeded verification campaign")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--dims", type=_dims, default=None, help="comma list of dxnxm")
    p.add_argument("--theorems", type=_names, default=None, help=f"subset of {', '.join(THEOREMS)}")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--timing", action="store_true", help="include wall time in json output")
    p.set_defaults(func=cmd_campaign)

    p = sub.add_parser("oracle", parents=[common], help="pencil constants against brute-force sampling")
    p.add_argument("file")
    p.add_argument("--samples", type=int, default=2000)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
    try:
        return args.func(args)
    except (ParseError, ValidationError) as exc:
        print(f"opframes: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OpFramesError, OSError, ValueError) as exc:
        print(f"opframes: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
