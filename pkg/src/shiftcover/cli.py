"""Command line front end: ``python3 -m shiftcover <command> ...``.

Every command writes its JSON artifact (and CSV where there is a grid) to
``--out`` together with ``manifest.json``.  Artifacts are byte-stable for
identical inputs; the wall-clock timestamp lives only in the manifest.

Exit codes: 0 pass, 1 verification failure, 2 invalid input,
3 not applicable, 4 horizon or overflow infeasibility.
"""
from __future__ import annotations

import argparse
import csv
import datetime as dt
import json
import math
import os
import platform
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from .approximator import (
    EpsilonCondition,
    build_common_vector,
    construct_block_vector,
)
from .covering import (
    Interval,
    build_covering,
    empirical_coverage,
    nonexistence_certificate,
    random_probe_vector,
    verify_covering,
)
from .errors import ShiftCoverError, ValidationError
from .seqcore import SequenceSpec
from .shiftspace import FiniteVector
from .torus import circle_density_check, discrepancy_curve, joint_density_check, star_discrepancy

SCHEMA = "shiftcover/v1"


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------
def _fmt_float(v):
    if math.isnan(v):
        return "NaN"
    if math.isinf(v):
        return "Infinity" if v > 0 else "-Infinity"
    return "%.17g" % v


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def dumps(obj, indent=0):
    """JSON text with every float printed to 17 significant digits."""
    obj = _plain(obj)
    pad = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {dumps(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + "  " * indent + "}"
    if isinstance(obj, list):
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        items = [pad + dumps(v, indent + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + "  " * indent + "]"
    if isinstance(obj, float):
        return _fmt_float(obj)
    return json.dumps(obj)


def write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(payload))
        fh.write("\n")


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt_float(v) if isinstance(v, float) else v for v in row])


def load_json(value, what):
    """Inline JSON, ``@path`` or a path to a JSON file."""
    if value is None:
        raise ValidationError(f"{what} is required")
    text = value
    path = value[1:] if value.startswith("@") else value
    if value.startswith("@") or os.path.isfile(path):
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ValidationError(f"cannot read {what}: {exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed JSON for {what}: {exc}") from None


# --------------------------------------------------------------------------
# argument parsing helpers
# --------------------------------------------------------------------------
def parse_fraction(text):
    try:
        v = float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise ValidationError(f"cannot read a number from {text!r}") from None
    return v


def _seq(args):
    return SequenceSpec.from_dict(load_json(args.seq, "--seq"))


def _interval(args):
    if args.interval is None:
        raise ValidationError("--interval is required")
    return Interval.parse(args.interval)


def _vector(value, what):
    data = load_json(value, what)
    if isinstance(data, dict) and "vector" in data:
        data = data["vector"]
    return FiniteVector.from_json(data)


def _manifest(args, command):
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out")}
    return {
        "schema": SCHEMA,
        "command": command,
        "params": params,
        "seed": getattr(args, "seed", None),
        "versions": {
            "shiftcover": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
        "timestamp": dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds"),
    }


# --------------------------------------------------------------------------
# commands; each returns (exit_code, summary)
# --------------------------------------------------------------------------
def cmd_cover(args):
    eps = parse_fraction(args.epsilon)
    plan = build_covering(_interval(args), eps, _seq(args), args.start)
    report = verify_covering(plan, args.grid)
    write_json(
        os.path.join(args.out, "plan.json"),
        {"schema": SCHEMA, "plan": plan.to_dict(), "grid": report.to_dict()},
    )
    write_csv(os.path.join(args.out, "grid.csv"), ["lambda", "block", "error"], report.rows())
    return (0 if report.passed else 1), {"blocks": plan.block_count, **report.to_dict()}


def cmd_nonexist(args):
    seq = _seq(args)
    eps0 = None if args.epsilon is None else parse_fraction(args.epsilon)
    cert = nonexistence_certificate(_interval(args), seq, eps0)
    payload = {"schema": SCHEMA, "certificate": cert.to_dict()}
    code = 0 if cert.valid else 1
    if args.samples:
        if args.seed is None:
            raise ValidationError("--seed is required when --samples is given")
        rng = np.random.default_rng(args.seed)
        vs = range(cert.N_0, seq.horizon + 1)
        checks = [
            empirical_coverage(
                random_probe_vector(rng, seq, cert.interval, vs),
                seq, cert.interval, cert.epsilon_1, vs,
            )
            for _ in range(args.samples)
        ]
        worst = max(checks)
        payload["coverage"] = {
            "samples": args.samples,
            "seed": args.seed,
            "max_coverage": worst,
            "within_bound": worst <= cert.bound_sum + 1e-9,
        }
        if not worst <= cert.bound_sum + 1e-9:
            code = 1
    write_json(os.path.join(args.out, "nonexistence.json"), payload)
    return code, {"valid": cert.valid, "slack": cert.slack, "N_0": cert.N_0}


def _condition(args):
    target = _vector(args.target, "--target")
    return EpsilonCondition(target, _interval(args), parse_fraction(args.accuracy))


def cmd_construct(args):
    center = FiniteVector.zero() if args.center is None else _vector(args.center, "--center")
    cert = construct_block_vector(
        _condition(args),
        center,
        args.radius,
        _seq(args),
        args.grid,
        stage_growth=args.stage_growth,
    )
    write_json(os.path.join(args.out, "certificate.json"), {"schema": SCHEMA, **cert.to_dict()})
    write_csv(
        os.path.join(args.out, "grid.csv"), ["lambda", "best_v", "error"], cert.grid_report.rows()
    )
    return (0 if cert.passed else 1), cert.grid_report.to_dict()


def cmd_common(args):
    seq = _seq(args)
    raw = load_json(args.conditions, "--conditions") if args.conditions else []
    if not isinstance(raw, list):
        raise ValidationError("--conditions must be a JSON list")
    conds = [EpsilonCondition.from_dict(c) for c in raw]
    initial = FiniteVector.zero() if args.initial is None else _vector(args.initial, "--initial")
    result = build_common_vector(
        conds, seq, initial, args.radius, args.grid, stage_growth=args.stage_growth
    )
    write_json(os.path.join(args.out, "common.json"), {"schema": SCHEMA, **result.to_dict()})
    return (0 if result.passed else 1), {"stages": len(conds), "margins": result.margins}


def _unit_targets(count):
    return [complex(np.exp(2j * np.pi * l / count)) for l in range(count)]


def cmd_weyl(args):
    seq = _seq(args)
    theta = parse_fraction(args.theta)
    N = args.N or seq.horizon
    rep = star_discrepancy(seq, theta, N)
    counts = sorted({int(round(v)) for v in np.geomspace(1, N, 25)})
    payload = {"schema": SCHEMA, "discrepancy": rep.to_dict()}
    if args.targets:
        wit = circle_density_check(seq, theta, N, _unit_targets(args.targets), args.tol)
        payload["circle"] = {"targets": args.targets, "tol": args.tol, "witnesses": wit}
    write_json(os.path.join(args.out, "weyl.json"), payload)
    write_csv(
        os.path.join(args.out, "discrepancy.csv"),
        ["N", "star_discrepancy"],
        discrepancy_curve(seq, theta, counts),
    )
    return 0, rep.to_dict()


def cmd_joint(args):
    seq = _seq(args)
    x = _vector(args.vector, "--vector")
    raw = load_json(args.vector_targets, "--vector-targets")
    targets = [FiniteVector.from_json(t) for t in raw]
    N = args.N or seq.horizon
    rep = joint_density_check(
        x, seq, args.r, parse_fraction(args.theta), targets, _unit_targets(args.phases), args.s, N
    )
    write_json(os.path.join(args.out, "joint.json"), {"schema": SCHEMA, **rep.to_dict()})
    return (0 if rep.passed else 1), {"witnessed": rep.witnessed, "pairs": len(rep.pairs)}


# --------------------------------------------------------------------------
def build_parser():
    p = argparse.ArgumentParser(prog="shiftcover", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, interval=True):
        sp.add_argument("--seq", help="sequence JSON {kind, params, horizon}, inline or @file")
        if interval:
            sp.add_argument("--interval", help="lo,hi")
        sp.add_argument("--grid", type=int, default=1000, help="lambda grid size")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", default=".", help="output directory")

    sp = sub.add_parser("cover", help="interval covering plan with grid check")
    common(sp)
    sp.add_argument("--epsilon", required=True)
    sp.add_argument("--start", type=int, default=None, help="start index n0 (default: minimal)")
    sp.set_defaults(func=cmd_cover, grid=10_000)

    sp = sub.add_parser("nonexist", help="nonexistence certificate for convergent sequences")
    common(sp)
    sp.add_argument("--epsilon", default=None, help="eps0 (default: dyadic search)")
    sp.add_argument("--samples", type=int, default=0, help="random vectors for coverage checks")
    sp.set_defaults(func=cmd_nonexist)

    sp = sub.add_parser("construct", help="block vector with certificate")
    common(sp)
    sp.add_argument("--target", required=True, help="vector rows [[index, re, im], ...]")
    sp.add_argument("--center", default=None)
    sp.add_argument("--radius", type=float, default=0.5)
    sp.add_argument("--accuracy", default="1/10")
    sp.add_argument("--stage-growth", type=float, default=None)
    sp.set_defaults(func=cmd_construct)

    sp = sub.add_parser("common", help="greedy vector meeting several conditions")
    common(sp, interval=False)
    sp.add_argument("--conditions", default=None, help="list of {target, interval, accuracy}")
    sp.add_argument("--initial", default=None)
    sp.add_argument("--radius", type=float, default=1.0)
    sp.add_argument("--stage-growth", type=float, default=None)
    sp.set_defaults(func=cmd_common)

    sp = sub.add_parser("weyl", help="star discrepancy and circle density")
    common(sp, interval=False)
    sp.add_argument("--theta", required=True)
    sp.add_argument("--N", type=int, default=None)
    sp.add_argument("--targets", type=int, default=0, help="equally spaced phase targets")
    sp.add_argument("--tol", type=float, default=0.05)
    sp.set_defaults(func=cmd_weyl)

    sp = sub.add_parser("joint", help="joint density witnesses on l2 x T")
    common(sp, interval=False)
    sp.add_argument("--vector", required=True, help="vector rows or an artifact with 'vector'")
    sp.add_argument("--vector-targets", required=True, help="list of vector rows")
    sp.add_argument("--r", type=float, default=2.0)
    sp.add_argument("--theta", required=True)
    sp.add_argument("--phases", type=int, default=8)
    sp.add_argument("--s", type=int, default=5)
    sp.add_argument("--N", type=int, default=None)
    sp.set_defaults(func=cmd_joint)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    os.makedirs(args.out, exist_ok=True)
    write_json(os.path.join(args.out, "manifest.json"), _manifest(args, args.command))
    try:
        code, summary = args.func(args)
    except ShiftCoverError as exc:
        payload = {"schema": SCHEMA, "exit_code": exc.exit_code, **exc.to_dict()}
        write_json(os.path.join(args.out, "error.json"), payload)
        print(dumps(payload), file=sys.stderr)
        return exc.exit_code
    print(dumps({"command": args.command, "exit_code": code, **summary}))
    return code


if __name__ == "__main__":
    sys.exit(main())
