"""Command line entry point: ``boxlab scan|optimize|lp|verify|nqubit``."""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from fractions import Fraction

import numpy as np

from . import boxes, closed_form, lp, optimize

EXIT_OK, EXIT_INVALID, EXIT_USAGE = 0, 1, 2


# --------------------------------------------------------------------------- formatting


def _num(value, digits: int = 17) -> str:
    value = float(value)
    if not math.isfinite(value):
        return json.dumps(str(value))
    return f"{value:.{digits}g}"


def to_json(obj, indent: int = 0) -> str:
    """JSON with floats at 17 significant digits and insertion-ordered keys."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(pad + to_json(v, indent + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)) or obj is None or isinstance(obj, str):
        return json.dumps(obj if not isinstance(obj, np.bool_) else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating, Fraction)):
        return _num(obj)
    raise TypeError(f"cannot encode {type(obj).__name__}")


def _write(text: str, out: str | None) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(out))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".boxlab-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, out)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _exact(value):
    """Render a probability for humans: exact fraction when available."""
    if isinstance(value, Fraction):
        return str(value)
    return _num(value, 6)


# --------------------------------------------------------------------------- subcommands


def _gamma(text: str) -> float:
    if text == "gamma0":
        return closed_form.GAMMA0
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'gamma0', got {text!r}") from None


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def cmd_scan(args) -> int:
    if not 0.0 <= args.t_min < args.t_max <= 1.0:
        args.parser.error("need 0 <= --t-min < --t-max <= 1")
    ts = np.linspace(args.t_min, args.t_max, args.steps + 1)
    try:
        rows = closed_form.scan_C(args.x, args.y, args.z, args.gamma, ts)
    except ValueError as exc:
        args.parser.error(str(exc))
    _write(closed_form.scan_to_csv(rows), args.out)
    return EXIT_OK


def cmd_optimize(args) -> int:
    result = optimize.TARGETS[args.target]()
    if args.json:
        _write(to_json(result.as_dict()) + "\n", None)
    else:
        coords = ", ".join(f"{k}={_num(v, 6)}" for k, v in zip(result.names, result.argmax))
        print(f"{result.objective}: max = {_num(result.value, 6)} at {coords} ({result.evaluations} evaluations)")
    return EXIT_OK


def cmd_lp(args) -> int:
    try:
        solution = lp.solve_named(args.problem)
    except ValueError as exc:
        args.parser.error(str(exc))
    data = {"problem": args.problem, **solution.to_json()}
    _write(to_json(data) + "\n", args.out)
    return EXIT_OK


def verification_report(d: boxes.JointDistribution) -> dict:
    report = boxes.validate(d)
    hc = boxes.hardy_cabello_check(d)
    out = {
        "positivity_ok": report.positivity_ok,
        "normalization_ok": report.normalization_ok,
        "no_signaling_ok": report.no_signaling_ok,
        "worst_negativity": report.worst_negativity,
        "worst_normalization": report.worst_normalization,
        "worst_signaling": report.worst_signaling,
        "violations": [{"check": c, "constraint": k, "amount": v} for c, k, v in report.details],
        "P": hc.P,
        "Q": hc.Q,
        "C": hc.C,
        "hardy_zeros_ok": hc.zeros_ok,
        "bell_value": boxes.bell_inequality_value(d),
        "gyni": boxes.gyni_value(d),
        "svetlichny": [boxes.svetlichny_value(d, p) for p in boxes.SVETLICHNY_DISPLAYED],
    }
    if report.no_signaling_ok:
        out["rahaman_ok"] = boxes.rahaman_check(d).ok
        out["chsh_12"] = boxes.chsh_value(boxes.trace_out_third(d))
    else:
        out["rahaman_ok"] = None
        out["chsh_12"] = None
    return out


def _human(rep: dict) -> str:
    flag = {True: "pass", False: "FAIL", None: "n/a"}
    lines = [
        f"positivity:   {flag[rep['positivity_ok']]} (worst {_num(rep['worst_negativity'], 6)})",
        f"normalization: {flag[rep['normalization_ok']]} (worst {_num(rep['worst_normalization'], 6)})",
        f"no-signaling: {flag[rep['no_signaling_ok']]} (worst {_num(rep['worst_signaling'], 6)})",
    ]
    for v in rep["violations"][:10]:
        lines.append(f"  violated {v['check']} {v['constraint']} by {_num(v['amount'], 6)}")
    lines += [
        f"P = {_exact(rep['P'])}  Q = {_exact(rep['Q'])}  C = {_exact(rep['C'])}  zeros: {flag[rep['hardy_zeros_ok']]}",
        f"Bell-type LHS-RHS = {_exact(rep['bell_value'])}",
        f"GYNI = {_exact(rep['gyni'])} (bound 1)",
        "Svetlichny = " + ", ".join(_exact(v) for v in rep["svetlichny"]) + " (bound 4)",
        f"Rahaman conditions: {flag[rep['rahaman_ok']]}",
        f"CHSH(1,2) = {_exact(rep['chsh_12']) if rep['chsh_12'] is not None else 'n/a'}",
    ]
    return "\n".join(lines) + "\n"


def cmd_verify(args) -> int:
    source = args.file or args.dist
    if source is None:
        args.parser.error("give --dist <fixture|file> or --file <path>")
    try:
        if args.file is None and source in boxes.FIXTURE_IDS:
            d = boxes.paper_distribution(source)
        else:
            d = boxes.load_distribution(source)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"boxlab verify: cannot read {source!r}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    rep = verification_report(d)
    _write(to_json(rep) + "\n" if args.json else _human(rep), None)
    ok = rep["positivity_ok"] and rep["normalization_ok"] and rep["no_signaling_ok"]
    return EXIT_OK if ok else EXIT_INVALID


def cmd_nqubit(args) -> int:
    if args.n_min < 3 or args.n_max < args.n_min:
        args.parser.error("need 3 <= --n-min <= --n-max")
    rows = [(n, closed_form.nqubit_hardy_max(n)) for n in range(args.n_min, args.n_max + 1)]
    if args.json:
        _write(to_json([{"n": n, "P_max": p} for n, p in rows]) + "\n", None)
    else:
        _write("n,P_max\n" + "".join(f"{n},{_num(p)}\n" for n, p in rows), None)
    return EXIT_OK


# --------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="boxlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scan", help="tabulate C(t, x, y, z, gamma) over t as CSV")
    p.add_argument("--x", type=float, default=1.0)
    p.add_argument("--y", type=float, default=1.0)
    p.add_argument("--z", type=float, default=1.0)
    p.add_argument("--gamma", type=_gamma, default=closed_form.GAMMA0, help="radians or 'gamma0'")
    p.add_argument("--t-min", type=float, default=0.0)
    p.add_argument("--t-max", type=float, default=1.0)
    p.add_argument("--steps", type=_positive_int, default=100)
    p.add_argument("--out", help="output CSV path (default stdout)")
    p.set_defaults(func=cmd_scan, parser=p)

    p = sub.add_parser("optimize", help="numerical maxima of the success probabilities")
    p.add_argument("--target", required=True, choices=sorted(optimize.TARGETS))
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_optimize, parser=p)

    p = sub.add_parser("lp", help="no-signaling linear programs")
    p.add_argument("--problem", required=True, help="gnst, rahaman, gyni or gap:<p>")
    p.add_argument("--out", help="output JSON path (default stdout)")
    p.set_defaults(func=cmd_lp, parser=p)

    p = sub.add_parser("verify", help="check a behavior against the no-signaling and nonlocality conditions")
    p.add_argument("--dist", help=f"fixture id ({', '.join(boxes.FIXTURE_IDS)}) or box322-v1 JSON file")
    p.add_argument("--file", help="force reading a file even if its name matches a fixture id")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_verify, parser=p)

    p = sub.add_parser("nqubit", help="n-qubit Hardy maximum table")
    p.add_argument("--n-min", type=int, default=3)
    p.add_argument("--n-max", type=int, default=12)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_nqubit, parser=p)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
