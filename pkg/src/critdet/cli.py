"""Command-line front end.

Subcommands::

    eval     enclosures of named functions on a (p, sigma) box
    verify   a MAS part or a single sign claim, written as a certificate
    roots    certified bisection brackets for the Delta_sigma_sigma edge roots
    oracle   plain floating-point reference values
    replay   re-check a certificate file

Exit codes: 0 proven (or success), 2 refuted, 3 undecided, 1 any error.

Defaults for tolerances and depths can be put in a JSON file passed with
``--config``; the ``CRITDET_CONFIG`` environment variable names the file
used when ``--config`` is absent.  Explicit flags always win.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from typing import Any, Optional, Sequence

from . import __version__, cohn, oracle
from .certificate import bundle, dumps, load_certificates, to_csv
from .cohn import Box
from .errors import CritdetError
from .interval import Interval
from .verifier import (
    FUNCTIONS,
    ROOT_FUNCTIONS,
    SIGNS,
    RootEnclosure,
    SignClaim,
    SignEvidence,
    VerifyConfig,
    combined_status,
    enclose_root,
    prove_sign,
    replay,
    verify_mas_part,
)

EXIT = {"proven": 0, "error": 1, "refuted": 2, "undecided": 3}
CONFIG_ENV = "CRITDET_CONFIG"

DEFAULTS: dict[str, Any] = {
    "max_depth": 40,
    "min_width": 1e-6,
    "margin": 0.0,
    "workers": 1,
    "sigma_margin": 0.05,
    "tol": 1e-3,
    "fp_tol": 1e-14,
    "fd_step": 1e-6,
    "grid_n": 400,
}

EVAL_FUNCTIONS = ("sigma_p", "tau_p", "tau", "delta", "d_sigma", "d_sigma2", "d_p",
                  "d_sigma_p", "d_sigma2_p", "g", "h", "l0", "l1", "c")
_DERIVED = ("delta", "d_sigma", "d_sigma2", "d_p", "d_sigma_p", "d_sigma2_p")


class UsageError(CritdetError):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage, which would read as "refuted"."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT["error"], f"{self.prog}: error: {message}\n")


def _s(x: Optional[float]) -> str:
    return "" if x is None else repr(float(x))


def _load_config(path: Optional[str]) -> dict[str, Any]:
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path!r}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError(f"config {path!r} must hold a JSON object")
    unknown = set(data) - set(DEFAULTS)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return data


def _setting(args: argparse.Namespace, name: str) -> Any:
    value = getattr(args, name, None)
    if value is not None:
        return value
    return args.config_values.get(name, DEFAULTS[name])


def _range(pair: Optional[Sequence[float]], what: str) -> Interval:
    if pair is None:
        raise UsageError(f"--{what} is required")
    lo, hi = pair
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
        raise UsageError(f"malformed {what} range: {lo!r} {hi!r}")
    return Interval(lo, hi)


def _box(args: argparse.Namespace) -> Box:
    return Box(_range(args.p, "p"), _range(args.sigma, "sigma"))


def _emit(rows: list[dict[str, Any]], fields: list[str], fmt: str, out=None) -> None:
    out = out or sys.stdout
    if fmt == "json":
        out.write(json.dumps(rows, indent=1) + "\n")
    elif fmt == "csv":
        writer = csv.DictWriter(out, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    else:
        widths = [max(len(f), *(len(str(r.get(f, ""))) for r in rows)) for f in fields]
        out.write("  ".join(f.ljust(w) for f, w in zip(fields, widths)).rstrip() + "\n")
        for r in rows:
            out.write("  ".join(str(r.get(f, "")).ljust(w) for f, w in zip(fields, widths)).rstrip() + "\n")


def _write(text: str, path: Optional[str]) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- eval -------------------------------------------------------------------


def _eval_one(name: str, box: Box, derived: dict) -> tuple[Interval, str]:
    if name == "sigma_p":
        return cohn.sigma_p(box.p), ""
    if name == "tau_p":
        return cohn.tau_p_enclose(box.p).tau, ""
    if name == "tau":
        return cohn.tau_enclose(box).tau, ""
    if name == "c":
        return cohn.minkowski_constant(box.p), "conjecture-conditional"
    if name in _DERIVED:
        if "set" not in derived:
            derived["set"] = cohn.derivatives_enclose(box)
        return getattr(derived["set"], name), ""
    return FUNCTIONS[name](box), ""


def cmd_eval(args: argparse.Namespace) -> int:
    box = _box(args)
    derived: dict = {}
    rows = []
    for name in args.fn:
        enc, note = _eval_one(name, box, derived)
        rows.append({"fn": name, "lo": _s(enc.lo), "hi": _s(enc.hi), "width": _s(enc.width), "note": note})
    _emit(rows, ["fn", "lo", "hi", "width", "note"], args.format)
    return 0


# -- verify -----------------------------------------------------------------


def cmd_verify(args: argparse.Namespace) -> int:
    cfg = VerifyConfig(
        max_depth=int(_setting(args, "max_depth")),
        min_width=float(_setting(args, "min_width")),
        margin=float(_setting(args, "margin")),
        workers=int(_setting(args, "workers")),
    )
    if args.part is not None:
        if args.fn or args.sign:
            raise UsageError("give either --part or --fn/--sign, not both")
        p = Interval(2.0) if args.part == 4 and args.p is None else _range(args.p, "p")
        certs = verify_mas_part(args.part, p, float(_setting(args, "sigma_margin")), cfg)
    else:
        if not (args.fn and args.sign):
            raise UsageError("a raw claim needs --fn and --sign")
        if len(args.fn) != 1:
            raise UsageError("a raw claim takes a single --fn")
        extra = {}
        if args.sign == "contains":
            if args.value is None:
                raise UsageError("--sign contains needs --value")
            extra = {"value": args.value, "tolerance": args.tolerance}
        claim = SignClaim(args.fn[0], args.sign, _box(args), cfg.margin, **extra)
        certs = [prove_sign(claim, cfg.max_depth, cfg.min_width, cfg.workers)]
    status = combined_status(certs)
    text = dumps(bundle(certs, __version__, args.part)) if args.format == "json" else to_csv(certs)
    _write(text, args.output)
    if args.output:
        evals = sum(c.evaluations for c in certs)
        boxes = sum(len(c.boxes) for c in certs)
        print(f"{status}: {boxes} boxes, {evals} evaluations -> {args.output}")
    return EXIT[status]


# -- roots ------------------------------------------------------------------


def _evidence(ev: SignEvidence) -> dict[str, Any]:
    enc = ev.enclosure
    return {"p": _s(ev.p), "sign": ev.sign, "lo": _s(enc.lo if enc else None), "hi": _s(enc.hi if enc else None)}


def cmd_roots(args: argparse.Namespace) -> int:
    p = _range(args.p, "p")
    rows = []
    for name in args.fn or sorted(ROOT_FUNCTIONS):
        found = enclose_root(name, p, float(_setting(args, "tol")))
        row = {"function": name, "slice": found.slice}
        if isinstance(found, RootEnclosure):
            row.update(result="bracket", p_lo=_s(found.p_bracket.lo), p_hi=_s(found.p_bracket.hi),
                       steps=found.steps, reason="")
        else:
            row.update(result="no_root", p_lo=_s(found.p_search.lo), p_hi=_s(found.p_search.hi),
                       steps=0, reason=found.reason)
        left, right = _evidence(found.left), _evidence(found.right)
        if args.format == "json":
            row.update(left=left, right=right)
        else:
            row.update(left_sign=left["sign"], right_sign=right["sign"])
        rows.append(row)
    fields = ["function", "slice", "result", "p_lo", "p_hi", "steps", "reason", "left_sign", "right_sign"]
    _emit(rows, fields, args.format)
    return 0


# -- oracle -----------------------------------------------------------------


def cmd_oracle(args: argparse.Namespace) -> int:
    cfg = oracle.OracleConfig(
        fp_tol=float(_setting(args, "fp_tol")),
        fd_step=float(_setting(args, "fd_step")),
        grid_n=int(_setting(args, "grid_n")),
    )
    p = args.p
    if args.task == "parallelogram":
        value = oracle.min_parallelogram_area(p, cfg)
        row = {"task": args.task, "p": _s(p), "sigma": "", "value": _s(value)}
    else:
        if not p > 1.0:
            raise UsageError(f"p must exceed 1 (got {p!r})")
        if args.sigma is None:
            raise UsageError(f"oracle {args.task} needs --sigma")
        s = args.sigma
        if args.task == "tau":
            value = oracle.tau_point(p, s, cfg)
        elif args.task == "delta":
            value = oracle.delta_point(p, s, cfg)
        else:
            value = oracle.fd_derivative(args.which, p, s, cfg)
        row = {"task": args.task if args.task != "fd" else args.which, "p": _s(p), "sigma": _s(s),
               "value": _s(value)}
    _emit([row], ["task", "p", "sigma", "value"], args.format)
    return 0


# -- replay -----------------------------------------------------------------


def cmd_replay(args: argparse.Namespace) -> int:
    try:
        with open(args.certificate, encoding="utf-8") as fh:
            text = fh.read()
        certs = load_certificates(text)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot load certificate {args.certificate!r}: {exc}") from exc
    bad = 0
    for k, cert in enumerate(certs):
        rep = replay(cert)
        print(f"[{k}] {cert.claim.function_id} {cert.claim.sign}: recorded {cert.status}, "
              f"replayed {rep.status}, {rep.checked} boxes, {len(rep.mismatches)} mismatches")
        bad += 0 if rep.ok else 1
    if bad:
        print(f"replay disagrees with {bad} certificate(s)", file=sys.stderr)
        return EXIT["error"]
    return EXIT[combined_status(certs)]


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="critdet", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("--config", help=f"JSON file of default settings (else ${CONFIG_ENV})")
    sub = ap.add_subparsers(dest="command", required=True)

    def region(p: argparse.ArgumentParser, sigma: bool = True) -> None:
        p.add_argument("--p", nargs=2, type=float, metavar=("LO", "HI"), help="exponent range")
        if sigma:
            p.add_argument("--sigma", nargs=2, type=float, metavar=("LO", "HI"), help="sigma range")

    e = sub.add_parser("eval", help="enclose functions on a box")
    region(e)
    e.set_defaults(sigma=[1.0, 1.0])
    e.add_argument("--fn", action="append", choices=EVAL_FUNCTIONS, required=True,
                   help="function to enclose (repeatable); c assumes the Minkowski conjecture")
    e.add_argument("--format", choices=("table", "json", "csv"), default="table")
    e.set_defaults(run=cmd_eval)

    v = sub.add_parser("verify", help="verify a MAS part or a sign claim")
    region(v)
    v.add_argument("--part", type=int, choices=(1, 2, 3, 4))
    v.add_argument("--fn", action="append", choices=sorted(FUNCTIONS))
    v.add_argument("--sign", choices=SIGNS)
    v.add_argument("--value", type=float, help="target value for --sign contains")
    v.add_argument("--tolerance", type=float, default=1e-6, help="enclosure width for --sign contains")
    v.add_argument("--max-depth", type=int, help="bisection depth limit (default 40)")
    v.add_argument("--min-width", type=float, help="smallest box side (default 1e-6)")
    v.add_argument("--margin", type=float, help="required distance from zero (default 0)")
    v.add_argument("--workers", type=int, help="worker processes (default 1)")
    v.add_argument("--sigma-margin", type=float, help="relative sigma inset for parts (default 0.05)")
    v.add_argument("--output", "-o", help="certificate path (default stdout)")
    v.add_argument("--format", choices=("json", "csv"), default="json")
    v.set_defaults(run=cmd_verify)

    r = sub.add_parser("roots", help="bracket the Delta_sigma_sigma edge roots")
    region(r, sigma=False)
    r.add_argument("--fn", action="append", choices=sorted(ROOT_FUNCTIONS))
    r.add_argument("--tol", type=float, help="bracket width (default 1e-3)")
    r.add_argument("--format", choices=("table", "json", "csv"), default="json")
    r.set_defaults(run=cmd_roots)

    o = sub.add_parser("oracle", help="floating-point reference values")
    o.add_argument("task", choices=("parallelogram", "tau", "delta", "fd"))
    o.add_argument("--p", type=float, required=True)
    o.add_argument("--sigma", type=float)
    o.add_argument("--which", choices=oracle.FD_IDS, default="d_sigma", help="derivative for fd")
    o.add_argument("--fp-tol", type=float, help="fixed-point threshold (default 1e-14)")
    o.add_argument("--fd-step", type=float, help="finite-difference step (default 1e-6)")
    o.add_argument("--grid-n", type=int, help="parallelogram angle grid (default 400)")
    o.add_argument("--format", choices=("table", "json", "csv"), default="table")
    o.set_defaults(run=cmd_oracle)

    rp = sub.add_parser("replay", help="re-check a certificate file")
    rp.add_argument("certificate")
    rp.set_defaults(run=cmd_replay)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.config_values = _load_config(args.config)
        return args.run(args)
    except (CritdetError, ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT["error"]


if __name__ == "__main__":
    sys.exit(main())
