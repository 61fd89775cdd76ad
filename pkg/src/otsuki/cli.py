"""Command-line interface.

Subcommands mirror the computation stages: ``geodesic`` (solve for the
family), ``spectrum`` (one discretized problem), ``edwards`` (boundary
form data), ``index`` (the full report), ``verify`` (invariant battery),
``sweep`` (batch of families).  JSON goes to stdout unless --json-out is
given.  Exit codes: 0 success, 1 validation problem, 2 numerical or
consistency failure.
"""

from __future__ import annotations

import argparse
import sys

from . import jsonio
from .errors import NumericalError, ValidationError
from .geodesic import GeodesicFamily, sample_trajectory, solve_parameter
from .pipeline import (bounds_check, cache_load, cache_store, compute_index,
                       verify_family)
from .sl import BoundaryCondition
from .edwards import (aggregate_roots, boundary_form, roots_of_unity_ladder)
from .spectral import spectrum_below
from .surface import fourier_block_system, l0_channel_system


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def _family_args(sub):
    sub.add_argument("--p", type=int, default=None)
    sub.add_argument("--q", type=int, default=None)
    sub.add_argument("--b", type=float, default=None,
                     help="direct geodesic parameter override")


def _emit(doc, args) -> None:
    text = jsonio.dumps(doc) + "\n"
    if getattr(args, "json_out", None):
        with open(args.json_out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _resolve_family(args):
    if args.b is not None:
        return GeodesicFamily.from_b(args.b)
    if args.p is None or args.q is None:
        raise ValidationError("give --p and --q, or a direct --b")
    return solve_parameter(args.p, args.q)


def build_parser() -> _Parser:
    parser = _Parser(prog="otsuki")
    subs = parser.add_subparsers(dest="command", required=True)

    g = subs.add_parser("geodesic", help="solve the closed-geodesic family")
    _family_args(g)
    g.add_argument("--n", type=int, default=None,
                   help="also sample the trajectory on n intervals")
    g.add_argument("--json-out", default=None)

    s = subs.add_parser("spectrum", help="solve one Sturm-Liouville problem")
    _family_args(s)
    s.add_argument("--l", type=int, required=True)
    s.add_argument("--bc", default="periodic",
                   choices=["periodic", "antiperiodic", "dirichlet", "twisted"])
    s.add_argument("--omega-index", type=int, default=None)
    s.add_argument("--channel", type=int, default=None, choices=[1, 2])
    s.add_argument("--n", type=int, default=2048)
    s.add_argument("--cutoff", type=float, default=1.0)
    s.add_argument("--json-out", default=None)

    e = subs.add_parser("edwards", help="boundary-form data for l = 1 or 2")
    _family_args(e)
    e.add_argument("--l", type=int, required=True, choices=[1, 2])
    e.add_argument("--n", type=int, default=2048)
    e.add_argument("--json-out", default=None)

    i = subs.add_parser("index", help="full Morse index / nullity report")
    i.add_argument("--p", type=int, required=True)
    i.add_argument("--q", type=int, required=True)
    i.add_argument("--method", default="both",
                   choices=["both", "direct", "edwards"])
    i.add_argument("--n", type=int, default=4096)
    i.add_argument("--json-out", default=None)
    i.add_argument("--cache-dir", default=None)
    i.add_argument("--no-cache", action="store_true")

    v = subs.add_parser("verify", help="run the invariant battery")
    v.add_argument("--p", type=int, required=True)
    v.add_argument("--q", type=int, required=True)
    v.add_argument("--n", type=int, default=1024)

    w = subs.add_parser("sweep", help="batch families from a file of 'p q' lines")
    w.add_argument("--input", required=True)
    w.add_argument("--method", default="both",
                   choices=["both", "direct", "edwards"])
    w.add_argument("--n", type=int, default=4096)
    w.add_argument("--json-out", default=None)
    return parser


def _cmd_geodesic(args) -> int:
    family = _resolve_family(args)
    doc = {"b": family.b, "c": family.c, "T": family.T, "Xi": family.Xi}
    if family.rotation is not None:
        doc["p"] = family.rotation.p
        doc["q"] = family.rotation.q
        doc["t0"] = family.t0
    if args.n:
        traj = sample_trajectory(family, args.n)
        doc["trajectory"] = traj.to_json_dict()
    _emit(doc, args)
    return 0


def _cmd_spectrum(args) -> int:
    family = _resolve_family(args)
    n_traj = max(1024, min(args.n, 8192))
    traj = sample_trajectory(family, n_traj)
    if args.bc == "twisted":
        if args.omega_index is None or family.rotation is None:
            raise ValidationError("twisted problems need --p/--q and --omega-index")
        omega = roots_of_unity_ladder(family.rotation.q)[
            args.omega_index % (2 * family.rotation.q)]
        bc = BoundaryCondition.twisted(omega)
        interval = "T"
    else:
        bc = BoundaryCondition(args.bc)
        interval = "t0" if args.bc == "periodic" else "T"
    summaries = []
    if args.l == 0:
        channels = [args.channel] if args.channel else [1, 2]
        for chan in channels:
            system = l0_channel_system(chan, traj, interval, bc)
            summaries.append(spectrum_below(system, args.cutoff, args.n,
                                            omega_index=args.omega_index))
    else:
        system = fourier_block_system(args.l, traj, interval, bc)
        summaries.append(spectrum_below(system, args.cutoff, args.n,
                                        omega_index=args.omega_index))
    _emit([s.to_json_dict() for s in summaries], args)
    return 0


def _cmd_edwards(args) -> int:
    family = _resolve_family(args)
    traj = sample_trajectory(family, max(1024, min(args.n, 8192)))
    data = boundary_form(args.l, traj, n_dirichlet=args.n)
    doc = data.to_json_dict()
    if family.rotation is not None:
        agg = aggregate_roots(args.l, family.rotation.p, family.rotation.q,
                              traj, data=data)
        doc["per_omega"] = [
            {"r": t.omega_index, "neg": t.neg, "zero": t.zero}
            for t in agg.per_omega]
        doc["neg_total"] = agg.neg_total
        doc["zero_total"] = agg.zero_total
    _emit(doc, args)
    return 0


def _cmd_index(args) -> int:
    if not args.no_cache:
        hit = cache_load(args.p, args.q, args.n, cache_dir=args.cache_dir)
        if hit is not None:
            _emit(hit, args)
            return 0
    report = compute_index(args.p, args.q, method=args.method, n=args.n)
    doc = report.to_json_dict()
    doc["bounds_check"] = bounds_check(report)
    if not args.no_cache:
        cache_store(report, cache_dir=args.cache_dir)
    _emit(doc, args)
    return 0


def _cmd_verify(args) -> int:
    rows = verify_family(args.p, args.q, n=args.n)
    width = max(len(r["check"]) for r in rows)
    ok_all = True
    for r in rows:
        status = "PASS" if r["ok"] else "FAIL"
        ok_all = ok_all and r["ok"]
        print(f"{r['check']:<{width}}  {status}  {r['detail']}")
    print(f"{'overall':<{width}}  {'PASS' if ok_all else 'FAIL'}")
    return 0 if ok_all else 2


def _cmd_sweep(args) -> int:
    pairs = []
    with open(args.input) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip().replace("/", " ")
            if not line:
                continue
            p_str, q_str = line.split()
            pairs.append((int(p_str), int(q_str)))
    out = sys.stdout if not args.json_out else open(args.json_out, "w")
    try:
        for p, q in sorted(pairs):
            report = compute_index(p, q, method=args.method, n=args.n)
            doc = report.to_json_dict()
            doc["bounds_check"] = bounds_check(report)
            out.write(jsonio.dumps(doc, indent=0).replace("\n", " ") + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


_COMMANDS = {
    "geodesic": _cmd_geodesic,
    "spectrum": _cmd_spectrum,
    "edwards": _cmd_edwards,
    "index": _cmd_index,
    "verify": _cmd_verify,
    "sweep": _cmd_sweep,
}


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
