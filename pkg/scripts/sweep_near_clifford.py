#!/usr/bin/env python3
"""Sweep every admissible rotation number p/q up to a denominator bound.

For each reduced fraction in (1/2, sqrt(2)/2) the full report is computed
and one JSON line emitted; a closing table summarizes how the measured
index and nullity sit against the bounds as p/q approaches sqrt(2)/2.
"""

import argparse
import math
import sys
from fractions import Fraction

from otsuki import jsonio
from otsuki.pipeline import bounds_check, compute_index


def admissible(max_q):
    out = []
    for q in range(3, max_q + 1):
        for p in range(q // 2 + 1, q):
            if math.gcd(p, q) != 1:
                continue
            r = Fraction(p, q)
            if 0.5 < r < math.sqrt(2) / 2:
                out.append((p, q))
    return sorted(out, key=lambda pq: pq[0] / pq[1])


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-q", type=int, default=8)
    ap.add_argument("--n", type=int, default=1024)
    ap.add_argument("--method", default="both",
                    choices=["both", "direct", "edwards"])
    ap.add_argument("--jsonl-out", default=None)
    args = ap.parse_args()

    rows = []
    sink = open(args.jsonl_out, "w") if args.jsonl_out else None
    for p, q in admissible(args.max_q):
        report = compute_index(p, q, method=args.method, n=args.n)
        checks = bounds_check(report)
        doc = report.to_json_dict()
        doc["bounds_check"] = checks
        line = jsonio.dumps(doc, indent=0).replace("\n", " ")
        (sink or sys.stdout).write(line + "\n")
        rows.append((p, q, report.b, report.ind, report.nul,
                     report.bounds["thm_lower"], report.bounds["thm_upper"],
                     report.flags.get("s1")))
    if sink:
        sink.close()

    print(f"\n{'p/q':>6} {'b':>12} {'ind':>5} {'bounds':>10} {'nul':>4} {'s1':>9}")
    for p, q, b, ind, nul, lo, hi, s1 in rows:
        s1txt = f"{s1:9.4f}" if s1 is not None else "      n/a"
        print(f"{p}/{q:<4} {b:12.6f} {ind:5d} [{lo:3d},{hi:3d}] {nul:4d} {s1txt}")


if __name__ == "__main__":
    main()
