"""End-to-end index/nullity computation, bound checks, and the result cache.

For odd q every (anti)periodic eigenvalue over the full length counts;
modes l = 1, 2 enter with weight two.  For even q the surface is
invariant under the half-shift combined with the antipodal frame turn,
so only the half-length periodic classes contribute at even l and the
antiperiodic classes at odd l.  Modes l >= 3 are dismissed once the
mode-3 block is verified positive.
"""

from __future__ import annotations

import datetime
import math
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import jsonio
from .edwards import (AggregatedCounts, aggregate_roots, boundary_form,
                      roots_of_unity_ladder)
from .errors import (EdwardsInapplicableError, NumericalError,
                     RouteDisagreementError, ValidationError)
from .geodesic import Trajectory, sample_trajectory, solve_parameter
from .sl import BoundaryCondition
from .spectral import (TAU_ZERO_DEFAULT, direct_twisted_counts, spectral_index,
                       spectrum_counts, verify_high_l_positive)
from .surface import l0_channel_system

REPORT_VERSION = "1"


@dataclass(frozen=True)
class PerModeRecord:
    l: int
    neg: int
    zero: int
    method: str
    split: Optional[dict] = None        # even q: the unused symmetry class
    per_omega: Optional[tuple] = None   # (r, neg, zero) rows

    def to_json_dict(self) -> dict:
        d = {"l": self.l, "neg": self.neg, "zero": self.zero,
             "method": self.method}
        if self.split is not None:
            d["split"] = self.split
        if self.per_omega is not None:
            d["per_omega"] = [list(row) for row in self.per_omega]
        return d


@dataclass(frozen=True)
class IndexReport:
    p: int
    q: int
    b: float
    c: float
    T: float
    Xi: float
    t0: float
    n: int
    method: str
    per_mode: tuple
    ind: int
    nul: int
    spectral_index: int
    bounds: dict
    flags: dict
    version: str = REPORT_VERSION
    timestamp: str = ""

    def to_json_dict(self) -> dict:
        return {
            "p": self.p, "q": self.q,
            "b": self.b, "c": self.c, "T": self.T, "Xi": self.Xi,
            "t0": self.t0, "n": self.n, "method": self.method,
            "per_mode": [r.to_json_dict() for r in self.per_mode],
            "ind": self.ind, "nul": self.nul,
            "spectral_index": self.spectral_index,
            "bounds": self.bounds, "flags": self.flags,
            "version": self.version, "timestamp": self.timestamp,
        }


def index_bounds(p: int, q: int) -> dict:
    """Index bounds 6q+8p-3 <= ind <= 10q+4p-5 for odd q, halved pattern
    3q+4p-3 <= ind <= 5q+2p-5 for even q; nullity always in [9, 13]."""
    if q % 2 == 1:
        lo, hi = 6 * q + 8 * p - 3, 10 * q + 4 * p - 5
    else:
        lo, hi = 3 * q + 4 * p - 3, 5 * q + 2 * p - 5
    return {"thm_lower": lo, "thm_upper": hi, "nul_lower": 9, "nul_upper": 13}


def spectral_index_formula(p: int, q: int) -> int:
    return 2 * q + 4 * p - 2 if q % 2 == 1 else q + 2 * p - 2


def _mode0_counts(traj: Trajectory, n: int, tau_zero: float) -> PerModeRecord:
    q = traj.family.rotation.q
    interval = "t0/2" if q % 2 == 0 else "t0"
    neg = zero = 0
    for chan in (1, 2):
        system = l0_channel_system(chan, traj, interval,
                                   BoundaryCondition.periodic())
        c_neg, c_zero = spectrum_counts(system, n, tau_zero)
        neg += c_neg
        zero += c_zero
    return PerModeRecord(l=0, neg=neg, zero=zero, method="direct")


def _direct_mode_counts(l: int, traj: Trajectory, n: int,
                        tau_zero: float) -> list[tuple]:
    q = traj.family.rotation.q
    rows = []
    for r, om in enumerate(roots_of_unity_ladder(q)):
        neg, zero = direct_twisted_counts(l, om, traj, n, tau_zero)
        rows.append((r, neg, zero))
    return rows


def _edwards_mode_counts(agg: AggregatedCounts) -> list[tuple]:
    return [(t.omega_index, t.neg, t.zero) for t in agg.per_omega]


def _sum_rows(rows, parity: Optional[int] = None) -> tuple[int, int]:
    keep = [(n, z) for (r, n, z) in rows if parity is None or r % 2 == parity]
    return sum(n for n, _ in keep), sum(z for _, z in keep)


def compute_index(p: int, q: int, method: str = "both", n: int = 4096,
                  tau_zero: float = TAU_ZERO_DEFAULT,
                  n_traj: int = 4096) -> IndexReport:
    """Full Morse index / nullity report for the closed family p/q.

    method 'direct' discretizes every twisted problem, 'edwards' counts
    through the boundary form, 'both' runs the two routes and fails
    loudly on any per-(l, omega) disagreement.  Counts internally combine
    meshes n and 2n, so a single call already contains the confirmation
    pass.
    """
    if method not in ("direct", "edwards", "both"):
        raise ValidationError(f"unknown method {method!r}")
    family = solve_parameter(p, q)
    traj = sample_trajectory(family, n_traj)
    q_even = (q % 2 == 0)

    records = [_mode0_counts(traj, n, tau_zero)]
    flags: dict = {"tau_zero": tau_zero, "edwards_applicable": {},
                   "s1": None, "s2": None, "s1_below_minus_one": None,
                   "abs_s1_gt_s2": None}

    want_parity = {1: 1, 2: 0}      # even q: odd r at l=1, even r at l=2
    for l in (1, 2):
        edwards_rows = None
        direct_rows = None
        data = None
        edwards_ok = None       # None: not attempted
        if method in ("edwards", "both"):
            try:
                data = boundary_form(l, traj, n_dirichlet=n, tau_zero=tau_zero)
                agg = aggregate_roots(l, p, q, traj, data=data)
                edwards_rows = _edwards_mode_counts(agg)
                edwards_ok = True
            except EdwardsInapplicableError:
                edwards_ok = False
                if method == "edwards":
                    raise EdwardsInapplicableError(
                        f"boundary-form route inapplicable at l={l}; "
                        "rerun with method='direct'")
        flags["edwards_applicable"][str(l)] = edwards_ok
        if l == 1 and data is not None:
            poly = data.poly
            flags["s1"] = poly.s1
            flags["s2"] = poly.s2
            if poly.s1 is not None:
                flags["s1_below_minus_one"] = bool(poly.s1 < -1.0)
                flags["abs_s1_gt_s2"] = bool(abs(poly.s1) > poly.s2)
        if method in ("direct", "both") or not edwards_ok:
            direct_rows = _direct_mode_counts(l, traj, n, tau_zero)

        if edwards_rows is not None and direct_rows is not None:
            diffs = [(l, r, (en, ez), (dn, dz))
                     for (r, en, ez), (_, dn, dz) in zip(edwards_rows, direct_rows)
                     if (en, ez) != (dn, dz)]
            if diffs:
                raise RouteDisagreementError(
                    f"boundary-form and direct counts disagree at l={l}: {diffs}",
                    diffs=diffs)

        rows = edwards_rows if edwards_rows is not None else direct_rows
        used = ("both" if edwards_rows is not None and direct_rows is not None
                else "edwards" if edwards_rows is not None else "direct")
        if q_even:
            neg, zero = _sum_rows(rows, parity=want_parity[l])
            other = _sum_rows(rows, parity=1 - want_parity[l])
            split = {"used_parity": "odd_r" if want_parity[l] else "even_r",
                     "other_class_neg": other[0], "other_class_zero": other[1]}
        else:
            neg, zero = _sum_rows(rows)
            split = None
        records.append(PerModeRecord(l=l, neg=neg, zero=zero, method=used,
                                     split=split, per_omega=tuple(rows)))

    if not verify_high_l_positive(3, traj, n=max(512, n // 4), tau_zero=tau_zero):
        raise NumericalError("mode l=3 failed the positivity check; "
                             "higher modes cannot be dismissed")
    flags["l3_positive"] = True

    ind = records[0].neg + 2 * records[1].neg + 2 * records[2].neg
    nul = records[0].zero + 2 * records[1].zero + 2 * records[2].zero
    ind_s = spectral_index(p, q, traj, n=n, tau_zero=tau_zero)

    bounds = index_bounds(p, q)
    bounds["rough_upper"] = 5 * ind_s + 2
    report = IndexReport(
        p=p, q=q, b=family.b, c=family.c, T=family.T, Xi=family.Xi,
        t0=family.t0, n=n, method=method, per_mode=tuple(records),
        ind=ind, nul=nul, spectral_index=ind_s, bounds=bounds, flags=flags,
        timestamp=datetime.datetime.now(datetime.timezone.utc).isoformat())
    return report


def bounds_check(report: IndexReport) -> dict:
    """Evaluate every stated bound on a finished report.

    Families near the degenerate limit are expected to satisfy all of
    them; far families are reported as findings, not assertions.
    """
    b = report.bounds
    return {
        "thm_lower_ok": b["thm_lower"] <= report.ind,
        "thm_upper_ok": report.ind <= b["thm_upper"],
        "nul_ok": b["nul_lower"] <= report.nul <= b["nul_upper"],
        "rough_upper_ok": report.ind <= b["rough_upper"],
        "ind": report.ind,
        "nul": report.nul,
        "spectral_index": report.spectral_index,
        "bounds": dict(b),
    }


# ---------------------------------------------------------------------------
# cache

def cache_dir_path(cache_dir: Optional[str] = None) -> str:
    return cache_dir or os.environ.get("OTSUKI_CACHE", ".cache")


def cache_key(p: int, q: int, n: int, version: str = REPORT_VERSION) -> str:
    return f"{p}-{q}-{n}-v{version}"


def cache_store(report: IndexReport, cache_dir: Optional[str] = None) -> str:
    path = cache_dir_path(cache_dir)
    os.makedirs(path, exist_ok=True)
    fname = os.path.join(path, cache_key(report.p, report.q, report.n) + ".json")
    with open(fname, "w") as fh:
        fh.write(jsonio.dumps(report.to_json_dict()))
        fh.write("\n")
    return fname


def cache_load(p: int, q: int, n: int, cache_dir: Optional[str] = None,
               version: str = REPORT_VERSION) -> Optional[dict]:
    import json
    import warnings

    fname = os.path.join(cache_dir_path(cache_dir),
                         cache_key(p, q, n, version) + ".json")
    if not os.path.exists(fname):
        return None
    try:
        with open(fname) as fh:
            doc = json.load(fh)
        if doc.get("version") != version:
            return None
        return doc
    except (json.JSONDecodeError, OSError) as exc:
        warnings.warn(f"ignoring corrupt cache entry {fname}: {exc}")
        return None


# ---------------------------------------------------------------------------
# per-family verification battery (CLI `verify`)

def verify_family(p: int, q: int, n: int = 1024,
                  n_traj: Optional[int] = None) -> list[dict]:
    """Fast invariant battery for one family; returns pass/fail rows."""
    if n_traj is None:
        n_traj = max(1024, 2 * n)
    from .spectral import antiperiodic_check_l0
    from .surface import (frame, kernel_fields, kernel_residual,
                          separated_coefficients)

    rows = []

    def add(name, ok, detail):
        rows.append({"check": name, "ok": bool(ok), "detail": detail})

    family = solve_parameter(p, q)
    traj = sample_trajectory(family, n_traj)
    drift = traj.conservation_drift()
    add("conservation", drift < 1e-10, f"max drift {drift:.3e}")
    add("endpoint phi(T)=-b", abs(traj.phi[-1] + family.b) < 1e-8,
        f"error {abs(traj.phi[-1] + family.b):.3e}")
    add("endpoint theta(T)=Xi", abs(traj.theta[-1] - family.Xi) < 1e-8,
        f"error {abs(traj.theta[-1] - family.Xi):.3e}")

    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(24):
        al = rng.uniform(0, 2 * math.pi)
        tt = rng.uniform(0, family.t0)
        G = frame(al, tt, traj).gram()
        worst = max(worst, float(np.abs(G - np.eye(5)).max()))
    add("frame orthonormal", worst < 1e-10, f"max |Gram - I| {worst:.3e}")

    fields = kernel_fields(traj)
    worst = 0.0
    for fld in fields:
        coeffs = separated_coefficients(fld.l, traj, fld.grid)
        worst = max(worst, kernel_residual(fld, coeffs, traj).value)
    add("kernel residuals", worst < 1e-5, f"max residual {worst:.3e}")

    rec0 = _mode0_counts(traj, n, TAU_ZERO_DEFAULT)
    if q % 2 == 1:
        exp_neg = 2 * q + 4 * p - 1
    else:
        exp_neg = q + 2 * p - 1
    add("l=0 counts", (rec0.neg, rec0.zero) == (exp_neg, 3),
        f"neg={rec0.neg} (expect {exp_neg}), zero={rec0.zero} (expect 3)")

    lam1, lam2, corr = antiperiodic_check_l0(traj, n=n)
    add("antiperiodic l=0", lam1 < 0 and abs(lam2) <= TAU_ZERO_DEFAULT
        and corr > 0.999, f"lam1={lam1:.4f}, lam2={lam2:.2e}, corr={corr:.5f}")

    for l in (1, 2):
        try:
            data = boundary_form(l, traj, n_dirichlet=n)
            if l == 1:
                target = -math.cos(p * math.pi / q)
                add("s2 = -cos(p pi / q)", abs(data.poly.s2 - target) < 1e-6,
                    f"s2={data.poly.s2:.9f}, target={target:.9f}")
            else:
                val = abs(data.poly(1.0)) / data.poly.scale
                add("P2(1) = 0", val < 1e-8, f"relative value {val:.3e}")
            agg = aggregate_roots(l, p, q, traj, data=data)
            direct_rows = _direct_mode_counts(l, traj, n, TAU_ZERO_DEFAULT)
            same = all((t.neg, t.zero) == (dn, dz)
                       for t, (_, dn, dz) in zip(agg.per_omega, direct_rows))
            add(f"route agreement l={l}", same,
                "boundary-form counts equal direct counts" if same
                else "MISMATCH")
        except EdwardsInapplicableError as exc:
            add(f"route agreement l={l}", True, f"edwards inapplicable: {exc}")

    add("l=3 positive", verify_high_l_positive(3, traj, n=max(512, n // 2)), "")
    return rows


def sweep(pairs, method: str = "both", n: int = 4096):
    """Compute reports for a list of (p, q) pairs, ordered by (p, q)."""
    out = []
    for p, q in sorted(pairs):
        report = compute_index(p, q, method=method, n=n)
        out.append(report)
    return out
