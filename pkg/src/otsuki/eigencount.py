"""Self-contained eigenvalue counting for the discretized operators.

The discrete problems are Hermitian block tridiagonal matrices whose
off-diagonal couplings are scalar multiples of the identity, plus a single
wrap-around block for periodic-type boundary conditions.  Symmetric
block elimination of A - sigma*I is a congruence transform, so the signs
of the pivot blocks give the number of eigenvalues below sigma (Sylvester
inertia).  Everything here - counts, bisection for individual
eigenvalues, inverse iteration for eigenfunctions - is built on that one
O(n) sweep; the wrap-around entries only ever fill the last block row.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NumericalError


class _PivotBreakdown(Exception):
    pass


@dataclass(frozen=True)
class BandOperator:
    """Hermitian (block-)tridiagonal operator with optional cyclic wrap.

    dim 1: ``diag`` has shape (m,).  dim 2: ``diag`` has shape (m, 3)
    holding (Q11, Q12, Q22) of each real-symmetric block.  ``off`` has
    shape (m-1,) - real scalar couplings between neighbours.  A cyclic
    operator additionally carries ``wrap_off`` (real scalar) and
    ``wrap_mult`` (per-channel unit-modulus multipliers) so that the
    (m-1, 0) block equals wrap_off * diag(wrap_mult).
    """

    dim: int
    diag: np.ndarray
    off: np.ndarray
    wrap_off: Optional[float] = None
    wrap_mult: Optional[tuple] = None
    meta: dict = None

    @property
    def m(self) -> int:
        return self.diag.shape[0]

    @property
    def size(self) -> int:
        return self.dim * self.m

    @property
    def cyclic(self) -> bool:
        return self.wrap_off is not None

    def is_complex(self) -> bool:
        return self.cyclic and any(abs(complex(w).imag) > 0 for w in self.wrap_mult)

    def to_dense(self) -> np.ndarray:
        """Assemble the full matrix; intended for small sizes and tests."""
        m, d = self.m, self.dim
        dtype = complex if self.is_complex() else float
        A = np.zeros((d * m, d * m), dtype=dtype)
        for j in range(m):
            if d == 1:
                A[j, j] = self.diag[j]
            else:
                q11, q12, q22 = self.diag[j]
                A[2 * j, 2 * j] = q11
                A[2 * j + 1, 2 * j + 1] = q22
                A[2 * j, 2 * j + 1] = q12
                A[2 * j + 1, 2 * j] = q12
        for j in range(m - 1):
            for ch in range(d):
                A[d * j + ch, d * (j + 1) + ch] += self.off[j]
                A[d * (j + 1) + ch, d * j + ch] += self.off[j]
        if self.cyclic:
            for ch in range(d):
                w = complex(self.wrap_mult[ch]) * self.wrap_off
                A[d * (m - 1) + ch, ch] += w if dtype is complex else w.real
                A[ch, d * (m - 1) + ch] += np.conj(w) if dtype is complex else w.real
        return A

    def gershgorin_lower(self) -> float:
        """A guaranteed lower bound for every eigenvalue."""
        m, d = self.m, self.dim
        radius = np.zeros(m)
        radius[:-1] += np.abs(self.off)
        radius[1:] += np.abs(self.off)
        if self.cyclic:
            radius[0] += abs(self.wrap_off)
            radius[-1] += abs(self.wrap_off)
        if d == 1:
            lam = self.diag
        else:
            q11, q12, q22 = self.diag[:, 0], self.diag[:, 1], self.diag[:, 2]
            half = 0.5 * (q11 + q22)
            lam = half - np.sqrt(0.25 * (q11 - q22) ** 2 + q12 ** 2)
        return float(np.min(lam - radius))


# ---------------------------------------------------------------------------
# inertia sweeps

def _inertia_d1_band(d, e, sigma):
    neg = 0
    s = d[0] - sigma
    for j in range(1, len(d)):
        if s == 0.0 or not np.isfinite(s):
            raise _PivotBreakdown
        if s < 0.0:
            neg += 1
        s = d[j] - sigma - e[j - 1] * e[j - 1] / s
    if s == 0.0 or not np.isfinite(s):
        raise _PivotBreakdown
    if s < 0.0:
        neg += 1
    return neg


def _inertia_d1_cyclic(d, e, w_off, w, sigma):
    m = len(d)
    neg = 0
    s = d[0] - sigma
    f = w_off * w                       # entry (m-1, 0)
    b = d[m - 1] - sigma
    for j in range(m - 2):
        if s == 0.0 or not np.isfinite(s):
            raise _PivotBreakdown
        if s < 0.0:
            neg += 1
        inv = 1.0 / s
        ej = e[j]
        b -= (f * f.conjugate()).real * inv if isinstance(f, complex) else f * f * inv
        fn = -f * ej * inv
        if j + 1 == m - 2:
            fn += e[m - 2]
        s = d[j + 1] - sigma - ej * ej * inv
        f = fn
    if s == 0.0 or not np.isfinite(s):
        raise _PivotBreakdown
    if s < 0.0:
        neg += 1
    b -= (f * f.conjugate()).real / s if isinstance(f, complex) else f * f / s
    if b == 0.0 or not np.isfinite(b):
        raise _PivotBreakdown
    if b < 0.0:
        neg += 1
    return neg


def _count_block(s11, s12, s22):
    det = s11 * s22 - s12 * s12
    if det == 0.0 or not np.isfinite(det):
        raise _PivotBreakdown
    if det < 0.0:
        return 1
    return 2 if s11 < 0.0 else 0


def _inertia_d2_band(d11, d12, d22, e, sigma):
    m = len(d11)
    neg = 0
    s11, s12, s22 = d11[0] - sigma, d12[0], d22[0] - sigma
    for j in range(1, m):
        neg += _count_block(s11, s12, s22)
        det = s11 * s22 - s12 * s12
        ee = e[j - 1] * e[j - 1] / det
        s11, s12, s22 = (d11[j] - sigma - ee * s22,
                         d12[j] + ee * s12,
                         d22[j] - sigma - ee * s11)
    neg += _count_block(s11, s12, s22)
    return neg


def _inertia_d2_cyclic(d11, d12, d22, e, w_off, w1, w2, sigma):
    m = len(d11)
    neg = 0
    s11, s12, s22 = d11[0] - sigma, d12[0], d22[0] - sigma
    f11 = w_off * w1
    f12 = 0.0j
    f21 = 0.0j
    f22 = w_off * w2
    b11 = d11[m - 1] - sigma
    b12 = complex(d12[m - 1])
    b22 = d22[m - 1] - sigma
    for j in range(m - 2):
        neg += _count_block(s11, s12, s22)
        det = s11 * s22 - s12 * s12
        x11 = s22 / det
        x12 = -s12 / det
        x22 = s11 / det
        # G = F X  (X real symmetric)
        g11 = f11 * x11 + f12 * x12
        g12 = f11 * x12 + f12 * x22
        g21 = f21 * x11 + f22 * x12
        g22 = f21 * x12 + f22 * x22
        # B -= G F^H  (Hermitian)
        b11 -= (g11 * f11.conjugate() + g12 * f12.conjugate()).real
        b22 -= (g21 * f21.conjugate() + g22 * f22.conjugate()).real
        b12 -= g11 * f21.conjugate() + g12 * f22.conjugate()
        ej = e[j]
        nat = e[m - 2] if j + 1 == m - 2 else 0.0
        f11, f12, f21, f22 = (nat - ej * g11, -ej * g12,
                              -ej * g21, nat - ej * g22)
        ee = ej * ej / det
        s11, s12, s22 = (d11[j + 1] - sigma - ee * s22,
                         d12[j + 1] + ee * s12,
                         d22[j + 1] - sigma - ee * s11)
    neg += _count_block(s11, s12, s22)
    det = s11 * s22 - s12 * s12
    x11 = s22 / det
    x12 = -s12 / det
    x22 = s11 / det
    g11 = f11 * x11 + f12 * x12
    g12 = f11 * x12 + f12 * x22
    g21 = f21 * x11 + f22 * x12
    g22 = f21 * x12 + f22 * x22
    b11 -= (g11 * f11.conjugate() + g12 * f12.conjugate()).real
    b22 -= (g21 * f21.conjugate() + g22 * f22.conjugate()).real
    b12 -= g11 * f21.conjugate() + g12 * f22.conjugate()
    detb = b11 * b22 - (b12 * b12.conjugate()).real
    if detb == 0.0 or not np.isfinite(detb):
        raise _PivotBreakdown
    if detb < 0.0:
        neg += 1
    elif b11 < 0.0:
        neg += 2
    return neg


def _inertia_raw(op: BandOperator, sigma: float) -> int:
    if op.m < 4:
        raise NumericalError("operator too small for the elimination sweep")
    if op.dim == 1:
        d = op.diag.tolist()
        e = op.off.tolist()
        if not op.cyclic:
            return _inertia_d1_band(d, e, sigma)
        w = complex(op.wrap_mult[0])
        if w.imag == 0.0:
            return _inertia_d1_cyclic(d, e, op.wrap_off, w.real, sigma)
        return _inertia_d1_cyclic(d, e, op.wrap_off, w, sigma)
    d11 = op.diag[:, 0].tolist()
    d12 = op.diag[:, 1].tolist()
    d22 = op.diag[:, 2].tolist()
    e = op.off.tolist()
    if not op.cyclic:
        return _inertia_d2_band(d11, d12, d22, e, sigma)
    w1 = complex(op.wrap_mult[0])
    w2 = complex(op.wrap_mult[1])
    return _inertia_d2_cyclic(d11, d12, d22, e, op.wrap_off, w1, w2, sigma)


def inertia(op: BandOperator, sigma: float) -> int:
    """Number of eigenvalues strictly below sigma."""
    scale = max(1.0, abs(sigma))
    for attempt in range(4):
        try:
            return _inertia_raw(op, sigma + attempt * 1e-13 * scale)
        except _PivotBreakdown:
            continue
    raise NumericalError(f"inertia sweep kept hitting singular pivots at sigma={sigma!r}")


def eigenvalues_in(op: BandOperator, lo: float, hi: float,
                   tol: float = 1e-9) -> np.ndarray:
    """All eigenvalues in (lo, hi], each located to +-tol by bisection."""
    c_lo = inertia(op, lo)
    c_hi = inertia(op, hi)
    out = []
    stack = [(lo, hi, c_lo, c_hi)]
    while stack:
        a, b, ca, cb = stack.pop()
        k = cb - ca
        if k == 0:
            continue
        if b - a <= tol:
            out.extend([0.5 * (a + b)] * k)
            continue
        mid = 0.5 * (a + b)
        # rounding can break exact monotonicity of the count right at a
        # degenerate eigenvalue; clamping keeps the split conservative
        cm = min(max(inertia(op, mid), ca), cb)
        stack.append((a, mid, ca, cm))
        stack.append((mid, b, cm, cb))
    return np.array(sorted(out))


# ---------------------------------------------------------------------------
# linear solves and inverse iteration (scalar operators)

def _thomas_band(d, e, rhs):
    m = len(d)
    c = [0.0] * m
    x = [0.0] * m
    beta = d[0]
    x[0] = rhs[0] / beta
    for j in range(1, m):
        c[j] = e[j - 1] / beta
        beta = d[j] - e[j - 1] * c[j]
        x[j] = (rhs[j] - e[j - 1] * x[j - 1]) / beta
    for j in range(m - 2, -1, -1):
        x[j] -= c[j + 1] * x[j + 1]
    return x


def _solve_scalar(op: BandOperator, sigma: float, rhs: np.ndarray) -> np.ndarray:
    """Solve (A - sigma I) x = rhs for a scalar band/cyclic operator."""
    d = (op.diag - sigma).tolist()
    e = op.off.tolist()
    b = rhs.tolist()
    if not op.cyclic:
        return np.array(_thomas_band(d, e, b))
    w = complex(op.wrap_mult[0])
    if w.imag != 0.0:
        raise NumericalError("scalar solves support real wrap multipliers only")
    alpha = op.wrap_off * w.real
    m = len(d)
    # rank-one split of the corner entries (Sherman-Morrison)
    gamma = -d[0] if d[0] != 0.0 else 1.0
    dmod = list(d)
    dmod[0] = d[0] - gamma
    dmod[m - 1] = d[m - 1] - alpha * alpha / gamma
    y = _thomas_band(dmod, e, b)
    u = [0.0] * m
    u[0] = gamma
    u[m - 1] = alpha
    z = _thomas_band(dmod, e, u)
    vy = y[0] + alpha / gamma * y[m - 1]
    vz = z[0] + alpha / gamma * z[m - 1]
    fac = vy / (1.0 + vz)
    return np.array([yj - fac * zj for yj, zj in zip(y, z)])


def scalar_eigenfunctions(op: BandOperator, lam: float, count: int = 1,
                          iters: int = 4, seed: int = 1234) -> list[np.ndarray]:
    """Inverse iteration at a converged eigenvalue; returns orthonormal vectors.

    For a (near-)degenerate pair request count=2; the iteration deflates
    against vectors already found.
    """
    if op.dim != 1:
        raise NumericalError("inverse iteration implemented for scalar operators")
    rng = np.random.default_rng(seed)
    shift = lam + 1e-9 * max(1.0, abs(lam))
    found: list[np.ndarray] = []
    for _ in range(count):
        x = rng.standard_normal(op.m)
        for v in found:
            x -= (v @ x) * v
        for _ in range(iters):
            x = _solve_scalar(op, shift, x)
            for v in found:
                x -= (v @ x) * v
            nrm = np.linalg.norm(x)
            if not np.isfinite(nrm) or nrm == 0.0:
                shift += 1e-8 * max(1.0, abs(lam))
                x = rng.standard_normal(op.m)
                continue
            x /= nrm
        found.append(x)
    return found
