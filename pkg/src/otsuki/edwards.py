"""Eigenvalue counting through boundary forms on [0, T].

For the coupled modes l = 1, 2 the twisted problems over one half period
can be counted without discretizing: integrate the four fundamental
solutions of the lambda = 0 system, read off the Hermitian form their
boundary data generates, and restrict it to the twist subspace.  The
count of the omega-twisted problem is then the Dirichlet negative count
plus the index of the restricted 2x2 form; its nullity is the form's
nullity.  The determinant of the restricted form is a quadratic
polynomial in s = Re(omega) whose roots mark the twists carrying zero
modes.  The method needs the Dirichlet problem to be nondegenerate,
which is checked up front.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (AmbiguousClassificationError, EdwardsInapplicableError,
                     NumericalError, ValidationError)
from .geodesic import Trajectory
from .sl import BoundaryCondition
from .spectral import TAU_ZERO_DEFAULT, spectrum_counts
from .surface import fourier_block_system
from .eigencount import eigenvalues_in

FOUR_PI2 = 4.0 * math.pi ** 2

SIGMA_SWAP = np.array([2, 3, 0, 1])  # boundary-ends swap (13)(24), zero-based


def roots_of_unity_ladder(q: int) -> list[complex]:
    """omega = eps^r for r = 0..2q-1 with eps = exp(i pi / q)."""
    eps = cmath.exp(1j * math.pi / q)
    return [eps ** r for r in range(2 * q)]


@dataclass(frozen=True)
class DirichletCounts:
    l: int
    negative: int
    margin: float
    mesh: int


def dirichlet_negative_count(l: int, traj: Trajectory, n: int = 2048,
                             tau_zero: float = TAU_ZERO_DEFAULT) -> DirichletCounts:
    """Negative count and zero-distance margin of the Dirichlet block on [0, T]."""
    system = fourier_block_system(l, traj, "T", BoundaryCondition.dirichlet())
    neg, zero = spectrum_counts(system, n, tau_zero)
    op = system.discretize(n)
    margin = 4.0
    for width in (1e-3, 1e-2, 1e-1, 1.0, 4.0):
        lam = eigenvalues_in(op, -width, width, tol=1e-10)
        if len(lam):
            margin = float(np.abs(lam).min())
            break
    if zero > 0 or margin <= tau_zero:
        raise EdwardsInapplicableError(
            f"Dirichlet problem at l={l} has an eigenvalue within "
            f"{tau_zero:g} of zero (margin {margin:.3e})")
    return DirichletCounts(l=l, negative=neg, margin=margin, mesh=n)


@dataclass(frozen=True)
class BoundarySolutions:
    """Fundamental lambda = 0 solutions with prescribed boundary values."""

    l: int
    T: float
    coeffs: np.ndarray            # (4, 4): psi_i in the initial-value basis
    condition: float
    psi_prime_0: np.ndarray       # (2, 4)
    psi_prime_T: np.ndarray       # (2, 4)
    p_ends: tuple
    _sol: object

    def psi(self, i: int, t) -> np.ndarray:
        """Values of psi_i (boundary data e_i) at times t; shape (2, len(t))."""
        y = self._sol(np.atleast_1d(t))
        out = np.zeros((2, y.shape[1]))
        for k in range(4):
            out[0] += self.coeffs[k, i] * y[2 + 4 * k]
            out[1] += self.coeffs[k, i] * y[3 + 4 * k]
        return out


def boundary_solutions(l: int, traj: Trajectory, rtol: float = 1e-11,
                       n_dirichlet: int = 2048,
                       tau_zero: float = TAU_ZERO_DEFAULT) -> BoundarySolutions:
    """Integrate the four fundamental solutions and match boundary values.

    The geodesic rides along in the integrated state so the coefficients
    are exact along the way.  Fails when the Dirichlet problem is
    degenerate (the boundary map is then no bijection) or when the 4x4
    matching system is ill conditioned.
    """
    dirichlet_negative_count(l, traj, n=n_dirichlet, tau_zero=tau_zero)

    fam = traj.family
    c = fam.c

    def rhs(t, y):
        phi, phid = y[0], y[1]
        cphi = math.cos(phi)
        sphi = math.sin(phi)
        phidd = (sphi / cphi) * phid * phid \
            - c * c * sphi / (8.0 * math.pi ** 4 * cphi ** 7)
        thd = c / (FOUR_PI2 * cphi ** 4)
        p = FOUR_PI2 * cphi * cphi
        pd = -8.0 * math.pi ** 2 * cphi * sphi * phid
        base = l * l / (cphi * cphi) + FOUR_PI2 * phid * phid - 2.0
        bend = 8.0 * math.pi ** 2 * cphi * cphi * thd * thd
        q11 = base - bend
        q22 = base - sphi * sphi * bend
        q12 = -4.0 * math.pi * l * phid / cphi
        out = [phid, phidd]
        for k in range(4):
            h1, h2, d1, d2 = y[2 + 4 * k: 6 + 4 * k]
            out.extend([d1, d2,
                        (q11 * h1 + q12 * h2 - pd * d1) / p,
                        (q12 * h1 + q22 * h2 - pd * d2) / p])
        return out

    y0 = [fam.b, 0.0,
          1, 0, 0, 0,
          0, 1, 0, 0,
          0, 0, 1, 0,
          0, 0, 0, 1]
    sol = solve_ivp(rhs, (0.0, fam.T), y0, method="DOP853",
                    rtol=rtol, atol=1e-12, dense_output=True)
    if not sol.success:
        raise NumericalError(f"fundamental-solution integration failed: {sol.message}")
    yT = sol.y[:, -1]
    U = np.array([[yT[2 + 4 * k] for k in range(4)],
                  [yT[3 + 4 * k] for k in range(4)]])       # u_k(T)
    Ud = np.array([[yT[4 + 4 * k] for k in range(4)],
                   [yT[5 + 4 * k] for k in range(4)]])      # u_k'(T)

    boundary_map = np.zeros((4, 4))
    boundary_map[0, 0] = boundary_map[1, 1] = 1.0           # u_k(0)
    boundary_map[2:, :] = U
    condition = float(np.linalg.cond(boundary_map))
    if condition > 1e10:
        raise NumericalError(
            f"boundary matching is ill conditioned (cond = {condition:.3e})")

    M = U[:, 2:]
    C = np.zeros((4, 4))
    C[0, 0] = C[1, 1] = 1.0
    C[2:, 0] = np.linalg.solve(M, -U[:, 0])
    C[2:, 1] = np.linalg.solve(M, -U[:, 1])
    C[2:, 2] = np.linalg.solve(M, np.array([1.0, 0.0]))
    C[2:, 3] = np.linalg.solve(M, np.array([0.0, 1.0]))

    psi_prime_0 = C[2:, :].copy()        # u_3'(0), u_4'(0) are the unit vectors
    psi_prime_T = Ud @ C
    phiT = yT[0]
    p0 = FOUR_PI2 * math.cos(fam.b) ** 2
    pT = FOUR_PI2 * math.cos(phiT) ** 2
    return BoundarySolutions(l=l, T=fam.T, coeffs=C, condition=condition,
                             psi_prime_0=psi_prime_0, psi_prime_T=psi_prime_T,
                             p_ends=(p0, pT), _sol=sol.sol)


def gram_matrix(l: int, traj: Trajectory,
                sols: Optional[BoundarySolutions] = None,
                sym_tol: float = 1e-6, **kwargs) -> np.ndarray:
    """The 4x4 boundary-form matrix a_ij = <e_i boundary, p psi_j'> |_0^T.

    Symmetry (real coefficients) and the ends-swap symmetry (coefficients
    even about the midpoint) are verified, then enforced by averaging.
    """
    if sols is None:
        sols = boundary_solutions(l, traj, **kwargs)
    p0, pT = sols.p_ends
    a = np.zeros((4, 4))
    for j in range(4):
        a[0, j] = -p0 * sols.psi_prime_0[0, j]
        a[1, j] = -p0 * sols.psi_prime_0[1, j]
        a[2, j] = pT * sols.psi_prime_T[0, j]
        a[3, j] = pT * sols.psi_prime_T[1, j]
    scale = np.abs(a).max()
    sym_err = np.abs(a - a.T).max() / scale
    swap = a[np.ix_(SIGMA_SWAP, SIGMA_SWAP)]
    swap_err = np.abs(a - swap).max() / scale
    if sym_err > sym_tol or swap_err > sym_tol:
        raise NumericalError(
            f"boundary form symmetry violated (sym {sym_err:.2e}, "
            f"swap {swap_err:.2e}); integration is suspect")
    a = 0.5 * (a + a.T)
    a = 0.5 * (a + a[np.ix_(SIGMA_SWAP, SIGMA_SWAP)])
    return a


def twisted_form(a: np.ndarray, omega: complex) -> np.ndarray:
    """Restriction of the boundary form to the omega-twist subspace."""
    omega = complex(omega)
    if abs(abs(omega) - 1.0) > 1e-12:
        raise ValidationError("twist parameter must have unit modulus")
    s2 = omega + omega.conjugate()           # 2 Re(omega)
    d = omega - omega.conjugate()            # 2i Im(omega)
    return np.array([
        [2.0 * a[0, 0] + s2.real * a[0, 2], d * a[0, 3]],
        [-d * a[0, 3], 2.0 * a[1, 1] - s2.real * a[1, 3]],
    ], dtype=complex)


@dataclass(frozen=True)
class DeterminantPolynomial:
    coeffs: tuple                 # (c2, c1, c0) of det A(s)
    roots: tuple                  # real roots, ascending (possibly empty)
    complex_pair: bool

    @property
    def s1(self) -> Optional[float]:
        return self.roots[0] if len(self.roots) == 2 else None

    @property
    def s2(self) -> Optional[float]:
        return self.roots[-1] if self.roots else None

    def __call__(self, s: float) -> float:
        c2, c1, c0 = self.coeffs
        return (c2 * s + c1) * s + c0

    @property
    def scale(self) -> float:
        return max(abs(v) for v in self.coeffs)


def det_polynomial(a: np.ndarray) -> DeterminantPolynomial:
    """det of the restricted form as a quadratic in s = Re(omega).

    The off-diagonal contributes |omega - conj(omega)|^2 = 4 (1 - s^2),
    so det A = 4 [(a11 + s a13)(a22 - s a24) - (1 - s^2) a14^2].
    """
    a11, a13, a14 = a[0, 0], a[0, 2], a[0, 3]
    a22, a24 = a[1, 1], a[1, 3]
    c2 = 4.0 * (a14 * a14 - a13 * a24)
    c1 = 4.0 * (a13 * a22 - a11 * a24)
    c0 = 4.0 * (a11 * a22 - a14 * a14)
    scale = max(abs(c2), abs(c1), abs(c0))
    if scale == 0.0:
        raise NumericalError("degenerate boundary form: det polynomial vanishes")
    if abs(c2) <= 1e-12 * scale:
        if abs(c1) <= 1e-12 * scale:
            raise NumericalError("degenerate boundary form: degree-0 determinant")
        return DeterminantPolynomial(coeffs=(c2, c1, c0),
                                     roots=(-c0 / c1,), complex_pair=False)
    disc = c1 * c1 - 4.0 * c2 * c0
    if disc < 0.0:
        return DeterminantPolynomial(coeffs=(c2, c1, c0), roots=(),
                                     complex_pair=True)
    rt = math.sqrt(disc)
    r1 = (-c1 - rt) / (2.0 * c2)
    r2 = (-c1 + rt) / (2.0 * c2)
    lo, hi = (r1, r2) if r1 <= r2 else (r2, r1)
    return DeterminantPolynomial(coeffs=(c2, c1, c0), roots=(lo, hi),
                                 complex_pair=False)


@dataclass(frozen=True)
class BoundaryFormData:
    """Everything the counting step needs for one mode l."""

    l: int
    b: float
    a: np.ndarray
    dirichlet: DirichletCounts
    poly: DeterminantPolynomial
    condition: float

    @property
    def applicability_margin(self) -> float:
        return self.dirichlet.margin

    def form(self, omega: complex) -> np.ndarray:
        return twisted_form(self.a, omega)

    def to_json_dict(self) -> dict:
        return {
            "l": self.l,
            "b": self.b,
            "a": [[float(v) for v in row] for row in self.a],
            "P_coeffs": [float(v) for v in self.poly.coeffs],
            "roots": [float(r) for r in self.poly.roots],
            "applicability_margin": float(self.applicability_margin),
        }


def boundary_form(l: int, traj: Trajectory, n_dirichlet: int = 2048,
                  tau_zero: float = TAU_ZERO_DEFAULT,
                  rtol: float = 1e-11,
                  margin_factor: float = 10.0) -> BoundaryFormData:
    """Assemble the full boundary-form data for mode l.

    The route is refused (EdwardsInapplicableError) unless the Dirichlet
    spectrum keeps a margin of ``margin_factor * tau_zero`` from zero.
    """
    dir_counts = dirichlet_negative_count(l, traj, n=n_dirichlet,
                                          tau_zero=tau_zero)
    if dir_counts.margin <= margin_factor * tau_zero:
        raise EdwardsInapplicableError(
            f"Dirichlet margin {dir_counts.margin:.3e} below "
            f"{margin_factor:g} * tau_zero at l={l}")
    sols = boundary_solutions(l, traj, rtol=rtol, n_dirichlet=n_dirichlet,
                              tau_zero=tau_zero)
    a = gram_matrix(l, traj, sols=sols)
    poly = det_polynomial(a)
    return BoundaryFormData(l=l, b=traj.family.b, a=a,
                            dirichlet=dir_counts, poly=poly,
                            condition=sols.condition)


@dataclass(frozen=True)
class TwistedCount:
    l: int
    omega_index: Optional[int]
    omega: complex
    neg: int
    zero: int


def twisted_counts(data: BoundaryFormData, omega: complex,
                   omega_index: Optional[int] = None,
                   tau_form_rel: float = 1e-7,
                   root_tol: float = 1e-6) -> TwistedCount:
    """Counts of the omega-twisted problem from the boundary form.

    neg = Dirichlet negatives + index of the restricted form; zero is the
    form's nullity.  A near-zero form eigenvalue is only accepted when
    Re(omega) sits at a root of the determinant polynomial, since the
    zero modes are exact there; anything else is reported as ambiguous.
    """
    A = data.form(omega)
    tr = float(A[0, 0].real + A[1, 1].real)
    det = float((A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]).real)
    disc = max(tr * tr - 4.0 * det, 0.0)
    rt = math.sqrt(disc)
    eigs = np.array([(tr - rt) / 2.0, (tr + rt) / 2.0])
    tau = tau_form_rel * max(np.abs(A).max(), 1e-30)
    ind = int(np.sum(eigs < -tau))
    nul = int(np.sum(np.abs(eigs) <= tau))
    if nul > 0:
        s = omega.real
        near_root = any(abs(s - r) <= root_tol for r in data.poly.roots)
        if not near_root:
            raise AmbiguousClassificationError(
                f"restricted form nearly singular at Re(omega)={s:.6f} "
                f"which is no root of the determinant polynomial")
    return TwistedCount(l=data.l, omega_index=omega_index, omega=omega,
                        neg=data.dirichlet.negative + ind, zero=nul)


@dataclass(frozen=True)
class AggregatedCounts:
    l: int
    neg_total: int
    zero_total: int
    per_omega: tuple
    even_r: Optional[tuple] = None    # (neg, zero) over r = 0, 2, ...
    odd_r: Optional[tuple] = None     # (neg, zero) over r = 1, 3, ...


def aggregate_roots(l: int, p: int, q: int, traj: Trajectory,
                    data: Optional[BoundaryFormData] = None,
                    **kwargs) -> AggregatedCounts:
    """Sum the twisted counts over all 2q-th roots of unity.

    For even q the even-r and odd-r partial sums are returned too; they
    are the half-length periodic and antiperiodic classes respectively.
    """
    if data is None:
        data = boundary_form(l, traj, **kwargs)
    per = []
    for r, om in enumerate(roots_of_unity_ladder(q)):
        per.append(twisted_counts(data, om, omega_index=r))
    neg_total = sum(t.neg for t in per)
    zero_total = sum(t.zero for t in per)
    even_r = odd_r = None
    if q % 2 == 0:
        even_r = (sum(t.neg for t in per[::2]), sum(t.zero for t in per[::2]))
        odd_r = (sum(t.neg for t in per[1::2]), sum(t.zero for t in per[1::2]))
    return AggregatedCounts(l=l, neg_total=neg_total, zero_total=zero_total,
                            per_omega=tuple(per), even_r=even_r, odd_r=odd_r)
