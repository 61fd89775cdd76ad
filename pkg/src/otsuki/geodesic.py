"""Closed geodesics of the doubled-angle metric on the twice-punctured sphere.

The metric is E dphi^2 + G dtheta^2 with E = 4 pi^2 cos^2(phi) and
G = 4 pi^2 cos^4(phi).  A geodesic launched horizontally from phi = b < 0
oscillates between the parallels phi = b and phi = -b; the half period T(b)
and the rotation angle Xi(b) = theta(T) are singular integrals over
[b, -b].  The geodesic closes exactly when Xi(b) is a rational multiple
of pi, which pins b for each admissible rotation number p/q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError, NumericalError, ValidationError
from .quadrature import adaptive_gauss

TWO_PI = 2.0 * math.pi

# Limits of T(b) and Xi(b) as b -> 0- (the Clifford degeneration) and the
# Xi limit as b -> -pi/2.
CLIFFORD_HALF_PERIOD = math.sqrt(2.0) * math.pi ** 2
CLIFFORD_ROTATION = math.sqrt(2.0) * math.pi / 2.0
ROTATION_POLAR_LIMIT = math.pi / 2.0

ROTATION_LO = 0.5
ROTATION_HI = math.sqrt(2.0) / 2.0


def metric_coefficients(phi: float) -> tuple[float, float]:
    """Return (E, G) at latitude phi; the metric degenerates at the poles."""
    if not abs(phi) < math.pi / 2:
        raise DomainError(f"metric degenerates at |phi| >= pi/2 (got {phi!r})")
    c2 = math.cos(phi) ** 2
    return 4.0 * math.pi ** 2 * c2, 4.0 * math.pi ** 2 * c2 * c2


def _check_b(b: float) -> None:
    if not (-math.pi / 2 < b < 0.0):
        raise DomainError(f"geodesic parameter must lie in (-pi/2, 0), got {b!r}")


def _singular_factors(u: np.ndarray, b: float):
    # Substitution phi = -b sin u removes the inverse-square-root endpoint
    # singularity: cos^2(phi) - cos^2(b) = sin(b(1+sin u)) sin(b(1-sin u))
    # is exact in floating point, while the quartic difference cancels badly.
    su = np.sin(u)
    phi = -b * su
    prod = np.sin(b * (1.0 + su)) * np.sin(b * (1.0 - su))
    quart = np.cos(phi) ** 2 + math.cos(b) ** 2
    jac = -b * np.cos(u)
    return phi, jac / np.sqrt(prod * quart)


def half_period(b: float, tol: float = 1e-13) -> float:
    """Half period T(b) of the latitude oscillation, in arc-length units."""
    _check_b(b)

    def f(u):
        phi, kernel = _singular_factors(u, b)
        return TWO_PI * np.cos(phi) ** 3 * kernel

    return adaptive_gauss(f, -math.pi / 2, math.pi / 2, tol=tol)


def rotation_angle(b: float, tol: float = 1e-13) -> float:
    """Rotation angle Xi(b) = theta(T(b)); strictly increasing in b."""
    _check_b(b)
    cb2 = math.cos(b) ** 2

    def f(u):
        phi, kernel = _singular_factors(u, b)
        return cb2 * kernel / np.cos(phi)

    return adaptive_gauss(f, -math.pi / 2, math.pi / 2, tol=tol)


@dataclass(frozen=True)
class RotationNumber:
    """Reduced fraction p/q in (1/2, sqrt(2)/2) plus the closed length t0 = 2qT."""

    p: int
    q: int
    t0: float

    def __post_init__(self):
        if self.p <= 0 or self.q <= 0:
            raise ValidationError("p and q must be positive integers")
        if math.gcd(self.p, self.q) != 1:
            raise ValidationError(f"p/q must be reduced, got {self.p}/{self.q}")
        ratio = self.p / self.q
        if not (ROTATION_LO < ratio < ROTATION_HI):
            raise ValidationError(
                f"p/q must lie in (1/2, sqrt(2)/2), got {self.p}/{self.q} = {ratio:.6f}"
            )

    @property
    def parity(self) -> str:
        return "even" if self.q % 2 == 0 else "odd"


@dataclass(frozen=True)
class GeodesicFamily:
    """One closed geodesic: parameter b, momentum c, half period T, angle Xi."""

    b: float
    c: float
    T: float
    Xi: float
    rotation: Optional[RotationNumber] = None

    @classmethod
    def from_b(cls, b: float) -> "GeodesicFamily":
        if b == 0.0:
            return cls.clifford()
        _check_b(b)
        c = TWO_PI * math.cos(b) ** 2
        T, _ = _polish_endpoint(b, c, half_period(b))
        return cls(b=b, c=c, T=T, Xi=rotation_angle(b))

    @classmethod
    def clifford(cls) -> "GeodesicFamily":
        """Degenerate b = 0 limit (phi == 0); calibration data only."""
        return cls(b=0.0, c=TWO_PI, T=CLIFFORD_HALF_PERIOD, Xi=CLIFFORD_ROTATION)

    @property
    def t0(self) -> float:
        if self.rotation is None:
            raise ValidationError("full geodesic length needs a rotation number")
        return self.rotation.t0


def solve_parameter(p: int, q: int, tol_root: float = 1e-10) -> GeodesicFamily:
    """Find the family with Xi(b) = (p/q) pi.

    Monotonicity of Xi guarantees a unique root; bracketing bisection is
    polished with a few secant steps.
    """
    if not isinstance(p, int) or not isinstance(q, int):
        raise ValidationError("p and q must be integers")
    # validates gcd and the admissible interval before any quadrature
    RotationNumber(p, q, t0=1.0)
    target = p * math.pi / q

    # the rotation angle approaches its polar limit only as b -> -pi/2, so
    # walk the lower bracket end toward the pole just as far as needed
    hi = -1e-8
    fhi = rotation_angle(hi) - target
    delta = math.pi / 2 - 1.0
    lo = -1.0
    flo = rotation_angle(lo) - target
    while flo > 0:
        delta /= 2.0
        if delta < 5e-4:
            raise NumericalError(
                "failed to bracket the rotation-angle root; p/q too close to 1/2")
        lo = -math.pi / 2 + delta
        flo = rotation_angle(lo) - target
    if fhi < 0:
        raise NumericalError("failed to bracket the rotation-angle root")
    fm = None
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = rotation_angle(mid) - target
        if abs(fm) < tol_root or hi - lo < 1e-13:
            break
        if fm < 0:
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
    b0, f0 = mid, fm
    b1 = mid + (1e-9 if fm < 0 else -1e-9)
    f1 = rotation_angle(b1) - target
    for _ in range(4):
        if f1 == f0:
            break
        b2 = b1 - f1 * (b1 - b0) / (f1 - f0)
        if not (-math.pi / 2 < b2 < 0):
            break
        b0, f0, b1, f1 = b1, f1, b2, rotation_angle(b2) - target
        if abs(f1) < 1e-13:
            break
    b = b1 if abs(f1) < abs(f0) else b0

    # final secant steps against the integrated flow: the sampled-trajectory
    # extension is only junction-smooth when theta(T) equals p pi / q at the
    # integrator's own accuracy, which the quadrature root cannot provide
    def flow_residual(bb):
        cc = TWO_PI * math.cos(bb) ** 2
        TT, theta_T = _polish_endpoint(bb, cc, half_period(bb))
        return TT, theta_T - target

    T_a, f_a = flow_residual(b)
    b_alt = b + 1e-9
    T_b, f_b = flow_residual(b_alt)
    for _ in range(3):
        if f_b == f_a or abs(f_b) < 1e-15:
            break
        b_new = b_alt - f_b * (b_alt - b) / (f_b - f_a)
        b, f_a, T_a = b_alt, f_b, T_b
        b_alt = b_new
        T_b, f_b = flow_residual(b_alt)
    if abs(f_b) <= abs(f_a):
        b, T = b_alt, T_b
    else:
        T = T_a
    c = TWO_PI * math.cos(b) ** 2
    return GeodesicFamily(
        b=b, c=c, T=T, Xi=rotation_angle(b),
        rotation=RotationNumber(p, q, t0=2 * q * T),
    )


def _geodesic_rhs(phi: float, phid: float, c: float):
    cphi = math.cos(phi)
    sphi = math.sin(phi)
    phidd = (sphi / cphi) * phid * phid \
        - c * c * sphi / (8.0 * math.pi ** 4 * cphi ** 7)
    thd = c / (4.0 * math.pi ** 2 * cphi ** 4)
    return phidd, thd


def _endpoint_state(b: float, c: float, T: float, steps: int = 32768):
    """(phi, phidot, theta, phidotdot, thetadot) at time T, fixed-step RK4."""
    h = T / steps
    h2, h6 = h / 2.0, h / 6.0
    y0, y1, y2 = b, 0.0, 0.0
    for _ in range(steps):
        a1, t1 = _geodesic_rhs(y0, y1, c)
        v2 = y1 + h2 * a1
        a2, t2 = _geodesic_rhs(y0 + h2 * y1, v2, c)
        v3 = y1 + h2 * a2
        a3, t3 = _geodesic_rhs(y0 + h2 * v2, v3, c)
        v4 = y1 + h * a3
        a4, t4 = _geodesic_rhs(y0 + h * v3, v4, c)
        y0 += h6 * (y1 + 2 * v2 + 2 * v3 + v4)
        y1 += h6 * (a1 + 2 * a2 + 2 * a3 + a4)
        y2 += h6 * (t1 + 2 * t2 + 2 * t3 + t4)
    add, thd = _geodesic_rhs(y0, y1, c)
    return y0, y1, y2, add, thd


def _polish_endpoint(b: float, c: float, T: float):
    """Newton-correct T so phidot(T) = 0 against the integrated flow, and
    return the flow's rotation angle at the corrected turning time.

    The quadrature T is accurate to ~1e-13, but reflected trajectory
    samples kink at the half-period junctions unless the stored T is the
    integrator's own turning time; theta at the corrected time follows to
    second order in the (tiny) shift.
    """
    phi, phid, theta, phidd, thd = _endpoint_state(b, c, T)
    if phidd == 0.0:
        return T, theta
    dT = -phid / phidd
    return T + dT, theta + thd * dT


@dataclass(frozen=True)
class Trajectory:
    """Samples of (phi, phidot, theta) on a uniform grid over [0, T]."""

    family: GeodesicFamily
    grid: np.ndarray
    phi: np.ndarray
    phidot: np.ndarray
    theta: np.ndarray
    _padded: tuple = field(default=None, repr=False, compare=False)

    @property
    def n(self) -> int:
        return len(self.grid) - 1

    def __post_init__(self):
        n = self.n
        h = self.family.T / n
        # the half-period shift of theta: p pi / q makes the full-length
        # wrap exact for closed families (the solver pins theta(T) to it);
        # otherwise the integrated value keeps the junctions smooth
        rot = self.family.rotation
        shift = (math.pi * rot.p / rot.q) if rot is not None \
            else float(self.theta[-1])
        # virtual nodes: phi even at t=0, T-antiperiodic beyond T; theta odd
        # at 0 and shifting by theta(T) per half period
        def pad(arr, left, right):
            return np.concatenate(([left[1], left[0]], arr, [right[0], right[1]]))
        phi_p = pad(self.phi, (self.phi[1], self.phi[2]),
                    (-self.phi[1], -self.phi[2]))
        phid_p = pad(self.phidot, (-self.phidot[1], -self.phidot[2]),
                     (-self.phidot[1], -self.phidot[2]))
        th_p = pad(self.theta, (-self.theta[1], -self.theta[2]),
                   (self.theta[1] + shift, self.theta[2] + shift))
        object.__setattr__(self, "_padded", (h, phi_p, phid_p, th_p, shift))

    def at(self, t):
        """Evaluate (phi, phidot, theta) at arbitrary times in [0, t0).

        Times are folded into [0, T] through phi(t+T) = -phi(t) and
        theta(t+T) = theta(t) + Xi; between nodes a centered cubic
        interpolant is used.  Families without a rotation number accept
        any real t.
        """
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        if self.family.rotation is not None:
            t0 = self.family.t0
            if np.any(t_arr < -1e-9 * t0) or np.any(t_arr >= t0 * (1 + 1e-12) + 1e-9):
                raise DomainError("time outside [0, t0)")
        T = self.family.T
        k = np.floor(t_arr / T).astype(int)
        s = t_arr - k * T
        over = s >= T
        k = np.where(over, k + 1, k)
        s = np.where(over, s - T, s)

        h, phi_p, phid_p, th_p, shift = self._padded
        x = s / h
        j = np.clip(np.floor(x).astype(int), 0, self.n - 1)
        xi = x - j
        wm1 = -xi * (xi - 1.0) * (xi - 2.0) / 6.0
        w0 = (xi * xi - 1.0) * (xi - 2.0) / 2.0
        w1 = -xi * (xi + 1.0) * (xi - 2.0) / 2.0
        w2 = xi * (xi * xi - 1.0) / 6.0
        base = j + 2  # padding offset

        def interp(arr):
            return (wm1 * arr[base - 1] + w0 * arr[base]
                    + w1 * arr[base + 1] + w2 * arr[base + 2])

        sgn = np.where(k % 2 == 0, 1.0, -1.0)
        phi = sgn * interp(phi_p)
        phid = sgn * interp(phid_p)
        theta = interp(th_p) + k * shift
        if np.isscalar(t) or np.ndim(t) == 0:
            return float(phi[0]), float(phid[0]), float(theta[0])
        return phi, phid, theta

    def conservation_drift(self) -> float:
        E = 4 * np.pi ** 2 * np.cos(self.phi) ** 2
        G = E * np.cos(self.phi) ** 2
        thd = self.family.c / G
        return float(np.abs(E * self.phidot ** 2 + G * thd ** 2 - 1.0).max())

    def to_json_dict(self) -> dict:
        f = self.family
        return {
            "b": f.b, "c": f.c, "T": f.T, "Xi": f.Xi, "n": self.n,
            "phi": self.phi.tolist(),
            "phidot": self.phidot.tolist(),
            "theta": self.theta.tolist(),
        }


def sample_trajectory(family: GeodesicFamily, n: int,
                      drift_tol: float = 1e-8) -> Trajectory:
    """Integrate the geodesic over one half period on an (n+1)-node grid.

    The second-order equation for phi is integrated (sign-unambiguous at
    the turning points) by fixed-step RK4, substepped so the global error
    sits near machine precision; theta rides along through theta' = c/G.
    """
    if n < 64:
        raise ValidationError(f"need n >= 64 grid intervals, got {n}")
    grid = np.linspace(0.0, family.T, n + 1)
    if family.b == 0.0:
        phi = np.zeros(n + 1)
        phid = np.zeros(n + 1)
        theta = grid / TWO_PI
        return Trajectory(family=family, grid=grid, phi=phi,
                          phidot=phid, theta=theta)

    m_sub = max(1, -(-32768 // n))
    h = family.T / (n * m_sub)
    c = family.c
    phi_out = np.empty(n + 1)
    phid_out = np.empty(n + 1)
    th_out = np.empty(n + 1)
    y0, y1, y2 = family.b, 0.0, 0.0
    phi_out[0], phid_out[0], th_out[0] = y0, y1, y2
    h2 = h / 2.0
    h6 = h / 6.0
    for i in range(1, n + 1):
        for _ in range(m_sub):
            a1, t1 = _geodesic_rhs(y0, y1, c)
            k1 = (y1, a1, t1)
            a2, t2 = _geodesic_rhs(y0 + h2 * k1[0], y1 + h2 * k1[1], c)
            k2 = (y1 + h2 * a1, a2, t2)
            a3, t3 = _geodesic_rhs(y0 + h2 * k2[0], y1 + h2 * k2[1], c)
            k3 = (y1 + h2 * a2, a3, t3)
            a4, t4 = _geodesic_rhs(y0 + h * k3[0], y1 + h * k3[1], c)
            k4 = (y1 + h * a3, a4, t4)
            y0 += h6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
            y1 += h6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
            y2 += h6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        phi_out[i], phid_out[i], th_out[i] = y0, y1, y2

    traj = Trajectory(family=family, grid=grid, phi=phi_out,
                      phidot=phid_out, theta=th_out)
    drift = traj.conservation_drift()
    if drift > drift_tol:
        raise NumericalError(
            f"energy conservation drifted to {drift:.3e}", residual=drift)
    return traj


def evaluate_extended(traj: Trajectory, t):
    """Extended evaluation of a trajectory; see :meth:`Trajectory.at`."""
    return traj.at(t)
