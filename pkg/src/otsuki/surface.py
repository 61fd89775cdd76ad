"""Geometry of the minimal torus swept out by a closed geodesic.

The immersion doubles the angle coordinate of the geodesic sphere into a
5-space torus; an adapted orthonormal frame (position, two tangents, two
normals) turns the second variation of area into a family of 2x2
Sturm-Liouville systems indexed by the Fourier mode l of the frame angle
alpha.  This module evaluates the immersion and frame, the separated
coefficient data p(t), Q_l(t), the nine normal projections of ambient
rotation generators (exact zero modes), and builds the spectral systems
consumed by the solvers.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .geodesic import Trajectory
from .sl import BoundaryCondition, SLSystem

TWO_PI = 2.0 * math.pi
FOUR_PI2 = 4.0 * math.pi ** 2


def _theta_dot(c: float, phi):
    return c / (FOUR_PI2 * np.cos(phi) ** 4)


def immersion(alpha: float, t: float, traj: Trajectory) -> np.ndarray:
    """Unit 5-vector of the torus at frame angle alpha and arc time t."""
    phi, _, theta = traj.at(t)
    ca, sa = np.cos(alpha), np.sin(alpha)
    cphi = np.cos(phi)
    st, ct = np.sin(theta), np.cos(theta)
    return np.array([ca * cphi * st, sa * cphi * st,
                     ca * cphi * ct, sa * cphi * ct, np.sin(phi)])


@dataclass(frozen=True)
class FramePoint:
    N: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    n1: np.ndarray
    n2: np.ndarray

    def gram(self) -> np.ndarray:
        B = np.stack([self.N, self.e1, self.e2, self.n1, self.n2])
        return B @ B.T


def frame(alpha: float, t: float, traj: Trajectory) -> FramePoint:
    """Adapted orthonormal basis (N, e1, e2, n1, n2) of 5-space."""
    phi, phid, theta = traj.at(t)
    thd = _theta_dot(traj.family.c, phi)
    ca, sa = math.cos(alpha), math.sin(alpha)
    cp, sp = math.cos(phi), math.sin(phi)
    st, ct = math.sin(theta), math.cos(theta)

    N = np.array([ca * cp * st, sa * cp * st, ca * cp * ct, sa * cp * ct, sp])
    e1 = np.array([-sa * st, ca * st, -sa * ct, ca * ct, 0.0])
    u = -sp * st * phid + cp * ct * thd
    v = -sp * ct * phid - cp * st * thd
    e2 = TWO_PI * cp * np.array([ca * u, sa * u, ca * v, sa * v, cp * phid])
    n1 = np.array([sa * ct, -ca * ct, -sa * st, ca * st, 0.0])
    a = ct * phid + st * sp * cp * thd
    bb = st * phid - ct * sp * cp * thd
    n2 = TWO_PI * cp * np.array([-ca * a, -sa * a, ca * bb, sa * bb, cp * cp * thd])
    return FramePoint(N=N, e1=e1, e2=e2, n1=n1, n2=n2)


def weingarten_diag(t: float, traj: Trajectory) -> tuple[float, float]:
    """Diagonal entries of the squared-shape operator in the normal frame."""
    phi, _, _ = traj.at(t)
    thd = _theta_dot(traj.family.c, phi)
    a11 = 8.0 * math.pi ** 2 * np.cos(phi) ** 2 * thd ** 2
    return float(a11), float(np.sin(phi) ** 2 * a11)


# ---------------------------------------------------------------------------
# separated coefficient data

@dataclass(frozen=True)
class SeparatedCoefficients:
    """Samples of the weight p(t) and the symmetric potential Q_l(t)."""

    l: int
    grid: np.ndarray
    weight: np.ndarray          # (m,)
    potential: np.ndarray       # (m, 2, 2), symmetric at every node

    def rows(self) -> np.ndarray:
        """Potential as (m, 3) rows (Q11, Q12, Q22) for the discretizer."""
        return np.stack([self.potential[:, 0, 0], self.potential[:, 0, 1],
                         self.potential[:, 1, 1]], axis=1)


def _q_entries(l: int, c: float, phi, phid):
    cphi = np.cos(phi)
    thd = c / (FOUR_PI2 * cphi ** 4)
    base = l * l / cphi ** 2 + FOUR_PI2 * phid ** 2 - 2.0
    bend = 8.0 * math.pi ** 2 * cphi ** 2 * thd ** 2
    q11 = base - bend
    q22 = base - np.sin(phi) ** 2 * bend
    q12 = -4.0 * math.pi * l * phid / cphi
    return FOUR_PI2 * cphi ** 2, q11, q12, q22


def separated_coefficients(l: int, traj: Trajectory,
                           grid: np.ndarray | None = None) -> SeparatedCoefficients:
    if l < 0:
        raise ValidationError("Fourier index l must be nonnegative")
    if grid is None:
        grid = traj.grid
    phi, phid, _ = traj.at(grid)
    p, q11, q12, q22 = _q_entries(l, traj.family.c, phi, phid)
    m = len(grid)
    Q = np.empty((m, 2, 2))
    Q[:, 0, 0] = q11
    Q[:, 0, 1] = q12
    Q[:, 1, 0] = q12
    Q[:, 1, 1] = q22
    return SeparatedCoefficients(l=l, grid=np.asarray(grid), weight=p, potential=Q)


def weight_prime(traj: Trajectory, grid: np.ndarray) -> np.ndarray:
    """Exact derivative of the weight, p'(t) = -8 pi^2 cos(phi) sin(phi) phi'."""
    phi, phid, _ = traj.at(grid)
    return -8.0 * math.pi ** 2 * np.cos(phi) * np.sin(phi) * phid


# ---------------------------------------------------------------------------
# kernel fields (normal projections of the ambient rotation generators)

@dataclass(frozen=True)
class KernelField:
    id: int
    l: int
    grid: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    description: str


def full_period_grid(traj: Trajectory) -> np.ndarray:
    """Uniform grid over [0, t0) whose nodes fold exactly onto trajectory nodes."""
    q = traj.family.rotation.q
    n = traj.n
    return np.arange(2 * q * n) * (traj.family.T / n)


def kernel_fields(traj: Trajectory) -> list[KernelField]:
    """The nine exact zero modes, reduced to separated (h1, h2, l) form.

    Fields that depend on alpha appear twice (cosine and sine phases share
    one separated profile), so the list has nine entries spanning l = 0,
    1, 2.
    """
    if traj.family.rotation is None:
        raise ValidationError("kernel fields need a closed geodesic (p/q known)")
    grid = full_period_grid(traj)
    phi, phid, theta = traj.at(grid)
    c = traj.family.c
    cphi, sphi = np.cos(phi), np.sin(phi)
    thd = _theta_dot(c, phi)
    zero = np.zeros_like(phi)

    w2 = TWO_PI * cphi ** 2 * phid
    pair1_h2 = TWO_PI * cphi * (sphi * np.cos(theta) * phid
                                + np.sin(theta) * cphi * thd)
    pair2_h2 = TWO_PI * cphi * (sphi * np.sin(theta) * phid
                                - np.cos(theta) * cphi * thd)

    entries = [
        (1, 0, cphi * np.sin(2 * theta), zero, "cos(phi) sin(2 theta) in channel 1"),
        (2, 0, cphi * np.cos(2 * theta), zero, "cos(phi) cos(2 theta) in channel 1"),
        (3, 0, zero, w2, "2 pi cos^2(phi) phi' in channel 2"),
        (4, 1, sphi * np.cos(theta), pair1_h2, "sin(phi) cos(theta) pair, sine phase"),
        (5, 1, sphi * np.cos(theta), pair1_h2, "sin(phi) cos(theta) pair, cosine phase"),
        (6, 1, sphi * np.sin(theta), pair2_h2, "sin(phi) sin(theta) pair, sine phase"),
        (7, 1, sphi * np.sin(theta), pair2_h2, "sin(phi) sin(theta) pair, cosine phase"),
        (8, 2, cphi, w2, "cos(phi) pair, sine phase"),
        (9, 2, cphi, w2, "cos(phi) pair, cosine phase"),
    ]
    return [KernelField(id=i, l=l, grid=grid, h1=h1, h2=h2, description=d)
            for (i, l, h1, h2, d) in entries]


@dataclass(frozen=True)
class KernelResidual:
    value: float
    coarse_grid: bool


def kernel_residual(field: KernelField, coeffs: SeparatedCoefficients,
                    traj: Trajectory) -> KernelResidual:
    """Max residual of the separated system at lambda = 0, by 4th-order stencils.

    The residual is normalized by the largest coefficient magnitude times
    the field amplitude, so it is scale free.  Grids shorter than 256
    nodes are flagged as too coarse to trust.
    """
    if field.l != coeffs.l:
        raise ValidationError("field and coefficients disagree on l")
    if len(field.grid) != len(coeffs.grid):
        raise ValidationError("field and coefficients live on different grids")
    grid = field.grid
    m = len(grid)
    h = grid[1] - grid[0]
    p = coeffs.weight
    pd = weight_prime(traj, grid)
    Q = coeffs.potential

    def d1(f):
        return (-np.roll(f, -2) + 8 * np.roll(f, -1)
                - 8 * np.roll(f, 1) + np.roll(f, 2)) / (12 * h)

    def d2(f):
        return (-np.roll(f, -2) + 16 * np.roll(f, -1) - 30 * f
                + 16 * np.roll(f, 1) - np.roll(f, 2)) / (12 * h * h)

    h1, h2 = field.h1, field.h2
    r1 = -p * d2(h1) - pd * d1(h1) + Q[:, 0, 0] * h1 + Q[:, 0, 1] * h2
    r2 = -p * d2(h2) - pd * d1(h2) + Q[:, 0, 1] * h1 + Q[:, 1, 1] * h2
    amp = max(np.abs(h1).max(), np.abs(h2).max())
    scale = max(p.max(), np.abs(Q).max()) * max(amp, 1e-30)
    value = float(max(np.abs(r1).max(), np.abs(r2).max()) / scale)
    return KernelResidual(value=value, coarse_grid=(m < 256))


# ---------------------------------------------------------------------------
# spectral system builders

def _interval_length(traj: Trajectory, interval: str) -> float:
    T = traj.family.T
    if interval == "T":
        return T
    rot = traj.family.rotation
    if rot is None:
        raise ValidationError(f"interval {interval!r} needs a closed geodesic")
    if interval == "t0":
        return rot.t0
    if interval == "t0/2":
        if rot.q % 2 != 0:
            raise ValidationError("the half-length symmetry class needs even q")
        return 0.5 * rot.t0
    raise ValidationError(f"unknown interval {interval!r}")


def fourier_block_system(l: int, traj: Trajectory, interval: str,
                         bc: BoundaryCondition) -> SLSystem:
    """The coupled 2x2 system of Fourier mode l on the requested interval."""
    if l < 1:
        raise ValidationError("the coupled block needs l >= 1; l = 0 decouples")
    c = traj.family.c
    L = _interval_length(traj, interval)

    def sampler(t):
        phi, phid, _ = traj.at(np.asarray(t))
        p, q11, q12, q22 = _q_entries(l, c, phi, phid)
        return p, np.stack([q11, q12, q22], axis=1)

    return SLSystem(dim=2, length=L, bc=bc, sampler=sampler, l=l,
                    label=f"l={l} block on {interval}")


def l0_channel_system(channel: int, traj: Trajectory, interval: str,
                      bc: BoundaryCondition) -> SLSystem:
    """One of the two decoupled scalar problems at l = 0."""
    if channel not in (1, 2):
        raise ValidationError("channel must be 1 or 2")
    c = traj.family.c
    L = _interval_length(traj, interval)

    def sampler(t):
        phi, phid, _ = traj.at(np.asarray(t))
        p, q11, _, q22 = _q_entries(0, c, phi, phid)
        return p, (q11 if channel == 1 else q22)

    return SLSystem(dim=1, length=L, bc=bc, sampler=sampler, l=0,
                    label=f"l=0 channel {channel} on {interval}")


def laplace_system(l: int, traj: Trajectory, interval: str = "t0",
                   bc: BoundaryCondition | None = None) -> SLSystem:
    """Scalar problem of the Laplace operator at Fourier mode l."""
    if l < 0:
        raise ValidationError("Fourier index l must be nonnegative")
    if bc is None:
        bc = BoundaryCondition.periodic()
    L = _interval_length(traj, interval)

    def sampler(t):
        phi, _, _ = traj.at(np.asarray(t))
        cphi2 = np.cos(phi) ** 2
        return FOUR_PI2 * cphi2, l * l / cphi2

    return SLSystem(dim=1, length=L, bc=bc, sampler=sampler, l=l,
                    label=f"laplace l={l} on {interval}")


def export_immersion_csv(traj: Trajectory, path: str,
                         n_alpha: int = 64, n_t: int = 256) -> None:
    """Write an (alpha, t) mesh of the immersion as alpha,t,x1..x5 rows."""
    t_max = traj.family.t0 if traj.family.rotation else traj.family.T
    alphas = np.linspace(0.0, TWO_PI, n_alpha, endpoint=False)
    ts = np.linspace(0.0, t_max, n_t, endpoint=False)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["alpha", "t", "x1", "x2", "x3", "x4", "x5"])
        for al in alphas:
            for tt in ts:
                x = immersion(al, tt, traj)
                writer.writerow([f"{al:.17g}", f"{tt:.17g}"]
                                + [f"{xi:.17g}" for xi in x])
