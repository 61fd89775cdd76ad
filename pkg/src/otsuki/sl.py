"""Sturm-Liouville systems -(p h')' + Q h = lambda h and their discretization.

A system is scalar or 2x2, lives on [0, L), and carries one of four
boundary conditions.  The twisted condition couples the channels with
opposite phases: h1(t+L) = omega h1(t), h2(t+L) = -omega h2(t) for a
unit-modulus omega; periodic and antiperiodic apply the same sign to
every channel.  Discretization is the standard second-order divergence
form with the weight sampled at half nodes, which keeps the discrete
operator exactly Hermitian so eigenvalue counts are variationally
reliable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .eigencount import BandOperator
from .errors import ValidationError

BC_KINDS = ("periodic", "antiperiodic", "twisted", "dirichlet")


@dataclass(frozen=True)
class BoundaryCondition:
    kind: str
    omega: Optional[complex] = None

    def __post_init__(self):
        if self.kind not in BC_KINDS:
            raise ValidationError(f"unknown boundary condition {self.kind!r}")
        if self.kind == "twisted":
            if self.omega is None or abs(abs(self.omega) - 1.0) > 1e-12:
                raise ValidationError("twisted boundary condition needs |omega| = 1")
        elif self.omega is not None:
            raise ValidationError(f"{self.kind} takes no omega")

    @classmethod
    def periodic(cls):
        return cls("periodic")

    @classmethod
    def antiperiodic(cls):
        return cls("antiperiodic")

    @classmethod
    def twisted(cls, omega: complex):
        return cls("twisted", complex(omega))

    @classmethod
    def dirichlet(cls):
        return cls("dirichlet")

    def channel_multipliers(self, dim: int) -> Optional[tuple]:
        if self.kind == "dirichlet":
            return None
        if self.kind == "periodic":
            return (1.0 + 0.0j,) * dim
        if self.kind == "antiperiodic":
            return (-1.0 + 0.0j,) * dim
        if dim == 1:
            return (self.omega,)
        return (self.omega, -self.omega)


@dataclass(frozen=True)
class SLSystem:
    """A weight/potential pair on [0, L) with a boundary condition.

    ``sampler(t)`` returns (p, Q) at the requested times: p positive with
    shape (m,), Q symmetric with shape (m,) for dim 1 or (m, 3) rows
    (Q11, Q12, Q22) for dim 2.
    """

    dim: int
    length: float
    bc: BoundaryCondition
    sampler: Callable[[np.ndarray], tuple]
    l: Optional[int] = None
    label: str = ""

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValidationError("only scalar and 2x2 systems are supported")
        if self.length <= 0:
            raise ValidationError("interval length must be positive")

    def sample(self, n: int):
        """Node and half-node samples used by ``discretize``."""
        h = self.length / n
        nodes = np.arange(n) * h
        p_nodes, q_nodes = self.sampler(nodes)
        p_half, _ = self.sampler(nodes + 0.5 * h)
        return nodes, np.asarray(p_nodes), np.asarray(p_half), np.asarray(q_nodes)

    def discretize(self, n: int) -> BandOperator:
        """Second-order divergence-form discretization on n subintervals."""
        if n < 128:
            raise ValidationError(f"mesh too coarse: n = {n} < 128")
        h = self.length / n
        _, _, p_half, q_nodes = self.sample(n)
        if np.any(p_half <= 0.0):
            raise ValidationError("weight must be strictly positive")
        mult = self.bc.channel_multipliers(self.dim)

        if self.bc.kind == "dirichlet":
            # unknowns at the interior nodes 1..n-1
            h2 = h * h
            q_int = q_nodes[1:]
            dsum = (p_half[1:] + p_half[:-1]) / h2
            off = -p_half[1:-1] / h2
            if self.dim == 1:
                diag = dsum + q_int
            else:
                diag = np.empty((n - 1, 3))
                diag[:, 0] = dsum + q_int[:, 0]
                diag[:, 1] = q_int[:, 1]
                diag[:, 2] = dsum + q_int[:, 2]
            return BandOperator(dim=self.dim, diag=diag, off=off,
                                meta={"h": h, "n": n, "label": self.label})

        h2 = h * h
        dsum = (p_half + np.roll(p_half, 1)) / h2
        off = -p_half[:-1] / h2
        wrap_off = -p_half[-1] / h2
        if self.dim == 1:
            diag = dsum + q_nodes
        else:
            diag = np.empty((n, 3))
            diag[:, 0] = dsum + q_nodes[:, 0]
            diag[:, 1] = q_nodes[:, 1]
            diag[:, 2] = dsum + q_nodes[:, 2]
        return BandOperator(dim=self.dim, diag=diag, off=off,
                            wrap_off=wrap_off, wrap_mult=mult,
                            meta={"h": h, "n": n, "label": self.label})


def constant_system(dim: int, length: float, weight: float, potential,
                    bc: BoundaryCondition, label: str = "") -> SLSystem:
    """Constant-coefficient system; the calibration cases live here."""
    potential = np.asarray(potential, dtype=float)

    def sampler(t):
        t = np.asarray(t)
        p = np.full(t.shape, float(weight))
        if dim == 1:
            q = np.full(t.shape, float(potential))
        else:
            q = np.tile(potential, (len(t), 1))
        return p, q

    return SLSystem(dim=dim, length=length, bc=bc, sampler=sampler, label=label)
