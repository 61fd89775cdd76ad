import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from otsuki.eigencount import eigenvalues_in, inertia, scalar_eigenfunctions
from otsuki.sl import BoundaryCondition, SLSystem, constant_system


def _wavy_system(dim, bc, L=7.0):
    """Nonconstant coefficients with no special structure."""

    def sampler(t):
        t = np.asarray(t)
        p = 2.0 + np.cos(2 * np.pi * t / L)
        if dim == 1:
            q = np.sin(4 * np.pi * t / L) - 0.4
            return p, q
        q11 = np.sin(4 * np.pi * t / L) - 0.4
        q22 = 0.3 * np.cos(2 * np.pi * t / L) + 0.1
        q12 = 0.5 * np.sin(2 * np.pi * t / L)
        return p, np.stack([q11, q12, q22], axis=1)

    return SLSystem(dim=dim, length=L, bc=bc, sampler=sampler)


BCS = [BoundaryCondition.periodic(), BoundaryCondition.antiperiodic(),
       BoundaryCondition.twisted(cmath.exp(0.73j)), BoundaryCondition.dirichlet()]


@pytest.mark.parametrize("dim", [1, 2])
@pytest.mark.parametrize("bc", BCS, ids=lambda b: b.kind)
def test_inertia_matches_dense(dim, bc):
    op = _wavy_system(dim, bc).discretize(256)
    A = op.to_dense()
    assert np.array_equal(A, A.conj().T)  # exactly self adjoint
    w = np.linalg.eigvalsh(A)
    for sigma in (-3.0, -0.42, 0.0, 0.17, 2.0, 11.0):
        assert inertia(op, sigma) == int((w < sigma).sum())


@pytest.mark.parametrize("dim", [1, 2])
@pytest.mark.parametrize("bc", BCS, ids=lambda b: b.kind)
def test_eigenvalues_match_dense(dim, bc):
    op = _wavy_system(dim, bc).discretize(256)
    w = np.linalg.eigvalsh(op.to_dense())
    lam = eigenvalues_in(op, -1.0, 2.5, tol=1e-10)
    ref = w[(w > -1.0) & (w <= 2.5)]
    assert len(lam) == len(ref)
    assert np.abs(lam - ref).max() < 1e-8


def test_gershgorin_is_lower_bound():
    for dim in (1, 2):
        for bc in BCS:
            op = _wavy_system(dim, bc).discretize(256)
            w = np.linalg.eigvalsh(op.to_dense())
            assert op.gershgorin_lower() <= w[0] + 1e-12


def test_inverse_iteration_matches_dense():
    op = _wavy_system(1, BoundaryCondition.periodic()).discretize(512)
    A = op.to_dense()
    w, V = np.linalg.eigh(A)
    lam = eigenvalues_in(op, w[2] - 1e-4, w[2] + 1e-4, tol=1e-12)
    vec = scalar_eigenfunctions(op, float(lam[0]))[0]
    overlap = abs(vec @ V[:, 2]) / (np.linalg.norm(vec) * np.linalg.norm(V[:, 2]))
    assert overlap > 0.999999


def test_degenerate_pair_eigenfunctions():
    op = constant_system(1, 2 * np.pi, 1.0, 0.0,
                         BoundaryCondition.periodic()).discretize(512)
    lam = eigenvalues_in(op, 0.5, 1.5, tol=1e-12)
    assert len(lam) == 2
    v1, v2 = scalar_eigenfunctions(op, float(lam[0]), count=2)
    assert abs(v1 @ v2) < 1e-8
    op_apply = op.to_dense()
    for v in (v1, v2):
        resid = np.linalg.norm(op_apply @ v - lam[0] * v)
        assert resid < 1e-6


@settings(max_examples=25, deadline=None)
@given(weight=st.floats(min_value=0.5, max_value=4.0),
       pot=st.floats(min_value=-3.0, max_value=3.0),
       L=st.floats(min_value=2.0, max_value=12.0),
       anti=st.booleans(),
       cut=st.floats(min_value=0.5, max_value=30.0))
def test_constant_coefficient_counts_property(weight, pot, L, anti, cut):
    # exact spectrum: pot + weight * kappa^2 over the (anti)periodic
    # frequency ladder kappa = 2 pi (k + offset) / L
    bc = BoundaryCondition.antiperiodic() if anti else BoundaryCondition.periodic()
    op = constant_system(1, L, weight, pot, bc).discretize(256)
    offset = 0.5 if anti else 0.0
    exact = []
    k = -130
    while k <= 130:
        exact.append(pot + weight * (2 * np.pi * (k + offset) / L) ** 2)
        k += 1
    exact = np.sort(exact)[:40]
    sigma = pot + cut
    # stay away from exact eigenvalues so the discretization error cannot
    # flip the count
    if np.abs(exact - sigma).min() < 0.05 * max(1.0, abs(sigma)):
        return
    expected = int((exact < sigma).sum())
    if expected >= 35:
        return
    assert inertia(op, sigma) == expected


def test_small_operator_rejected():
    op = constant_system(1, 1.0, 1.0, 0.0, BoundaryCondition.periodic())
    bad = op.discretize(128)
    tiny = type(bad)(dim=1, diag=bad.diag[:3], off=bad.off[:2],
                     wrap_off=bad.wrap_off, wrap_mult=bad.wrap_mult)
    from otsuki.errors import NumericalError
    with pytest.raises(NumericalError):
        inertia(tiny, 0.0)
