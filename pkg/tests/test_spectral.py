import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from otsuki.eigencount import eigenvalues_in
from otsuki.errors import ValidationError
from otsuki.sl import BoundaryCondition, SLSystem, constant_system
from otsuki.spectral import (antiperiodic_check_l0, check_interlacing,
                             direct_twisted_counts, oscillation_index,
                             spectral_index, spectrum_below, spectrum_counts,
                             verify_high_l_positive, zero_count)
from otsuki.surface import (fourier_block_system, l0_channel_system,
                            separated_coefficients)

SQRT2 = math.sqrt(2.0)


class TestCalibration:
    def test_periodic_fourier_modes(self):
        system = constant_system(1, 2 * math.pi, 1.0, 0.0,
                                 BoundaryCondition.periodic())
        s = spectrum_below(system, 4.5, 256)
        assert np.allclose(s.eigenvalues, [0, 1, 1, 4, 4], atol=1e-7)
        assert (s.neg_count, s.zero_count) == (0, 1)

    def test_antiperiodic_fourier_modes(self):
        system = constant_system(1, 2 * math.pi, 1.0, 0.0,
                                 BoundaryCondition.antiperiodic())
        s = spectrum_below(system, 3.0, 256)
        assert np.allclose(s.eigenvalues, [0.25, 0.25, 2.25, 2.25], atol=1e-7)

    def test_degenerate_channel2_ladder(self):
        # the uncoupled channel over the formal closed length 2q sqrt(2) pi^2
        # carries the ladder 2 k^2 / q^2 - 2
        q = 3
        L = 2 * q * SQRT2 * math.pi ** 2
        system = constant_system(1, L, 4 * math.pi ** 2, -2.0,
                                 BoundaryCondition.periodic())
        s = spectrum_below(system, 0.5, 1024)
        expect = sorted(2 * k * k / q ** 2 - 2.0
                        for k in range(-q - 1, q + 2))[: len(s.eigenvalues)]
        assert np.allclose(s.eigenvalues, expect, atol=1e-6)

    def test_weight_must_be_positive(self):
        bad = constant_system(1, 1.0, -1.0, 0.0, BoundaryCondition.periodic())
        with pytest.raises(ValidationError):
            bad.discretize(128)

    def test_mesh_floor(self):
        system = constant_system(1, 1.0, 1.0, 0.0, BoundaryCondition.periodic())
        with pytest.raises(ValidationError):
            system.discretize(64)

    def test_borderline_stable_value_is_classified(self):
        # 2e-5 sits near the tau boundary but every refinement agrees it is
        # positive, so the count must come out rather than error
        system = constant_system(1, 2 * math.pi, 1.0, 2e-5,
                                 BoundaryCondition.periodic())
        assert spectrum_counts(system, 256, tau_zero=1e-5) == (0, 0)

    def test_borderline_unstable_value_is_ambiguous(self):
        from otsuki.errors import AmbiguousClassificationError

        # ground state whose extrapolated value crosses the tau boundary
        # between mesh pairs: class flips under refinement, so the counts
        # must refuse rather than guess
        A = 0.9e-5
        C = -4.0 * 256.0 ** 4 * 0.6e-5

        def sampler(t):
            t = np.asarray(t)
            n = len(t)
            return np.ones(n), np.full(n, A + C / float(n) ** 4)

        system = SLSystem(dim=1, length=2 * math.pi,
                          bc=BoundaryCondition.periodic(), sampler=sampler)
        with pytest.raises(AmbiguousClassificationError):
            spectrum_counts(system, 256, tau_zero=1e-5)


class TestMode0Counts:
    def test_channel_counts_family23(self, traj23):
        p, q = 2, 3
        per_channel = {}
        for chan in (1, 2):
            system = l0_channel_system(chan, traj23, "t0",
                                       BoundaryCondition.periodic())
            per_channel[chan] = spectrum_counts(system, 1024)
        assert per_channel[1] == (4 * p - 1, 2)
        assert per_channel[2] == (2 * q, 1)
        total_neg = per_channel[1][0] + per_channel[2][0]
        total_zero = per_channel[1][1] + per_channel[2][1]
        assert total_neg == 2 * q + 4 * p - 1
        assert total_zero == 3

    def test_counts_stable_under_doubling(self, traj23):
        system = l0_channel_system(1, traj23, "t0", BoundaryCondition.periodic())
        assert spectrum_counts(system, 512) == spectrum_counts(system, 1024)

    def test_even_q_half_length_counts(self, traj58):
        p, q = 5, 8
        neg = zero = 0
        for chan in (1, 2):
            system = l0_channel_system(chan, traj58, "t0/2",
                                       BoundaryCondition.periodic())
            c_neg, c_zero = spectrum_counts(system, 1024)
            neg += c_neg
            zero += c_zero
        assert (neg, zero) == (q + 2 * p - 1, 3)

    def test_rayleigh_floor(self, traj23):
        system = fourier_block_system(1, traj23, "T",
                                      BoundaryCondition.twisted(-1.0 + 0j))
        s = spectrum_below(system, 1.0, 512)
        coeffs = separated_coefficients(1, traj23)
        q = coeffs.potential
        lam_min = np.min(0.5 * (q[:, 0, 0] + q[:, 1, 1])
                         - np.sqrt(0.25 * (q[:, 0, 0] - q[:, 1, 1]) ** 2
                                   + q[:, 0, 1] ** 2))
        assert all(v >= lam_min - 1e-8 for v in s.eigenvalues)


class TestZeroCount:
    def test_sin_wave(self):
        t = np.linspace(0, 2 * math.pi, 600, endpoint=False)
        assert zero_count(np.sin(3 * t)) == 6

    def test_constant(self):
        assert zero_count(np.ones(300)) == 0

    def test_exact_zero_node_counted_once(self):
        t = np.linspace(0, 2 * math.pi, 512, endpoint=False)
        f = np.sin(t)            # hits 0.0 exactly at t = 0 and pi
        assert f[0] == 0.0
        assert zero_count(f) == 2

    def test_antiperiodic_wrap(self):
        t = np.linspace(0, math.pi, 400, endpoint=False)
        assert zero_count(np.cos(t), antiperiodic=True) == 1
        assert zero_count(np.sin(3 * t), antiperiodic=True) == 3

    def test_identically_zero_rejected(self):
        with pytest.raises(ValidationError):
            zero_count(np.zeros(400))

    def test_too_few_samples_rejected(self):
        with pytest.raises(ValidationError):
            zero_count(np.sin(np.linspace(0, 6, 100)))

    @settings(max_examples=20, deadline=None)
    @given(k=st.integers(min_value=1, max_value=6),
           phase=st.floats(min_value=0.0, max_value=6.28))
    def test_trig_property(self, k, phase):
        t = np.linspace(0, 2 * math.pi, 700, endpoint=False)
        assert zero_count(np.sin(k * t + phase)) == 2 * k


class TestOscillation:
    def test_mode0_channel1_indices(self, traj23):
        p = 2
        system = l0_channel_system(1, traj23, "t0", BoundaryCondition.periodic())
        s = spectrum_below(system, 0.3, 1024, want_eigenfunctions=True)
        rows = oscillation_index(s)
        zero_rows = [r for r in rows if abs(r["eigenvalue"]) <= 1e-5]
        assert [r["index"] for r in zero_rows] == [4 * p - 1, 4 * p]
        assert all(r["zeros"] == 4 * p for r in zero_rows)

    def test_mode0_channel2_index(self, traj23):
        q = 3
        system = l0_channel_system(2, traj23, "t0", BoundaryCondition.periodic())
        s = spectrum_below(system, 0.3, 1024, want_eigenfunctions=True)
        rows = oscillation_index(s)
        zero_rows = [r for r in rows if abs(r["eigenvalue"]) <= 1e-5]
        assert [r["index"] for r in zero_rows] == [2 * q]
        assert zero_rows[0]["zeros"] == 2 * q

    def test_ground_state_nodeless(self, traj23):
        system = l0_channel_system(1, traj23, "t0", BoundaryCondition.periodic())
        s = spectrum_below(system, 0.0, 512, want_eigenfunctions=True)
        rows = oscillation_index(s)
        assert rows[0]["zeros"] == 0

    def test_interlacing_on_half_period(self, traj23):
        kw = dict(n=512, tau_zero=1e-5)
        per = spectrum_below(l0_channel_system(2, traj23, "T",
                                               BoundaryCondition.periodic()),
                             2.0, 512)
        anti = spectrum_below(l0_channel_system(2, traj23, "T",
                                                BoundaryCondition.antiperiodic()),
                              2.0, 512)
        assert check_interlacing(per.eigenvalues, anti.eigenvalues)

    def test_requires_eigenfunctions(self, traj23):
        system = l0_channel_system(1, traj23, "t0", BoundaryCondition.periodic())
        s = spectrum_below(system, 0.0, 512)
        with pytest.raises(ValidationError):
            oscillation_index(s)

    def test_wrong_zero_count_is_diagnosed(self):
        from otsuki.errors import NumericalError
        from otsuki.spectral import SpectrumSummary
        t = np.linspace(0, 2 * math.pi, 512, endpoint=False)
        fake = SpectrumSummary(
            eigenvalues=[0.0], neg_count=0, zero_count=1, mesh=512,
            method_tag="direct-fd", cutoff=1.0, bc="periodic",
            grid=t, eigenfunctions=[np.sin(2 * t)])   # 4 zeros, ladder wants 0
        with pytest.raises(NumericalError):
            oscillation_index(fake)


class TestAntiperiodicCheck:
    def test_family23(self, traj23):
        lam1, lam2, corr = antiperiodic_check_l0(traj23, n=1024)
        assert lam1 < 0
        assert abs(lam2) <= 1e-5
        assert corr > 0.999

    def test_family58(self, traj58):
        lam1, lam2, corr = antiperiodic_check_l0(traj58, n=1024)
        assert lam1 < 0 and abs(lam2) <= 1e-5 and corr > 0.999

    def test_rejects_degenerate_family(self, clifford_traj):
        with pytest.raises(ValidationError):
            antiperiodic_check_l0(clifford_traj)


class TestSpectralIndex:
    def test_family23(self, traj23):
        assert spectral_index(2, 3, traj23, n=1024) == 12

    def test_family58(self, traj58):
        assert spectral_index(5, 8, traj58, n=1024) == 16


class TestHighModes:
    def test_l3_positive(self, traj23):
        assert verify_high_l_positive(3, traj23, n=512)

    def test_l10_positive(self, traj23):
        assert verify_high_l_positive(10, traj23, n=512)

    def test_low_l_rejected(self, traj23):
        with pytest.raises(ValidationError):
            verify_high_l_positive(1, traj23)


class TestMode2Counts:
    def test_closed_length_ground_state_is_zero(self, traj23):
        # the mode-2 block over the full length: one zero mode, no negatives
        system = fourier_block_system(2, traj23, "t0",
                                      BoundaryCondition.periodic())
        assert spectrum_counts(system, 1024) == (0, 1)

    def test_even_q_antiperiodic_class_matches_twisted_sum(self, traj58):
        # the half-length antiperiodic class must reproduce the odd-power
        # twisted sums that assemble it
        q = 8
        system = fourier_block_system(1, traj58, "t0/2",
                                      BoundaryCondition.antiperiodic())
        direct_class = spectrum_counts(system, 1024)
        total = [0, 0]
        for r in range(1, 2 * q, 2):
            om = cmath.exp(1j * math.pi * r / q)
            neg, zero = direct_twisted_counts(1, om, traj58, 256)
            total[0] += neg
            total[1] += zero
        assert direct_class == tuple(total)


class TestTwistedConsistency:
    def test_multiset_union_over_roots(self, traj23, fam23):
        # eigenvalues of the closed-length problem equal the union of the
        # half-period twisted spectra, counted with multiplicity
        q = 3
        cutoff = -0.8
        full = fourier_block_system(1, traj23, "t0", BoundaryCondition.periodic())
        s_full = spectrum_below(full, cutoff, 1024)
        union = []
        for r in range(2 * q):
            om = cmath.exp(1j * math.pi * r / q)
            tw = fourier_block_system(1, traj23, "T",
                                      BoundaryCondition.twisted(om))
            union.extend(spectrum_below(tw, cutoff, 512).eigenvalues)
        union.sort()
        assert len(union) == len(s_full.eigenvalues)
        assert np.abs(np.array(union) - np.array(s_full.eigenvalues)).max() < 1e-6

    def test_conjugate_twists_share_counts(self, traj23):
        q = 3
        for r in (1, 2):
            om = cmath.exp(1j * math.pi * r / q)
            a = direct_twisted_counts(1, om, traj23, 512)
            b = direct_twisted_counts(1, om.conjugate(), traj23, 512)
            assert a == b

    def test_twisted_eigenvector_embeds_in_closed_problem(self, traj23):
        # extend a twisted eigenvector by the per-period phases and check it
        # solves the discrete closed-length problem with the same eigenvalue
        q, m = 3, 256
        om = cmath.exp(1j * math.pi / q)
        tw = fourier_block_system(1, traj23, "T", BoundaryCondition.twisted(om))
        op = tw.discretize(m)
        w, V = np.linalg.eigh(op.to_dense())
        lam, vec = w[0], V[:, 0]
        h1 = vec[0::2]
        h2 = vec[1::2]
        blocks = []
        for k in range(2 * q):
            blocks.append(np.stack([om ** k * h1, (-om) ** k * h2], axis=1).ravel())
        ext = np.concatenate(blocks)
        full = fourier_block_system(1, traj23, "t0", BoundaryCondition.periodic())
        A = full.discretize(2 * q * m).to_dense()
        resid = np.linalg.norm(A @ ext - lam * ext) / np.linalg.norm(A @ ext)
        assert resid < 1e-10


@settings(max_examples=10, deadline=None)
@given(shift=st.floats(min_value=-2.0, max_value=2.0))
def test_counts_consistent_with_listing(shift):
    system = constant_system(1, 5.0, 1.0, shift, BoundaryCondition.periodic())
    s = spectrum_below(system, 3.0, 256)
    below = [v for v in s.eigenvalues if v < -1e-5]
    assert s.neg_count == len(below)
