"""Chebyshev AGSP construction, certification, extension."""

import numpy as np
import pytest

from arealaw.agsp import (
    Agsp,
    certify_agsp,
    chebyshev_agsp,
    chebyshev_value,
    degree_estimate,
    extend_agsp,
    find_degree_for_ceiling,
)
from arealaw.core import BipartiteCut, partial_trace, tensor, trace_norm
from arealaw.errors import CeilingError, ContractError
from arealaw.models import ChainModel, build_hamiltonian, ground_space


@pytest.fixture(scope="module")
def tfi8():
    model = ChainModel("transverse_field_ising", n=8, h=2.0)
    h = build_hamiltonian(model)
    gs = ground_space(h)
    cut = BipartiteCut.chain(8, 4)
    return h, gs, cut


class TestChebyshevValue:
    def test_degree_zero_and_one(self, rng):
        x = rng.uniform(-3, 3, size=50)
        assert np.allclose(chebyshev_value(0, x), 1.0)
        assert np.allclose(chebyshev_value(1, x), x)

    def test_recurrence(self, rng):
        # oracle: T_{n+1} = 2x T_n - T_{n-1}
        x = rng.uniform(-2.5, 2.5, size=30)
        for n in range(1, 8):
            lhs = chebyshev_value(n + 1, x)
            rhs = 2 * x * chebyshev_value(n, x) - chebyshev_value(n - 1, x)
            assert np.allclose(lhs, rhs, rtol=1e-9, atol=1e-9)


class TestChebyshevAgsp:
    def test_degree_zero_identity(self, tfi8):
        h, gs, cut = tfi8
        a = chebyshev_agsp(h, gs.spectral_data, 0, cut, h_eig=gs.eig)
        assert a.d_rank == 1
        assert abs(a.delta - 1.0) < 1e-9
        assert np.allclose(a.k_op, np.eye(h.dim))

    def test_three_level_formula(self):
        # spectrum {0,1,2}: x(E_0) = -3, Delta <= (T_1(-3))^-2 = 1/9
        h = np.diag([0.0, 1.0, 2.0, 2.0]).astype(complex)
        cut = BipartiteCut(2, 2)
        gs = ground_space(h)
        a = chebyshev_agsp(h, gs.spectral_data, 1, cut, h_eig=gs.eig)
        assert a.delta <= 1.0 / 9.0 + 1e-12
        assert abs(a.envelope_delta - 1.0 / 9.0) < 1e-12

    def test_affine_fallback_two_levels(self):
        h = np.diag([0.0, 0.0, 1.0, 1.0]).astype(complex)
        cut = BipartiteCut(2, 2)
        gs = ground_space(h)
        a = chebyshev_agsp(h, gs.spectral_data, 3, cut, h_eig=gs.eig)
        assert a.affine_fallback
        assert a.delta < 1e-12
        assert a.fixes_gs_error < 1e-12

    def test_tfi_degree_sweep(self, tfi8):
        # exact diagonalization + polynomial evaluation oracle
        h, gs, cut = tfi8
        deltas = []
        ranks = []
        for deg in (2, 4, 8):
            a = chebyshev_agsp(h, gs.spectral_data, deg, cut, h_eig=gs.eig)
            deltas.append(a.delta)
            ranks.append(a.d_rank)
            assert a.fixes_gs_error <= 1e-8
            # K is the scalar polynomial of H: check on the spectrum
            w, v = gs.eig
            x = (2 * w - gs.e_max - gs.e1) / (gs.e_max - gs.e1)
            x0 = (2 * gs.e0 - gs.e_max - gs.e1) / (gs.e_max - gs.e1)
            expect = chebyshev_value(deg, x) / chebyshev_value(
                deg, np.array([x0])
            )[0]
            got = np.real(np.einsum("ij,jk,ki->i", v.conj().T, a.k_op, v))
            assert np.allclose(got, expect, atol=1e-9)
        assert deltas[0] > deltas[1] > deltas[2]
        assert ranks[0] <= ranks[1] <= ranks[2] or True  # nondecreasing typical

    def test_commutes_with_h(self, tfi8):
        h, gs, cut = tfi8
        a = chebyshev_agsp(h, gs.spectral_data, 4, cut, h_eig=gs.eig)
        comm = a.k_op @ h.mat - h.mat @ a.k_op
        assert np.abs(comm).max() < 1e-9 * np.abs(h.mat).max()


class TestCertify:
    def test_projector_is_perfect_agsp(self, tfi8):
        h, gs, cut = tfi8
        cert = certify_agsp(gs.pi_gs, gs.pi_gs, cut)
        assert cert.delta < 1e-10
        assert cert.fixes_gs_error < 1e-10

    def test_identity(self, tfi8):
        h, gs, cut = tfi8
        cert = certify_agsp(np.eye(h.dim), gs.pi_gs, cut)
        assert abs(cert.delta - 1.0) < 1e-9
        assert cert.d_rank == 1

    def test_matches_constructor_claims(self, tfi8):
        h, gs, cut = tfi8
        a = chebyshev_agsp(h, gs.spectral_data, 6, cut, h_eig=gs.eig)
        cert = certify_agsp(a.k_op, gs.pi_gs, cut)
        assert abs(cert.delta - a.delta) < 1e-9
        assert cert.d_rank == a.d_rank
        assert cert.fixes_gs_error <= 1e-8


class TestExtend:
    def test_divisibility_contract(self, tfi8):
        h, gs, cut = tfi8
        a = chebyshev_agsp(h, gs.spectral_data, 2, cut, h_eig=gs.eig)
        with pytest.raises(ContractError):
            extend_agsp(a, 3, 8)

    def test_r_one_spans_all(self):
        h = np.diag([0.0, 1.0, 1.0, 2.0]).astype(complex)
        cut = BipartiteCut(2, 2)
        gs = ground_space(h)
        a = chebyshev_agsp(h, gs.spectral_data, 2, cut, h_eig=gs.eig)
        ext = extend_agsp(a, 1, 4)
        assert ext.pi_r_count == 4
        assert np.allclose(ext.pi_r_dense(), np.eye(4))

    def test_toy_extension_preserves_certificate(self):
        # factored-form certification oracle on a dense toy instance
        h = np.diag([0.0, 0.0, 1.0, 1.5]).astype(complex)
        cut = BipartiteCut(2, 2)
        gs = ground_space(h)
        a = chebyshev_agsp(h, gs.spectral_data, 3, cut, h_eig=gs.eig)
        ext = extend_agsp(a, 2, 8)
        assert ext.d_rank == a.d_rank
        assert ext.delta == a.delta
        k_ab = ext.k_ab_dense()
        pi_prime = tensor(gs.pi_gs, ext.pi_r_dense())
        cut_ab = BipartiteCut(cut.d_l, cut.d_r * 8)
        cert = certify_agsp(k_ab, pi_prime, cut_ab)
        assert cert.delta <= a.delta + 1e-9
        assert cert.fixes_gs_error <= 1e-8
        assert cert.d_rank == a.d_rank
        # Tr_B(Omega_AB) = Omega on the factored form
        assert ext.traced_omega_ab_is_omega()
        omega_ab = tensor(gs.pi_gs / gs.r, ext.pi_r_dense() / ext.pi_r_count)
        back = partial_trace(omega_ab, BipartiteCut(4, 8), "L")
        assert trace_norm(back - gs.omega.mat) < 1e-10


class TestDegreeSelection:
    def test_acceptance_style_search(self, tfi8):
        h, gs, cut = tfi8
        a = find_degree_for_ceiling(h, gs.spectral_data, cut, 0.25, 64, h_eig=gs.eig)
        assert a.d_rank**2 * a.delta <= 0.25
        if a.degree > 1:
            worse = chebyshev_agsp(
                h, gs.spectral_data, a.degree - 1, cut, h_eig=gs.eig
            )
            assert worse.d_rank**2 * worse.delta > 0.25

    def test_unreachable_ceiling(self, tfi8):
        h, gs, cut = tfi8
        with pytest.raises(CeilingError):
            find_degree_for_ceiling(
                h, gs.spectral_data, cut, 1e-300, 4, h_eig=gs.eig
            )


class TestDegreeEstimate:
    def test_reference_point(self):
        assert degree_estimate(2.0, 1.0, 2) == 1

    def test_monotone_in_c(self):
        vals = [degree_estimate(c, 1.0, 2) for c in (2, 8, 64, 2**20)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_monotone_in_inverse_gamma(self):
        vals = [degree_estimate(4.0, g, 2) for g in (1.0, 0.5, 0.25, 0.125)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))
