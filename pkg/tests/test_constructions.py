"""Constructive lemmas: discretization, flat embedding, domination."""

import numpy as np
import pytest

from arealaw.core import (
    BipartiteCut,
    DensityOperator,
    SubState,
    is_flat,
    partial_trace,
    support_projector,
    tensor,
    trace_norm,
)
from arealaw.constructions import (
    discretize_left,
    dominate_conjugated,
    dominate_mixture,
    dominate_vec,
    flat_embed,
    short_distance_bound,
)
from arealaw.entropy import certified_dmax_bits, dmax, imax_seesaw
from arealaw.errors import ContractError
from conftest import random_density, random_substate


def _psd_min(m):
    return float(np.linalg.eigvalsh(m)[0])


class TestDiscretizeLeft:
    def test_uniform_spectrum_single_level(self, rng, cut44):
        rho = random_density(rng, 16)
        sl = np.eye(4) / 4
        sr = partial_trace(rho.mat, cut44, "R")
        sr = DensityOperator(sr / np.trace(sr).real)
        t = 2.0 ** certified_dmax_bits(rho.mat, sl, sr.mat)
        res = discretize_left(rho, sl, sr, t * (1 + 1e-12), 0.3, cut44)
        assert res.spectrum_count == 1
        assert trace_norm(res.rho_tilde.mat - rho.mat) < 1e-9

    def test_level_budget_paper_bound(self, rng, cut44):
        # N <= ceil(7 log2(d_L/eps)/eps) + 1 at eps=0.5, d_L=4
        rho = random_density(rng, 16)
        sl = partial_trace(rho.mat, cut44, "L")
        sr = np.eye(4) / 4
        t = 2.0 ** certified_dmax_bits(rho.mat, sl, sr)
        assert t <= 16.0 + 1e-6  # dimension bound guarantees the precondition
        res = discretize_left(rho, sl, sr, t, 0.5, cut44)
        assert res.n_levels <= int(np.ceil(7 * np.log2(4 / 0.5) / 0.5)) + 1
        assert res.spectrum_count <= res.n_levels

    def test_random_instance_invariants(self, rng, cut44):
        # PSD-check oracle on all three result invariants
        for _ in range(5):
            rho = random_density(rng, 16)
            sl = random_density(rng, 4)
            sr = random_density(rng, 4)
            t = 2.0 ** certified_dmax_bits(rho.mat, sl.mat, sr.mat)
            if t > 16:
                continue
            eps = 0.4
            res = discretize_left(rho, sl, sr, t, eps, cut44)
            assert res.trace_distance <= 2 * (eps / 4) ** 2 + 1e-9
            prod = tensor(res.sigma_l_tilde.mat, sr.mat)
            assert (
                _psd_min(t * (1 + eps) * prod - res.rho_tilde.mat) >= -1e-9 * t
            )
            # every sigma~ eigenvalue sits on the geometric grid
            w = np.linalg.eigvalsh(res.sigma_l_tilde.mat)
            w = w[w > 1e-13] * res.exact_inflation
            for val in w:
                assert np.min(np.abs(res.grid - val)) < 1e-9 * val
            assert res.spectrum_count <= cut44.d_l

    def test_rejects_bad_precondition(self, rng, cut44):
        rho = random_density(rng, 16)
        sl, sr = np.eye(4) / 4, np.eye(4) / 4
        with pytest.raises(ContractError):
            discretize_left(rho, sl, sr, 1.0 + 1e-12, 0.3, cut44)  # rho !<= t sigma

    def test_rejects_t_above_dl_squared(self, rng, cut44):
        rho = random_density(rng, 16)
        with pytest.raises(ContractError):
            discretize_left(rho, np.eye(4) / 4, np.eye(4) / 4, 17.0, 0.3, cut44)


class TestFlatEmbed:
    def test_equal_flat_inputs(self):
        rho = SubState(np.eye(2) / 2)
        tau = DensityOperator(np.eye(2) / 2)
        emb = flat_embed(rho, tau, 0.1, d_b=64)
        assert emb.distance_a <= 0.1 + 1e-9
        assert emb.t_prime <= 32 * 2 / 0.1**2  # 32 C t / delta^2 ceiling
        assert abs(emb.c_constant * 1.0 / 0.1**2 * 32 / 32 - emb.t_prime * 1) >= 0
        sig = emb.sigma_ab_dense()
        assert is_flat(SubState(sig), 1e-8)
        rp = emb.rho_prime_ab_dense()
        assert trace_norm(partial_trace(rp, BipartiteCut(2, 64), "L") - rho.mat) < 0.1

    def test_no_truncation_when_spectra_align(self, rng):
        # all b_j >= p a_i: truncation is a no-op
        tau = DensityOperator(np.eye(4) / 4)
        rho = random_density(rng, 4)
        emb = flat_embed(rho, tau, 0.2, d_b=256)
        assert emb.max_truncated_mass < 1e-12
        assert emb.truncation_distance_bound < 1e-5

    def test_random_qubit_pair_claims(self, rng):
        # explicit matrix oracle for the Claim bullets
        for _ in range(5):
            tau = random_density(rng, 4)
            # force supp(rho) inside supp(tau): conjugate into tau's support
            rho = random_substate(rng, 4)
            emb = flat_embed(rho, tau, 0.25, d_b=16)
            ab_cut = BipartiteCut(4, 16)
            rp = emb.rho_prime_ab_dense()
            sig = emb.sigma_ab_dense()
            # supp(rho'_AB) inside supp(sigma_AB)
            pi_sig = support_projector(SubState(sig))
            leak = np.real(np.trace(rp - pi_sig @ rp @ pi_sig))
            assert leak < 1e-9
            # flatness and D_max closed form
            assert is_flat(SubState(sig), 1e-8)
            bits = dmax(rp, sig)
            assert abs(bits - emb.dmax_bits) < 1e-6
            # A-marginal distance within delta + rounding slack
            rp_a = partial_trace(rp, ab_cut, "L")
            assert trace_norm(rp_a - emb.rho_prime_a.mat) < 1e-9
            assert emb.distance_a <= 0.25 + emb.rounding_distance + 1e-9

    def test_claim33_truncation_bound(self, rng):
        for _ in range(5):
            tau = random_density(rng, 6)
            rho = random_substate(rng, 6)
            emb = flat_embed(rho, tau, 0.2, d_b=64)
            assert emb.max_truncated_mass <= emb.t_for_p * emb.truncation_p + 1e-9

    def test_product_tau_sr_bound(self, rng, cut44):
        tau_l = DensityOperator(np.diag([0.4, 0.3, 0.2, 0.1]))
        tau_r = random_density(rng, 4)
        tau = DensityOperator(tensor(tau_l.mat, tau_r.mat))
        rho = random_density(rng, 16)
        emb = flat_embed(rho, tau, 0.2, cut=cut44, d_b=128)
        assert emb.sr_bound == 4  # |Spec(tau_L)|
        # mixture decomposition reassembles sigma_AB
        total = sum(p for p, _, _ in emb.mixture_terms())
        assert abs(total - 1.0) < 1e-9

    def test_rejects_nonproduct_tau_with_cut(self, rng, cut44):
        rho = random_density(rng, 16)
        tau = random_density(rng, 16)  # generic: not product
        with pytest.raises(ContractError):
            flat_embed(rho, tau, 0.2, cut=cut44, d_b=64)

    def test_tprime_ceiling(self, rng):
        for _ in range(5):
            tau = random_density(rng, 4)
            rho = random_density(rng, 4)
            delta = 0.2
            emb = flat_embed(rho, tau, delta, d_b=4096)
            t = 2.0 ** dmax(rho, tau)
            # recorded constant reproduces t' exactly and stays near 32
            assert emb.t_prime == pytest.approx(
                emb.c_constant * t / delta**2, rel=1e-12
            )
            assert emb.t_prime <= 33 * t / delta**2 + emb.tr_p_sigma / 4096


class TestDominateMixture:
    def test_single_term(self, rng):
        rl, rr = random_density(rng, 2), random_density(rng, 2)
        res = dominate_mixture([(1.0, rl, rr)])
        assert res.factor == 1.0
        assert res.lambda_min_witness >= -1e-9
        assert trace_norm(res.tau_l.mat - rl.mat) < 1e-12

    def test_two_orthogonal_terms(self):
        # eigensolve oracle for the PSD certificate
        terms = [
            (0.5, np.diag([1.0, 0.0]), np.diag([1.0, 0.0])),
            (0.5, np.diag([0.0, 1.0]), np.diag([0.0, 1.0])),
        ]
        res = dominate_mixture(terms)
        assert res.factor == 4.0
        operand = 0.5 * np.kron(*[np.diag([1.0, 0])] * 2) + 0.5 * np.kron(
            *[np.diag([0.0, 1])] * 2
        )
        certificate = 4.0 * np.kron(res.tau_l.mat, res.tau_r.mat) - operand
        assert _psd_min(certificate) >= -1e-9

    def test_identical_terms_algebraic(self, rng):
        rho_l, rho_r = random_density(rng, 2), random_density(rng, 2)
        terms = [(1.0 / 3, rho_l, rho_r)] * 3
        res = dominate_mixture(terms)
        assert res.factor == 9.0
        diff = 9.0 * np.kron(res.tau_l.mat, res.tau_r.mat) - np.kron(
            rho_l.mat, rho_r.mat
        )
        assert _psd_min(diff) >= -1e-9

    def test_random_instances(self, rng):
        for _ in range(20):
            d = rng.integers(1, 5)
            p = rng.dirichlet(np.ones(d)) * rng.uniform(0.5, 1.0)
            terms = [
                (p[i], random_density(rng, 2), random_density(rng, 3))
                for i in range(d)
            ]
            res = dominate_mixture(terms)
            assert res.lambda_min_witness >= -1e-9

    def test_empty_rejected(self):
        with pytest.raises(ContractError):
            dominate_mixture([])


class TestDominateConjugated:
    def test_identity_single_pure_product(self, cut22):
        vl, vr = np.array([1.0, 0]), np.array([0.0, 1])
        rl = DensityOperator(np.outer(vl, vl))
        rr = DensityOperator(np.outer(vr, vr))
        res = dominate_conjugated(np.eye(4), [(1.0, rl, rr)], cut22)
        assert res.factor == 1.0
        assert trace_norm(res.tau_l.mat - rl.mat) < 1e-9
        assert trace_norm(res.tau_r.mat - rr.mat) < 1e-9

    def test_identity_two_terms_matches_mixture_semantics(self, rng, cut22):
        terms = [
            (0.5, random_density(rng, 2), random_density(rng, 2)),
            (0.5, random_density(rng, 2), random_density(rng, 2)),
        ]
        res = dominate_conjugated(np.eye(4), terms, cut22)
        assert res.factor == 4.0  # (D M)^2 with M = 1
        assert res.lambda_min_witness >= -1e-9

    def test_cnot_product_term(self, rng, cut22):
        cnot = np.eye(4)[[0, 1, 3, 2]].astype(complex)
        terms = [(1.0, random_density(rng, 2), random_density(rng, 2))]
        res = dominate_conjugated(cnot, terms, cut22)
        assert res.factor == 4.0  # D=1, M=2
        # brute-force PSD oracle
        operand = np.kron(terms[0][1].mat, terms[0][2].mat)
        conj = cnot @ operand @ cnot.conj().T
        conj /= np.real(np.trace(conj))
        cert = res.exact_factor * np.kron(res.tau_l.mat, res.tau_r.mat) - conj
        assert _psd_min(cert) >= -1e-9

    def test_random_instances(self, rng, cut22):
        for _ in range(10):
            g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
            terms = [
                (0.6, random_density(rng, 2), random_density(rng, 2)),
                (0.4, random_density(rng, 2), random_density(rng, 2)),
            ]
            res = dominate_conjugated(g, terms, cut22)
            assert res.lambda_min_witness >= -1e-9
            assert res.exact_factor <= res.factor + 1e-9


class TestDominateVec:
    def test_normalized_identity(self, cut22):
        m = np.eye(4) / 2.0  # ||M||_2 = 1
        res = dominate_vec(m, cut22)
        assert res.factor == 1.0
        assert res.lambda_min_witness >= -1e-9

    def test_swap_rank_four(self, cut22):
        swap = np.zeros((4, 4))
        for i in range(2):
            for j in range(2):
                swap[j * 2 + i, i * 2 + j] = 1.0
        res = dominate_vec(swap / 2.0, cut22)
        assert res.factor == 16.0  # D = 4, bound 2 log2 4 = 4 bits

    def test_rank_two_bound_oracle(self, rng, cut22):
        # random Schmidt-rank-2 operator: bound 2 bits; PSD eigensolve oracle
        a1, b1 = rng.standard_normal((2, 2)), rng.standard_normal((2, 2))
        a2, b2 = rng.standard_normal((2, 2)), rng.standard_normal((2, 2))
        m = np.kron(a1, b1) + np.kron(a2, b2)
        m = m / np.linalg.norm(m)
        res = dominate_vec(m, cut22)
        assert res.factor == pytest.approx(4.0)
        mm = m @ m.conj().T
        assert _psd_min(4.0 * np.kron(res.tau_l.mat, res.tau_r.mat) - mm) >= -1e-9
        # certified I_max(MM^dag) <= 2 log2 D, cross-checked via the witness
        bits = certified_dmax_bits(mm, res.tau_l.mat, res.tau_r.mat)
        assert bits <= 2.0 + 1e-9

    def test_vec_bound_never_beats_seesaw_witness(self, rng, cut22):
        g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        m = g / np.linalg.norm(g)
        res = dominate_vec(m, cut22)
        mm = m @ m.conj().T
        ss = imax_seesaw(SubState(mm), cut22, restarts=2, inner_iters=80)
        assert ss.value <= np.log2(res.factor) + 1e-6

    def test_normalization_contract(self, cut22):
        with pytest.raises(ContractError):
            dominate_vec(np.eye(4), cut22)


class TestShortDistance:
    def test_equal_states(self, rng):
        rho = random_density(rng, 3)
        bound = short_distance_bound(rho, rho, 0.1)
        assert abs(bound - 0.2) < 1e-12

    def test_scaled_state(self, rng):
        sigma = random_density(rng, 3)
        delta = 0.15
        rho = SubState((1 - delta) * sigma.mat)
        bound = short_distance_bound(rho, sigma, delta)
        assert abs(bound - (2 * delta + delta)) < 1e-12
        assert trace_norm(rho.mat - sigma.mat) <= bound + 1e-12

    def test_random_pairs(self, rng):
        # trace-norm oracle for the inequality
        count = 0
        while count < 20:
            sigma = random_density(rng, 2)
            rho = random_substate(rng, 2)
            delta = 2.0 ** dmax(rho, sigma) - 1.0
            if not 0 < delta < 0.8:
                continue
            count += 1
            bound = short_distance_bound(rho, sigma, delta)
            assert trace_norm(rho.mat - sigma.mat) <= bound + 1e-9

    def test_rejects_violated_precondition(self, rng):
        sigma = random_density(rng, 2)
        rho = SubState(np.eye(2) / 2)
        with pytest.raises(ContractError):
            short_distance_bound(rho, sigma, 1e-15)
