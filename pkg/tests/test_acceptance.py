"""Acceptance suite: one test per criterion, with pass/fail lines and the
stated runtime budgets. Tolerances are pinned exactly as specified."""

import time

import numpy as np
import pytest

from arealaw.agsp import chebyshev_agsp
from arealaw.constructions import (
    discretize_left,
    dominate_conjugated,
    dominate_mixture,
    dominate_vec,
    flat_embed,
    short_distance_bound,
)
from arealaw.core import (
    BipartiteCut,
    DensityOperator,
    SubState,
    gentle_measure,
    partial_trace,
    support_projector,
    tensor,
    trace_norm,
)
from arealaw.entropy import (
    certified_dmax_bits,
    continuity_gap,
    dmax,
    dmin,
    imax_bruteforce,
    imax_seesaw,
    mutual_info,
    rel_entropy,
)
from arealaw.models import ChainModel, build_hamiltonian, ground_space
from arealaw.pipeline import BootstrapConfig, bootstrap_run, low_rank_approx

from conftest import random_density, random_substate


def report(criterion, ok, elapsed, budget, detail=""):
    status = "PASS" if ok else "FAIL"
    print(
        f"[{status}] criterion {criterion}: {elapsed:.1f}s "
        f"(budget {budget:.0f}s) {detail}"
    )
    assert ok, f"criterion {criterion} failed: {detail}"
    assert elapsed < budget, f"criterion {criterion} over budget: {elapsed:.1f}s"


def test_criterion_1_flat_state_identities():
    """D_min = D_max = log2(d_sigma/d_rho) for 100 random flat nested pairs."""
    start = time.monotonic()
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(100):
        dim = int(rng.choice([8, 16, 32, 64]))
        rank_sigma = int(rng.integers(2, dim + 1))
        rank_rho = int(rng.integers(1, rank_sigma + 1))
        g = rng.standard_normal((dim, rank_sigma)) + 1j * rng.standard_normal(
            (dim, rank_sigma)
        )
        q, _ = np.linalg.qr(g)
        sigma = DensityOperator(q @ q.conj().T / rank_sigma)
        rho = DensityOperator(
            q[:, :rank_rho] @ q[:, :rank_rho].conj().T / rank_rho
        )
        expect = np.log2(rank_sigma / rank_rho)
        worst = max(
            worst,
            abs(dmax(rho, sigma) - expect),
            abs(dmin(rho, sigma) - expect),
        )
    report(1, worst <= 1e-9, time.monotonic() - start, 5.0, f"worst {worst:.2e}")


def test_criterion_2_measure_ordering():
    """D <= D_max and I <= I_max(witness) <= 2 log2 min(d) on 500 states."""
    start = time.monotonic()
    rng = np.random.default_rng(202)
    cut = BipartiteCut.chain(2, 1)
    ok = True
    for _ in range(500):
        rho = random_density(rng, 4)
        sigma = random_density(rng, 4)
        ok &= rel_entropy(rho, sigma) <= dmax(rho, sigma) + 1e-7
        res = imax_seesaw(rho, cut, restarts=0)
        ok &= mutual_info(rho, cut) <= res.value + 1e-6
        ok &= res.value <= 2.0 * np.log2(2) + 1e-6
        sl, sr = res.witness
        prod = np.kron(sl.mat, sr.mat)
        ok &= np.linalg.eigvalsh(2.0**res.value * prod - rho.mat)[0] >= -1e-9
        if not ok:
            break
    report(2, ok, time.monotonic() - start, 120.0)


def test_criterion_3_imax_oracle_agreement():
    """|imax_seesaw - imax_bruteforce(41)| <= 2e-2 bits on 20 seeded states."""
    start = time.monotonic()
    rng = np.random.default_rng(303)
    cut = BipartiteCut.chain(2, 1)
    worst = 0.0
    for _ in range(20):
        rho = random_density(rng, 4)
        ss = imax_seesaw(rho, cut, restarts=4, inner_iters=300, max_outer=5)
        bf = imax_bruteforce(rho, cut, 41)
        worst = max(worst, abs(ss.value - bf.value))
    report(3, worst <= 2e-2, time.monotonic() - start, 300.0, f"worst {worst:.2e}")


def test_criterion_4_lemma_witnesses():
    """PSD witness checks for every domination operation, 100 random each."""
    start = time.monotonic()
    rng = np.random.default_rng(404)
    cut22 = BipartiteCut.chain(2, 1)
    cut44 = BipartiteCut.chain(4, 2)
    ok = True

    # built-in examples
    swap = np.zeros((4, 4))
    for i in range(2):
        for j in range(2):
            swap[j * 2 + i, i * 2 + j] = 1.0
    ok &= dominate_vec(np.eye(4) / 2, cut22).lambda_min_witness >= -1e-9
    ok &= dominate_vec(swap / 2, cut22).lambda_min_witness >= -1e-9
    cnot = np.eye(4)[[0, 1, 3, 2]].astype(complex)
    ok &= (
        dominate_conjugated(
            cnot, [(1.0, random_density(rng, 2), random_density(rng, 2))], cut22
        ).lambda_min_witness
        >= -1e-9
    )

    for _ in range(100):
        # mixture
        d = int(rng.integers(1, 4))
        p = rng.dirichlet(np.ones(d))
        terms = [
            (p[i], random_density(rng, 2), random_density(rng, 2))
            for i in range(d)
        ]
        ok &= dominate_mixture(terms).lambda_min_witness >= -1e-9
        # conjugated
        g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        ok &= dominate_conjugated(g, terms, cut22).lambda_min_witness >= -1e-9
        # vec
        m = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        ok &= (
            dominate_vec(m / np.linalg.norm(m), cut22).lambda_min_witness
            >= -1e-9
        )
        # discretization (witness = the certified output inequality)
        rho = random_density(rng, 16)
        sl = partial_trace(rho.mat, cut44, "L")
        sr = np.eye(4) / 4
        t = 2.0 ** certified_dmax_bits(rho.mat, sl, sr)
        disc = discretize_left(rho, sl, sr, t, 0.4, cut44)
        prod = tensor(disc.sigma_l_tilde.mat, sr)
        lam = np.linalg.eigvalsh(
            t * (1 + 0.4) * prod - disc.rho_tilde.mat
        )[0]
        ok &= lam >= -1e-9 * max(1.0, t)
        # flat embedding (witness = t' sigma_AB - rho'_AB, dense oracle)
        tau = random_density(rng, 4)
        rho_e = random_substate(rng, 4)
        emb = flat_embed(rho_e, tau, 0.25, d_b=16)
        sig = emb.sigma_ab_dense()
        rp = emb.rho_prime_ab_dense()
        ok &= np.linalg.eigvalsh(emb.t_prime * sig - rp)[0] >= -1e-9
        if not ok:
            break
    report(4, ok, time.monotonic() - start, 300.0)


def test_criterion_5_inequality_sweep():
    """Gentle measurement, Bhatia, short-distance, continuity: 500 each."""
    start = time.monotonic()
    rng = np.random.default_rng(505)
    cut = BipartiteCut.chain(4, 2)
    ok = True
    for _ in range(500):
        rho = random_substate(rng, 3)
        g = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
        q, _ = np.linalg.qr(g)
        out, bound = gentle_measure(rho, q @ q.conj().T)
        ok &= trace_norm(rho.mat - out.mat) <= bound + 1e-9
    for _ in range(500):
        a, b = random_density(rng, 5), random_density(rng, 5)
        ea = np.sort(np.linalg.eigvalsh(a.mat))[::-1]
        eb = np.sort(np.linalg.eigvalsh(b.mat))[::-1]
        ok &= np.sum(np.abs(ea - eb)) <= trace_norm(a.mat - b.mat) + 1e-9
    done = 0
    while done < 500:
        sigma = random_density(rng, 3)
        rho = random_substate(rng, 3)
        delta = 2.0 ** dmax(rho, sigma) - 1.0
        if not 0 <= delta < 2.0:
            continue
        done += 1
        bound = short_distance_bound(rho, sigma, delta)
        ok &= trace_norm(rho.mat - sigma.mat) <= bound + 1e-9
    for _ in range(500):
        lhs, rhs = continuity_gap(
            random_density(rng, 16), random_density(rng, 16), cut
        )
        ok &= lhs <= rhs + 1e-9
    report(5, ok, time.monotonic() - start, 300.0)


def test_criterion_6_agsp_certification():
    """TFI n=8, h=2, middle cut: Delta strictly decreasing, ground fixed,
    D^2 Delta <= 1/4 reachable within degree 64."""
    start = time.monotonic()
    model = ChainModel("transverse_field_ising", n=8, h=2.0)
    h = build_hamiltonian(model)
    gs = ground_space(h)
    cut = BipartiteCut.chain(8, 4)
    ok = True
    deltas = []
    for degree in (1, 2, 4, 8, 16):
        a = chebyshev_agsp(h, gs.spectral_data, degree, cut, h_eig=gs.eig)
        deltas.append(a.delta)
        ok &= a.fixes_gs_error <= 1e-8
    ok &= all(b < a for a, b in zip(deltas, deltas[1:]))
    found = None
    for degree in range(1, 65):
        a = chebyshev_agsp(h, gs.spectral_data, degree, cut, h_eig=gs.eig)
        if a.d_rank**2 * a.delta <= 0.25:
            found = degree
            break
    ok &= found is not None
    report(
        6, ok, time.monotonic() - start, 120.0,
        f"deltas {['%.1e' % d for d in deltas]}, D^2*Delta<=1/4 at degree {found}",
    )


@pytest.mark.parametrize(
    "kind,n",
    [("classical_ising", 6), ("projector_chain", 8), ("projector_chain", 10)],
)
def test_criterion_7_bootstrap_halting(kind, n):
    """Halting within 2|L|, smoothing within epsilon, corollary-2 chain."""
    start = time.monotonic()
    h = build_hamiltonian(ChainModel(kind, n=n))
    gs = ground_space(h)
    cut = BipartiteCut.chain(n, n // 2)
    eps = 0.2
    res = bootstrap_run(gs, BootstrapConfig(epsilon=eps, cut=cut))
    ok = not res.anomaly
    ok &= res.halted_at is not None and res.halted_at <= 2 * (n // 2)
    ok &= res.smoothing_distance <= eps + 1e-6
    i_omega = mutual_info(gs.omega, cut)
    floor = i_omega - 1.5 * eps * np.log2(cut.d_l) - 3.0
    ok &= res.smoothed_bound.value >= floor
    report(
        f"7[{kind} n={n}]", ok, time.monotonic() - start, 600.0,
        f"halt k={res.halted_at}, bound {res.smoothed_bound.value:.3f} bits, "
        f"dist {res.smoothing_distance:.1e}",
    )


@pytest.mark.parametrize("kind,n", [("classical_ising", 6), ("projector_chain", 10)])
def test_criterion_8_low_rank(kind, n):
    """Corollary-3 compression at eps = 0.3 with certified distance."""
    start = time.monotonic()
    h = build_hamiltonian(ChainModel(kind, n=n))
    gs = ground_space(h)
    cut = BipartiteCut.chain(n, n // 2)
    res = low_rank_approx(gs, BootstrapConfig(epsilon=0.3, cut=cut))
    direct = trace_norm(gs.omega.mat - res.omega_eps.mat)
    ok = direct <= 0.3 + 1e-6
    ok &= res.schmidt_rank <= res.rank_bound
    if kind == "projector_chain":
        ok &= res.schmidt_rank < cut.d_l * cut.d_r
    report(
        f"8[{kind} n={n}]", ok, time.monotonic() - start, 600.0,
        f"rank {res.schmidt_rank} <= bound {res.rank_bound}, dist {direct:.2e}",
    )


def test_criterion_9_degeneracy_independence():
    """projector_chain n in {6,8,10,12}, |L| = n/2: exact I and the smoothed
    upper bound stay within a fixed band while log2(r) grows linearly."""
    start = time.monotonic()
    i_vals, bounds, log_r = [], [], []
    for n in (6, 8, 10, 12):
        h = build_hamiltonian(ChainModel("projector_chain", n=n))
        gs = ground_space(h)
        del h
        cut = BipartiteCut.chain(n, n // 2)
        i_vals.append(mutual_info(gs.omega, cut))
        res = bootstrap_run(gs, BootstrapConfig(epsilon=0.2, cut=cut))
        bounds.append(res.smoothed_bound.value)
        log_r.append(np.log2(gs.r))
        del gs, res
    # regression band: both stay within a fixed window while log2 r grows
    # by ~4.2 bits across the sweep
    band_i = max(i_vals) - min(i_vals)
    band_bound = max(bounds) - min(bounds)
    growth_r = log_r[-1] - log_r[0]
    ok = band_i <= 0.25 and band_bound <= 0.75 and growth_r > 3.5
    report(
        9, ok, time.monotonic() - start, 1200.0,
        f"I {['%.3f' % v for v in i_vals]}, bounds {['%.3f' % v for v in bounds]}, "
        f"log2 r grows {growth_r:.1f} bits",
    )


def test_criterion_10_sweep_determinism(tmp_path):
    """Byte-identical table.csv across two sweeps with a fixed seed."""
    start = time.monotonic()
    from arealaw.cli import main

    cfg = tmp_path / "sweep.ini"
    cfg.write_text(
        "[sweep]\n"
        "models = classical_ising, projector_chain\n"
        "n = 4, 6\n"
        "cut_fraction = 0.5\n"
        "epsilon = 0.2\n"
        "seed = 42\n"
        "lowrank = true\n"
        f"[output]\ndirectory = {tmp_path / 'out'}\n"
    )
    assert main(["--config", str(cfg), "sweep"]) == 0
    first = (tmp_path / "out" / "table.csv").read_bytes()
    assert main(["--config", str(cfg), "sweep"]) == 0
    second = (tmp_path / "out" / "table.csv").read_bytes()
    ok = first == second and len(first) > 0
    report(10, ok, time.monotonic() - start, 600.0, f"{len(first)} bytes")
