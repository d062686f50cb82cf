"""The bootstrapping iteration as an executable certified-bound algorithm.

Each step runs: spectral discretization of the left dominator, flat
embedding into A (x) B, conjugation by the extended projector K (x) Pi_r,
product-state domination of the conjugated flat state, and an eigenvalue
cap. The multiplicative recurrence factor t_{k+1} is assembled from exact
measured quantities (embedded D_max, conjugated trace, span ranks); the
asymptotic envelopes are recorded alongside for comparison only. Every
state inequality carries an eigenvalue witness, stored (or hashed, above
the storage cutoff) for offline re-verification.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace

import numpy as np

from .agsp import Agsp, chebyshev_agsp, extend_agsp, find_degree_for_ceiling
from .constructions import discretize_left, flat_embed
from .core import (
    BipartiteCut,
    DensityOperator,
    SubState,
    cap_eigenvalues,
    eig_hermitian,
    fast_lambda_min,
    operator_schmidt,
    tensor,
    trace_norm,
    _mat_of,
)
from .entropy import (
    MeasureResult,
    imax_closed_form,
    imax_seesaw,
    mutual_info,
)
from .errors import BudgetError, CeilingError, ContractError, ShapeError
from .models import GroundSpace

#: Witness matrices are stored verbatim up to this ambient dimension;
#: larger runs store hashes plus the deterministic replay recipe.
WITNESS_STORE_DIM = 512


def array_hash(arr) -> str:
    a = np.ascontiguousarray(arr)
    h = hashlib.sha256()
    h.update(str(a.shape).encode())
    h.update(a.tobytes())
    return h.hexdigest()


@dataclass(frozen=True)
class BootstrapConfig:
    """Parameters of the bootstrapping run.

    ``delta`` is (epsilon/|L|)^2 as in the construction; the working value
    passed to the lemmas carries the extra 1/(2^2 22^2) rescaling so the
    accumulated smoothing budget provably stays below epsilon.
    """

    epsilon: float
    cut: BipartiteCut
    agsp_degree: int | None = None  # None: target the D^2*Delta ceiling
    agsp_ceiling: float | None = None  # None: 1/4 of the runtime-g inverse
    agsp_max_degree: int = 64
    d_b_resolution: int = 2**16
    max_iterations: int | None = None
    seed: int = 0
    psd_slack: float = 1e-9
    truncation_tol: float = 1e-10
    seesaw_dim_limit: int = 16
    seesaw_restarts: int = 4
    seesaw_inner_iters: int = 200
    seesaw_max_outer: int = 5
    imax_schmidt_witness: bool = True

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ShapeError(f"epsilon must be in (0,1), got {self.epsilon}")
        if not self.cut.sites_l:
            raise ShapeError("cut must carry site ranges (use BipartiteCut.chain)")
        horizon = int(np.ceil(2 * self.n_left))
        if self.max_iterations is not None and self.max_iterations < horizon:
            raise ShapeError(
                f"max_iterations {self.max_iterations} below the halting "
                f"horizon ceil(2|L|) = {horizon}"
            )

    @property
    def n_left(self) -> int:
        return len(self.cut.sites_l)

    @property
    def delta(self) -> float:
        return (self.epsilon / self.n_left) ** 2

    @property
    def delta_work(self) -> float:
        return self.delta / (4.0 * 22.0**2)

    @property
    def horizon(self) -> int:
        return (
            int(np.ceil(2 * self.n_left))
            if self.max_iterations is None
            else self.max_iterations
        )


@dataclass(frozen=True)
class BootstrapRecord:
    k: int
    t_k: float
    distance_to_omega: float
    imax_upper_rho_prime: float
    halted: bool
    exact_factors: dict
    agsp_certificate: dict
    member_trace: float
    witnesses: tuple = field(default=(), compare=False)


@dataclass(frozen=True)
class BootstrapResult:
    trace: tuple
    smoothed_bound: MeasureResult
    member: SubState  # rho'_A at the halting step (the smoothing member)
    halting_state: SubState  # the iterate rho_k at the halting step
    halted_at: int | None
    anomaly: bool
    epsilon: float
    smoothing_distance: float
    agsp: Agsp
    d_b: int
    config: BootstrapConfig


def _imax_policy(rho, cut, cfg: BootstrapConfig, quality: str) -> MeasureResult:
    dim = _mat_of(rho).shape[0]
    if quality == "final" and dim <= cfg.seesaw_dim_limit:
        return imax_seesaw(
            rho,
            cut,
            restarts=cfg.seesaw_restarts,
            inner_iters=cfg.seesaw_inner_iters,
            max_outer=cfg.seesaw_max_outer,
            seed=cfg.seed,
        )
    include = cfg.imax_schmidt_witness and quality == "final"
    return imax_closed_form(rho, cut, include_schmidt=include)


def _witness_entry(name, k, factor, lam, arrays: dict, dim: int):
    entry = {
        "name": name,
        "k": k,
        "factor": float(factor),
        "lambda_min": float(lam),
        "dim": dim,
        "hashes": {key: array_hash(a) for key, a in arrays.items()},
    }
    if dim <= WITNESS_STORE_DIM:
        entry["arrays"] = {key: np.array(a) for key, a in arrays.items()}
    return entry


def _certified_product_t(rho_mat, tau_l, tau_r, t, slack):
    """Inflate t minimally so lambda_min(t tau - rho) >= -slack, measured."""
    from .core import effectively_real

    if all(effectively_real(x) for x in (rho_mat, tau_l, tau_r)):
        rho_mat = rho_mat.real if np.iscomplexobj(rho_mat) else rho_mat
        tau_l = tau_l.real if np.iscomplexobj(tau_l) else tau_l
        tau_r = tau_r.real if np.iscomplexobj(tau_r) else tau_r
    dim = rho_mat.shape[0]
    if dim <= 1024:
        prod = tensor(tau_l, tau_r, max_dim=dim)
        lam = float(np.linalg.eigvalsh(t * prod - rho_mat)[0])
        while lam < -slack * max(1.0, t):
            t *= 1.0 + 4e-12
            lam = float(np.linalg.eigvalsh(t * prod - rho_mat)[0])
        return t, lam
    from .core import fast_lambda_min_operator, kron_apply

    dtype = complex if np.iscomplexobj(rho_mat) else float

    def mv_factory(tval):
        def mv(v):
            return tval * kron_apply(tau_l, tau_r, v) - rho_mat @ v

        return mv

    lam = fast_lambda_min_operator(mv_factory(t), dim, dtype=dtype)
    while lam < -slack * max(1.0, t):
        t *= 1.0 + 4e-12
        lam = fast_lambda_min_operator(mv_factory(t), dim, dtype=dtype)
    return t, lam


def _dominate_extended(emb, xs, ys, cap_count, schmidt_tol=1e-9):
    """Product domination of K_AB sigma_AB K_AB^dag on the factored form.

    K_AB = sum_a X_a (x) (Y_a (x) Pi_r); sigma_AB is the flat embedded state
    grouped by the left spectrum. Returns (tau_l, tau_r, exact_factor,
    rank_l, rank_r) where tau_r is already traced over B.
    """
    d_l = xs.shape[1]
    d_r = ys.shape[1]
    v_cols = emb.right_cols
    tau_l = np.zeros((d_l, d_l), dtype=complex)
    tau_r = np.zeros((d_r, d_r), dtype=complex)
    rank_l_total = 0
    rank_r_total = 0
    for s, u_cols in enumerate(emb.left_group_cols):
        counts = emb.counts_grid[s]
        capped = np.minimum(counts, cap_count).astype(float)
        tr_m = float(np.sum(counts))
        if tr_m <= 0 or np.all(capped == 0):
            continue
        k_s = u_cols.shape[1]
        xu = np.einsum("aij,jk->aik", xs, u_cols)  # X_a U
        gl = np.einsum("aik,bik->ab", xu.conj(), xu) / k_s
        yv = np.einsum("aij,jv->aiv", ys, v_cols)  # Y_a V
        inner = np.einsum("aiv,biv->abv", yv.conj(), yv)
        gr = np.einsum("abv,v->ab", inner, capped) / tr_m
        wl, ql = np.linalg.eigh(gl)
        wr, qr = np.linalg.eigh(gr)
        kl = wl > 1e-14 * max(float(wl[-1]), 1e-300)
        kr = wr > 1e-14 * max(float(wr[-1]), 1e-300)
        if not np.any(kl) or not np.any(kr):
            continue
        bl = np.sqrt(wl[kl])[:, None] * ql[:, kl].conj().T
        br = np.sqrt(wr[kr])[:, None] * qr[:, kr].conj().T
        coupling = bl @ br.T
        uu, ss, vv = np.linalg.svd(coupling)
        rank_s = int(np.sum(ss > schmidt_tol * max(float(ss[0]), 1e-300)))
        if rank_s == 0:
            continue
        # left span: phi_r = sum_k uu[k,r] U_k with U_k from the Gram basis
        mats_l = xu @ u_cols.conj().T / np.sqrt(k_s)  # X_a P_s / sqrt(k_s)
        base_l = np.einsum("aij,ak->kij", mats_l, ql[:, kl] / np.sqrt(wl[kl]))
        phi_l = np.einsum("kij,kr->rij", base_l, uu[:, :rank_s])
        tau_l += np.einsum("rij,rkj->ik", phi_l, phi_l.conj())
        # right span, traced over B: contribution per Schmidt vector r is
        # G_r diag(capped) G_r^dag / Tr(M_s) with G_r = sum_a coef_a Y_a V
        coef = np.einsum("rm,am->ra", vv[:rank_s, :], qr[:, kr] / np.sqrt(wr[kr]))
        g_r = np.einsum("ra,aiv->riv", coef, yv)
        tau_r += np.einsum("riv,v,rjv->ij", g_r, capped, g_r.conj(), optimize=True) / tr_m
        rank_l_total += rank_s
        rank_r_total += rank_s
    if rank_l_total == 0:
        raise ContractError("extended domination produced an empty span")
    tau_l = (tau_l + tau_l.conj().T) / 2.0
    tau_r = (tau_r + tau_r.conj().T) / 2.0
    tau_l /= float(np.real(np.trace(tau_l)))
    tau_r /= float(np.real(np.trace(tau_r)))
    return (
        DensityOperator(tau_l),
        DensityOperator(tau_r),
        float(rank_l_total * rank_r_total),
        rank_l_total,
        rank_r_total,
    )


@dataclass
class _RunContext:
    gs: GroundSpace
    cfg: BootstrapConfig
    omega: DensityOperator
    agsp: Agsp
    d_b: int
    cap_count: int
    k_sq_diag: np.ndarray  # K^dag K in the H eigenbasis (diagonal)
    h_eigvecs: np.ndarray


def runtime_g_ceiling(cfg: BootstrapConfig) -> float:
    """1/(4 g_runtime): the D^2*Delta target derived from the recurrence.

    Needs Delta * (t'/t) * F <= 1/4 with t'/t <= (1+eps) 32 C / delta_w^2
    and F <= (S D)^2, S <= d_L; a factor-2 margin covers the rounding
    constant C.
    """
    s_est = min(
        cfg.cut.d_l,
        int(np.ceil(7 * np.log2(cfg.cut.d_l / cfg.epsilon) / cfg.epsilon)) + 1,
    )
    f_est = 2.0 * 32.0 * (1.0 + cfg.epsilon) / cfg.delta_work**2
    return 1.0 / (4.0 * f_est * s_est**2)


def prepare_context(gs: GroundSpace, cfg: BootstrapConfig) -> _RunContext:
    cut = cfg.cut
    if gs.omega.dim != cut.dim:
        raise ShapeError("cut inconsistent with the ground space dimension")
    w, v = gs.eig
    h_mat = (v * w) @ v.conj().T
    if cfg.agsp_degree is not None:
        agsp = chebyshev_agsp(
            h_mat, gs.spectral_data, cfg.agsp_degree, cut,
            cfg.truncation_tol, h_eig=(w, v),
        )
    else:
        ceiling = cfg.agsp_ceiling
        if ceiling is None:
            ceiling = runtime_g_ceiling(cfg)
        agsp = find_degree_for_ceiling(
            h_mat, gs.spectral_data, cut, ceiling,
            max_degree=cfg.agsp_max_degree,
            truncation_tol=cfg.truncation_tol, h_eig=(w, v),
        )
        if agsp.delta > cfg.delta_work:
            # raise the degree to the analytic floor for Delta <= delta_work
            from .agsp import analytic_delta

            degree = agsp.degree
            while (
                degree <= cfg.agsp_max_degree
                and analytic_delta(gs.spectral_data, degree) > cfg.delta_work
            ):
                degree += 1
            if degree > cfg.agsp_max_degree:
                raise CeilingError(
                    f"cannot reach Delta <= delta_work = {cfg.delta_work:.3e} "
                    f"within degree {cfg.agsp_max_degree}"
                )
            agsp = chebyshev_agsp(
                h_mat, gs.spectral_data, degree, cut,
                cfg.truncation_tol, h_eig=(w, v),
            )
    if agsp.delta > cfg.delta_work:
        raise CeilingError(
            f"certified Delta {agsp.delta:.3e} exceeds delta_work "
            f"{cfg.delta_work:.3e} (Claim assumption)"
        )
    d_b = gs.r * int(np.ceil(cfg.d_b_resolution / gs.r))
    del h_mat
    if agsp.spectral_values is not None:
        vals = np.asarray(agsp.spectral_values, dtype=float)
    else:
        vals = np.real(np.einsum("ij,jk,ki->i", v.conj().T, agsp.k_op, v))
    return _RunContext(
        gs=gs,
        cfg=cfg,
        omega=gs.omega,
        agsp=agsp,
        d_b=d_b,
        cap_count=d_b // gs.r,
        k_sq_diag=vals**2,
        h_eigvecs=v,
    )


@dataclass(frozen=True)
class BootstrapState:
    rho: SubState
    t: float
    tau_l: DensityOperator
    tau_r: DensityOperator
    lam_max: float
    k: int


def initial_state(ctx: _RunContext) -> tuple[BootstrapState, MeasureResult]:
    cfg = ctx.cfg
    res = _imax_policy(ctx.omega, cfg.cut, cfg, "final")
    t0 = 2.0**res.value
    if t0 > cfg.cut.d_l**2 * (1 + 1e-9):
        raise ContractError(f"t_0 = {t0} exceeds d_L^2; witness pool failed")
    sl, sr = res.witness
    return (
        BootstrapState(
            rho=ctx.omega,
            t=t0,
            tau_l=sl,
            tau_r=sr,
            lam_max=1.0 / ctx.gs.r,
            k=0,
        ),
        res,
    )


def bootstrap_step(state: BootstrapState, gs: GroundSpace, cfg: BootstrapConfig,
                   ctx: _RunContext | None = None):
    """One certified move rho_k -> rho_{k+1}.

    Returns (new_state, record, member): ``member`` is the flat-embedding
    A-marginal rho'_A of this step (the smoothing candidate when the run
    halts here).
    """
    if ctx is None:
        ctx = prepare_context(gs, cfg)
    cut, eps = cfg.cut, cfg.epsilon
    agsp = ctx.agsp
    witnesses = []

    disc = discretize_left(
        state.rho, state.tau_l.mat, state.tau_r.mat, state.t, eps, cut,
        psd_slack=cfg.psd_slack,
    )
    t_in = state.t * disc.exact_inflation

    emb = flat_embed(
        disc.rho_tilde,
        tensor(disc.sigma_l_tilde.mat, state.tau_r.mat, max_dim=cut.dim),
        cfg.delta_work,
        cut=cut,
        d_b=ctx.d_b,
        multiple_of=gs.r,
        t_cert=t_in,
        tau_factors=(disc.sigma_l_tilde.mat, state.tau_r.mat),
    )
    if emb.m_counts.size and int(emb.m_counts.max()) > ctx.cap_count:
        raise ContractError(
            "embedded B support exceeds Pi_r: lambda_max(rho) > 1/r?"
        )

    # eta = Tr_B(K_AB rho'_AB K_AB^dag) = K rho'_A K^dag   (Claim bullet 1)
    from .core import effectively_real

    k_mat = agsp.k_op
    rho_prime_a = emb.rho_prime_a.mat
    if effectively_real(k_mat) and effectively_real(rho_prime_a):
        eta = (k_mat.real @ rho_prime_a.real @ k_mat.real.T).astype(complex)
    else:
        eta = k_mat @ rho_prime_a @ k_mat.conj().T
    eta = (eta + eta.conj().T) / 2.0

    # exact conjugated trace of sigma_AB under K_AB
    q = ctx.h_eigvecs.conj().T @ emb.b_cols
    col_energy = np.real(np.einsum("ij,i,ij->j", q.conj(), ctx.k_sq_diag, q, optimize=True))
    capped_counts = np.minimum(emb.c_counts, ctx.cap_count)
    tr_ksk = float(np.sum(capped_counts * col_energy) / emb.tr_p_sigma)
    tr_bound = agsp.delta + ctx.d_b / emb.tr_p_sigma

    tau_l, tau_r, f_exact, rank_l, rank_r = _dominate_extended(
        emb, agsp.schmidt.weights[:, None, None] * agsp.schmidt.lefts,
        agsp.schmidt.rights, ctx.cap_count,
    )
    s_terms = len(emb.left_group_cols)
    f_bound = float((s_terms * agsp.d_rank) ** 2)

    t_next = emb.t_prime * tr_ksk * f_exact
    capped = cap_eigenvalues(SubState(eta), state.lam_max)
    new_lam = min(state.lam_max, float(np.linalg.eigvalsh(capped.mat)[-1])) \
        if capped.mat.shape[0] <= 1024 else state.lam_max
    t_next, lam_wit = _certified_product_t(
        capped.mat, tau_l.mat, tau_r.mat, t_next, cfg.psd_slack
    )
    witnesses.append(
        _witness_entry(
            "rho_{k+1} <= t_{k+1} tau_L (x) tau_R",
            state.k,
            t_next,
            lam_wit,
            {"rho": capped.mat, "tau_l": tau_l.mat, "tau_r": tau_r.mat},
            cut.dim,
        )
    )

    member = emb.rho_prime_a
    dist_omega = trace_norm(state.rho.mat - ctx.omega.mat)
    member_imax = _imax_policy(member, cut, cfg, "step")
    record = BootstrapRecord(
        k=state.k,
        t_k=state.t,
        distance_to_omega=dist_omega,
        imax_upper_rho_prime=member_imax.value,
        halted=False,
        exact_factors={
            "disc_inflation": disc.exact_inflation,
            "disc_distance": disc.trace_distance,
            "embed_f": emb.t_prime / t_in,
            "embed_distance": emb.distance_a,
            "embed_c_constant": emb.c_constant,
            "t_prime": emb.t_prime,
            "tr_k_sigma_k": tr_ksk,
            "tr_k_sigma_k_bound": tr_bound,
            "dominate_exact": f_exact,
            "dominate_bound": f_bound,
            "spectrum_terms": s_terms,
            "rank_l": rank_l,
            "rank_r": rank_r,
            "t_next": t_next,
            "t_ratio": t_next / max(state.t, 1e-300),
        },
        agsp_certificate=agsp.to_json_dict(),
        member_trace=member.trace,
        witnesses=tuple(witnesses),
    )
    new_state = BootstrapState(
        rho=capped,
        t=t_next,
        tau_l=tau_l,
        tau_r=tau_r,
        lam_max=new_lam,
        k=state.k + 1,
    )
    return new_state, record, member


def bootstrap_run(gs: GroundSpace, cfg: BootstrapConfig) -> BootstrapResult:
    """Iterate bootstrap steps until t_{k+1} >= t_k / 2 or the horizon.

    On halt at step k the smoothing member is that step's rho'_A; the
    smoothed bound is a witness-certified I_max upper bound for it, and the
    certified smoothing distance ||Omega - rho'_A||_1 <= epsilon is
    re-measured directly. A run that never halts within the horizon is
    flagged as a numerical anomaly (the recurrence forbids it).
    """
    ctx = prepare_context(gs, cfg)
    state, _ = initial_state(ctx)
    records = []
    halted_at = None
    member_at_halt = None
    halting_state = state.rho
    for _ in range(ctx.cfg.horizon):
        new_state, record, member = bootstrap_step(state, gs, cfg, ctx)
        if new_state.t >= state.t / 2.0:
            record = replace(record, halted=True)
            records.append(record)
            halted_at = state.k
            member_at_halt = member
            halting_state = state.rho
            break
        records.append(record)
        state = new_state
    anomaly = halted_at is None
    if anomaly:
        # the recurrence forbids this; expose the iterate for diagnosis
        member_at_halt = state.rho
        halting_state = state.rho
    smoothing_distance = trace_norm(member_at_halt.mat - ctx.omega.mat)
    smoothed = _imax_policy(member_at_halt, cfg.cut, cfg, "final")
    if not anomaly and smoothing_distance > cfg.epsilon + 1e-6:
        raise BudgetError(
            f"smoothing distance {smoothing_distance:.3e} exceeds epsilon "
            f"{cfg.epsilon}",
            audit=[r.exact_factors for r in records],
        )
    smoothed = replace(smoothed, distance_to_center=smoothing_distance)
    return BootstrapResult(
        trace=tuple(records),
        smoothed_bound=smoothed,
        member=member_at_halt,
        halting_state=halting_state,
        halted_at=halted_at,
        anomaly=anomaly,
        epsilon=cfg.epsilon,
        smoothing_distance=smoothing_distance,
        agsp=ctx.agsp,
        d_b=ctx.d_b,
        config=cfg,
    )


@dataclass(frozen=True)
class LowRankResult:
    omega_eps: DensityOperator
    schmidt_rank: int
    distance: float
    rank_bound: int
    certified_factor_chain: tuple
    bootstrap: BootstrapResult


def _find_degree_for_delta(gs, cut, target_delta, max_degree, truncation_tol):
    w, v = gs.eig
    h_mat = (v * w) @ v.conj().T
    degree, agsp = 1, None
    while degree <= max_degree:
        agsp = chebyshev_agsp(
            h_mat, gs.spectral_data, degree, cut, truncation_tol, h_eig=(w, v)
        )
        if agsp.delta <= target_delta:
            return agsp
        degree *= 2
    raise CeilingError(
        f"cannot reach Delta <= {target_delta:.3e} within degree {max_degree}"
    )


def low_rank_approx(gs: GroundSpace, cfg: BootstrapConfig) -> LowRankResult:
    """Low-Schmidt-rank approximation Omega_eps with a certified distance.

    Runs the bootstrap at epsilon/9, re-dominates the halting state, applies
    an AGSP with Delta <= eps/(6 t') and returns the traced, normalized
    conjugated flat state. The epsilon budget split is recorded in the
    audit chain.
    """
    eps = cfg.epsilon
    cut = cfg.cut
    inner_cfg = replace(cfg, epsilon=eps / 9.0)
    boot = bootstrap_run(gs, inner_cfg)
    if boot.anomaly:
        raise BudgetError("bootstrap did not halt; no certified member")
    rho_halt = boot.halting_state
    chain = [
        {
            "stage": "bootstrap(eps/9)",
            "budget": eps / 9.0,
            "measured": trace_norm(rho_halt.mat - gs.omega.mat),
        }
    ]
    res = _imax_policy(rho_halt, cut, cfg, "final")
    t_halt = 2.0**res.value
    sl, sr = res.witness

    disc = discretize_left(
        rho_halt, sl.mat, sr.mat, t_halt, eps, cut, psd_slack=cfg.psd_slack
    )
    chain.append(
        {
            "stage": "discretize",
            "budget": 2.0 * (eps / cut.d_l) ** 2,
            "measured": disc.trace_distance,
        }
    )
    d_b = gs.r * int(np.ceil(cfg.d_b_resolution / gs.r))
    emb = flat_embed(
        disc.rho_tilde,
        tensor(disc.sigma_l_tilde.mat, sr.mat, max_dim=cut.dim),
        eps / 9.0,
        cut=cut,
        d_b=d_b,
        multiple_of=gs.r,
        t_cert=t_halt * disc.exact_inflation,
        tau_factors=(disc.sigma_l_tilde.mat, sr.mat),
    )
    chain.append(
        {"stage": "flat_embed", "budget": eps / 9.0, "measured": emb.distance_a}
    )
    cap_count = d_b // gs.r
    if emb.m_counts.size and int(emb.m_counts.max()) > cap_count:
        raise ContractError("embedded B support exceeds Pi_r")

    agsp = _find_degree_for_delta(
        gs, cut, eps / (6.0 * emb.t_prime), cfg.agsp_max_degree, cfg.truncation_tol
    )
    k_mat = agsp.k_op

    # Omega_eps = Tr_B (K_AB sigma'_AB K_AB^dag), normalized
    kb = k_mat @ emb.b_cols
    capped_counts = np.minimum(emb.c_counts, cap_count).astype(float)
    omega_eps = np.einsum("ij,j,kj->ik", kb, capped_counts, kb.conj(), optimize=True)
    tr_ksk = float(np.real(np.trace(omega_eps))) / emb.tr_p_sigma
    omega_eps = omega_eps / float(np.real(np.trace(omega_eps)))
    omega_eps = DensityOperator((omega_eps + omega_eps.conj().T) / 2.0)
    chain.append(
        {
            "stage": "agsp_delta",
            "budget": eps / 6.0,
            "measured": emb.t_prime * agsp.delta,
        }
    )

    eta = k_mat @ emb.rho_prime_a.mat @ k_mat.conj().T
    eta = (eta + eta.conj().T) / 2.0
    # eta <= (t' Tr(K sigma K^dag)) Omega_eps; delta_sd = that factor - 1
    factor = emb.t_prime * tr_ksk
    delta_sd = max(factor - 1.0, 0.0)
    from .constructions import short_distance_bound

    sd_bound = short_distance_bound(
        SubState(eta), omega_eps, delta_sd, psd_slack=cfg.psd_slack
    )
    chain.append(
        {
            "stage": "short_distance",
            "budget": 2 * eps / 6.0 + (1.0 - float(np.real(np.trace(eta)))),
            "measured": sd_bound,
        }
    )

    distance = trace_norm(gs.omega.mat - omega_eps.mat)
    chain.append({"stage": "total", "budget": eps, "measured": distance})
    if distance > eps + 1e-6:
        raise BudgetError(
            f"low-rank distance {distance:.3e} exceeds epsilon {eps}",
            audit=chain,
        )
    osd = operator_schmidt(omega_eps.mat, cut, cfg.truncation_tol)
    rank_bound = int(agsp.d_rank**2 * (emb.sr_bound or cut.d_l))
    return LowRankResult(
        omega_eps=omega_eps,
        schmidt_rank=osd.rank,
        distance=distance,
        rank_bound=rank_bound,
        certified_factor_chain=tuple(chain),
        bootstrap=boot,
    )


@dataclass(frozen=True)
class Corollary2Result:
    i_omega: float
    smoothed_upper: float
    rhs_chain: float
    epsilon: float
    smoothing_distance: float
    member_trace: float
    bootstrap: BootstrapResult


def corollary2_check(
    gs: GroundSpace, cut: BipartiteCut, cfg: BootstrapConfig | None = None
) -> Corollary2Result:
    """I(Omega) <= smoothed I_max upper bound + (3/2) eps log2(d_L) + 3 at
    eps = 1/|L|, with an explicit sub-normalization correction."""
    n_left = len(cut.sites_l)
    eps = 1.0 / n_left
    if cfg is None:
        cfg = BootstrapConfig(epsilon=eps, cut=cut)
    else:
        cfg = replace(cfg, epsilon=eps, cut=cut)
    boot = bootstrap_run(gs, cfg)
    i_omega = mutual_info(gs.omega, cut)
    member_trace = boot.member.trace
    correction = float(np.log2(1.0 / max(member_trace, 1e-12)))
    rhs = (
        boot.smoothed_bound.value
        + 1.5 * eps * np.log2(cut.d_l)
        + 3.0
        + max(correction, 0.0)
    )
    if i_omega > rhs + 1e-9:
        raise ContractError(
            f"continuity chain violated: I(Omega)={i_omega} > rhs={rhs}"
        )
    return Corollary2Result(
        i_omega=i_omega,
        smoothed_upper=boot.smoothed_bound.value,
        rhs_chain=float(rhs),
        epsilon=eps,
        smoothing_distance=boot.smoothing_distance,
        member_trace=member_trace,
        bootstrap=boot,
    )
