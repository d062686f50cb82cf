"""Executable constructive lemmas: spectral discretization, flat-state
embedding, product-state domination, and distance bounds.

Every operation returns measured certificates (eigenvalue witnesses, exact
multiplicative factors) rather than asymptotic envelopes; the envelopes are
evaluated only as sanity ceilings. The embedding's B register is never
materialized densely: rho'_AB and sigma_AB are kept in block-diagonal
factored form over B levels, where all downstream quantities (traces,
D_max against the flat sigma, partial traces to A) have closed forms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    BipartiteCut,
    DensityOperator,
    MAX_AMBIENT_DIM,
    SUPPORT_CUTOFF,
    SubState,
    cap_eigenvalues,
    eig_hermitian,
    gentle_measure,
    operator_schmidt,
    support_projector,
    tensor,
    trace_norm,
    _mat_of,
)
from .errors import ContractError, ResourceError, ShapeError

#: Largest B-register dimension accepted before asking for a larger delta.
MAX_D_B = 2**40


def _lambda_min(m) -> float:
    from .core import fast_lambda_min

    return fast_lambda_min(m)


def require_psd(m, slack: float, what: str) -> float:
    lam = _lambda_min(m)
    if lam < -slack:
        raise ContractError(
            f"{what}: lambda_min = {lam:.3e} violates PSD within {slack:.1e}",
            lambda_min=lam,
        )
    return lam


# ---------------------------------------------------------------------------
# spectral discretization


@dataclass(frozen=True)
class DiscretizationResult:
    rho_tilde: SubState
    sigma_l_tilde: DensityOperator
    spectrum_count: int
    trace_distance: float
    inflation: float  # the (1+eps) factor certified on the output inequality
    exact_inflation: float  # Tr(sigma'_L) <= 1+eps, the tight factor
    grid: np.ndarray
    n_levels: int
    lambda_min_witness: float


def discretize_left(
    rho,
    sigma_l,
    sigma_r,
    t: float,
    eps: float,
    cut: BipartiteCut,
    psd_slack: float = 1e-9,
) -> DiscretizationResult:
    """Project out the small spectrum of sigma_L and round the rest onto a
    geometric grid, preserving rho <= t(1+eps) sigma~_L (x) sigma_R.

    Threshold and grid base are both eps^4 / d_L^7, so every retained
    eigenvalue is covered by the grid and rounds up by at most (1+eps).
    """
    r = _mat_of(rho)
    sl, sr = _mat_of(sigma_l), _mat_of(sigma_r)
    cut.check(r)
    if not 0.0 < eps < 1.0:
        raise ShapeError(f"eps must be in (0,1), got {eps}")
    if t > cut.d_l**2 * (1 + 1e-9):
        raise ContractError(f"precondition t <= d_L^2 failed: t={t}, d_L={cut.d_l}")
    prod = tensor(sl, sr, max_dim=cut.dim)
    require_psd(t * prod - r, psd_slack * max(1.0, t), "precondition rho <= t sigma")

    base = eps**4 / cut.d_l**7
    w, v = eig_hermitian(sl)
    keep = w > base
    if not np.any(keep):
        raise ContractError("no sigma_L eigenvalue above the grid base")
    cols = v[:, keep]
    pi_l = cols @ cols.conj().T
    if cut.dim <= 1024:
        pi = tensor(pi_l, np.eye(cut.d_r), max_dim=cut.dim)
        rho_tilde, gentle_bound = gentle_measure(SubState(r), pi)
    else:
        # (Pi_L (x) 1) rho (Pi_L (x) 1) by reshaping; the leaked mass only
        # involves the left marginal
        t4 = r.reshape(cut.d_l, cut.d_r, cut.d_l, cut.d_r)
        proj = np.einsum("ik,kalb,lj->iajb", pi_l, t4, pi_l, optimize=True).reshape(r.shape)
        proj = (proj + proj.conj().T) / 2.0
        rho_l_marg = np.einsum("kalb->kl", t4)
        leaked = max(
            0.0,
            float(np.real(np.trace(rho_l_marg) - np.trace(pi_l @ rho_l_marg))),
        )
        rho_tilde = SubState(proj)
        gentle_bound = 2.0 * np.sqrt(leaked)
    dist = trace_norm(rho_tilde.mat - r)

    n_levels = int(np.ceil(np.log(1.0 / base) / np.log1p(eps)))
    while (1.0 + eps) ** n_levels * base < 1.0:
        n_levels += 1
    grid = base * (1.0 + eps) ** np.arange(n_levels + 1)

    kept_w = w[keep]
    idx = np.searchsorted(grid, kept_w, side="left")  # smallest lambda_n >= l_i
    idx = np.clip(idx, 0, n_levels)
    rounded = grid[idx]
    bad = rounded < kept_w
    rounded[bad] = grid[np.minimum(idx[bad] + 1, n_levels)]
    if np.any(rounded < kept_w - 1e-18) or np.any(rounded > (1 + eps) * kept_w):
        raise ContractError("grid rounding failed to stay within (1+eps)")

    sigma_prime = (cols * rounded) @ cols.conj().T
    tr_prime = float(np.sum(rounded))
    sigma_tilde = DensityOperator(sigma_prime / tr_prime)
    spectrum_count = len(np.unique(idx + bad.astype(int)))

    certified = tensor(sigma_tilde.mat, sr, max_dim=cut.dim)
    lam = require_psd(
        t * (1 + eps) * certified - rho_tilde.mat,
        psd_slack * max(1.0, t),
        "output inequality rho~ <= t(1+eps) sigma~",
    )
    require_psd(
        t * tr_prime * certified - rho_tilde.mat,
        psd_slack * max(1.0, t),
        "tight inequality rho~ <= t Tr(sigma') sigma~",
    )
    if dist > 2.0 * (eps / cut.d_l) ** 2 + 1e-9 or dist > gentle_bound + 1e-9:
        raise ContractError(f"discretization trace distance {dist:.3e} too large")
    return DiscretizationResult(
        rho_tilde=rho_tilde,
        sigma_l_tilde=sigma_tilde,
        spectrum_count=spectrum_count,
        trace_distance=dist,
        inflation=1.0 + eps,
        exact_inflation=tr_prime,
        grid=grid,
        n_levels=n_levels,
        lambda_min_witness=lam,
    )


# ---------------------------------------------------------------------------
# flat embedding


@dataclass(frozen=True)
class FlatEmbedding:
    """Flat extension (rho'_AB, sigma_AB) of (rho_A, tau_A), factored over B.

    Branch data: column i of ``a_hat`` spans B levels 1..m_counts[i] in
    rho'_AB; column j of ``b_cols`` spans levels 1..c_counts[j] in sigma_AB.
    Segments group B levels on which the rho'-block is constant.
    """

    d_b: int
    truncation_p: float
    t_for_p: float
    t_prime: float
    dmax_bits: float
    distance_a: float
    rounding_distance: float
    truncation_distance_bound: float
    max_truncated_mass: float
    c_constant: float
    sr_bound: int | None
    lambda_max_rho_prime: float
    rho_prime_a: SubState
    a_hat: np.ndarray
    m_counts: np.ndarray
    b_cols: np.ndarray
    c_counts: np.ndarray
    tr_p_sigma: int
    delta: float
    # product structure across the cut (present when a cut was supplied)
    cut: BipartiteCut | None = field(default=None, compare=False)
    left_group_cols: tuple = field(default=(), compare=False)
    left_spectrum: np.ndarray | None = field(default=None, compare=False)
    right_cols: np.ndarray | None = field(default=None, compare=False)
    right_eigs: np.ndarray | None = field(default=None, compare=False)
    counts_grid: np.ndarray | None = field(default=None, compare=False)

    @property
    def spectrum_count(self) -> int:
        return len(np.unique(self.c_counts))

    def sigma_flat_eigenvalue(self) -> float:
        return 1.0 / self.tr_p_sigma

    def dense_dim(self) -> int:
        return self.a_hat.shape[0] * self.d_b

    def _guard_dense(self):
        if self.dense_dim() > MAX_AMBIENT_DIM:
            raise ResourceError(
                f"dense A(x)B dimension {self.dense_dim()} exceeds "
                f"{MAX_AMBIENT_DIM}; use the factored accessors"
            )

    def rho_tilde_ab_dense(self) -> np.ndarray:
        """Uncapped embedded state sum_i |a^_i><a^_i| (x) Pi[1..m_i] / d_B."""
        self._guard_dense()
        d_a = self.a_hat.shape[0]
        out = np.zeros((d_a * self.d_b, d_a * self.d_b), dtype=complex)
        for i in range(self.a_hat.shape[1]):
            pi_b = np.zeros((self.d_b, self.d_b))
            pi_b[range(self.m_counts[i]), range(self.m_counts[i])] = 1.0
            col = self.a_hat[:, i : i + 1]
            out += np.kron(col @ col.conj().T, pi_b)
        return out / self.d_b

    def rho_prime_ab_dense(self) -> np.ndarray:
        dense = self.rho_tilde_ab_dense()
        return cap_eigenvalues(SubState(dense), 1.0 / self.d_b).mat

    def sigma_ab_dense(self) -> np.ndarray:
        self._guard_dense()
        d_a = self.b_cols.shape[0]
        out = np.zeros((d_a * self.d_b, d_a * self.d_b), dtype=complex)
        for j in range(self.b_cols.shape[1]):
            pi_b = np.zeros((self.d_b, self.d_b))
            pi_b[range(self.c_counts[j]), range(self.c_counts[j])] = 1.0
            col = self.b_cols[:, j : j + 1]
            out += np.kron(col @ col.conj().T, pi_b)
        return out / self.tr_p_sigma

    def mixture_terms(self):
        """sigma_AB as sum_s p_s rho_L^s (x) rho_RB^s across the L:(R,B) cut.

        Yields (p_s, left_cols, right_counts) with left_cols the orthonormal
        columns of the left projector P_s/Tr(P_s) and right_counts[v] the
        B-levels of |v><v| (x) Pi[1..c] inside M_s. Requires the product
        structure.
        """
        if self.counts_grid is None:
            raise ShapeError("mixture decomposition requires a product tau_A")
        for s, cols in enumerate(self.left_group_cols):
            counts = self.counts_grid[s]
            tr_m = int(np.sum(counts))
            p_s = cols.shape[1] * tr_m / self.tr_p_sigma
            yield p_s, cols, counts


def flat_embed(
    rho_a,
    tau_a,
    delta: float,
    cut: BipartiteCut | None = None,
    d_b: int | None = None,
    resolution: int = 2**16,
    multiple_of: int = 1,
    t_cert: float | None = None,
    tau_factors: tuple | None = None,
    cutoff: float = SUPPORT_CUTOFF,
    support_tol: float = 1e-9,
) -> FlatEmbedding:
    """Embed (rho_A, tau_A) into A (x) B with a flat dominating sigma_AB.

    Follows the constructive proof: spectra are rationalized to denominator
    d_B (floor for rho counts, ceil for sigma counts, so support inclusion
    survives rounding), each rho eigenvector is truncated against the small
    tau eigendirections (threshold p = delta^2/(32 t)), and the embedded
    eigenvalues are capped at 1/d_B. All inflation and distance terms are
    measured and recorded.
    """
    from .entropy import dmax  # late import to avoid a cycle

    r = _mat_of(rho_a)
    tau = _mat_of(tau_a)
    if r.shape != tau.shape:
        raise ShapeError(f"shape mismatch {r.shape} vs {tau.shape}")
    if not 0.0 < delta < 0.5:
        raise ShapeError(f"delta must be in (0, 1/2), got {delta}")
    d_a = r.shape[0]

    if d_b is None:
        d_b = int(multiple_of * int(np.ceil(resolution / multiple_of)))
    if multiple_of > 1 and d_b % multiple_of:
        raise ShapeError(f"d_b={d_b} is not a multiple of {multiple_of}")
    if d_b > MAX_D_B:
        raise ResourceError(
            f"d_B={d_b} exceeds {MAX_D_B}; increase delta or shrink the system"
        )

    t_used = float(t_cert) if t_cert is not None else 2.0 ** dmax(
        r, tau, support_tol=support_tol
    )
    if t_used <= 0:
        raise ContractError("nonpositive domination factor")
    p = delta**2 / (32.0 * t_used)

    # product structure of tau across the cut, when available
    sr_bound = None
    left_group_cols: tuple = ()
    left_spectrum = right_cols = right_eigs = counts_grid = None
    if cut is not None:
        cut.check(tau)
        if tau_factors is not None:
            tl, tr_ = _mat_of(tau_factors[0]), _mat_of(tau_factors[1])
        else:
            osd = operator_schmidt(tau, cut, 1e-9)
            if osd.rank != 1:
                raise ContractError(
                    f"tau_A must be a product state across the cut "
                    f"(operator Schmidt rank {osd.rank})"
                )
            tl = osd.weights[0] * osd.lefts[0]
            tr_ = osd.rights[0]
            sc = float(np.real(np.trace(tl)))
            tl, tr_ = tl / sc, tr_ * sc
        lw, lv = eig_hermitian(tl)
        rw, rv = eig_hermitian(tr_)
        lkeep = lw > cutoff * max(float(lw[-1]), 0.0)
        rkeep = rw > cutoff * max(float(rw[-1]), 0.0)
        lw, lv = lw[lkeep], lv[:, lkeep]
        rw, rv = rw[rkeep], rv[:, rkeep]
        # group the left spectrum into numerically-distinct values
        order = np.argsort(lw)[::-1]
        lw, lv = lw[order], lv[:, order]
        groups, spectrum = [], []
        for u in range(len(lw)):
            if spectrum and abs(lw[u] - spectrum[-1]) <= 1e-9 * spectrum[-1]:
                groups[-1].append(u)
            else:
                spectrum.append(float(lw[u]))
                groups.append([u])
        left_group_cols = tuple(lv[:, g] for g in groups)
        left_spectrum = np.array(spectrum)
        right_cols, right_eigs = rv, rw
        sr_bound = len(spectrum)
        # b eigenpairs in (group, v) layout
        b_vals = []
        b_mats = []
        for s, val in enumerate(spectrum):
            for u in range(left_group_cols[s].shape[1]):
                for vdx in range(len(rw)):
                    b_vals.append(val * float(rw[vdx]))
                    b_mats.append((s, u, vdx))
        b_w = np.array(b_vals)
        b_dtype = complex if any(
            np.iscomplexobj(c) for c in (lv, rv)
        ) else float
        b_v = np.zeros((d_a, len(b_vals)), dtype=b_dtype)
        for j, (s, u, vdx) in enumerate(b_mats):
            b_v[:, j] = np.kron(left_group_cols[s][:, u], right_cols[:, vdx])
    else:
        b_w, b_v = eig_hermitian(tau)
        bkeep = b_w > cutoff * max(float(b_w[-1]), 0.0)
        b_w, b_v = b_w[bkeep], b_v[:, bkeep]

    # rho spectral data and support check
    a_w, a_v = eig_hermitian(r)
    akeep = a_w > cutoff * max(float(a_w[-1]), 0.0)
    a_w, a_v = a_w[akeep], a_v[:, akeep]
    coeff = b_v.conj().T @ a_v  # coeff[j, i] = <b_j | a_i>
    col_mass = np.real(np.einsum("ji,ji->i", coeff.conj(), coeff))
    leak = float(np.max(a_w * (1.0 - col_mass))) if len(a_w) else 0.0
    if leak > support_tol:
        raise ContractError(
            f"supp(rho_A) leaks {leak:.3e} outside supp(tau_A)", lambda_min=-leak
        )

    # truncate the small-b components of each |a_i>; Claim-3.3 bound applies
    keep_mask = b_w[:, None] >= p * a_w[None, :]
    dropped_mass = np.real(
        np.einsum("ji,ji->i", (coeff * ~keep_mask).conj(), coeff * ~keep_mask)
    )
    max_truncated = float(np.max(dropped_mass)) if len(a_w) else 0.0
    if max_truncated > t_used * p + support_tol:
        raise ContractError(
            f"truncated mass {max_truncated:.3e} exceeds the t*p bound "
            f"{t_used * p:.3e}"
        )
    trunc_coeff = coeff * keep_mask
    norms = np.sqrt(np.real(np.einsum("ji,ji->i", trunc_coeff.conj(), trunc_coeff)))
    m_counts_all = np.floor(d_b * a_w + 1e-12).astype(np.int64)
    alive = (norms > 1e-12) & (m_counts_all > 0)

    c_counts = np.minimum(np.ceil(d_b * b_w / p - 1e-12), d_b).astype(np.int64)
    c_counts = c_counts.clip(min=0)
    pos = c_counts > 0
    b_cols, c_counts, b_w = b_v[:, pos], c_counts[pos], b_w[pos]
    tr_p_sigma = int(np.sum(c_counts))
    if tr_p_sigma <= 0:
        raise ContractError("sigma_AB has empty support")
    if counts_grid is None and cut is not None:
        # counts in (group, v) layout for the mixture decomposition; the
        # count depends on v and the group value only
        counts_grid = np.zeros((len(left_spectrum), len(right_eigs)), dtype=np.int64)
        for s, val in enumerate(left_spectrum):
            counts_grid[s] = np.minimum(
                np.ceil(d_b * val * right_eigs / p - 1e-12), d_b
            ).astype(np.int64)

    # support inclusion under rounding: kept b_j for branch i must have
    # c_j >= m_i; lower m_i when float rounding breaks the exact-arithmetic
    # argument (a pure trace loss, charged to the rounding distance)
    c_of_b = np.full(len(keep_mask), np.iinfo(np.int64).max, dtype=np.int64)
    c_of_b[pos] = c_counts
    kept_c_floor = np.where(keep_mask, c_of_b[:, None], np.iinfo(np.int64).max)
    min_kept_c = kept_c_floor.min(axis=0)
    adjusted = np.minimum(m_counts_all, min_kept_c)
    alive &= adjusted > 0
    a_hat = b_v @ (trunc_coeff[:, alive] / norms[alive])
    m_counts = adjusted[alive]
    a_w_alive = a_w[alive]
    rounding_distance = float(
        np.sum(np.abs(a_w[alive] - m_counts / d_b)) + np.sum(a_w[~alive])
    )
    trunc_bound = float(2.0 * np.sum(a_w_alive * np.sqrt(dropped_mass[alive])))

    # segment the B levels by the set of active branches
    order = np.argsort(m_counts)[::-1]
    a_hat, m_counts, a_w_alive = a_hat[:, order], m_counts[order], a_w_alive[order]
    distinct = np.unique(m_counts)[::-1]
    lam_max_tilde = 0.0
    rho_prime_a = np.zeros((d_a, d_a), dtype=complex)
    for s, mval in enumerate(distinct):
        active = m_counts >= mval
        mult = int(mval - (distinct[s + 1] if s + 1 < len(distinct) else 0))
        cols = a_hat[:, active]
        gram = cols.conj().T @ cols
        nu, q = np.linalg.eigh(gram)
        nu = nu.clip(min=0.0)
        lam_max_tilde = max(lam_max_tilde, float(nu[-1]) / d_b)
        good = nu > 1e-14
        shrink = np.zeros_like(nu)
        shrink[good] = np.minimum(nu[good], 1.0) / nu[good]
        w_core = (q * shrink) @ q.conj().T
        block = cols @ w_core @ cols.conj().T  # capped block, eigen <= 1
        rho_prime_a += mult * block / d_b
    rho_prime_a = (rho_prime_a + rho_prime_a.conj().T) / 2.0
    rho_prime_a_state = SubState(rho_prime_a)
    distance_a = trace_norm(rho_prime_a - r)

    lam_max = min(lam_max_tilde, 1.0 / d_b)
    t_prime = tr_p_sigma * lam_max
    c_constant = t_prime * delta**2 / t_used
    return FlatEmbedding(
        d_b=d_b,
        truncation_p=p,
        t_for_p=t_used,
        t_prime=t_prime,
        dmax_bits=float(np.log2(t_prime)),
        distance_a=distance_a,
        rounding_distance=rounding_distance,
        truncation_distance_bound=trunc_bound,
        max_truncated_mass=max_truncated,
        c_constant=c_constant,
        sr_bound=sr_bound,
        lambda_max_rho_prime=lam_max,
        rho_prime_a=rho_prime_a_state,
        a_hat=a_hat,
        m_counts=m_counts,
        b_cols=b_cols,
        c_counts=c_counts,
        tr_p_sigma=tr_p_sigma,
        delta=delta,
        cut=cut,
        left_group_cols=left_group_cols,
        left_spectrum=left_spectrum,
        right_cols=right_cols,
        right_eigs=right_eigs,
        counts_grid=counts_grid,
    )


# ---------------------------------------------------------------------------
# product-state domination


@dataclass(frozen=True)
class DominationResult:
    tau_l: DensityOperator
    tau_r: DensityOperator
    factor: float
    exact_factor: float
    lambda_min_witness: float


def _as_state_mat(x) -> np.ndarray:
    m = _mat_of(x)
    return m


def dominate_mixture(terms) -> DominationResult:
    """theta = mean of the factors dominates the mixture by D^2.

    For rho = sum_i p_i rho_L^i (x) rho_R^i with D terms,
    rho <= D^2 theta_L (x) theta_R with theta = (1/D) sum_i rho^i.
    """
    terms = list(terms)
    if not terms:
        raise ContractError("empty mixture")
    d = len(terms)
    probs = np.array([float(p) for p, _, _ in terms])
    if np.any(probs < -1e-12) or probs.sum() > 1.0 + 1e-9:
        raise ContractError("weights must form a sub-probability vector")
    lefts = [_as_state_mat(l) for _, l, _ in terms]
    rights = [_as_state_mat(r) for _, _, r in terms]
    theta_l = sum(lefts) / d
    theta_r = sum(rights) / d
    operand = sum(
        p * tensor(l, r) for p, l, r in zip(probs, lefts, rights)
    )
    factor = float(d * d)
    lam = require_psd(
        factor * tensor(theta_l, theta_r) - operand,
        1e-9,
        "mixture domination",
    )
    return DominationResult(
        tau_l=DensityOperator(theta_l),
        tau_r=DensityOperator(theta_r),
        factor=factor,
        exact_factor=factor,
        lambda_min_witness=lam,
    )


def dominate_conjugated(
    k_op, terms, cut: BipartiteCut, schmidt_tol: float = 1e-9
) -> DominationResult:
    """Bound K rho K^dag / Tr by (D M)^2 tau_L (x) tau_R via the purification
    span construction; D = number of mixture terms, M = SR(K) at the cut.

    ``exact_factor`` carries the measured product of span-projector traces
    (= sum of per-term Schmidt ranks on each side), which is at most (D M)^2.
    """
    terms = list(terms)
    if not terms:
        raise ContractError("empty mixture")
    k_mat = _mat_of(k_op)
    cut.check(k_mat)
    osd = operator_schmidt(k_mat, cut, schmidt_tol)
    m_rank = osd.rank
    d_terms = len(terms)
    xs = osd.weights[:, None, None] * osd.lefts
    ys = osd.rights

    probs = np.array([float(p) for p, _, _ in terms])
    lefts = [_as_state_mat(l) for _, l, _ in terms]
    rights = [_as_state_mat(r) for _, _, r in terms]

    tau_l = np.zeros((cut.d_l, cut.d_l), dtype=complex)
    tau_r = np.zeros((cut.d_r, cut.d_r), dtype=complex)
    rank_l_total = 0
    rank_r_total = 0
    for rho_l, rho_r in zip(lefts, rights):
        wl, vl = eig_hermitian(rho_l)
        root_l = (vl * np.sqrt(wl.clip(min=0.0))) @ vl.conj().T
        wr, vr = eig_hermitian(rho_r)
        root_r = (vr * np.sqrt(wr.clip(min=0.0))) @ vr.conj().T
        mats_l = np.stack([x @ root_l for x in xs])  # (M, d_l, d_l)
        mats_r = np.stack([y @ root_r for y in ys])
        gl = np.einsum("aij,bij->ab", mats_l.conj(), mats_l)
        gr = np.einsum("aij,bij->ab", mats_r.conj(), mats_r)
        wl_g, ql = np.linalg.eigh(gl)
        wr_g, qr = np.linalg.eigh(gr)
        kl = wl_g > 1e-14 * max(float(wl_g[-1]), 1e-300)
        kr = wr_g > 1e-14 * max(float(wr_g[-1]), 1e-300)
        bl = (np.sqrt(wl_g[kl])[:, None]) * ql[:, kl].conj().T  # (kl, M)
        br = (np.sqrt(wr_g[kr])[:, None]) * qr[:, kr].conj().T
        coupling = bl @ br.T  # bilinear pairing over the term index
        uu, ss, vv = np.linalg.svd(coupling)
        rank_s = int(np.sum(ss > schmidt_tol * max(float(ss[0]), 1e-300)))
        if rank_s == 0:
            continue
        # orthonormal basis mats of the two spans
        base_l = np.einsum("aij,ak->kij", mats_l, ql[:, kl] / np.sqrt(wl_g[kl]))
        base_r = np.einsum("aij,ak->kij", mats_r, qr[:, kr] / np.sqrt(wr_g[kr]))
        phi_l = np.einsum("kij,kr->rij", base_l, uu[:, :rank_s])
        phi_r = np.einsum("kij,kr->rij", base_r, vv.T[:, :rank_s])
        tau_l += np.einsum("rij,rkj->ik", phi_l, phi_l.conj())
        tau_r += np.einsum("rij,rkj->ik", phi_r, phi_r.conj())
        rank_l_total += rank_s
        rank_r_total += rank_s

    if rank_l_total == 0:
        raise ContractError("conjugated mixture vanished")
    tau_l = DensityOperator(tau_l / rank_l_total)
    tau_r = DensityOperator(tau_r / rank_r_total)
    factor = float((d_terms * m_rank) ** 2)
    exact_factor = float(rank_l_total * rank_r_total)

    operand = sum(
        p * tensor(l, r) for p, l, r in zip(probs, lefts, rights)
    )
    conj = k_mat @ operand @ k_mat.conj().T
    tr_conj = float(np.real(np.trace(conj)))
    if tr_conj <= 0:
        raise ContractError("conjugated mixture has nonpositive trace")
    normalized = conj / tr_conj
    prod = tensor(tau_l.mat, tau_r.mat)
    lam = require_psd(
        exact_factor * prod - normalized, 1e-9, "conjugated domination (exact)"
    )
    require_psd(factor * prod - normalized, 1e-9, "conjugated domination")
    return DominationResult(
        tau_l=tau_l,
        tau_r=tau_r,
        factor=factor,
        exact_factor=exact_factor,
        lambda_min_witness=lam,
    )


def dominate_vec(m_op, cut: BipartiteCut, schmidt_tol: float = 1e-9) -> DominationResult:
    """M M^dag <= D^2 tau_L (x) tau_R from the Schmidt spans of vec(M).

    Requires ||M||_2 = 1; implies I_max(M M^dag) <= 2 log2 D.
    """
    m = _mat_of(m_op)
    cut.check(m)
    nrm = float(np.linalg.norm(m))
    if abs(nrm - 1.0) > 1e-9:
        raise ContractError(f"||M||_2 = {nrm} is not 1 within 1e-9")
    osd = operator_schmidt(m, cut, schmidt_tol)
    d = osd.rank
    tau_l = np.einsum("kij,klj->il", osd.lefts, osd.lefts.conj()) / d
    tau_r = np.einsum("kij,klj->il", osd.rights, osd.rights.conj()) / d
    factor = float(d * d)
    lam = require_psd(
        factor * tensor(tau_l, tau_r) - m @ m.conj().T,
        1e-9,
        "vec domination",
    )
    return DominationResult(
        tau_l=DensityOperator(tau_l),
        tau_r=DensityOperator(tau_r),
        factor=factor,
        exact_factor=factor,
        lambda_min_witness=lam,
    )


def short_distance_bound(rho, sigma, delta: float, psd_slack: float = 1e-9) -> float:
    """From rho <= (1+delta) sigma: ||rho - sigma||_1 <= 2 delta + (1 - Tr rho)."""
    r, s = _mat_of(rho), _mat_of(sigma)
    require_psd(
        (1.0 + delta) * s - r, psd_slack, "precondition rho <= (1+delta) sigma"
    )
    return 2.0 * delta + max(0.0, 1.0 - float(np.real(np.trace(r))))
