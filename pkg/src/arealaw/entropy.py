"""One-shot and von Neumann entropy measures, in bits.

The max-mutual-information upper bounds returned here are always
witness-certified: every reported value ``v`` comes with a product pair
``(sigma_L, sigma_R)`` for which ``2^v * sigma_L (x) sigma_R - rho`` has been
eigen-checked PSD within 1e-9. The see-saw refinement can only tighten a
closed-form witness pool, so reported values are sound upper bounds
irrespective of optimizer convergence.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .core import (
    BipartiteCut,
    DensityOperator,
    SubState,
    SUPPORT_CUTOFF,
    eig_hermitian,
    operator_schmidt,
    partial_trace,
    support_projector,
    tensor,
    trace_norm,
    _mat_of,
)
from .errors import ShapeError, SupportError, UnsupportedDimension

_PAULI = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)

_PAULI_KRON = np.array(
    [np.kron(_PAULI[m], _PAULI[n]) for m in range(4) for n in range(4)]
)


@dataclass(frozen=True)
class MeasureResult:
    """Outcome of a measure evaluation, with optional certifying witness."""

    value: float  # bits
    witness: tuple | None = None  # (sigma_L, sigma_R) DensityOperators
    method: str = "closed_form"  # closed_form | seesaw | bruteforce
    converged: bool = True
    iterations: int = 0
    distance_to_center: float | None = field(default=None)

    def to_json_dict(self) -> dict:
        out = {
            "value_bits": self.value,
            "method": self.method,
            "converged": self.converged,
            "iterations": self.iterations,
            "witness_present": self.witness is not None,
        }
        if self.distance_to_center is not None:
            out["distance_to_center"] = self.distance_to_center
        return out


@dataclass(frozen=True)
class SmoothingBall:
    """A sub-state ``member`` inside the trace-norm ball around ``center``."""

    center: SubState
    radius: float
    member: SubState

    def __post_init__(self):
        if not 0.0 < self.radius <= 1.0:
            raise ShapeError(f"smoothing radius must be in (0,1], got {self.radius}")
        dist = trace_norm(self.member.mat - self.center.mat)
        if dist > self.radius + 1e-9:
            raise ShapeError(
                f"member at trace distance {dist:.3e} lies outside the "
                f"radius-{self.radius} ball"
            )

    @property
    def distance(self) -> float:
        return trace_norm(self.member.mat - self.center.mat)


def _sqrtm_psd(m) -> np.ndarray:
    w, v = eig_hermitian(m)
    return (v * np.sqrt(w.clip(min=0.0))) @ v.conj().T


def _support_leak(rho_mat, sigma_w, sigma_v, cutoff):
    """Mass of rho outside the support of sigma, plus the kept index mask."""
    top = float(sigma_w[-1])
    keep = sigma_w > cutoff * max(top, 0.0)
    cols = sigma_v[:, keep]
    inside = float(np.real(np.einsum("ij,ji->", cols.conj().T @ rho_mat, cols)))
    total = float(np.real(np.trace(rho_mat)))
    return max(0.0, total - inside), keep


def von_neumann_entropy(rho, cutoff: float = SUPPORT_CUTOFF) -> float:
    """-sum lambda_i log2 lambda_i over the spectrum above the cutoff.

    Sub-states are evaluated on their unnormalized spectrum.
    """
    w = np.linalg.eigvalsh(_mat_of(rho))
    top = float(w[-1])
    if top <= 0.0:
        return 0.0
    w = w[w > cutoff * top]
    return float(-np.sum(w * np.log2(w)))


def rel_entropy(
    rho, sigma, cutoff: float = SUPPORT_CUTOFF, support_tol: float = 1e-9
) -> float:
    """Tr(rho log2 rho) - Tr(rho log2 sigma) on the support of sigma."""
    r, s = _mat_of(rho), _mat_of(sigma)
    if r.shape != s.shape:
        raise ShapeError(f"shape mismatch {r.shape} vs {s.shape}")
    sw, sv = eig_hermitian(s)
    leak, keep = _support_leak(r, sw, sv, cutoff)
    if leak > support_tol:
        raise SupportError(
            f"supp(rho) leaks {leak:.3e} outside supp(sigma)", leaked_mass=leak
        )
    rw = np.linalg.eigvalsh(r)
    rw = rw[rw > cutoff * max(float(rw[-1]), 0.0)]
    plogp = float(np.sum(rw * np.log2(rw)))
    cols = sv[:, keep]
    diag = np.real(np.einsum("ji,jk,ki->i", cols.conj(), r, cols, optimize=True))
    cross = float(np.sum(diag * np.log2(sw[keep])))
    return plogp - cross


def dmax(
    rho, sigma, cutoff: float = SUPPORT_CUTOFF, support_tol: float = 1e-9
) -> float:
    """Max relative entropy log2 lambda_max(sigma^-1/2 rho sigma^-1/2)."""
    r, s = _mat_of(rho), _mat_of(sigma)
    if r.shape != s.shape:
        raise ShapeError(f"shape mismatch {r.shape} vs {s.shape}")
    sw, sv = eig_hermitian(s)
    leak, keep = _support_leak(r, sw, sv, cutoff)
    if leak > support_tol:
        raise SupportError(
            f"supp(rho) leaks {leak:.3e} outside supp(sigma); D_max = +inf",
            leaked_mass=leak,
        )
    cols = sv[:, keep]
    isqrt = cols / np.sqrt(sw[keep])
    x = isqrt.conj().T @ r @ isqrt
    lam = float(np.linalg.eigvalsh(x)[-1])
    if lam <= 0.0:
        return float("-inf")
    return float(np.log2(lam))


def dmin(rho, sigma, cutoff: float = SUPPORT_CUTOFF) -> float:
    """Min relative entropy -log2 Tr(Pi_rho sigma)."""
    p = support_projector(rho, cutoff)
    val = float(np.real(np.trace(p @ _mat_of(sigma))))
    if val <= 0.0:
        raise SupportError("Tr(Pi_rho sigma) = 0; D_min = +inf", leaked_mass=1.0)
    return float(-np.log2(val))


def mutual_info(rho, cut: BipartiteCut, cutoff: float = SUPPORT_CUTOFF) -> float:
    """S(rho_L) + S(rho_R) - S(rho_LR), in bits."""
    m = _mat_of(rho)
    cut.check(m)
    s_l = von_neumann_entropy(partial_trace(m, cut, "L"), cutoff)
    s_r = von_neumann_entropy(partial_trace(m, cut, "R"), cutoff)
    val = s_l + s_r - von_neumann_entropy(m, cutoff)
    if -1e-9 < val < 0.0:
        val = 0.0
    return float(val)


def continuity_gap(rho, sigma, cut: BipartiteCut) -> tuple[float, float]:
    """(lhs, rhs) of |I(rho)-I(sigma)| <= 1.5 log2(d_L) ||rho-sigma||_1 + 3."""
    lhs = abs(mutual_info(rho, cut) - mutual_info(sigma, cut))
    rhs = 1.5 * np.log2(cut.d_l) * trace_norm(_mat_of(rho) - _mat_of(sigma)) + 3.0
    return float(lhs), float(rhs)


# ---------------------------------------------------------------------------
# certified witnesses for I_max


def certified_dmax_bits(rho, sigma_l, sigma_r, slack: float = 1e-9) -> float:
    """log2 of the smallest verified t with rho <= t sigma_L (x) sigma_R.

    The exponent is eigen-checked, lambda_min(t*sigma - rho) >= -slack,
    inflating t in machine-size steps if the pseudo-inverse route
    undershoots. Above the dense cutoff everything runs matrix-free on the
    Kronecker factors.
    """
    from .core import (
        fast_lambda_max_operator,
        fast_lambda_min_operator,
        kron_apply,
        SUPPORT_CUTOFF as _CUT,
    )

    r = _mat_of(rho)
    sl, sr = _mat_of(sigma_l), _mat_of(sigma_r)
    dim = r.shape[0]
    if dim <= 256:
        prod = tensor(sl, sr, max_dim=dim)
        bits = dmax(r, prod)
        if bits == float("-inf"):
            return bits
        t = 2.0**bits
        for _ in range(60):
            if float(np.linalg.eigvalsh(t * prod - r)[0]) >= -slack:
                return float(np.log2(t))
            t *= 1.0 + 2e-12
        raise SupportError("could not certify the witness inequality")

    from .core import effectively_real

    if all(effectively_real(x) for x in (r, sl, sr)):
        r = np.ascontiguousarray(r.real) if np.iscomplexobj(r) else r
        sl = np.ascontiguousarray(sl.real) if np.iscomplexobj(sl) else sl
        sr = np.ascontiguousarray(sr.real) if np.iscomplexobj(sr) else sr
    lw, lv = eig_hermitian(sl)
    rw, rv = eig_hermitian(sr)
    lkeep = lw > _CUT * max(float(lw[-1]), 0.0)
    rkeep = rw > _CUT * max(float(rw[-1]), 0.0)
    pil = lv[:, lkeep] @ lv[:, lkeep].conj().T
    pir = rv[:, rkeep] @ rv[:, rkeep].conj().T
    t4 = r.reshape(pil.shape[0], pir.shape[0], pil.shape[0], pir.shape[0])
    half = np.einsum("ji,iajb->ab", pil, t4)
    inside = float(np.real(np.einsum("ab,ba->", pir, half)))
    leak = float(np.real(np.trace(r))) - inside
    if leak > 1e-9:
        raise SupportError(
            f"supp(rho) leaks {leak:.3e} outside the product support",
            leaked_mass=leak,
        )
    isl = (lv[:, lkeep] / np.sqrt(lw[lkeep])) @ lv[:, lkeep].conj().T
    isr = (rv[:, rkeep] / np.sqrt(rw[rkeep])) @ rv[:, rkeep].conj().T
    dtype = complex if any(np.iscomplexobj(x) for x in (r, sl, sr)) else float

    def x_mv(v):
        w = kron_apply(isl, isr, v)
        w = r @ w
        return kron_apply(isl, isr, w)

    lam = fast_lambda_max_operator(x_mv, dim, dtype=dtype)
    if lam <= 0.0:
        return float("-inf")
    t = lam

    def wit_mv_factory(tval):
        def mv(v):
            return tval * kron_apply(sl, sr, v) - r @ v

        return mv

    for _ in range(60):
        if fast_lambda_min_operator(wit_mv_factory(t), dim, dtype=dtype) >= -slack:
            return float(np.log2(t))
        t *= 1.0 + 2e-12
    raise SupportError("could not certify the witness inequality")


def _normalized_marginals(rho_mat, cut):
    rl = partial_trace(rho_mat, cut, "L")
    rr = partial_trace(rho_mat, cut, "R")
    tl, tr = np.real(np.trace(rl)), np.real(np.trace(rr))
    if tl <= 0 or tr <= 0:
        raise ShapeError("cannot normalize marginals of a zero state")
    return rl / tl, rr / tr


def sqrt_schmidt_witness(rho, cut: BipartiteCut, tol: float = 1e-9):
    """Product dominator built from the Schmidt factors of sqrt(rho).

    For M = sqrt(rho)/||sqrt(rho)||_2 with operator Schmidt rank D,
    M M^dag <= D^2 tau_L (x) tau_R, so rho <= Tr(rho) D^2 tau_L (x) tau_R.
    Returns (tau_L, tau_R, D).
    """
    r = _mat_of(rho)
    root = _sqrtm_psd(r)
    nrm = np.linalg.norm(root)
    osd = operator_schmidt(root / nrm, cut, tol)
    tau_l = np.einsum("kij,klj->il", osd.lefts, osd.lefts.conj())
    tau_r = np.einsum("kij,klj->il", osd.rights, osd.rights.conj())
    tau_l /= float(np.real(np.trace(tau_l)))
    tau_r /= float(np.real(np.trace(tau_r)))
    return DensityOperator(tau_l), DensityOperator(tau_r), osd.rank


def imax_witness_pool(rho, cut: BipartiteCut, include_schmidt: bool = True):
    """Closed-form certified witness candidates (pairs of density operators).

    Always contains (rho_L, 1/d_R) and (1/d_L, rho_R), which certify the
    dimension bound I_max <= 2 log2 min(d_L, d_R).
    """
    r = _mat_of(rho)
    cut.check(r)
    rl, rr = _normalized_marginals(r, cut)
    unif_l = np.eye(cut.d_l) / cut.d_l
    unif_r = np.eye(cut.d_r) / cut.d_r
    pool = [
        (DensityOperator(rl), DensityOperator(unif_r)),
        (DensityOperator(unif_l), DensityOperator(rr)),
        (DensityOperator(rl), DensityOperator(rr)),
        (DensityOperator(unif_l), DensityOperator(unif_r)),
    ]
    if include_schmidt:
        tl, tr, _ = sqrt_schmidt_witness(r, cut)
        pool.append((tl, tr))
    return pool


def _best_certified(rho_mat, pairs):
    best_val, best_pair = np.inf, None
    for sl, sr in pairs:
        try:
            val = certified_dmax_bits(rho_mat, sl.mat, sr.mat)
        except SupportError:
            continue
        if val < best_val:
            best_val, best_pair = val, (sl, sr)
    return best_val, best_pair


def imax_closed_form(
    rho, cut: BipartiteCut, include_schmidt: bool = True
) -> MeasureResult:
    """Best certified witness from the closed-form pool alone (no see-saw).

    Cheap enough for large ambient dimensions; the sqrt-Schmidt dominator
    keeps the value dimension-free for flat, low-Schmidt-rank states."""
    r = _mat_of(rho)
    cut.check(r)
    pool = imax_witness_pool(r, cut, include_schmidt=include_schmidt)
    val, pair = _best_certified(r, pool)
    return MeasureResult(
        value=float(val),
        witness=pair,
        method="closed_form",
        converged=True,
        iterations=0,
    )


# ---------------------------------------------------------------------------
# see-saw optimizer


def _specnorm_herm(m):
    if m.shape[0] == 2:
        # |a +- sqrt(...)| closed form for 2x2 Hermitian
        half_tr = 0.5 * float(np.real(m[0, 0] + m[1, 1]))
        det = float(np.real(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]))
        disc = np.sqrt(max(half_tr * half_tr - det, 0.0))
        return max(abs(half_tr + disc), abs(half_tr - disc))
    return float(np.abs(np.linalg.eigvalsh(m)).max())


def _exp_density(h):
    """exp(H)/Tr(exp(H)) for Hermitian H (closed form at dim 2)."""
    if h.shape[0] == 2:
        a = 0.5 * (h[0, 0] + h[1, 1])
        b = h - np.real(a) * np.eye(2)
        r = np.sqrt(max(float(np.real(b[0, 1] * b[1, 0] - b[0, 0] * b[1, 1])), 0.0))
        if r < 1e-300:
            out = np.eye(2) + b
        else:
            out = np.cosh(r) * np.eye(2) + (np.sinh(r) / r) * b
        return out / np.real(np.trace(out))
    w, v = np.linalg.eigh(h)
    w = w - w.max()
    out = (v * np.exp(w)) @ v.conj().T
    return out / np.real(np.trace(out))


def _feasible_sigma_left(rho_mat, sigma_r_sqrt, sigma_r, t, start, iters, d_l):
    """Mirror ascent of sigma_L |-> lambda_min(t sigma_L (x) sigma_R - rho).

    Returns (feasible, sigma_L); feasible only when an iterate reaches
    lambda_min >= 0, in which case that iterate is a true witness.
    Exits early on an averaged dual certificate: for the running mean Z of
    the minimizing eigenprojectors, max_sigma lambda_min(...) is at most
    lambda_max(mean grad) - Tr(Z rho), so a negative value settles the query.
    """
    d_r = sigma_r.shape[0]
    w0, v0 = eig_hermitian(start + 1e-9 * np.eye(d_l))
    logpot = (v0 * np.log(w0.clip(min=1e-300))) @ v0.conj().T
    sigma = start
    best_val, best_sigma = -np.inf, start
    grad_sum = np.zeros((d_l, d_l), dtype=complex)
    overlap_sum = 0.0
    mix = 1e-10  # keeps returned witnesses full rank; costs <= mix in lambda_min
    eye = np.eye(d_l) / d_l
    for k in range(1, iters + 1):
        a = t * np.kron(sigma, sigma_r) - rho_mat
        w, v = np.linalg.eigh(a)
        lam = float(w[0])
        if lam >= 0.0:
            return True, (1.0 - mix) * sigma + mix * eye
        if lam > best_val:
            best_val, best_sigma = lam, sigma
        vm = v[:, 0].reshape(d_l, d_r)
        wm = vm @ sigma_r_sqrt.T
        grad = t * (wm @ wm.conj().T)
        grad_sum += grad
        overlap_sum += float(np.real(np.vdot(v[:, 0], rho_mat @ v[:, 0])))
        if k % 4 == 0:
            dual_ub = float(np.linalg.eigvalsh(grad_sum)[-1] - overlap_sum) / k
            if dual_ub < 0.0:
                return False, best_sigma
        gnorm = _specnorm_herm(grad)
        if gnorm <= 0.0:
            break
        logpot = logpot + (1.0 / (gnorm * np.sqrt(k))) * grad
        logpot = (logpot + logpot.conj().T) / 2.0
        sigma = _exp_density(logpot)
    return False, best_sigma


def _inner_min_left(rho_mat, sigma_l, sigma_r, cut, iters, gap):
    """Bisection on t with the mirror-ascent feasibility oracle.

    Returns (bits, sigma_L): the best certified left factor at fixed sigma_R.
    """
    d_l = cut.d_l
    rw, rv = eig_hermitian(sigma_r)
    keep = rw > 1e-14 * max(float(rw[-1]), 0.0)
    sqrt_r = (rv[:, keep] * np.sqrt(rw[keep])) @ rv[:, keep].conj().T
    bits_hi = certified_dmax_bits(rho_mat, sigma_l, sigma_r)
    t_hi, best_sigma = 2.0**bits_hi, sigma_l
    # sigma_L-free necessary bound: rho <= t sL (x) sR  =>
    # Tr_L[(1 (x) sR^-1/2) rho (1 (x) sR^-1/2)] <= t 1_R
    isq = (rv[:, keep] / np.sqrt(rw[keep])) @ rv[:, keep].conj().T
    big = np.kron(np.eye(d_l), isq)
    rt = big @ rho_mat @ big
    t_lo = max(
        float(np.real(np.trace(rho_mat))),
        float(np.linalg.eigvalsh(partial_trace(rt, cut, "R"))[-1]),
    )
    t_lo = min(t_lo, t_hi)
    sigma = sigma_l
    while t_hi - t_lo > gap * max(1.0, t_hi):
        t_mid = 0.5 * (t_hi + t_lo)
        ok, sigma_cand = _feasible_sigma_left(
            rho_mat, sqrt_r, sigma_r, t_mid, sigma, iters, d_l
        )
        if ok:
            try:
                bits_c = certified_dmax_bits(rho_mat, sigma_cand, sigma_r)
                t_hi = min(t_mid, 2.0**bits_c)
            except SupportError:
                t_hi = t_mid  # feasibility itself was eigen-verified
            best_sigma, sigma = sigma_cand, sigma_cand
        else:
            t_lo = t_mid
            sigma = sigma_cand
    return float(np.log2(t_hi)), best_sigma


def _swap_sides(m, cut):
    t = m.reshape(cut.d_l, cut.d_r, cut.d_l, cut.d_r)
    return (
        np.ascontiguousarray(t.transpose(1, 0, 3, 2)).reshape(m.shape),
        BipartiteCut(cut.d_r, cut.d_l),
    )


def imax_seesaw(
    rho,
    cut: BipartiteCut,
    restarts: int = 8,
    outer_tol: float = 1e-7,
    inner_iters: int = 500,
    seed: int = 0,
    bisection_gap: float = 1e-9,
    max_outer: int = 10,
) -> MeasureResult:
    """Witness-certified upper bound on the max mutual information.

    Evaluates the closed-form witness pool, then runs alternating
    left/right bisection refinements from ``restarts`` seeded starting
    pairs (marginals, maximally mixed, random full-rank) and keeps the
    best certified value. ``restarts=0`` skips the see-saw entirely.
    """
    r = _mat_of(rho)
    cut.check(r)
    rng = np.random.default_rng(seed)
    pool = imax_witness_pool(r, cut)
    best_val, best_pair = _best_certified(r, pool)
    method = "closed_form"
    iterations = 0
    converged = True

    if restarts > 0:
        rl, rr = _normalized_marginals(r, cut)
        mix = 1e-3
        starts = [
            (
                (1 - mix) * rl + mix * np.eye(cut.d_l) / cut.d_l,
                (1 - mix) * rr + mix * np.eye(cut.d_r) / cut.d_r,
            ),
            (np.eye(cut.d_l) / cut.d_l, np.eye(cut.d_r) / cut.d_r),
        ]
        while len(starts) < restarts:
            gl = rng.standard_normal((cut.d_l, cut.d_l)) + 1j * rng.standard_normal(
                (cut.d_l, cut.d_l)
            )
            gr = rng.standard_normal((cut.d_r, cut.d_r)) + 1j * rng.standard_normal(
                (cut.d_r, cut.d_r)
            )
            sl = gl @ gl.conj().T + 1e-3 * np.eye(cut.d_l)
            sr = gr @ gr.conj().T + 1e-3 * np.eye(cut.d_r)
            starts.append((sl / np.real(np.trace(sl)), sr / np.real(np.trace(sr))))
        starts = starts[:restarts]

        r_swap, cut_swap = _swap_sides(r, cut)
        for sl, sr in starts:
            val = certified_dmax_bits(r, sl, sr)
            local_converged = False
            for outer in range(max_outer):
                iterations += 1
                # inexact alternation: coarse bisection early, tight late
                gap = max(bisection_gap, 0.05 / 8.0**outer)
                _, sl = _inner_min_left(r, sl, sr, cut, inner_iters, gap)
                new_val, sr = _inner_min_left(
                    r_swap, sr, sl, cut_swap, inner_iters, gap
                )
                if (
                    gap <= bisection_gap * 8
                    and abs(val - new_val) < outer_tol * max(1.0, abs(new_val))
                ):
                    val = new_val
                    local_converged = True
                    break
                val = new_val
                if outer >= 1 and val > best_val + 0.15:
                    break  # hopeless restart; a better basin already found
            if val < best_val:
                best_val = val
                best_pair = (DensityOperator(sl), DensityOperator(sr))
                method = "seesaw"
                converged = local_converged

    return MeasureResult(
        value=float(best_val),
        witness=best_pair,
        method=method,
        converged=converged,
        iterations=iterations,
    )


def smoothed_imax_member(
    ball: SmoothingBall, cut: BipartiteCut, **opts
) -> MeasureResult:
    """I_max upper bound evaluated at the ball member; upper-bounds the
    smoothed measure of the ball center by definition."""
    res = imax_seesaw(ball.member, cut, **opts)
    return replace(res, distance_to_center=ball.distance)


# ---------------------------------------------------------------------------
# two-qubit brute-force oracle


def _bloch_states(coords):
    n = coords.shape[0]
    out = np.broadcast_to(_PAULI[0], (n, 2, 2)).copy()
    out += np.einsum("nk,kij->nij", coords, _PAULI[1:])
    return out / 2.0


def _pair_lambda_max(c_root, inv_l, inv_r):
    """Batched lambda_max of rho^1/2 (A (x) B) rho^1/2 over paired inverses."""
    kr = np.einsum("nij,nkl->nikjl", inv_l, inv_r).reshape(-1, 4, 4)
    x = c_root[None] @ kr @ c_root[None]
    x = (x + np.conjugate(np.transpose(x, (0, 2, 1)))) / 2.0
    return np.linalg.eigvalsh(x)[:, -1]


def _marginal_dmax_floor(rho_side_root, coords, n2):
    """2^{D_max(rho_side || sigma(r))} for every interior grid point (2x2)."""
    parts = np.einsum("ij,kjl,lm->kim", rho_side_root, _PAULI, rho_side_root)
    scale = 2.0 / (1.0 - n2)
    x = (parts[0][None] - np.einsum("nk,kij->nij", coords, parts[1:])) * scale[
        :, None, None
    ]
    tr = np.real(x[:, 0, 0] + x[:, 1, 1])
    det = np.real(x[:, 0, 0] * x[:, 1, 1] - x[:, 0, 1] * x[:, 1, 0])
    disc = np.sqrt(np.maximum(tr * tr / 4.0 - det, 0.0))
    return tr / 2.0 + disc


def _bilinear_tensor(weight_mat):
    """4x4 real table T[m,n] = Tr[(P_m (x) P_n) W] for Hermitian W."""
    return np.real(
        np.einsum("kij,ji->k", _PAULI_KRON, weight_mat).reshape(4, 4)
    )


def imax_bruteforce(rho, cut: BipartiteCut, resolution: int) -> MeasureResult:
    """Exact minimum of D_max(rho || sigma_L (x) sigma_R) over the product of
    two Bloch grids (``resolution`` points per axis, intersected with the
    closed unit ball). Restricted to two qubits.

    Pruning uses only certified lower bounds on the pair objective (marginal
    D_max floors, probe Rayleigh quotients, Tr/4), so the returned value is
    the true grid minimum.
    """
    if cut.d_l != 2 or cut.d_r != 2:
        raise UnsupportedDimension("brute-force oracle supports 2x2 cuts only")
    if resolution < 3:
        raise ShapeError("resolution must be at least 3")
    r = _mat_of(rho)
    cut.check(r)
    tr_rho = float(np.real(np.trace(r)))

    axis = np.linspace(-1.0, 1.0, resolution)
    gx, gy, gz = np.meshgrid(axis, axis, axis, indexing="ij")
    pts = np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1)
    n2_all = np.einsum("nk,nk->n", pts, pts)
    pts = pts[n2_all <= 1.0 + 1e-12]
    n2_all = np.einsum("nk,nk->n", pts, pts)
    interior = pts[n2_all < 1.0 - 1e-9]
    boundary = pts[n2_all >= 1.0 - 1e-9]
    n2 = np.einsum("nk,nk->n", interior, interior)
    n_int = len(interior)

    c_root = _sqrtm_psd(r)
    rho_w = np.linalg.eigvalsh(r)
    full_rank = rho_w[0] > 1e-12 * max(rho_w[-1], 0.0)

    # interior inverses: sigma(r)^-1 = 2 (1 - r.P) / (1-|r|^2)
    scale = 2.0 / (1.0 - n2)
    a_coords = np.concatenate([scale[:, None], -interior * scale[:, None]], axis=1)
    inv_states = _bloch_states(-interior) * (2.0 * scale)[:, None, None]

    rl = partial_trace(r, cut, "L")
    rr = partial_trace(r, cut, "R")
    floor_l = _marginal_dmax_floor(_sqrtm_psd(rl), interior, n2)
    floor_r = _marginal_dmax_floor(_sqrtm_psd(rr), interior, n2)

    evaluated = 0
    t_best = np.inf
    best_interior = None
    best_boundary = None

    def _consider(idx_l, idx_r):
        nonlocal t_best, best_interior, best_boundary, evaluated
        if len(idx_l) == 0:
            return
        vals = _pair_lambda_max(c_root, inv_states[idx_l], inv_states[idx_r])
        evaluated += len(vals)
        k = int(np.argmin(vals))
        if vals[k] < t_best:
            t_best = float(vals[k])
            best_interior = (interior[idx_l[k]], interior[idx_r[k]])
            best_boundary = None

    # stage 1: coarse sweep seeds t_best and the probe directions
    stride = max(1, int(np.ceil(n_int / 400.0)))
    coarse = np.arange(0, n_int, stride)
    cl = np.repeat(coarse, len(coarse))
    cr = np.tile(coarse, len(coarse))
    wave = 250_000
    for s in range(0, len(cl), wave):
        _consider(cl[s : s + wave], cr[s : s + wave])

    probes = []
    if best_interior is not None:
        for shift in ([0.0, 0, 0], [1e-3, 0, 0], [0, 1e-3, 0], [0, 0, 1e-3]):
            pl = best_interior[0] + np.asarray(shift)
            pr = best_interior[1]
            if pl @ pl < 1.0 - 1e-6:
                al = _bloch_states(-pl[None])[0] * (4.0 / (1.0 - pl @ pl))
                ar = _bloch_states(-pr[None])[0] * (4.0 / (1.0 - pr @ pr))
                x = c_root @ np.kron(al, ar) @ c_root
                _, v = np.linalg.eigh((x + x.conj().T) / 2.0)
                probes.append(v[:, -1])
    rng = np.random.default_rng(7)
    while len(probes) < 6:
        g = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        probes.append(g / np.linalg.norm(g))
    probe_t = [
        _bilinear_tensor(c_root @ np.outer(v, v.conj()) @ c_root) for v in probes
    ]
    trace_t = _bilinear_tensor(r)

    # stage 2: full pruned sweep (certified lower bounds only)
    order_l = np.argsort(floor_l)
    keep_r = np.flatnonzero(floor_r <= t_best * (1 + 1e-10))
    fb = a_coords[keep_r].T
    row_chunk = max(1, int(2**22 // max(len(keep_r), 1)))
    for s in range(0, n_int, row_chunk):
        rows = order_l[s : s + row_chunk]
        rows = rows[floor_l[rows] <= t_best * (1 + 1e-10)]
        if len(rows) == 0:
            continue
        fa = a_coords[rows]
        lb = np.maximum(floor_l[rows][:, None], floor_r[keep_r][None, :])
        for tmat in probe_t:
            np.maximum(lb, (fa @ tmat) @ fb, out=lb)
        np.maximum(lb, ((fa @ trace_t) @ fb) / 4.0, out=lb)
        sm, sn = np.nonzero(lb <= t_best * (1 + 1e-10))
        if len(sm) == 0:
            continue
        il = rows[sm]
        ir = keep_r[sn]
        for w0 in range(0, len(il), wave):
            _consider(il[w0 : w0 + wave], ir[w0 : w0 + wave])

    # boundary (pure-direction) sigmas are feasible only for rank-deficient rho
    if not full_rank and len(boundary) > 0:
        cands_l, cands_r = [], []
        for side, marg, sink in (("L", rl, cands_l), ("R", rr, cands_r)):
            states = _bloch_states(boundary)
            for st in states:
                w, v = np.linalg.eigh(st)
                cols = v[:, w > 1e-12]
                pside = cols @ cols.conj().T
                leak = np.real(np.trace(marg)) - np.real(np.trace(pside @ marg))
                if leak <= 1e-10:
                    sink.append(st)
        all_states = list(_bloch_states(pts))
        pairs = [(a, b) for a in cands_l for b in all_states] + [
            (a, b) for a in all_states for b in cands_r
        ]
        for sl, sr in pairs:
            prod = np.kron(sl, sr)
            try:
                bits = dmax(r, prod, support_tol=1e-9)
            except SupportError:
                continue
            evaluated += 1
            t = 2.0**bits
            if t < t_best:
                t_best = t
                best_boundary = (sl, sr)
                best_interior = None

    if not np.isfinite(t_best):
        return MeasureResult(
            value=np.inf,
            witness=None,
            method="bruteforce",
            converged=False,
            iterations=evaluated,
        )
    if best_boundary is not None:
        wit = (DensityOperator(best_boundary[0]), DensityOperator(best_boundary[1]))
    else:
        wit = (
            DensityOperator(_bloch_states(best_interior[0][None])[0]),
            DensityOperator(_bloch_states(best_interior[1][None])[0]),
        )
    return MeasureResult(
        value=float(np.log2(t_best)),
        witness=wit,
        method="bruteforce",
        converged=True,
        iterations=evaluated,
    )
