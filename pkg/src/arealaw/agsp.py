"""Chebyshev approximate ground-space projectors with empirical certificates.

The construction is K = T_l(x(H)) / T_l(x(E_0)) with the affine rescaling
x(E) = (2E - E_max - E_1)/(E_max - E_1), which maps the excited window
[E_1, E_max] onto [-1, 1] while |T_l| blows up below it. Shrinkage is
certified from the actual spectrum (exact diagonalization is available at
this scale); the Chebyshev envelope 1/T_l(x(E_0))^2 is reported alongside
as a sanity ceiling only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    BipartiteCut,
    MAX_AMBIENT_DIM,
    OperatorSchmidtDecomposition,
    eig_hermitian,
    operator_schmidt,
    tensor,
    _mat_of,
)
from .errors import CeilingError, ContractError, ResourceError, ShapeError

GS_FIX_TOL = 1e-8


def chebyshev_value(degree: int, x):
    """T_degree(x) for real x, stable on all three branches."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    inside = np.abs(x) <= 1.0
    out[inside] = np.cos(degree * np.arccos(x[inside]))
    above = x > 1.0
    out[above] = np.cosh(degree * np.arccosh(x[above]))
    below = x < -1.0
    out[below] = (-1.0) ** degree * np.cosh(degree * np.arccosh(-x[below]))
    return out


@dataclass(frozen=True)
class AgspCertificate:
    d_rank: int
    delta: float
    fixes_gs_error: float
    ground_leak: float
    schmidt_tail: float
    truncation_tol: float

    def to_json_dict(self) -> dict:
        return {
            "D": self.d_rank,
            "Delta": self.delta,
            "fixes_gs_error": self.fixes_gs_error,
            "ground_leak": self.ground_leak,
            "schmidt_tail": self.schmidt_tail,
            "truncation_tol": self.truncation_tol,
        }


@dataclass(frozen=True)
class Agsp:
    """Operator with certified ground fixing, shrinkage and Schmidt rank."""

    k_op: np.ndarray
    cut: BipartiteCut
    d_rank: int
    delta: float
    degree: int
    fixes_gs_error: float
    envelope_delta: float
    truncation_tol: float
    schmidt_tail: float
    affine_fallback: bool = False
    schmidt: OperatorSchmidtDecomposition | None = field(default=None, compare=False)
    spectral_values: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        # keep the native dtype: real Hamiltonians yield real projectors,
        # which halves the memory and matmul cost at the largest sizes
        arr = np.array(self.k_op)
        arr.flags.writeable = False
        object.__setattr__(self, "k_op", arr)
        if self.fixes_gs_error > GS_FIX_TOL:
            raise ContractError(
                f"AGSP does not fix the ground space: error "
                f"{self.fixes_gs_error:.3e} > {GS_FIX_TOL}"
            )

    def to_json_dict(self) -> dict:
        return {
            "degree": self.degree,
            "D": self.d_rank,
            "Delta": self.delta,
            "envelope_Delta": self.envelope_delta,
            "fixes_gs_error": self.fixes_gs_error,
            "truncation_tol": self.truncation_tol,
            "schmidt_tail": self.schmidt_tail,
            "affine_fallback": self.affine_fallback,
        }


def chebyshev_agsp(
    h,
    spectral_data,
    degree: int,
    cut: BipartiteCut,
    truncation_tol: float = 1e-10,
    h_eig=None,
) -> Agsp:
    """Degree-l Chebyshev AGSP for the ground space of ``h``.

    ``spectral_data`` is (E_0, E_1, E_max). Pass ``h_eig=(w, v)`` to reuse an
    existing eigendecomposition. Delta is certified against the actual
    spectrum; eigenvalues below the midgap count as the ground band.
    """
    e0, e1, emax = (float(x) for x in spectral_data)
    if not e0 < e1 <= emax + 1e-15:
        raise ShapeError(f"need E_0 < E_1 <= E_max, got {spectral_data}")
    if degree < 0:
        raise ShapeError("degree must be nonnegative")
    m = _mat_of(h)
    cut.check(m)
    w, v = eig_hermitian(m) if h_eig is None else h_eig
    midgap = 0.5 * (e0 + e1)

    affine = (emax - e1) <= 1e-12 * max(1.0, abs(emax))
    if affine:
        vals = np.clip((e1 - w) / (e1 - e0), 0.0, 1.0)
        envelope = 0.0
    else:
        x = (2.0 * w - emax - e1) / (emax - e1)
        x0 = (2.0 * e0 - emax - e1) / (emax - e1)
        t0 = float(chebyshev_value(degree, np.array([x0]))[0])
        vals = chebyshev_value(degree, x) / t0
        envelope = 1.0 / t0**2

    k_mat = (v * vals) @ v.conj().T
    ground = w <= midgap
    fixes = float(np.max(np.abs(vals[ground] - 1.0))) if np.any(ground) else 0.0
    excited = vals[~ground]
    delta = float(np.max(excited**2)) if len(excited) else 0.0
    osd = operator_schmidt(k_mat, cut, truncation_tol)
    return Agsp(
        k_op=k_mat,
        cut=cut,
        d_rank=osd.rank,
        delta=delta,
        degree=degree,
        fixes_gs_error=fixes,
        envelope_delta=envelope,
        truncation_tol=truncation_tol,
        schmidt_tail=osd.tail,
        affine_fallback=affine,
        schmidt=osd,
        spectral_values=vals,
    )


def _opnorm(m) -> float:
    if m.shape[0] <= 1024:
        return float(np.linalg.norm(m, 2))
    from scipy.sparse.linalg import svds

    return float(svds(m, k=1, return_singular_vectors=False)[0])


def certify_agsp(
    k_op, pi_gs, cut: BipartiteCut, tol: float = 1e-10
) -> AgspCertificate:
    """Measure (D, Delta, fixes_gs_error) directly, independent of how the
    operator was built."""
    k = _mat_of(k_op)
    p = _mat_of(pi_gs)
    if k.shape != p.shape:
        raise ShapeError(f"shape mismatch {k.shape} vs {p.shape}")
    cut.check(k)
    fixes = max(
        _opnorm(k @ p - p),
        _opnorm(k.conj().T @ p - p),
    )
    comp = np.eye(k.shape[0]) - p
    w_op = k @ comp @ k.conj().T
    ground_leak = float(np.abs(p @ w_op @ p).max())
    if ground_leak > tol * max(1.0, float(np.abs(w_op).max())):
        delta = float("inf")
    else:
        delta = float(np.linalg.eigvalsh(comp @ w_op @ comp)[-1])
        delta = max(delta, 0.0)
    osd = operator_schmidt(k, cut, tol)
    return AgspCertificate(
        d_rank=osd.rank,
        delta=delta,
        fixes_gs_error=fixes,
        ground_leak=ground_leak,
        schmidt_tail=osd.tail,
        truncation_tol=tol,
    )


@dataclass(frozen=True)
class ExtendedAgsp:
    """K_AB = K (x) Pi_r in factored form; Pi_r keeps B levels 1..d_B/r.

    Extension leaves (D, Delta, fixes_gs_error) unchanged:
    K_AB (1 - Pi(x)Pi_r) K_AB^dag = [K (1-Pi) K^dag] (x) Pi_r, and the
    Schmidt factors across L:(R,B) are X_i (x) (Y_i (x) Pi_r).
    """

    base: Agsp
    r: int
    d_b: int

    def __post_init__(self):
        if self.r < 1 or self.d_b < 1:
            raise ShapeError("r and d_B must be positive")
        if self.d_b % self.r:
            raise ContractError(f"r={self.r} does not divide d_B={self.d_b}")

    @property
    def pi_r_count(self) -> int:
        return self.d_b // self.r

    @property
    def d_rank(self) -> int:
        return self.base.d_rank

    @property
    def delta(self) -> float:
        return self.base.delta

    def traced_omega_ab_is_omega(self) -> bool:
        """Tr_B(Omega_AB) = Omega on the factored form: the B part carries
        Pi_r / (d_B/r), whose trace is exactly one."""
        return self.pi_r_count * self.r == self.d_b

    def pi_r_dense(self) -> np.ndarray:
        out = np.zeros((self.d_b, self.d_b))
        out[range(self.pi_r_count), range(self.pi_r_count)] = 1.0
        return out

    def k_ab_dense(self) -> np.ndarray:
        dim = self.base.k_op.shape[0] * self.d_b
        if dim > MAX_AMBIENT_DIM:
            raise ResourceError(
                f"dense extended operator dimension {dim} exceeds "
                f"{MAX_AMBIENT_DIM}"
            )
        return tensor(self.base.k_op, self.pi_r_dense(), max_dim=dim)


def extend_agsp(base: Agsp, r: int, d_b: int) -> ExtendedAgsp:
    return ExtendedAgsp(base=base, r=r, d_b=d_b)


def degree_estimate(c: float, gamma: float, d: int) -> int:
    """Heuristic Chebyshev degree from the rank-scaling envelope
    max(log2(d)^3/gamma, gamma^(-1/3) log2(d) log2(c)^(2/3)) with unit
    constant. Guidance only; callers must re-certify empirically.
    """
    if c <= 1.0:
        raise ShapeError("c must exceed 1")
    if gamma <= 0.0:
        raise ShapeError("gamma must be positive")
    if d < 2:
        raise ShapeError("local dimension must be at least 2")
    ld = np.log2(d)
    est = max(ld**3 / gamma, gamma ** (-1.0 / 3.0) * ld * np.log2(c) ** (2.0 / 3.0))
    return max(1, int(np.ceil(est)))


def analytic_delta(spectral_data, degree: int) -> float:
    """Certified shrinkage of the degree-l construction, known in closed
    form: the first excited level maps to the window edge where |T_l| = 1,
    so Delta = 1/T_l(x(E_0))^2 exactly (0 for the affine fallback)."""
    e0, e1, emax = (float(x) for x in spectral_data)
    if (emax - e1) <= 1e-12 * max(1.0, abs(emax)):
        return 0.0
    x0 = (2.0 * e0 - emax - e1) / (emax - e1)
    t0 = float(chebyshev_value(degree, np.array([x0]))[0])
    return 1.0 / t0**2


def find_degree_for_ceiling(
    h,
    spectral_data,
    cut: BipartiteCut,
    ceiling: float,
    max_degree: int = 64,
    truncation_tol: float = 1e-10,
    h_eig=None,
) -> Agsp:
    """Smallest degree whose certified D^2 * Delta meets the ceiling.

    Small cuts use a doubling-plus-bisection search over constructed
    operators. Large cuts exploit that Delta(degree) is analytic, so only
    the Schmidt rank needs measuring: the search walks the analytic degree
    floor upward as the measured rank grows, then certifies downward to the
    smallest passing degree. Raises CeilingError when the cap is hit.
    """
    if ceiling <= 0:
        raise ShapeError("ceiling must be positive")
    if h_eig is None:
        h_eig = eig_hermitian(_mat_of(h))
    cache: dict[int, Agsp] = {}

    def measure(degree: int) -> Agsp:
        if degree not in cache:
            cache[degree] = chebyshev_agsp(
                h, spectral_data, degree, cut, truncation_tol, h_eig=h_eig
            )
        return cache[degree]

    def ok(a: Agsp) -> bool:
        return a.d_rank**2 * a.delta <= ceiling

    def degree_floor(d_rank: int) -> int:
        for degree in range(1, max_degree + 1):
            if d_rank**2 * analytic_delta(spectral_data, degree) <= ceiling:
                return degree
        return max_degree + 1

    if cut.dim > 1024:
        degree = degree_floor(1)
        seen = 0
        while degree <= max_degree and seen < 12:
            seen += 1
            a = measure(degree)
            if ok(a):
                # walk down to the smallest passing degree
                while degree > 1 and ok(measure(degree - 1)):
                    degree -= 1
                return measure(degree)
            degree = max(degree + 1, degree_floor(a.d_rank))
        best = measure(min(degree, max_degree))
        raise CeilingError(
            f"D^2*Delta ceiling {ceiling:.3e} unreachable within degree "
            f"{max_degree} (best {best.d_rank**2 * best.delta:.3e})"
        )

    found = None
    last_failed = 0
    degree = 1
    while degree <= max_degree:
        if ok(measure(degree)):
            found = degree
            break
        last_failed = degree
        degree *= 2
    if found is None:
        if ok(measure(max_degree)):
            found = max_degree
        else:
            best = measure(max_degree)
            raise CeilingError(
                f"D^2*Delta ceiling {ceiling:.3e} unreachable within degree "
                f"{max_degree} (best {best.d_rank**2 * best.delta:.3e})"
            )
    lo, hi = last_failed + 1, found
    while lo < hi:
        mid = (lo + hi) // 2
        if ok(measure(mid)):
            hi = mid
        else:
            lo = mid + 1
    return measure(hi)
