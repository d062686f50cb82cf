"""Dense complex linear algebra and the state/cut data model.

Conventions used throughout the package:

* every logarithm is base 2, every entropy is in bits;
* the leftmost chain site is the most significant tensor factor, so a
  bipartite index (i, a) flattens to ``i * d_r + a``;
* an operator counts as positive semidefinite when
  ``lambda_min >= -PSD_TOL * max(1, lambda_max)``;
* support cutoffs are relative to the largest eigenvalue.

All dataclasses freeze their arrays (``writeable = False``) so instances can
be shared across threads; the operations below are pure functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ContractError,
    EigensolverError,
    ResourceError,
    ShapeError,
)

#: Largest ambient Hilbert-space dimension dense operations will accept.
MAX_AMBIENT_DIM = 4096

#: Relative Hermiticity tolerance enforced at construction.
HERMITIAN_TOL = 1e-12

#: Relative PSD tolerance: lambda_min >= -PSD_TOL * max(1, lambda_max).
PSD_TOL = 1e-10

#: |Tr - target| tolerance for (sub-)state construction.
TRACE_TOL = 1e-10

#: Default relative support cutoff.
SUPPORT_CUTOFF = 1e-12


def as_complex_matrix(m) -> np.ndarray:
    """Validate and return ``m`` as a finite complex 2-d array."""
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2:
        raise ShapeError(f"expected a matrix, got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeError(f"matrix dimensions must be positive, got {arr.shape}")
    if not np.all(np.isfinite(arr.real)) or not np.all(np.isfinite(arr.imag)):
        raise ShapeError("matrix entries must be finite (no NaN/Inf)")
    return arr


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=complex, order="C")
    out.flags.writeable = False
    return out


def max_abs(m) -> float:
    m = np.asarray(m)
    return 0.0 if m.size == 0 else float(np.max(np.abs(m)))


@dataclass(frozen=True)
class HermitianOperator:
    """A dense complex square matrix certified Hermitian at construction."""

    mat: np.ndarray

    def __post_init__(self):
        arr = as_complex_matrix(self.mat)
        n, m = arr.shape
        if n != m:
            raise ShapeError(f"Hermitian operator must be square, got {arr.shape}")
        dev = max_abs(arr - arr.conj().T)
        if dev > HERMITIAN_TOL * max(1.0, max_abs(arr)):
            raise ContractError(
                f"matrix is not Hermitian: ||M - M^dag||_max = {dev:.3e}"
            )
        # exact Hermitization removes the sub-tolerance asymmetry
        object.__setattr__(self, "mat", _frozen((arr + arr.conj().T) / 2.0))

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def eig(self):
        """Ascending eigenvalues and orthonormal eigenvector columns."""
        return eig_hermitian(self)


@dataclass(frozen=True)
class SubState(HermitianOperator):
    """PSD operator with trace <= 1 (the sub-state set)."""

    def __post_init__(self):
        super().__post_init__()
        if self.mat.shape[0] <= 1024:
            w = np.linalg.eigvalsh(self.mat)
            lo, hi = float(w[0]), float(w[-1])
        else:
            lo = fast_lambda_min(self.mat)
            hi = max(float(np.real(np.trace(self.mat))), 1.0)
        if lo < -PSD_TOL * max(1.0, hi):
            raise ContractError(
                f"operator is not PSD within tolerance: lambda_min = {lo:.3e}",
                lambda_min=lo,
            )
        tr = float(np.real(np.trace(self.mat)))
        if tr > 1.0 + TRACE_TOL:
            raise ContractError(f"sub-state trace {tr} exceeds 1")

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.mat)))


@dataclass(frozen=True)
class DensityOperator(SubState):
    """Sub-state with trace = 1 within tolerance."""

    def __post_init__(self):
        super().__post_init__()
        tr = float(np.real(np.trace(self.mat)))
        if abs(tr - 1.0) > TRACE_TOL:
            raise ContractError(f"density operator trace {tr} != 1")


@dataclass(frozen=True)
class BipartiteCut:
    """Factorization metadata (d_l, d_r and site ranges) for a chain cut."""

    d_l: int
    d_r: int
    sites_l: tuple = ()
    sites_r: tuple = ()

    def __post_init__(self):
        if self.d_l < 1 or self.d_r < 1:
            raise ShapeError("cut dimensions must be positive")
        if self.sites_l or self.sites_r:
            sl, sr = list(self.sites_l), list(self.sites_r)
            both = sl + sr
            if both != list(range(len(both))):
                raise ShapeError(
                    "site ranges must be contiguous and partition the chain"
                )

    @classmethod
    def chain(cls, n_sites: int, n_left: int, local_dim: int = 2) -> "BipartiteCut":
        """Cut an n-site chain after site ``n_left - 1`` (0-based sites)."""
        if not 0 < n_left < n_sites:
            raise ShapeError(f"cut position {n_left} invalid for {n_sites} sites")
        return cls(
            d_l=local_dim**n_left,
            d_r=local_dim ** (n_sites - n_left),
            sites_l=tuple(range(n_left)),
            sites_r=tuple(range(n_left, n_sites)),
        )

    @property
    def dim(self) -> int:
        return self.d_l * self.d_r

    def check(self, m: np.ndarray):
        if m.shape != (self.dim, self.dim):
            raise ShapeError(
                f"operator shape {m.shape} inconsistent with cut "
                f"{self.d_l}x{self.d_r}"
            )


@dataclass(frozen=True)
class OperatorSchmidtDecomposition:
    """M = sum_i w_i L_i (x) R_i with trace-orthonormal factor sets."""

    weights: np.ndarray
    lefts: np.ndarray  # (rank, d_l, d_l)
    rights: np.ndarray  # (rank, d_r, d_r)
    truncation_tol: float
    tail: float = 0.0  # l2 mass of the dropped weights
    cut: BipartiteCut | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "weights", np.array(self.weights, dtype=float))
        object.__setattr__(self, "lefts", np.array(self.lefts, dtype=complex))
        object.__setattr__(self, "rights", np.array(self.rights, dtype=complex))
        self.weights.flags.writeable = False
        self.lefts.flags.writeable = False
        self.rights.flags.writeable = False

    @property
    def rank(self) -> int:
        return len(self.weights)

    def reconstruct(self) -> np.ndarray:
        d_l, d_r = self.lefts.shape[1], self.rights.shape[1]
        out = np.zeros((d_l * d_r, d_l * d_r), dtype=complex)
        for w, a, b in zip(self.weights, self.lefts, self.rights):
            out += w * np.kron(a, b)
        return out


def _mat_of(m) -> np.ndarray:
    if isinstance(m, HermitianOperator):
        return m.mat
    return as_complex_matrix(m)


def effectively_real(arr) -> bool:
    if not np.iscomplexobj(arr):
        return True
    scale = max_abs(arr)
    return float(np.max(np.abs(arr.imag))) <= 1e-14 * max(scale, 1.0)


def eig_hermitian(m):
    """Eigendecomposition of a Hermitian operator.

    Returns ``(w, v)`` with ``w`` ascending and ``v`` orthonormal columns,
    so that ``m = v @ diag(w) @ v.conj().T``. Real-symmetric input takes the
    real LAPACK path (the returned eigenvectors are then a real array).
    """
    arr = _mat_of(m)
    if arr.shape[0] != arr.shape[1]:
        raise ShapeError(f"expected square matrix, got {arr.shape}")
    if np.iscomplexobj(arr) and effectively_real(arr):
        arr = np.ascontiguousarray(arr.real)
    try:
        w, v = np.linalg.eigh(arr)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise EigensolverError(
            f"eigensolver did not converge on dim {arr.shape[0]}: {exc}"
        ) from exc
    return w, v


def kron_apply(a, b, vec_in):
    """(A (x) B) v without materializing the Kronecker product."""
    d_l, d_r = a.shape[0], b.shape[0]
    vm = vec_in.reshape(d_l, d_r)
    return (a @ vm @ b.T).reshape(-1)


def fast_lambda_min(m, dense_limit: int = 1024) -> float:
    """Smallest eigenvalue; Lanczos route above the dense cutoff."""
    arr = _mat_of(m)
    n = arr.shape[0]
    if np.iscomplexobj(arr) and effectively_real(arr):
        arr = np.ascontiguousarray(arr.real)
    if n <= dense_limit:
        return float(np.linalg.eigvalsh(arr)[0])
    from scipy.sparse.linalg import eigsh

    try:
        val = eigsh(
            arr, k=1, which="SA", return_eigenvectors=False,
            maxiter=3000, tol=1e-10, ncv=min(n, 48),
        )
        return float(val[0])
    except Exception:  # pragma: no cover - Lanczos stagnation
        return float(np.linalg.eigvalsh(arr)[0])


def fast_lambda_max_operator(matvec, dim: int, dtype=complex) -> float:
    """Largest eigenvalue of a Hermitian operator given only its matvec."""
    from scipy.sparse.linalg import LinearOperator, eigsh

    op = LinearOperator((dim, dim), matvec=matvec, dtype=dtype)
    val = eigsh(
        op, k=1, which="LA", return_eigenvectors=False,
        maxiter=3000, tol=1e-10, ncv=min(dim, 48),
    )
    return float(val[0])


def fast_lambda_min_operator(matvec, dim: int, dtype=complex) -> float:
    from scipy.sparse.linalg import LinearOperator, eigsh

    op = LinearOperator((dim, dim), matvec=matvec, dtype=dtype)
    val = eigsh(
        op, k=1, which="SA", return_eigenvectors=False,
        maxiter=3000, tol=1e-10, ncv=min(dim, 48),
    )
    return float(val[0])


def tensor(a, b, max_dim: int | None = None) -> np.ndarray:
    """Kronecker product in (L, R) site order (left factor most significant)."""
    a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    limit = MAX_AMBIENT_DIM if max_dim is None else max_dim
    out_rows = a.shape[0] * b.shape[0]
    if out_rows > limit:
        raise ResourceError(
            f"tensor product dimension {out_rows} exceeds the configured "
            f"maximum {limit}"
        )
    return np.kron(a, b)


def partial_trace(m, cut: BipartiteCut, keep: str) -> np.ndarray:
    """Trace out one side of a bipartite operator; ``keep`` is 'L' or 'R'."""
    arr = _mat_of(m)
    cut.check(arr)
    t = arr.reshape(cut.d_l, cut.d_r, cut.d_l, cut.d_r)
    if keep == "L":
        return np.einsum("iaja->ij", t)
    if keep == "R":
        return np.einsum("iaib->ab", t)
    raise ShapeError(f"keep must be 'L' or 'R', got {keep!r}")


def vec(x) -> np.ndarray:
    """Row-major vectorization: vec(|v><w|) = |v> (x) conj(|w>)."""
    return as_complex_matrix(x).reshape(-1)


def unvec(v, shape: tuple[int, int] | None = None) -> np.ndarray:
    """Inverse of :func:`vec`; assumes a square matrix unless given a shape."""
    arr = np.asarray(v, dtype=complex).reshape(-1)
    if shape is None:
        n = round(len(arr) ** 0.5)
        if n * n != len(arr):
            raise ShapeError(f"vector of length {len(arr)} is not square-compatible")
        shape = (n, n)
    if shape[0] * shape[1] != len(arr):
        raise ShapeError(f"cannot reshape length {len(arr)} into {shape}")
    return arr.reshape(shape)


def reshuffle(m, cut: BipartiteCut) -> np.ndarray:
    """Rearrange M[(i,a),(j,b)] into R[(i,j),(a,b)] across the cut."""
    arr = _mat_of(m)
    cut.check(arr)
    t = arr.reshape(cut.d_l, cut.d_r, cut.d_l, cut.d_r)
    return np.ascontiguousarray(t.transpose(0, 2, 1, 3)).reshape(
        cut.d_l * cut.d_l, cut.d_r * cut.d_r
    )


def _schmidt_svd(resh: np.ndarray):
    """Full or economy SVD of the reshuffled matrix, by size."""
    if effectively_real(resh):
        resh = np.ascontiguousarray(resh.real) if np.iscomplexobj(resh) else resh
    if min(resh.shape) <= 2048:
        u, s, vh = np.linalg.svd(resh, full_matrices=False)
        return u, s, vh
    # economy route for large reshuffles: Gram eigendecomposition gives the
    # right factors and singular values; left factors follow by one matmul
    g = resh.conj().T @ resh
    w, q = np.linalg.eigh(g)
    w = w[::-1].clip(min=0.0)
    q = np.ascontiguousarray(q[:, ::-1])
    s = np.sqrt(w)
    # the Gram route cannot resolve singular values below the eigensolver
    # noise floor ~ sqrt(eps)*s_max; everything under it is dropped
    floor = s[0] * 3e-8 if s[0] > 0 else 0.0
    keep = s > floor
    keep[0] = True
    q = q[:, keep]
    s = s[keep]
    u = (resh @ q) / s[np.newaxis, :]
    return u, s, q.conj().T


def operator_schmidt(
    m, cut: BipartiteCut, tol: float = 1e-10
) -> OperatorSchmidtDecomposition:
    """Operator Schmidt decomposition of ``m`` across ``cut``.

    Retains enough terms that the l2 reconstruction error is at most
    ``tol * ||m||_2``, and never keeps weights at or below ``tol * w_max``
    unless the reconstruction bound requires them.
    """
    if not 0.0 < tol < 1.0:
        raise ShapeError(f"truncation tolerance must be in (0,1), got {tol}")
    resh = reshuffle(m, cut)
    u, s, vh = _schmidt_svd(resh)
    total = float(np.linalg.norm(s))
    if total == 0.0:
        return OperatorSchmidtDecomposition(
            weights=np.zeros(0),
            lefts=np.zeros((0, cut.d_l, cut.d_l)),
            rights=np.zeros((0, cut.d_r, cut.d_r)),
            truncation_tol=tol,
            tail=0.0,
            cut=cut,
        )
    k_thresh = int(np.sum(s > tol * s[0]))
    tails = np.sqrt(np.cumsum((s**2)[::-1])[::-1])  # tails[k] = ||s[k:]||_2
    ok = np.flatnonzero(np.append(tails, 0.0) <= tol * total)
    k_recon = int(ok[0]) if len(ok) else len(s)
    k = max(1, k_thresh, k_recon)
    lefts = u[:, :k].T.reshape(k, cut.d_l, cut.d_l)
    rights = vh[:k, :].reshape(k, cut.d_r, cut.d_r)
    tail = float(tails[k]) if k < len(s) else 0.0
    return OperatorSchmidtDecomposition(
        weights=s[:k],
        lefts=lefts,
        rights=rights,
        truncation_tol=tol,
        tail=tail,
        cut=cut,
    )


def trace_norm(m) -> float:
    """Sum of singular values; uses the spectral route for Hermitian input."""
    arr = _mat_of(m)
    if arr.shape[0] != arr.shape[1]:
        return float(np.sum(np.linalg.svd(arr, compute_uv=False)))
    if max_abs(arr - arr.conj().T) <= 1e-13 * max(1.0, max_abs(arr)):
        h = (arr + arr.conj().T) / 2.0
        if np.iscomplexobj(h) and effectively_real(h):
            h = np.ascontiguousarray(h.real)
        return float(np.sum(np.abs(np.linalg.eigvalsh(h))))
    return float(np.sum(np.linalg.svd(arr, compute_uv=False)))


def lambda_extremes(m) -> tuple[float, float]:
    w = np.linalg.eigvalsh(_mat_of(m))
    return float(w[0]), float(w[-1])


def is_psd(m, tol: float = PSD_TOL) -> bool:
    lo, hi = lambda_extremes(m)
    return lo >= -tol * max(1.0, hi)


def support_projector(rho, cutoff: float = SUPPORT_CUTOFF) -> np.ndarray:
    """Projector onto the eigenspaces with eigenvalue > cutoff * lambda_max."""
    if not 0.0 < cutoff < 1.0:
        raise ShapeError(f"cutoff must be in (0,1), got {cutoff}")
    w, v = eig_hermitian(rho)
    top = float(w[-1])
    if top <= 0.0:
        raise ContractError("zero operator has no support")
    cols = v[:, w > cutoff * top]
    return cols @ cols.conj().T


def gentle_measure(rho, projector, tol: float = 1e-8):
    """Project a sub-state and return (projected state, trace-norm bound).

    The bound is 2*sqrt(Tr((1-Pi) rho)) and certifies
    ||rho - Pi rho Pi||_1 <= bound.
    """
    r = _mat_of(rho)
    p = _mat_of(projector)
    if p.shape != r.shape:
        raise ShapeError(f"projector shape {p.shape} != state shape {r.shape}")
    idem = max_abs(p @ p - p)
    if idem > tol:
        raise ContractError(f"projector is not idempotent: ||P^2-P||_max={idem:.3e}")
    out = p @ r @ p
    out = (out + out.conj().T) / 2.0
    leaked = max(0.0, float(np.real(np.trace(r - p @ r))))
    return SubState(out), 2.0 * np.sqrt(leaked)


def cap_eigenvalues(rho, cap: float) -> SubState:
    """Lower every eigenvalue above ``cap`` to ``cap`` in the same eigenbasis."""
    if cap <= 0.0:
        raise ShapeError(f"eigenvalue cap must be positive, got {cap}")
    w, v = eig_hermitian(rho)
    if w[-1] <= cap:
        return rho if isinstance(rho, SubState) else SubState(_mat_of(rho))
    capped = np.minimum(w, cap).clip(min=0.0)
    return SubState((v * capped) @ v.conj().T)


def is_flat(rho, tol: float = 1e-8, cutoff: float = SUPPORT_CUTOFF) -> bool:
    """True iff all eigenvalues above the support cutoff agree within tol."""
    if not 0.0 < tol < 1.0:
        raise ShapeError(f"tolerance must be in (0,1), got {tol}")
    w = np.linalg.eigvalsh(_mat_of(rho))
    top = float(w[-1])
    if top <= 0.0:
        return False
    supp = w[w > cutoff * top]
    return bool((top - supp[0]) <= tol * top)
