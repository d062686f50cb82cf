"""Open 1D spin chains: Hamiltonian zoo, exact diagonalization, and the
maximally mixed ground state.

Each two-site term is normalized by its operator norm so that every model
satisfies ||h_i||_inf <= 1 and measured gaps are comparable across models.
The leftmost site is the most significant tensor factor.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    DensityOperator,
    HermitianOperator,
    MAX_AMBIENT_DIM,
    eig_hermitian,
    _mat_of,
)
from .errors import GaplessError, ResourceError, ShapeError

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)

MODEL_KINDS = (
    "transverse_field_ising",
    "classical_ising",
    "projector_chain",
    "heisenberg_xxz",
    "custom",
)


@dataclass(frozen=True)
class ChainModel:
    """A nearest-neighbour chain of n qudits with a named two-site term."""

    kind: str
    n: int
    d: int = 2
    h: float = 1.0  # transverse field strength
    delta_aniso: float = 1.0  # XXZ anisotropy
    terms: tuple = ()  # custom two-site matrices, one per bond or a single one

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ShapeError(f"unknown model kind {self.kind!r}")
        if self.n < 2:
            raise ShapeError("need at least two sites")
        if self.kind == "custom" and not self.terms:
            raise ShapeError("custom model requires explicit two-site terms")
        if self.kind != "custom" and self.d != 2:
            raise ShapeError(f"{self.kind} is a qubit model")

    def bond_terms(self):
        """Normalized two-site terms, one per bond (i, i+1)."""
        if self.kind == "transverse_field_ising":
            zz = np.kron(PAULI_Z, PAULI_Z)
            xfield = np.kron(PAULI_X, np.eye(2)) + np.kron(np.eye(2), PAULI_X)
            raw = -zz - (self.h / 2.0) * xfield
            terms = [raw] * (self.n - 1)
        elif self.kind == "classical_ising":
            raw = (np.eye(4) - np.kron(PAULI_Z, PAULI_Z)) / 2.0
            terms = [raw] * (self.n - 1)
        elif self.kind == "projector_chain":
            raw = np.zeros((4, 4), dtype=complex)
            raw[3, 3] = 1.0  # |11><11|
            terms = [raw] * (self.n - 1)
        elif self.kind == "heisenberg_xxz":
            raw = (
                np.kron(PAULI_X, PAULI_X)
                + np.kron(PAULI_Y, PAULI_Y)
                + self.delta_aniso * np.kron(PAULI_Z, PAULI_Z)
            )
            terms = [raw] * (self.n - 1)
        else:
            mats = [np.asarray(t, dtype=complex) for t in self.terms]
            if len(mats) == 1:
                mats = mats * (self.n - 1)
            if len(mats) != self.n - 1:
                raise ShapeError(
                    f"custom model needs 1 or {self.n - 1} terms, got {len(mats)}"
                )
            for t in mats:
                if t.shape != (self.d**2, self.d**2):
                    raise ShapeError(f"two-site term has shape {t.shape}")
            terms = mats
        out = []
        for t in terms:
            t = np.asarray(t, dtype=complex)
            nrm = float(np.abs(np.linalg.eigvalsh((t + t.conj().T) / 2)).max())
            out.append(t / nrm if nrm > 0 else t)
        return out

    @property
    def dim(self) -> int:
        return self.d**self.n


@dataclass(frozen=True)
class GroundSpace:
    """Ground projector, degeneracy, gap and the maximally mixed state."""

    pi_gs: np.ndarray
    r: int
    e0: float
    gamma: float
    omega: DensityOperator
    degeneracy_tol: float
    e1: float
    e_max: float
    eig: tuple = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        arr = np.array(self.pi_gs, dtype=complex)
        arr.flags.writeable = False
        object.__setattr__(self, "pi_gs", arr)
        idem = float(np.abs(arr @ arr - arr).max())
        if idem > 1e-10:
            raise ShapeError(f"ground projector not idempotent: {idem:.3e}")
        if abs(float(np.real(np.trace(arr))) - self.r) > 1e-8:
            raise ShapeError("projector trace disagrees with the degeneracy")

    @property
    def spectral_data(self):
        return (self.e0, self.e1, self.e_max)


def build_hamiltonian(model: ChainModel) -> HermitianOperator:
    """Dense H = sum of tensor-embedded normalized two-site terms."""
    if model.dim > MAX_AMBIENT_DIM:
        raise ResourceError(
            f"ambient dimension {model.dim} exceeds {MAX_AMBIENT_DIM}"
        )
    dim = model.dim
    h = np.zeros((dim, dim), dtype=complex)
    for i, term in enumerate(model.bond_terms()):
        left = np.eye(model.d**i)
        right = np.eye(model.d ** (model.n - i - 2))
        h += np.kron(left, np.kron(term, right))
    return HermitianOperator(h)


def ground_space(h, degeneracy_tol: float | None = None) -> GroundSpace:
    """Extract the ground band, its gap, and Omega = Pi_gs / r.

    Fails with GaplessError when no spectral separation above the candidate
    ground band exceeds the tolerance.
    """
    m = _mat_of(h)
    w, v = eig_hermitian(m)
    scale = float(np.abs(w).max()) if len(w) else 1.0
    tol = 1e-8 * max(scale, 1.0) if degeneracy_tol is None else degeneracy_tol
    e0 = float(w[0])
    r = int(np.sum(w <= e0 + tol))
    if r >= len(w):
        raise GaplessError("every level sits in the ground band")
    gamma = float(w[r] - e0)
    if gamma <= tol:
        raise GaplessError(
            f"ambiguous degeneracy: gap {gamma:.3e} <= tolerance {tol:.3e}"
        )
    cols = v[:, :r]
    pi = cols @ cols.conj().T
    pi = (pi + pi.conj().T) / 2.0
    omega = DensityOperator(pi / r)
    return GroundSpace(
        pi_gs=pi,
        r=r,
        e0=e0,
        gamma=gamma,
        omega=omega,
        degeneracy_tol=tol,
        e1=float(w[r]),
        e_max=float(w[-1]),
        eig=(w, v),
    )


def maximally_mixed_gs(gs: GroundSpace) -> DensityOperator:
    """Omega = Pi_gs / Tr(Pi_gs), the zero-temperature Gibbs state."""
    return gs.omega


def fibonacci(k: int) -> int:
    a, b = 0, 1
    for _ in range(k):
        a, b = b, a + b
    return a
