"""Certified area-law-style bounds for maximally mixed ground states.

One-shot entropy measures (max/min relative entropy, max mutual
information and its smoothing), constructive flat-state machinery,
Chebyshev approximate ground-space projectors, exact diagonalization of
small gapped chains, and a bootstrapping pipeline that certifies
smoothed-I_max upper bounds and low-Schmidt-rank approximations of the
maximally mixed ground state. All logarithms are base 2.
"""

from .core import (
    BipartiteCut,
    DensityOperator,
    HermitianOperator,
    OperatorSchmidtDecomposition,
    SubState,
    cap_eigenvalues,
    eig_hermitian,
    gentle_measure,
    is_flat,
    operator_schmidt,
    partial_trace,
    support_projector,
    tensor,
    trace_norm,
    unvec,
    vec,
)
from .entropy import (
    MeasureResult,
    SmoothingBall,
    certified_dmax_bits,
    continuity_gap,
    dmax,
    dmin,
    imax_bruteforce,
    imax_closed_form,
    imax_seesaw,
    mutual_info,
    rel_entropy,
    smoothed_imax_member,
    von_neumann_entropy,
)
from .constructions import (
    DiscretizationResult,
    FlatEmbedding,
    discretize_left,
    dominate_conjugated,
    dominate_mixture,
    dominate_vec,
    flat_embed,
    short_distance_bound,
)
from .agsp import (
    Agsp,
    AgspCertificate,
    ExtendedAgsp,
    certify_agsp,
    chebyshev_agsp,
    degree_estimate,
    extend_agsp,
    find_degree_for_ceiling,
)
from .models import (
    ChainModel,
    GroundSpace,
    build_hamiltonian,
    ground_space,
    maximally_mixed_gs,
)
from .pipeline import (
    BootstrapConfig,
    BootstrapRecord,
    BootstrapResult,
    Corollary2Result,
    LowRankResult,
    bootstrap_run,
    bootstrap_step,
    corollary2_check,
    low_rank_approx,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
