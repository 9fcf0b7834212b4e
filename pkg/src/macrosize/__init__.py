"""macrosize: effective-size measures for macroscopic quantum superpositions
of photonic modes and collective-spin ensembles, with the photon-absorption
mapping connecting the two pictures."""

__version__ = "0.1.0"

from .entanglement import (
    SplitState,
    entanglement_entropy,
    helstrom_ps,
    negativity,
    reduced_group_state,
    split,
)
from .mapping import (
    JointState,
    MappingReport,
    absorb_density,
    approx_absorb,
    block_hamiltonian,
    exact_propagate,
    joint_from_photonic,
    mapping_fidelity,
    spin_marginal,
    vacuum_projected_spin,
    verify_disentangling_identity,
    verify_operator_map,
)
from .measures import (
    DegeneratePairError,
    Homodyne,
    MeasureResult,
    PhotonCount,
    SuperpositionPair,
    c_delta,
    covariance_matrix,
    d_bar,
    fisher_matrix,
    index_p_modified,
    index_q,
    m_squared,
    max_variance_collective,
    mean_and_covariance,
    n_eff,
    normalized_sum,
    relative_fisher,
    size_pg,
    size_prefactor,
    wigner_I_photonic,
    wigner_I_spin,
)
from .scaling import (
    DEFAULT_LADDER,
    DEFAULT_M_LADDER,
    FamilyBundle,
    FamilyId,
    ScalingFit,
    StateFamily,
    SweepResult,
    Table1Report,
    branch_pair,
    classify,
    family_state,
    fit_exponent,
    sweep,
    sweep_fixed_excitation,
    table1,
)
from .states import (
    StateSpec,
    displace,
    make_coherent,
    make_dicke,
    make_displaced_single_photon,
    make_even_cat,
    make_fock,
    make_fock_superposition,
    make_ghz,
    make_mixed_cat,
    make_odd_cat,
    make_spin_coherent,
    mode_operator,
    state_from_dict,
    state_to_dict,
)
from .symcore import (
    CollectiveObservable,
    ContractViolation,
    DensityOp,
    DickeBasis,
    FockBasis,
    PhotonicState,
    RegimeWarning,
    SymState,
    TruncationError,
    collective_matrix,
    collective_xyz,
    default_spin_truncation,
    raising_coefficients,
    rotate_state,
    trace_norm,
)
