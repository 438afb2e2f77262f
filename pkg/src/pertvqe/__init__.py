"""Perturbation-ordered product ansatzes for variational ground-state search."""

from .ansatz import (
    AnsatzUnit,
    LevelSpec,
    StabilizerAnsatzSpec,
    ProductAnsatz,
    build_qca,
    enforce_conjugation,
    enforce_symmetry,
    fix_parameter,
    gram_matrix,
    manifold_area,
    manifold_metrics,
    remove_parameter,
    respects_conjugation,
)
from .diagrams import (
    Diagram,
    build_diagram,
    enumerate_connected,
    enumerate_leading,
    export_dot,
    is_disconnected_split,
)
from .hierarchy import (
    GeneratorSlot,
    PriorityList,
    ThetaEstimate,
    ThetaEstimator,
    build_priority_list,
    check_generating,
    check_matched,
    estimate_thetas,
    j_shortcut_weights,
)
from .pauli import (
    MultiIndex,
    PauliString,
    multiply,
    pauli_power,
    relative_sign,
    state_and_phase,
    support,
    unperturbed_energy,
)
from .perturbation import (
    CoefficientTable,
    Coupling,
    DegeneracyError,
    HamiltonianModel,
    dense_hamiltonian,
    exact_ground,
    normalized_c,
    perturbative_state,
    series_residual,
    tfim_chain,
    tilde_c,
)
from .simulator import (
    apply_pauli,
    apply_rotation,
    basis_state,
    energy,
    energy_and_gradient,
    fidelity,
    gradient,
    prepare,
    zero_state,
)
from .vqe import (
    OptimizationOutcome,
    SweepResult,
    SweepRow,
    hierarchy_sweep,
    optimize,
    sweep_thetas_json,
    sweep_to_csv,
)

__version__ = "0.1.0"
