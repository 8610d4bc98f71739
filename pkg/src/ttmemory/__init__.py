"""Transfer-tensor analysis of memory effects in monitored open-system dynamics.

The package propagates a spin coupled to a small bath of oscillators
exactly, reconstructs the transfer-tensor hierarchy of its reduced dynamics
(both unconditional and conditioned on sequential measurement records), and
quantifies the memory carried by multi-step tensors.
"""

from .config import ExperimentConfig, Tolerances, load_config, save_config
from .dephasing import (
    DephasingFamily,
    counterexample_report,
    dephasing_hierarchy,
    dephasing_map,
    semigroup_hierarchy_check,
)
from .linalg import (
    DimensionLayout,
    frobenius_norm,
    hermitian_eigh,
    kron,
    matrix_exponential,
    partial_trace,
    spectral_norm,
)
from .maps import (
    CPTPReport,
    Superoperator,
    choi_matrix,
    conjugation_superop,
    dynamical_map,
    gamma_map,
    intermediate_map,
    is_cptp,
    superop_from_choi,
    superop_from_global,
    unvec,
    vec,
)
from .model import (
    GlobalState,
    Instrument,
    Schedule,
    SpinBosonModel,
    SpinBosonParams,
    apply_measurement,
    build_hamiltonian,
    build_initial_state,
    build_povm,
    propagator,
)
from .stochastic import (
    Branch,
    StochasticTTHierarchy,
    branch_average,
    build_stochastic_tt,
    enumerate_branches,
    gamma_tilde,
    gamma_tilde_table,
    joint_probability,
    joint_probability_recursive,
    propagate_branch,
    quantifier_dk,
    quantifier_tk0,
    stochastic_reconstruction_residuals,
    violation_norm,
)
from .transfer import (
    TTHierarchy,
    build_via_gamma,
    build_via_phi,
    divisibility_report,
    gamma_table,
    multistep_profile,
    phi_list,
    reconstruction_residuals,
)

__version__ = "0.1.0"
