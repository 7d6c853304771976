//! Restriction of `ω` to parametrized ansatz manifolds and analysis of the
//! resulting antisymmetric Gram matrices.

pub mod ansatz;
pub mod antisym;
pub mod scan;

pub use ansatz::{
    check_domain, ghw_ansatz, ghw_components, ghw_tangents, omega_from_tangents, omega_matrix,
    single_soliton_ansatz, tangent_basis, tangent_basis_with, AnsatzManifold, CanonicalPoint, FiniteExample,
    Ghw, GhwParams, ParamBound, PhasePoint, PhaseRotated, Rescaled, RestrictedForm, RestrictedGhw,
    SingleSoliton, TangentMode, ToyCanonical,
};
pub use antisym::{extend_with_hamiltonian, AntisymMatrix};
pub use scan::{bisect_pfaffian_zero, degeneracy_scan, zero_set, ScanAxis, ScanResult, Segment};
