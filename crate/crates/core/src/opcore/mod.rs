//! Dense complex linear algebra and operator predicates.

mod json;
pub mod linalg;
pub mod operator;
pub mod random;
pub mod state;

pub use linalg::{
    apply_local, herm_eig, is_povm, partial_trace, partial_trace_state, permute_subsystems, schmidt_coefficients,
    schmidt_rank, simultaneous_diag, simultaneous_diag_seeded, singular_values, sym_eig_real, HermEig, PovmCheck,
    SimultaneousDiag,
};
pub use operator::{
    commutator, commutator_norm, kron, kron_all, pauli, CMatrix, CVector, Operator, Tolerance, C64, I, ONE, ZERO,
};
pub use state::StateVector;
