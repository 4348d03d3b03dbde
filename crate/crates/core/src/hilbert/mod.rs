//! Weighted finite-dimensional Hilbert space primitives.

pub mod linalg;
pub mod majorize;
pub mod rank_one;
pub mod space;

pub use linalg::{
    adjoint, hermitian_sqrt, kernel_basis, numerical_rank, operator_gap, operator_norm, pinv, projection_onto,
    range_basis, relative_residual, spectral_radius,
};
pub use majorize::{douglas_equivalences, douglas_raw, majorizes, DouglasEquivalences, MajorizationResult};
pub use rank_one::rank_one;
pub use space::{inner, MeasureSpace, Operator, Vector, C64};
