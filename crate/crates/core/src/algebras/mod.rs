//! Deddens algebras `D_T` and spectral radius algebras `B_T`: empirical
//! growth oracles and closed-form membership laws.

mod empirical;
mod profile;
mod quasi;
mod rank_one;
mod rm;
mod wct_laws;

pub use empirical::{bt_empirical, deddens_empirical};
pub use profile::{classify, tail_slope, Bound, GrowthProfile, Verdict, VerdictState, MIN_POINTS};
pub use quasi::{bt_quasi_isometry, deddens_quasi_isometry, ensure_quasi_isometry};
pub use rank_one::{
    bt_rank_one, deddens_rank_one, deddens_similar_rank_one, eigen_span_residual, rank_one_factor,
    similarity_transport, TransportResult,
};
pub use rm::{alpha_m, build_rm, d_coeff, RmFamily, RmMember};
pub use wct_laws::{
    bt_wct, deddens_multiplication, deddens_wct_block, kernel_invariant, multiplication_pattern,
    top_block_projection,
};
