//! Deddens algebras and spectral radius algebras on finite `L²(μ)`.

pub mod algebras;
pub mod condexp;
pub mod error;
pub mod hilbert;
pub mod tolerance;
pub mod workbench;

pub use error::{Error, Result};
pub use hilbert::{inner, MeasureSpace, Operator, Vector, C64};
pub use tolerance::ToleranceConfig;
