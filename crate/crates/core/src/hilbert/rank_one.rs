use nalgebra::DMatrix;

use super::space::{ensure_same_space, Operator, Vector};
use crate::error::Result;

/// `x ⊗ y : h ↦ ⟨h, y⟩ x`.
pub fn rank_one(x: &Vector, y: &Vector) -> Result<Operator> {
    ensure_same_space(x.space(), y.space())?;
    let space = x.space();
    let w = space.weights();
    let n = space.dim();
    Operator::new(
        space,
        DMatrix::from_fn(n, n, |i, j| x.get(i) * y.get(j).conj() * w[j]),
    )
}
