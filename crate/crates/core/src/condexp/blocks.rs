use super::wct::{conjugate_factor, WctOperator};
use super::{cond_exp, mult_op};
use crate::error::{Error, Result};
use crate::hilbert::linalg::{kernel_basis, operator_gap as op_gap, operator_norm, projection_onto};
use crate::hilbert::space::{Operator, Vector, C64};
use crate::tolerance::ToleranceConfig;

/// `H = H₁ ⊕ H₂` with `H₁ = span{ū·χ_B}` and `H₂ = N(E M_u)`.
#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    pub p: Operator,
    pub pperp: Operator,
    pub h1_basis: Vec<Vector>,
    /// Block index of each `h1_basis` vector.
    pub h1_blocks: Vec<usize>,
    /// Residuals of `TⁿP = M_{(a E|u|²)ⁿ} P`, `n = 1..=3`, when `w = a·ū`.
    pub power_residuals: Vec<f64>,
}

pub fn block_decomposition(t: &WctOperator, tol: &ToleranceConfig) -> Result<BlockDecomposition> {
    let partition = t.partition();
    let space = partition.space();
    let ub = t.u().conj();

    let candidates: Vec<Vector> = (0..partition.num_blocks())
        .map(|b| ub.hadamard(&partition.block_indicator([b])))
        .collect();
    let largest = candidates.iter().map(Vector::norm).fold(0.0, f64::max);
    // Disjoint supports make these orthogonal already; normalising is the
    // whole of Gram–Schmidt here.
    let (h1_blocks, h1_basis): (Vec<usize>, Vec<Vector>) = candidates
        .into_iter()
        .enumerate()
        .filter(|(_, v)| v.norm() > tol.rank_tol * largest && v.norm() > 0.0)
        .map(|(b, v)| (b, v.normalized().expect("nonzero")))
        .unzip();
    let p = projection_onto(space, &h1_basis);
    let pperp = &Operator::identity(space) - &p;

    let emu = &cond_exp(partition) * &mult_op(t.u());
    let kernel = projection_onto(space, &kernel_basis(&emu, tol));
    // both are projections, so the absolute gap is already on a unit scale
    let gap = operator_norm(&(&kernel - &pperp));
    if gap > tol.residual_tol.max(1e-8) {
        return Err(Error::consistency(
            "block_decomposition",
            format!("N(E M_u) differs from range(I - P) by {gap:e}"),
        ));
    }

    let mut power_residuals = Vec::new();
    if let Some(a) = conjugate_factor(t, tol) {
        let lam = a.hadamard(t.eu2());
        for n in 1..=3u32 {
            let lhs = &t.matrix().pow(n as usize) * &p;
            let rhs = &mult_op(&lam.map(|z: C64| z.powu(n))) * &p;
            let r = op_gap(&lhs, &rhs);
            if r > tol.residual_tol {
                return Err(Error::consistency(
                    "block_power_identity",
                    format!("T^{n} P differs from M_(aE|u|²)^{n} P by {r:e}"),
                ));
            }
            power_residuals.push(r);
        }
    }

    Ok(BlockDecomposition {
        p,
        pperp,
        h1_basis,
        h1_blocks,
        power_residuals,
    })
}
