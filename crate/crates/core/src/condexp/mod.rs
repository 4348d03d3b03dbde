//! Partition σ-subalgebras, conditional expectation and weighted conditional
//! type operators on finite atomic spaces.

mod blocks;
mod wct;

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hilbert::space::{MeasureSpace, Operator, Vector, C64};
use crate::tolerance::ToleranceConfig;

pub use blocks::{block_decomposition, BlockDecomposition};
pub use wct::{
    composition_identities, conjugate_factor, mg_annihilation_test, partial_isometry_test,
    power_identity_check, quasi_isometry_closed_form, quasi_isometry_test, quasinormal_test, wct,
    wct_norm, wct_norm_check, wct_pinv, IdentityCheck, PinvCheck, QuasinormalResult, Supports,
    WctOperator,
};

/// A partition of the atoms into blocks; generates the σ-subalgebra of
/// block-constant functions. Atom indices are 0-based.
#[derive(Debug, Clone)]
pub struct Partition {
    space: Arc<MeasureSpace>,
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
    masses: Vec<f64>,
}

impl Partition {
    pub fn new(space: &Arc<MeasureSpace>, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let n = space.dim();
        let mut block_of = vec![usize::MAX; n];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::InvalidPartition(format!("block {} is empty", b + 1)));
            }
            for &i in block {
                if i >= n {
                    return Err(Error::InvalidPartition(format!(
                        "block {} references atom {} outside 1..={n}",
                        b + 1,
                        i + 1
                    )));
                }
                if block_of[i] != usize::MAX {
                    return Err(Error::InvalidPartition(format!(
                        "atom {} appears in blocks {} and {}",
                        i + 1,
                        block_of[i] + 1,
                        b + 1
                    )));
                }
                block_of[i] = b;
            }
        }
        if let Some(i) = block_of.iter().position(|&b| b == usize::MAX) {
            return Err(Error::InvalidPartition(format!("atom {} is not covered", i + 1)));
        }
        let w = space.weights();
        let masses = blocks.iter().map(|b| b.iter().map(|&i| w[i]).sum()).collect();
        Ok(Self {
            space: space.clone(),
            blocks,
            block_of,
            masses,
        })
    }

    /// Blocks given with 1-based atom numbers.
    pub fn from_one_based(space: &Arc<MeasureSpace>, blocks: &[Vec<usize>]) -> Result<Self> {
        let mut zero = Vec::with_capacity(blocks.len());
        for (b, block) in blocks.iter().enumerate() {
            if block.contains(&0) {
                return Err(Error::InvalidPartition(format!(
                    "block {} uses atom 0; atoms are numbered from 1",
                    b + 1
                )));
            }
            zero.push(block.iter().map(|i| i - 1).collect());
        }
        Self::new(space, zero)
    }

    pub fn singletons(space: &Arc<MeasureSpace>) -> Self {
        Self::new(space, (0..space.dim()).map(|i| vec![i]).collect()).expect("singletons partition")
    }

    pub fn trivial(space: &Arc<MeasureSpace>) -> Self {
        Self::new(space, vec![(0..space.dim()).collect()]).expect("single block partition")
    }

    pub fn space(&self) -> &Arc<MeasureSpace> {
        &self.space
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_of(&self, atom: usize) -> usize {
        self.block_of[atom]
    }

    pub fn block_mass(&self, b: usize) -> f64 {
        self.masses[b]
    }

    pub fn to_one_based(&self) -> Vec<Vec<usize>> {
        self.blocks
            .iter()
            .map(|b| b.iter().map(|i| i + 1).collect())
            .collect()
    }

    /// `E(f)`, computed blockwise.
    pub fn expect(&self, f: &Vector) -> Vector {
        let w = self.space.weights();
        let means: Vec<C64> = self
            .blocks
            .iter()
            .zip(&self.masses)
            .map(|(block, m)| block.iter().map(|&i| f.get(i) * w[i]).sum::<C64>() / *m)
            .collect();
        let entries = (0..self.space.dim()).map(|i| means[self.block_of[i]]).collect();
        Vector::new(&self.space, entries).expect("block means are finite")
    }

    /// Block-constant vector with the given per-block values.
    pub fn broadcast(&self, values: &[C64]) -> Vector {
        let entries = (0..self.space.dim()).map(|i| values[self.block_of[i]]).collect();
        Vector::new(&self.space, entries).expect("finite block values")
    }

    /// Value of a block-constant vector on each block (first atom's value).
    pub fn block_values(&self, f: &Vector) -> Vec<C64> {
        self.blocks.iter().map(|b| f.get(b[0])).collect()
    }

    /// Checks that `f` is constant on every block; returns the first offending
    /// block otherwise.
    pub fn ensure_measurable(&self, f: &Vector, tol: &ToleranceConfig) -> Result<()> {
        let scale = f.max_abs();
        for (b, block) in self.blocks.iter().enumerate() {
            let first = f.get(block[0]);
            if block
                .iter()
                .any(|&i| (f.get(i) - first).norm() > tol.residual_tol * scale)
            {
                return Err(Error::NotMeasurable { block: b + 1 });
            }
        }
        Ok(())
    }

    /// Indicator of a union of blocks given by block indices.
    pub fn block_indicator(&self, blocks: impl IntoIterator<Item = usize>) -> Vector {
        Vector::indicator(
            &self.space,
            blocks.into_iter().flat_map(|b| self.blocks[b].iter().copied()),
        )
    }
}

/// The conditional expectation as a matrix:
/// `(Ef)_i = Σ_{j∈B} μ_j f_j / μ(B)` for `i ∈ B`.
pub fn cond_exp(partition: &Partition) -> Operator {
    let space = partition.space();
    let w = space.weights();
    let n = space.dim();
    let m = DMatrix::from_fn(n, n, |i, j| {
        let b = partition.block_of(i);
        if partition.block_of(j) == b {
            C64::new(w[j] / partition.block_mass(b), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Operator::new(space, m).expect("finite conditional expectation")
}

/// Multiplication operator `M_u`.
pub fn mult_op(u: &Vector) -> Operator {
    Operator::diagonal(u)
}

/// Atoms where `|f_i| > rank_tol · max_j |f_j|`.
pub fn support(f: &Vector, tol: &ToleranceConfig) -> Vec<usize> {
    let cut = tol.rank_tol * f.max_abs();
    (0..f.dim()).filter(|&i| f.get(i).norm() > cut).collect()
}
