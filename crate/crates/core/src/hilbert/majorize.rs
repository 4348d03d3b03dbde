use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::linalg::{largest_singular_value, pinv, rank_of, svd};
use super::space::{ensure_same_space, MeasureSpace, Operator, Vector, C64};
use crate::error::{Error, Result};
use crate::tolerance::ToleranceConfig;

/// Outcome of testing `‖Sx‖ ≤ M‖Tx‖`.
#[derive(Debug, Clone)]
pub struct MajorizationResult {
    pub holds: bool,
    /// Least feasible `M`; `None` when the inequality fails for every `M`.
    pub constant: Option<f64>,
    /// Unit vector with `Tx ≈ 0` and `Sx ≠ 0`.
    pub violating_direction: Option<Vector>,
}

/// Decides whether `T` majorizes `S`. In finite dimension this is kernel
/// inclusion `ker T ⊆ ker S`.
pub fn majorizes(t: &Operator, s: &Operator, tol: &ToleranceConfig) -> Result<MajorizationResult> {
    ensure_same_space(t.space(), s.space())?;
    let tu = t.to_unitary();
    let su = s.to_unitary();
    let t_scale = largest_singular_value(&tu);
    let s_scale = largest_singular_value(&su);
    Ok(majorize_unitary(t.space(), &tu, &su, tol.rank_tol * t_scale, tol.residual_tol * s_scale))
}

/// Kernel-inclusion test with explicit thresholds: singular values of `T`
/// at or below `kernel_cut` span its kernel, and `S` is considered to vanish
/// on that kernel when its restriction has norm at most `null_cut`.
pub(crate) fn majorize_unitary(
    space: &Arc<MeasureSpace>,
    tu: &DMatrix<C64>,
    su: &DMatrix<C64>,
    kernel_cut: f64,
    null_cut: f64,
) -> MajorizationResult {
    let n = tu.nrows();
    let dec = svd(tu);
    let v_t = dec.v_t.as_ref().expect("v_t requested");
    let kernel: Vec<usize> = (0..n)
        .filter(|&k| dec.singular_values[k] <= kernel_cut)
        .collect();

    if !kernel.is_empty() {
        let mut basis = DMatrix::<C64>::zeros(n, kernel.len());
        for (c, &k) in kernel.iter().enumerate() {
            basis.set_column(c, &v_t.row(k).adjoint());
        }
        let restricted = su * &basis;
        let r = svd(&restricted);
        let top = (0..r.singular_values.len())
            .max_by(|&a, &b| r.singular_values[a].total_cmp(&r.singular_values[b]))
            .expect("kernel is nonempty");
        if r.singular_values[top] > null_cut {
            let coeffs = r.v_t.as_ref().expect("v_t requested").row(top).adjoint();
            let dir = &basis * coeffs;
            return MajorizationResult {
                holds: false,
                constant: None,
                violating_direction: Some(Vector::from_unitary(space, &dir)),
            };
        }
    }

    // Least constant ‖S T†‖, with T† cut at the same kernel threshold.
    let mut tp = DMatrix::<C64>::zeros(n, n);
    let u = dec.u.as_ref().expect("u requested");
    for k in 0..n {
        let sv = dec.singular_values[k];
        if sv > kernel_cut && sv > 0.0 {
            tp += (v_t.row(k).adjoint() * u.column(k).adjoint()) * C64::new(1.0 / sv, 0.0);
        }
    }
    MajorizationResult {
        holds: true,
        constant: Some(largest_singular_value(&(su * tp))),
        violating_direction: None,
    }
}

/// The three conditions of Douglas' factorization theorem, each computed on
/// its own.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DouglasEquivalences {
    pub range_inclusion: bool,
    pub adjoint_majorization: bool,
    pub factorization: bool,
    #[serde(skip)]
    pub factor: Option<Operator>,
}

pub fn douglas_equivalences(t: &Operator, s: &Operator, tol: &ToleranceConfig) -> Result<DouglasEquivalences> {
    let d = douglas_raw(t, s, tol)?;
    if d.range_inclusion == d.adjoint_majorization && d.adjoint_majorization == d.factorization {
        Ok(d)
    } else {
        Err(Error::consistency(
            "douglas_equivalences",
            format!(
                "range_inclusion={} adjoint_majorization={} factorization={}",
                d.range_inclusion, d.adjoint_majorization, d.factorization
            ),
        ))
    }
}

/// Evaluates the three conditions without enforcing agreement.
pub fn douglas_raw(t: &Operator, s: &Operator, tol: &ToleranceConfig) -> Result<DouglasEquivalences> {
    ensure_same_space(t.space(), s.space())?;
    let n = t.dim();
    let tu = t.to_unitary();
    let su = s.to_unitary();

    let mut joined = DMatrix::<C64>::zeros(n, 2 * n);
    joined.view_mut((0, 0), (n, n)).copy_from(&tu);
    joined.view_mut((0, n), (n, n)).copy_from(&su);
    let range_inclusion = rank_of(&joined, tol.rank_tol) == rank_of(&tu, tol.rank_tol);

    let adjoint_majorization = majorizes(&t.adjoint(), &s.adjoint(), tol)?.holds;

    let u = &pinv(t, tol) * s;
    let s_norm = largest_singular_value(&su);
    let residual = largest_singular_value(&(&(t * &u) - s).to_unitary());
    let factorization = residual <= tol.residual_tol * s_norm;

    Ok(DouglasEquivalences {
        range_inclusion,
        adjoint_majorization,
        factorization,
        factor: factorization.then_some(u),
    })
}
