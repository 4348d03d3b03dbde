use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::empirical::deddens_empirical;
use super::profile::{classify, Bound, GrowthProfile, Verdict, VerdictState};
use super::rm::alpha_m;
use crate::error::{Error, Result};
use crate::hilbert::linalg::{operator_gap as op_gap, spectral_radius};
use crate::hilbert::majorize::majorizes;
use crate::hilbert::space::{ensure_same_space, Operator, C64};
use crate::tolerance::ToleranceConfig;

/// Rejects `T` unless `T*(T*T)T = T*T`.
pub fn ensure_quasi_isometry(t: &Operator, tol: &ToleranceConfig) -> Result<()> {
    let ts = t.adjoint();
    let gram = &ts * t;
    let lhs = &(&ts * &gram) * t;
    let residual = op_gap(&lhs, &gram);
    if residual > tol.residual_tol {
        return Err(Error::NotQuasiIsometry { residual });
    }
    Ok(())
}

/// For a quasi-isometry, `S ∈ D_T` iff `T` majorizes `TS`.
pub fn deddens_quasi_isometry(t: &Operator, s: &Operator, tol: &ToleranceConfig) -> Result<bool> {
    ensure_same_space(t.space(), s.space())?;
    ensure_quasi_isometry(t, tol)?;
    let verdict = majorizes(t, &(t * s), tol)?.holds;
    let emp = deddens_empirical(t, s, tol)?;
    if let Some(m) = emp.membership() {
        if m != verdict {
            return Err(Error::consistency(
                "quasi_isometry_deddens",
                format!("majorization {verdict} vs empirical {m}: {}", emp.reason),
            ));
        }
    }
    Ok(verdict)
}

const SAMPLE_DIRECTIONS: usize = 64;

/// Least `M` with `‖Sx‖ + α‖TSx‖ ≤ M(‖x‖ + α‖Tx‖)`, estimated from the top
/// directions of the squared pencil plus a seeded sample of the sphere.
fn ratio_sup(tu: &DMatrix<C64>, su: &DMatrix<C64>, alpha: f64, seed: u64) -> f64 {
    let n = tu.nrows();
    let tsu = tu * su;
    let ratio = |x: &DVector<C64>| {
        let num = (su * x).norm() + alpha * (&tsu * x).norm();
        let den = x.norm() + alpha * (tu * x).norm();
        num / den
    };
    let a2 = C64::new(alpha * alpha, 0.0);
    let b = DMatrix::<C64>::identity(n, n) + tu.adjoint() * tu * a2;
    let a = su.adjoint() * su + tsu.adjoint() * &tsu * a2;
    let mut best = 0.0f64;
    if let Some(chol) = b.clone().cholesky() {
        let l = chol.l();
        let l_inv = l.clone().try_inverse().expect("triangular factor of I + α²T*T");
        let c = &l_inv * a * l_inv.adjoint();
        let c = (&c + c.adjoint()) * C64::new(0.5, 0.0);
        let eig = c.symmetric_eigen();
        let back = l_inv.adjoint();
        for k in 0..n {
            let x = &back * eig.eigenvectors.column(k);
            if x.norm() > 0.0 {
                best = best.max(ratio(&x));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..SAMPLE_DIRECTIONS {
        let x = DVector::<C64>::from_fn(n, |_, _| {
            C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
        });
        if x.norm() > 0.0 {
            best = best.max(ratio(&x));
        }
    }
    for k in 0..n {
        let mut x = DVector::<C64>::zeros(n);
        x[k] = C64::new(1.0, 0.0);
        best = best.max(ratio(&x));
    }
    best
}

/// `B_T` for a quasi-isometry through the `α_m`-weighted inequality.
pub fn bt_quasi_isometry(t: &Operator, s: &Operator, tol: &ToleranceConfig) -> Result<Verdict> {
    ensure_same_space(t.space(), s.space())?;
    ensure_quasi_isometry(t, tol)?;
    let r = spectral_radius(t);
    let alphas: Vec<(usize, f64)> = (1..=tol.max_index)
        .filter_map(|m| alpha_m(m, r).value().map(|a| (m, a)))
        .collect();
    if alphas.is_empty() {
        return Ok(Verdict {
            state: VerdictState::In,
            constant: None,
            profile: GrowthProfile {
                indices: Vec::new(),
                values: Vec::new(),
                fitted_slope: None,
                saturated: false,
            },
            reason: "every α_m diverges (r(T) = 0), so B_T is the whole algebra".into(),
        });
    }
    let tu = t.to_unitary();
    let su = s.to_unitary();
    let (indices, values): (Vec<usize>, Vec<Bound>) = alphas
        .iter()
        .map(|&(m, a)| (m, Bound::Finite(ratio_sup(&tu, &su, a, m as u64))))
        .unzip();
    Ok(classify(indices, values, tol, ""))
}
