use serde::{Deserialize, Serialize};

use super::empirical::{bt_empirical, deddens_empirical};
use super::profile::Verdict;
use crate::error::{Error, Result};
use crate::hilbert::linalg::{numerical_rank, operator_norm, pinv};
use crate::hilbert::rank_one::rank_one;
use crate::hilbert::space::{ensure_same_space, inner, Operator, Vector};
use crate::tolerance::ToleranceConfig;

/// Relative residual of `S*ŷ` against its projection on `span{ŷ}`, with `ŷ`
/// the normalised `y`. Zero when `S*ŷ = 0`.
pub fn eigen_span_residual(y: &Vector, s: &Operator) -> Result<f64> {
    ensure_same_space(y.space(), s.space())?;
    let y = y.normalized()?;
    let sy = s.adjoint().apply(&y);
    let sy_norm = sy.norm();
    if sy_norm == 0.0 {
        return Ok(0.0);
    }
    let lambda = inner(&sy, &y)?;
    Ok((&sy - &y.scale(lambda)).norm() / sy_norm)
}

/// `S*y ∈ span{y}`.
fn in_span(y: &Vector, s: &Operator, tol: &ToleranceConfig) -> Result<bool> {
    Ok(eigen_span_residual(y, s)? <= tol.residual_tol)
}

/// `S ∈ D_{x⊗y}` iff `S*y ∈ span{y}`. When `⟨x, y⟩ ≠ 0` the verdict is also
/// re-derived empirically against `(x⊗y)²` and `(x⊗y)³`.
pub fn deddens_rank_one(x: &Vector, y: &Vector, s: &Operator, tol: &ToleranceConfig) -> Result<bool> {
    ensure_same_space(x.space(), y.space())?;
    let verdict = in_span(y, s, tol)?;
    let xy = inner(x, y)?;
    if xy.norm() > tol.rank_tol * x.norm() * y.norm() {
        let t = rank_one(x, y)?;
        for n in 2..=3 {
            let emp = deddens_empirical(&t.pow(n), s, tol)?;
            if let Some(m) = emp.membership() {
                if m != verdict {
                    return Err(Error::consistency(
                        "rank_one_power_independence",
                        format!("span test {verdict} but empirical verdict on (x⊗y)^{n} is {m}: {}", emp.reason),
                    ));
                }
            }
        }
    }
    Ok(verdict)
}

/// `S ∈ B_{x⊗y}` iff `y` is an eigenvector of `S*` (zero eigenvalue allowed).
pub fn bt_rank_one(y: &Vector, s: &Operator, tol: &ToleranceConfig) -> Result<bool> {
    in_span(y, s, tol)
}

fn inverse(a: &Operator, tol: &ToleranceConfig) -> Result<Operator> {
    if numerical_rank(a, tol) < a.dim() {
        return Err(Error::NotInvertible);
    }
    Ok(pinv(a, tol))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransportResult {
    pub deddens_original: Verdict,
    pub deddens_transported: Verdict,
    /// `None` when the `R_m` series could not be truncated for either side.
    pub bt_original: Option<Verdict>,
    pub bt_transported: Option<Verdict>,
    /// `‖A Tⁿ A⁻¹ − Cⁿ‖ / ‖Cⁿ‖`, `n = 1..=4`.
    pub power_residuals: Vec<f64>,
}

/// Conjugates `(T, S)` by `A` and compares membership verdicts on both sides.
pub fn similarity_transport(a: &Operator, t: &Operator, s: &Operator, tol: &ToleranceConfig) -> Result<TransportResult> {
    ensure_same_space(a.space(), t.space())?;
    ensure_same_space(a.space(), s.space())?;
    let a_inv = inverse(a, tol)?;
    let c = &(a * t) * &a_inv;
    let s2 = &(a * s) * &a_inv;

    let mut power_residuals = Vec::with_capacity(4);
    for n in 1..=4 {
        let lhs = &(a * &t.pow(n)) * &a_inv;
        let rhs = c.pow(n);
        let scale = operator_norm(&rhs).max(operator_norm(&lhs));
        let d = operator_norm(&(&lhs - &rhs));
        let r = if d == 0.0 { 0.0 } else { d / scale };
        if r > tol.residual_tol {
            return Err(Error::consistency(
                "similarity_powers",
                format!("A T^{n} A⁻¹ differs from C^{n} by {r:e}"),
            ));
        }
        power_residuals.push(r);
    }

    let d1 = deddens_empirical(t, s, tol)?;
    let d2 = deddens_empirical(&c, &s2, tol)?;
    agree("deddens_transport", &d1, &d2)?;

    let b1 = optional(bt_empirical(t, s, tol))?;
    let b2 = optional(bt_empirical(&c, &s2, tol))?;
    if let (Some(b1), Some(b2)) = (&b1, &b2) {
        agree("bt_transport", b1, b2)?;
    }
    Ok(TransportResult {
        deddens_original: d1,
        deddens_transported: d2,
        bt_original: b1,
        bt_transported: b2,
        power_residuals,
    })
}

fn optional(v: Result<Verdict>) -> Result<Option<Verdict>> {
    match v {
        Ok(v) => Ok(Some(v)),
        Err(Error::TruncationFailure { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn agree(check: &str, a: &Verdict, b: &Verdict) -> Result<()> {
    if let (Some(x), Some(y)) = (a.membership(), b.membership()) {
        if x != y {
            return Err(Error::consistency(
                check,
                format!("original {x} ({}) vs transported {y} ({})", a.reason, b.reason),
            ));
        }
    }
    Ok(())
}

/// `S ∈ D_T` for `T = A⁻¹(x⊗y)A = (A⁻¹x)⊗(A*y)`: the span test with `A*y`.
pub fn deddens_similar_rank_one(
    a: &Operator,
    x: &Vector,
    y: &Vector,
    s: &Operator,
    tol: &ToleranceConfig,
) -> Result<bool> {
    ensure_same_space(a.space(), x.space())?;
    let a_inv = inverse(a, tol)?;
    y.normalized()?;
    let ay = a.adjoint().apply(y);
    let t = rank_one(&a_inv.apply(x), &ay)?;
    let conj = &(&a_inv * &rank_one(x, y)?) * a;
    let scale = operator_norm(&t).max(operator_norm(&conj));
    let d = operator_norm(&(&t - &conj));
    if d > tol.residual_tol * scale {
        return Err(Error::consistency(
            "similar_rank_one_form",
            format!("(A⁻¹x)⊗(A*y) differs from A⁻¹(x⊗y)A by {:e}", d / scale),
        ));
    }
    in_span(&ay, s, tol)
}

/// Recovers `h` with `T = h⊗y` when `T` is rank one with `R(T*) ⊆ span{y}`.
pub fn rank_one_factor(t: &Operator, y: &Vector, tol: &ToleranceConfig) -> Result<Vector> {
    ensure_same_space(t.space(), y.space())?;
    let yy = y.norm().powi(2);
    if yy == 0.0 {
        return Err(Error::ZeroVector);
    }
    let t_norm = operator_norm(t);
    if t_norm == 0.0 {
        return Ok(Vector::zeros(t.space()));
    }
    let h = t.apply(y).scale((1.0 / yy).into());
    let d = operator_norm(&(t - &rank_one(&h, y)?));
    if d > tol.residual_tol * t_norm {
        return Err(Error::NotRankOneCompatible { residual: d / t_norm });
    }
    Ok(h)
}
