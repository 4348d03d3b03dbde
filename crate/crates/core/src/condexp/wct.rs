use serde::{Deserialize, Serialize};

use super::{cond_exp, mult_op, support, Partition};
use crate::error::{Error, Result};
use crate::hilbert::linalg::{operator_gap as op_gap, operator_norm, pinv};
use crate::hilbert::space::{ensure_same_space, Operator, Vector, C64};
use crate::tolerance::ToleranceConfig;

/// Index sets attached to a WCT operator (0-based atoms).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Supports {
    /// `supp E|u|²`
    pub s: Vec<usize>,
    /// `supp E|w|²`
    pub g: Vec<usize>,
    /// `supp E(u)`
    pub s0: Vec<usize>,
    /// `supp w`
    pub g0: Vec<usize>,
    /// `supp E(uw)`
    pub f: Vec<usize>,
    pub sg: Vec<usize>,
}

/// `T = M_w E M_u : f ↦ w E(uf)` together with its derived functions.
#[derive(Debug, Clone)]
pub struct WctOperator {
    partition: Partition,
    u: Vector,
    w: Vector,
    matrix: Operator,
    eu2: Vector,
    ew2: Vector,
    euw: Vector,
    supports: Supports,
}

impl WctOperator {
    pub fn partition(&self) -> &Partition {
        &self.partition
    }
    pub fn u(&self) -> &Vector {
        &self.u
    }
    pub fn w(&self) -> &Vector {
        &self.w
    }
    pub fn matrix(&self) -> &Operator {
        &self.matrix
    }
    pub fn eu2(&self) -> &Vector {
        &self.eu2
    }
    pub fn ew2(&self) -> &Vector {
        &self.ew2
    }
    pub fn euw(&self) -> &Vector {
        &self.euw
    }
    pub fn supports(&self) -> &Supports {
        &self.supports
    }

    /// `χ_{S∩G}` as a 0/1 vector.
    pub fn chi_sg(&self) -> Vector {
        Vector::indicator(self.partition.space(), self.supports.sg.iter().copied())
    }

    fn on_sg(&self, i: usize) -> bool {
        self.supports.sg.binary_search(&i).is_ok()
    }
}

fn intersect(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().copied().filter(|i| b.binary_search(i).is_ok()).collect()
}

pub fn wct(partition: &Partition, u: &Vector, w: &Vector, tol: &ToleranceConfig) -> Result<WctOperator> {
    let space = partition.space();
    ensure_same_space(space, u.space())?;
    ensure_same_space(space, w.space())?;
    let e = cond_exp(partition);
    let matrix = &(&mult_op(w) * &e) * &mult_op(u);

    let eu2 = partition.expect(&u.abs_sq());
    let ew2 = partition.expect(&w.abs_sq());
    let euw = partition.expect(&u.hadamard(w));
    let s = support(&eu2, tol);
    let g = support(&ew2, tol);
    let f = support(&euw, tol);
    let sg = intersect(&s, &g);
    if let Some(i) = f.iter().find(|i| sg.binary_search(i).is_err()) {
        return Err(Error::consistency(
            "conditional_holder",
            format!("E(uw) is nonzero at atom {} outside S∩G", i + 1),
        ));
    }
    let supports = Supports {
        s0: support(&partition.expect(u), tol),
        g0: support(w, tol),
        s,
        g,
        f,
        sg,
    };
    Ok(WctOperator {
        partition: partition.clone(),
        u: u.clone(),
        w: w.clone(),
        matrix,
        eu2,
        ew2,
        euw,
        supports,
    })
}

/// `‖T‖ = max_i √(E|u|²_i · E|w|²_i)`.
pub fn wct_norm(t: &WctOperator) -> f64 {
    (0..t.eu2.dim())
        .map(|i| (t.eu2.get(i).re * t.ew2.get(i).re).max(0.0).sqrt())
        .fold(0.0, f64::max)
}

/// Closed-form norm checked against the SVD norm; returns
/// `(formula, residual)` with the residual relative to the norm.
pub fn wct_norm_check(t: &WctOperator, tol: &ToleranceConfig) -> Result<(f64, f64)> {
    let formula = wct_norm(t);
    let direct = operator_norm(&t.matrix);
    let residual = rel_gap(formula, direct);
    if residual > tol.residual_tol {
        return Err(Error::consistency(
            "wct_norm",
            format!("closed form {formula:e} vs singular value {direct:e}"),
        ));
    }
    Ok((formula, residual))
}

fn rel_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    if d == 0.0 {
        0.0
    } else {
        d / a.abs().max(b.abs())
    }
}


/// One matrix identity and its relative residual.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub residual: f64,
    pub holds: bool,
}

impl IdentityCheck {
    fn new(name: impl Into<String>, lhs: &Operator, rhs: &Operator, tol: &ToleranceConfig) -> Self {
        let residual = op_gap(lhs, rhs);
        Self {
            name: name.into(),
            residual,
            holds: residual <= tol.residual_tol,
        }
    }
}

/// `Tⁿ = M_{E(uw)^{n−1}} T`.
pub fn power_identity_check(t: &WctOperator, n: usize, tol: &ToleranceConfig) -> Result<IdentityCheck> {
    if n == 0 {
        return Err(Error::Precondition("power must be at least 1".into()));
    }
    let lhs = t.matrix.pow(n);
    let rhs = &mult_op(&t.euw.map(|z| z.powu(n as u32 - 1))) * &t.matrix;
    Ok(IdentityCheck::new(format!("power_{n}"), &lhs, &rhs, tol))
}

/// The adjoint and product identities for `M_w E M_u`.
pub fn composition_identities(t: &WctOperator, tol: &ToleranceConfig) -> Vec<IdentityCheck> {
    let e = cond_exp(&t.partition);
    let m = &t.matrix;
    let ms = m.adjoint();
    let ub = t.u.conj();
    let wb = t.w.conj();
    let mu = mult_op(&t.u);
    let prod = |a: &Operator, b: &Operator| a * b;

    let adj = prod(&prod(&mult_op(&ub), &e), &mult_op(&wb));
    let tst = prod(&prod(&mult_op(&ub.hadamard(&t.ew2)), &e), &mu);
    let tts = prod(&prod(&mult_op(&t.w.hadamard(&t.eu2)), &e), &mult_op(&wb));
    let ttst = prod(&mult_op(&t.eu2.hadamard(&t.ew2)), m);
    let tstt = prod(
        &prod(&prod(&mult_op(&t.euw.hadamard(&t.ew2)), &mult_op(&ub)), &e),
        &mu,
    );

    vec![
        IdentityCheck::new("adjoint", &ms, &adj, tol),
        IdentityCheck::new("t_star_t", &prod(&ms, m), &tst, tol),
        IdentityCheck::new("t_t_star", &prod(m, &ms), &tts, tol),
        IdentityCheck::new("t_t_star_t", &prod(&prod(m, &ms), m), &ttst, tol),
        IdentityCheck::new("t_star_t_t", &prod(&prod(&ms, m), m), &tstt, tol),
    ]
}

#[derive(Debug, Clone)]
pub struct QuasinormalResult {
    pub is_quasinormal: bool,
    /// `v = E(uw)/E|u|² · χ_{S∩G}`, present when quasinormal.
    pub v: Option<Vector>,
    pub matrix_residual: f64,
    pub closed_form_residual: f64,
}

fn v_function(t: &WctOperator) -> Vector {
    let n = t.u.dim();
    let entries = (0..n)
        .map(|i| {
            if t.on_sg(i) {
                t.euw.get(i) / t.eu2.get(i).re
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect();
    Vector::new(t.partition.space(), entries).expect("finite v")
}

/// `TT*T = T*TT` on matrices, cross-checked with `w = v·ū` on `S∩G`.
pub fn quasinormal_test(t: &WctOperator, tol: &ToleranceConfig) -> Result<QuasinormalResult> {
    let m = &t.matrix;
    let ms = m.adjoint();
    let lhs = &(m * &ms) * m;
    let rhs = &(&ms * m) * m;
    let matrix_residual = op_gap(&lhs, &rhs);
    let by_matrix = matrix_residual <= tol.residual_tol;

    let v = v_function(t);
    let scale = t.w.max_abs();
    let closed_form_residual = t
        .supports
        .sg
        .iter()
        .map(|&i| (t.w.get(i) - v.get(i) * t.u.get(i).conj()).norm())
        .fold(0.0, f64::max)
        / scale.max(f64::MIN_POSITIVE);
    let by_formula = closed_form_residual <= tol.residual_tol;

    if by_matrix != by_formula {
        return Err(Error::consistency(
            "quasinormal",
            format!(
                "matrix test {by_matrix} (residual {matrix_residual:e}) vs closed form {by_formula} (residual {closed_form_residual:e})"
            ),
        ));
    }
    Ok(QuasinormalResult {
        is_quasinormal: by_matrix,
        v: by_matrix.then_some(v),
        matrix_residual,
        closed_form_residual,
    })
}

/// `|E(uw)| = 1` on `F`.
pub fn quasi_isometry_closed_form(t: &WctOperator, tol: &ToleranceConfig) -> bool {
    t.supports
        .f
        .iter()
        .all(|&i| (t.euw.get(i).norm() - 1.0).abs() <= tol.residual_tol)
}

/// `T*ⁿTⁿ = T*ⁿ⁺¹Tⁿ⁺¹`, cross-checked with the closed form.
pub fn quasi_isometry_test(t: &WctOperator, n: usize, tol: &ToleranceConfig) -> Result<bool> {
    if n == 0 {
        return Err(Error::Precondition("quasi-isometry order must be at least 1".into()));
    }
    let m = &t.matrix;
    let tn = m.pow(n);
    let lhs = &tn.adjoint() * &tn;
    let tn1 = m * &tn;
    let rhs = &tn1.adjoint() * &tn1;
    let residual = op_gap(&lhs, &rhs);
    let by_matrix = residual <= tol.residual_tol;
    let by_formula = quasi_isometry_closed_form(t, tol);
    if by_matrix != by_formula {
        return Err(Error::consistency(
            "quasi_isometry",
            format!("order {n}: matrix test {by_matrix} (residual {residual:e}) vs |E(uw)| = 1 on F {by_formula}"),
        ));
    }
    Ok(by_matrix)
}

#[derive(Debug, Clone)]
pub struct PinvCheck {
    /// `M_{χ_{S∩G}/(E|u|²E|w|²)} T*`.
    pub formula: Operator,
    /// Relative gap to the SVD pseudoinverse.
    pub svd_residual: f64,
    /// Largest Penrose-identity residual of the closed form.
    pub penrose_residual: f64,
    /// Whether `T† = T*` on matrices (agrees with `E|u|²E|w|² = χ_{S∩G}`).
    pub equals_adjoint: bool,
}

pub fn wct_pinv(t: &WctOperator, tol: &ToleranceConfig) -> Result<PinvCheck> {
    let n = t.u.dim();
    let coeff: Vec<C64> = (0..n)
        .map(|i| {
            if t.on_sg(i) {
                C64::new(1.0 / (t.eu2.get(i).re * t.ew2.get(i).re), 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect();
    let coeff = Vector::new(t.partition.space(), coeff).expect("finite coefficients");
    let m = &t.matrix;
    let ms = m.adjoint();
    let formula = &mult_op(&coeff) * &ms;

    let svd = pinv(m, tol);
    let svd_residual = op_gap(&formula, &svd);
    if svd_residual > tol.residual_tol.max(1e-8) {
        return Err(Error::consistency(
            "moore_penrose",
            format!("closed form differs from SVD pseudoinverse by {svd_residual:e}"),
        ));
    }
    let tp = &formula;
    let penrose_residual = [
        op_gap(&(&(m * tp) * m), m),
        op_gap(&(&(tp * m) * tp), tp),
        op_gap(&(m * tp).adjoint(), &(m * tp)),
        op_gap(&(tp * m).adjoint(), &(tp * m)),
    ]
    .into_iter()
    .fold(0.0, f64::max);

    let by_matrix = op_gap(&formula, &ms) <= tol.residual_tol;
    let by_formula = product_is_chi_sg(t, tol);
    if by_matrix != by_formula {
        return Err(Error::consistency(
            "pinv_equals_adjoint",
            format!("T† = T* on matrices {by_matrix} vs E|u|²E|w|² = χ_SG {by_formula}"),
        ));
    }
    Ok(PinvCheck {
        formula,
        svd_residual,
        penrose_residual,
        equals_adjoint: by_matrix,
    })
}

fn product_is_chi_sg(t: &WctOperator, tol: &ToleranceConfig) -> bool {
    t.supports
        .sg
        .iter()
        .all(|&i| (t.eu2.get(i).re * t.ew2.get(i).re - 1.0).abs() <= tol.residual_tol)
}

/// `TT*T = T`, cross-checked with `E|u|²E|w|² = χ_{S∩G}` and with the
/// `T† = T*` verdict of [`wct_pinv`].
pub fn partial_isometry_test(t: &WctOperator, tol: &ToleranceConfig) -> Result<bool> {
    let m = &t.matrix;
    let lhs = &(m * &m.adjoint()) * m;
    let residual = op_gap(&lhs, m);
    let by_matrix = residual <= tol.residual_tol;
    let by_formula = product_is_chi_sg(t, tol);
    let by_pinv = wct_pinv(t, tol)?.equals_adjoint;
    if by_matrix != by_formula || by_formula != by_pinv {
        return Err(Error::consistency(
            "partial_isometry",
            format!("TT*T = T {by_matrix} (residual {residual:e}), closed form {by_formula}, T† = T* {by_pinv}"),
        ));
    }
    Ok(by_matrix)
}

/// Whether `M_g T = 0` for block-constant `g`, cross-checked with `g = 0` on
/// `S∩G` and with `‖M_g T‖² = max |g|² E|w|² E|u|²`.
pub fn mg_annihilation_test(g: &Vector, t: &WctOperator, tol: &ToleranceConfig) -> Result<bool> {
    ensure_same_space(g.space(), t.partition.space())?;
    t.partition.ensure_measurable(g, tol)?;
    let mg_t = &mult_op(g) * &t.matrix;
    let norm = operator_norm(&mg_t);
    let t_norm = operator_norm(&t.matrix);
    let g_scale = g.max_abs();
    let by_matrix = norm <= tol.residual_tol * g_scale * t_norm;

    let cut = tol.rank_tol * g_scale;
    let by_support = t.supports.sg.iter().all(|&i| g.get(i).norm() <= cut);

    let formula_sq = (0..g.dim())
        .map(|i| g.get(i).norm_sqr() * t.ew2.get(i).re * t.eu2.get(i).re)
        .fold(0.0, f64::max);
    let identity_gap = rel_gap(norm * norm, formula_sq);
    let identity_ok = identity_gap <= tol.residual_tol.max(1e-8) || (norm * norm).max(formula_sq) <= f64::EPSILON * (g_scale * t_norm).powi(2);

    if by_matrix != by_support || !identity_ok {
        return Err(Error::consistency(
            "mg_annihilation",
            format!("M_gT = 0 {by_matrix}, g = 0 on S∩G {by_support}, norm identity gap {identity_gap:e}"),
        ));
    }
    Ok(by_matrix)
}

/// Block-constant `a` with `w = a·ū`, if one exists.
pub fn conjugate_factor(t: &WctOperator, tol: &ToleranceConfig) -> Option<Vector> {
    let p = &t.partition;
    let values: Vec<C64> = (0..p.num_blocks())
        .map(|b| {
            let i = p.blocks()[b][0];
            if t.supports.s.binary_search(&i).is_ok() {
                t.euw.get(i) / t.eu2.get(i).re
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect();
    let a = p.broadcast(&values);
    let scale = t.w.max_abs();
    let residual = (0..t.w.dim())
        .map(|i| (t.w.get(i) - a.get(i) * t.u.get(i).conj()).norm())
        .fold(0.0, f64::max);
    (residual <= tol.residual_tol * scale.max(f64::MIN_POSITIVE) || scale == 0.0).then_some(a)
}
