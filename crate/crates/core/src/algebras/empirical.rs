use nalgebra::DMatrix;

use super::profile::{classify, Bound, Verdict};
use super::rm::RmFamily;
use crate::error::Result;
use crate::hilbert::linalg::{largest_singular_value, singular_values};
use crate::hilbert::majorize::majorize_unitary;
use crate::hilbert::space::{ensure_same_space, Operator, C64};
use crate::tolerance::ToleranceConfig;

/// Powers `Tⁿ`, `n = 1..=N_max`, in the unitary picture, with the two
/// numerical guards used by the power profile: an exactly-nilpotent collapse
/// and a conditioning horizon past which kernels of `Tⁿ` are unreliable.
pub(crate) struct PowerSequence {
    pub powers: Vec<DMatrix<C64>>,
    pub horizon: Option<usize>,
}

impl PowerSequence {
    pub fn new(t: &DMatrix<C64>, max_power: usize, tol: &ToleranceConfig) -> Self {
        let n = t.nrows();
        let t_norm = largest_singular_value(t);
        let window = tol.conditioning_horizon();
        let mut powers = Vec::with_capacity(max_power);
        let mut current = DMatrix::<C64>::identity(n, n);
        let mut prev_norm = 1.0;
        let mut zero = t_norm == 0.0;
        let mut horizon = None;
        for k in 1..=max_power {
            if zero {
                powers.push(DMatrix::zeros(n, n));
                continue;
            }
            current = t * &current;
            let sv = singular_values(&current);
            let top = sv.iter().copied().fold(0.0, f64::max);
            if top <= tol.rank_tol * t_norm * prev_norm {
                zero = true;
                current = DMatrix::zeros(n, n);
                powers.push(current.clone());
                continue;
            }
            let ambiguous = sv.iter().any(|&s| {
                let rel = s / top;
                rel > tol.rank_tol && rel <= window
            });
            if ambiguous {
                horizon = Some(k);
                break;
            }
            prev_norm = top;
            powers.push(current.clone());
        }
        Self { powers, horizon }
    }

    fn note(&self) -> String {
        match self.horizon {
            Some(k) => format!("; powers truncated at n = {k} (ill-conditioned kernel)"),
            None => String::new(),
        }
    }
}

/// Empirical `D_T` membership: `c_n` is the least `M` with
/// `‖TⁿSx‖ ≤ M‖Tⁿx‖`, or infinite when `ker Tⁿ ⊄ ker TⁿS`.
pub fn deddens_empirical(t: &Operator, s: &Operator, tol: &ToleranceConfig) -> Result<Verdict> {
    ensure_same_space(t.space(), s.space())?;
    let su = s.to_unitary();
    let s_norm = largest_singular_value(&su);
    let seq = PowerSequence::new(&t.to_unitary(), tol.max_power, tol);

    let mut indices = Vec::with_capacity(seq.powers.len());
    let mut values = Vec::with_capacity(seq.powers.len());
    for (k, tn) in seq.powers.iter().enumerate() {
        indices.push(k + 1);
        let tn_norm = largest_singular_value(tn);
        let tns = tn * &su;
        let scale = tn_norm * s_norm;
        if largest_singular_value(&tns) <= tol.residual_tol * scale {
            values.push(Bound::Finite(0.0));
            continue;
        }
        let res = majorize_unitary(t.space(), tn, &tns, tol.rank_tol * tn_norm, tol.residual_tol * scale);
        values.push(res.constant.map_or(Bound::Infinite, Bound::Finite));
    }
    Ok(classify(indices, values, tol, &seq.note()))
}

/// Empirical `B_T` membership from `β_m = ‖R_m S R_m⁻¹‖`, `m = 1..=M_max`.
pub fn bt_empirical(t: &Operator, s: &Operator, tol: &ToleranceConfig) -> Result<Verdict> {
    ensure_same_space(t.space(), s.space())?;
    let fam = RmFamily::build(t, tol)?;
    Ok(bt_from_family(&fam, s, tol))
}

pub(crate) fn bt_from_family(fam: &RmFamily, s: &Operator, tol: &ToleranceConfig) -> Verdict {
    let mut indices = Vec::with_capacity(fam.members.len());
    let mut values = Vec::with_capacity(fam.members.len());
    for mem in &fam.members {
        indices.push(mem.m);
        let conj = &(&mem.r_m * s) * &mem.r_m_inv;
        values.push(Bound::Finite(largest_singular_value(&conj.to_unitary())));
    }
    classify(indices, values, tol, "")
}
