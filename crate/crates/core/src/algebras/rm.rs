use nalgebra::linalg::SymmetricEigen;
use nalgebra::DMatrix;

use super::profile::Bound;
use crate::error::{Error, Result};
use crate::hilbert::linalg::{largest_singular_value, spectral_radius};
use crate::hilbert::space::{Operator, C64};
use crate::tolerance::ToleranceConfig;

/// `d_m = 1 / (1/m + r)`.
pub fn d_coeff(m: usize, r: f64) -> f64 {
    1.0 / (1.0 / m as f64 + r)
}

/// `α_m = Σ_{n≥1} d_m^{2n}`, infinite once `d_m ≥ 1`.
pub fn alpha_m(m: usize, r: f64) -> Bound {
    let d = d_coeff(m, r);
    if d >= 1.0 {
        Bound::Infinite
    } else {
        let d2 = d * d;
        Bound::Finite(d2 / (1.0 - d2))
    }
}

/// Gram powers `T*ⁿTⁿ` in the unitary picture, shared across all `m`. Each
/// is stored at unit norm with `ln ‖Tⁿ‖²` kept apart, so long series neither
/// overflow nor underflow.
struct GramPowers {
    grams: Vec<DMatrix<C64>>,
    log_norms: Vec<f64>,
    /// `Tⁿ = 0` exactly for every `n ≥ grams.len()`.
    terminated: bool,
}

impl GramPowers {
    fn new(t: &DMatrix<C64>, cap: usize, rank_tol: f64) -> Self {
        let n = t.nrows();
        let t_norm = largest_singular_value(t);
        let mut power = DMatrix::<C64>::identity(n, n);
        let mut log_norm = 0.0;
        let mut grams = vec![DMatrix::<C64>::identity(n, n)];
        let mut log_norms = vec![0.0];
        let mut terminated = false;
        for _ in 1..=cap {
            // `power` holds Tⁿ/‖Tⁿ‖, so the ratio below is ‖Tⁿ⁺¹‖/‖Tⁿ‖
            power = t * &power;
            let ratio = largest_singular_value(&power);
            if ratio <= rank_tol * t_norm {
                terminated = true;
                break;
            }
            power /= C64::new(ratio, 0.0);
            log_norm += 2.0 * ratio.ln();
            grams.push(power.adjoint() * &power);
            log_norms.push(log_norm);
        }
        Self {
            grams,
            log_norms,
            terminated,
        }
    }
}

/// One member of the family: `R_m` and its inverse, both self-adjoint.
#[derive(Debug, Clone)]
pub struct RmMember {
    pub m: usize,
    pub r_m: Operator,
    pub r_m_inv: Operator,
    pub truncation_n: usize,
    pub tail_estimate: f64,
}

#[derive(Debug, Clone)]
pub struct RmFamily {
    pub members: Vec<RmMember>,
    pub radius: f64,
}

const CONSECUTIVE_SMALL: usize = 3;

fn member(t: &Operator, grams: &GramPowers, m: usize, r: f64, tol: &ToleranceConfig) -> Result<RmMember> {
    let n = t.dim();
    let log_d2 = 2.0 * d_coeff(m, r).ln();
    let mut sum = DMatrix::<C64>::identity(n, n);
    let mut sum_norm = 1.0;
    let mut small_run = 0;
    let mut prev_term = 1.0;
    let mut ratios = [f64::INFINITY; CONSECUTIVE_SMALL];
    let mut last_term = 0.0;
    let mut stop: Option<(usize, f64)> = None;

    for k in 1..grams.grams.len() {
        let term = (k as f64 * log_d2 + grams.log_norms[k]).exp();
        sum += &grams.grams[k] * C64::new(term, 0.0);
        sum_norm += term;
        ratios[k % CONSECUTIVE_SMALL] = if prev_term > 0.0 { term / prev_term } else { 0.0 };
        prev_term = term;
        last_term = term;
        if term < tol.series_term_tol * sum_norm {
            small_run += 1;
        } else {
            small_run = 0;
        }
        if small_run >= CONSECUTIVE_SMALL {
            let q = ratios.iter().copied().fold(0.0, f64::max);
            if q < 1.0 {
                let tail = term * q / (1.0 - q);
                if tail <= tol.series_term_tol * sum_norm {
                    stop = Some((k, tail / sum_norm));
                    break;
                }
            }
        }
    }
    let (truncation_n, tail_estimate) = match stop {
        Some(s) => s,
        None if grams.terminated => (grams.grams.len() - 1, 0.0),
        None => {
            return Err(Error::TruncationFailure {
                m,
                terms: grams.grams.len() - 1,
                last_term,
            })
        }
    };

    let sym = (&sum + sum.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let v = &eig.eigenvectors;
    let scaled = |f: &dyn Fn(f64) -> f64| {
        let mut w = v.clone();
        for (j, &l) in eig.eigenvalues.iter().enumerate() {
            let s = C64::new(f(l.max(1.0)), 0.0);
            for i in 0..n {
                w[(i, j)] *= s;
            }
        }
        w * v.adjoint()
    };
    let root = scaled(&|l| l.sqrt());
    let inv_root = scaled(&|l| 1.0 / l.sqrt());
    Ok(RmMember {
        m,
        r_m: Operator::from_unitary(t.space(), &root),
        r_m_inv: Operator::from_unitary(t.space(), &inv_root),
        truncation_n,
        tail_estimate,
    })
}

impl RmFamily {
    /// `R_1, …, R_{max_index}`.
    pub fn build(t: &Operator, tol: &ToleranceConfig) -> Result<Self> {
        Self::build_range(t, 1..=tol.max_index, tol)
    }

    pub fn build_range(
        t: &Operator,
        ms: impl IntoIterator<Item = usize>,
        tol: &ToleranceConfig,
    ) -> Result<Self> {
        let radius = spectral_radius(t);
        let grams = GramPowers::new(&t.to_unitary(), tol.series_cap(), tol.rank_tol);
        let members = ms
            .into_iter()
            .map(|m| member(t, &grams, m, radius, tol))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { members, radius })
    }
}

/// `R_m = (Σ_n d_m^{2n} T*ⁿTⁿ)^{1/2}` with its truncation index and tail bound.
pub fn build_rm(t: &Operator, m: usize, tol: &ToleranceConfig) -> Result<(Operator, usize, f64)> {
    if m == 0 {
        return Err(Error::Precondition("m must be at least 1".into()));
    }
    let fam = RmFamily::build_range(t, [m], tol)?;
    let mem = fam.members.into_iter().next().expect("one member");
    Ok((mem.r_m, mem.truncation_n, mem.tail_estimate))
}
