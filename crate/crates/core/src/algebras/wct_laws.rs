use nalgebra::DMatrix;

use super::empirical::{bt_empirical, deddens_empirical};
use super::profile::Verdict;
use crate::condexp::{block_decomposition, WctOperator};
use crate::error::{Error, Result};
use crate::hilbert::linalg::{largest_singular_value, operator_norm, projection_onto};
use crate::hilbert::space::{ensure_same_space, inner, MeasureSpace, Operator, Vector, C64};
use crate::tolerance::ToleranceConfig;

/// Pattern law for diagonal `M_φ`: every entry `S_ij` above the noise floor
/// needs `|φ_i| ≤ |φ_j|`. Evaluated in orthonormal coordinates.
pub fn multiplication_pattern(phi: &[C64], su: &DMatrix<C64>, tol: &ToleranceConfig) -> bool {
    let cut = tol.rank_tol * largest_singular_value(su);
    let n = phi.len();
    (0..n).all(|i| {
        (0..n).all(|j| su[(i, j)].norm() <= cut || phi[i].norm() <= phi[j].norm() + tol.rank_tol)
    })
}

fn check_against(check: &str, verdict: bool, emp: &Verdict) -> Result<()> {
    match emp.membership() {
        Some(m) if m != verdict => Err(Error::consistency(
            check,
            format!("closed form {verdict} vs empirical {m}: {}", emp.reason),
        )),
        _ => Ok(()),
    }
}

/// `S ∈ D_{M_φ}` by the pattern law, cross-checked against the empirical
/// power profile.
pub fn deddens_multiplication(phi: &Vector, s: &Operator, tol: &ToleranceConfig) -> Result<bool> {
    ensure_same_space(phi.space(), s.space())?;
    let verdict = multiplication_pattern(&phi.to_vec(), &s.to_unitary(), tol);
    let emp = deddens_empirical(&Operator::diagonal(phi), s, tol)?;
    check_against("multiplication_pattern", verdict, &emp)?;
    Ok(verdict)
}

/// Block-constant `a` with `w = a·ū`, validated for the block theorem.
fn conjugate_symbol(t: &WctOperator, a: &Vector, tol: &ToleranceConfig) -> Result<()> {
    let p = t.partition();
    ensure_same_space(a.space(), p.space())?;
    p.ensure_measurable(a, tol)?;
    let scale = t.w().max_abs().max(a.max_abs() * t.u().max_abs());
    let residual = (0..a.dim())
        .map(|i| (t.w().get(i) - a.get(i) * t.u().get(i).conj()).norm())
        .fold(0.0, f64::max);
    if residual > tol.residual_tol * scale {
        return Err(Error::Precondition(format!(
            "w differs from a·conj(u) by {:e}",
            residual / scale.max(f64::MIN_POSITIVE)
        )));
    }
    let s_atoms = &t.supports().s;
    let cut = tol.rank_tol * a.max_abs();
    if let Some(&i) = s_atoms.iter().find(|&&i| a.get(i).norm() <= cut) {
        return Err(Error::Precondition(format!(
            "a vanishes on block {} where E|u|² > 0",
            p.block_of(i) + 1
        )));
    }
    Ok(())
}

/// Compression `⟨S h_l, h_k⟩` onto an orthonormal family.
fn compress(s: &Operator, basis: &[Vector]) -> Result<DMatrix<C64>> {
    let k = basis.len();
    let images: Vec<Vector> = basis.iter().map(|h| s.apply(h)).collect();
    let mut m = DMatrix::<C64>::zeros(k, k);
    for r in 0..k {
        for c in 0..k {
            m[(r, c)] = inner(&images[c], &basis[r])?;
        }
    }
    Ok(m)
}

/// `S ∈ D_T` for `T = M_{aū} E M_u`: `PSP = PS` and the compression `PSP`
/// lies in `D_{M_{a E|u|²}}`.
pub fn deddens_wct_block(t: &WctOperator, a: &Vector, s: &Operator, tol: &ToleranceConfig) -> Result<bool> {
    ensure_same_space(s.space(), t.partition().space())?;
    conjugate_symbol(t, a, tol)?;
    let d = block_decomposition(t, tol)?;
    let s_norm = operator_norm(s);
    let ps = &d.p * s;
    let psp = &ps * &d.p;
    let invariant = operator_norm(&(&psp - &ps)) <= tol.residual_tol * s_norm;

    let phi: Vec<C64> = d
        .h1_blocks
        .iter()
        .map(|&b| {
            let i = t.partition().blocks()[b][0];
            a.get(i) * t.eu2().get(i)
        })
        .collect();
    let compressed = if phi.is_empty() {
        true
    } else {
        let space = MeasureSpace::uniform(phi.len());
        let x = Operator::new(&space, compress(s, &d.h1_basis)?)?;
        let phi_v = Vector::new(&space, phi)?;
        deddens_multiplication(&phi_v, &x, tol)?
    };
    let verdict = invariant && compressed;
    let emp = deddens_empirical(t.matrix(), s, tol)?;
    check_against("wct_block_deddens", verdict, &emp)?;
    Ok(verdict)
}

/// `N(E M_u)` is invariant under `S`.
pub fn kernel_invariant(t: &WctOperator, s: &Operator, tol: &ToleranceConfig) -> Result<bool> {
    ensure_same_space(s.space(), t.partition().space())?;
    let d = block_decomposition(t, tol)?;
    let spp = &d.pperp * &(s * &d.pperp);
    let sp = s * &d.pperp;
    Ok(operator_norm(&(&spp - &sp)) <= tol.residual_tol * operator_norm(s))
}

/// Projection onto `span{ū·χ_B}` over the blocks whose eigenvalue `E(uw)_B`
/// attains the spectral radius (all blocks of `S∩G` when the radius is 0).
pub fn top_block_projection(t: &WctOperator, tol: &ToleranceConfig) -> Operator {
    let p = t.partition();
    let sg = &t.supports().sg;
    let sg_blocks: Vec<usize> = (0..p.num_blocks())
        .filter(|&b| sg.binary_search(&p.blocks()[b][0]).is_ok())
        .collect();
    let modulus = |b: usize| t.euw().get(p.blocks()[b][0]).norm();
    let r = sg_blocks.iter().map(|&b| modulus(b)).fold(0.0, f64::max);
    let ub = t.u().conj();
    let basis: Vec<Vector> = sg_blocks
        .into_iter()
        .filter(|&b| r == 0.0 || modulus(b) >= r * (1.0 - tol.residual_tol))
        .filter_map(|b| ub.hadamard(&p.block_indicator([b])).normalized().ok())
        .collect();
    projection_onto(p.space(), &basis)
}

/// `S ∈ B_T` iff `Q S (I − Q) = 0`, `Q` from [`top_block_projection`].
/// Coincides with [`kernel_invariant`] when every block of `S` attains the
/// radius. Cross-checked against the `R_m` profile when that is conclusive.
pub fn bt_wct(t: &WctOperator, s: &Operator, tol: &ToleranceConfig) -> Result<bool> {
    ensure_same_space(s.space(), t.partition().space())?;
    let q = top_block_projection(t, tol);
    let qc = &Operator::identity(s.space()) - &q;
    let leak = operator_norm(&(&(&q * s) * &qc));
    let verdict = leak <= tol.residual_tol * operator_norm(s);
    match bt_empirical(t.matrix(), s, tol) {
        Ok(emp) => check_against("wct_bt", verdict, &emp)?,
        Err(Error::TruncationFailure { .. }) => {}
        Err(e) => return Err(e),
    }
    Ok(verdict)
}
