//! Dense primitives in the weighted geometry.

use std::sync::Arc;

use nalgebra::linalg::{Schur, SymmetricEigen, SVD};
use nalgebra::{DMatrix, DVector};

use super::space::{MeasureSpace, Operator, Vector, C64};
use crate::error::{Error, Result};
use crate::tolerance::ToleranceConfig;

const SCHUR_MAX_ITERATIONS: usize = 20_000;

impl Operator {
    /// Weighted adjoint: `⟨Tf, g⟩ = ⟨f, T*g⟩`, i.e. `D⁻¹ Tᴴ D`.
    pub fn adjoint(&self) -> Operator {
        let w = self.space().weights();
        let n = self.dim();
        let m = self.matrix();
        Operator::from_matrix(
            self.space(),
            DMatrix::from_fn(n, n, |i, j| m[(j, i)].conj() * (w[j] / w[i])),
        )
    }

    /// Largest singular value in the weighted geometry.
    pub fn norm(&self) -> f64 {
        operator_norm(self)
    }
}

pub fn adjoint(t: &Operator) -> Operator {
    t.adjoint()
}

pub fn operator_norm(t: &Operator) -> f64 {
    largest_singular_value(&t.to_unitary())
}

/// Copy of `m` with entries far below machine precision (relative to the
/// largest) set to zero. They cannot move any singular value, and mixing
/// them with O(1) entries can make the SVD iteration produce NaN.
pub(crate) fn flushed(m: &DMatrix<C64>) -> DMatrix<C64> {
    let max = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let floor = max * f64::EPSILON * 1e-8;
    m.map(|z| if z.norm() < floor { C64::new(0.0, 0.0) } else { z })
}

pub(crate) fn singular_values(m: &DMatrix<C64>) -> DVector<f64> {
    flushed(m).singular_values()
}

pub(crate) fn largest_singular_value(m: &DMatrix<C64>) -> f64 {
    if m.iter().all(|z| *z == C64::new(0.0, 0.0)) {
        return 0.0;
    }
    singular_values(m).iter().copied().fold(0.0, f64::max)
}

/// Spectral radius: the largest eigenvalue modulus, read off the complex
/// Schur form. Falls back to the Gelfand limit by repeated squaring if the
/// QR iteration does not converge.
pub fn spectral_radius(t: &Operator) -> f64 {
    let m = t.to_unitary();
    if m.iter().all(|z| *z == C64::new(0.0, 0.0)) {
        return 0.0;
    }
    let n = m.nrows();
    match Schur::try_new(m.clone(), f64::EPSILON, SCHUR_MAX_ITERATIONS) {
        Some(schur) => {
            let (_, tri) = schur.unpack();
            (0..n).map(|i| tri[(i, i)].norm()).fold(0.0, f64::max)
        }
        None => gelfand_limit(&m),
    }
}

/// `lim ‖T^{2^k}‖^{1/2^k}` with the iterate renormalised at every squaring.
fn gelfand_limit(m: &DMatrix<C64>) -> f64 {
    let first = largest_singular_value(m);
    if first == 0.0 {
        return 0.0;
    }
    let mut b = m / C64::new(first, 0.0);
    let mut log_estimate = first.ln();
    let mut scale = 1.0;
    for _ in 0..60 {
        let sq = &b * &b;
        let nb = largest_singular_value(&sq);
        if nb <= 64.0 * f64::EPSILON {
            return 0.0;
        }
        scale *= 0.5;
        let next = log_estimate + nb.ln() * scale;
        b = sq / C64::new(nb, 0.0);
        let converged = (next.exp() - log_estimate.exp()).abs() <= 1e-12 * next.exp();
        log_estimate = next;
        if converged {
            break;
        }
    }
    log_estimate.exp()
}

/// Eigen-decomposition of a weighted-self-adjoint operator, returned in the
/// unitary picture: `D^{1/2} P D^{-1/2} = V diag(λ) Vᴴ`.
pub(crate) struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

impl HermitianEigen {
    pub(crate) fn of(p: &Operator, tol: &ToleranceConfig) -> Result<Self> {
        let m = p.to_unitary();
        let scale = largest_singular_value(&m).max(1.0);
        let asym = largest_singular_value(&(&m - m.adjoint()));
        if asym > tol.residual_tol * scale {
            return Err(Error::NotSelfAdjoint {
                residual: asym / scale,
            });
        }
        let sym = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(sym);
        Ok(Self {
            values: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
        })
    }

    /// `V diag(f(λ)) Vᴴ`, mapped back to weighted coordinates.
    pub(crate) fn apply_fn(&self, space: &Arc<MeasureSpace>, f: impl Fn(f64) -> f64) -> Operator {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (j, &lambda) in self.values.iter().enumerate() {
            let fj = C64::new(f(lambda), 0.0);
            for i in 0..n {
                scaled[(i, j)] *= fj;
            }
        }
        Operator::from_unitary(space, &(scaled * self.vectors.adjoint()))
    }

    pub(crate) fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Positive square root of a positive semidefinite operator.
pub fn hermitian_sqrt(p: &Operator, tol: &ToleranceConfig) -> Result<Operator> {
    let eig = HermitianEigen::of(p, tol)?;
    let norm = eig.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let min = eig.min_value();
    if min < -tol.rank_tol * norm {
        return Err(Error::NotPositive {
            min_eigenvalue: min,
        });
    }
    Ok(eig.apply_fn(p.space(), |l| l.max(0.0).sqrt()))
}

pub(crate) type Svd = SVD<C64, nalgebra::Dyn, nalgebra::Dyn>;

fn reconstruction_gap(m: &DMatrix<C64>, d: &Svd) -> f64 {
    let (Some(u), Some(v_t)) = (d.u.as_ref(), d.v_t.as_ref()) else {
        return f64::INFINITY;
    };
    let sigma = DMatrix::from_diagonal(&d.singular_values.map(|x| C64::new(x, 0.0)));
    (u * sigma * v_t - m).norm()
}

/// Unitary DFT matrix of order `n`.
fn dft(n: usize) -> DMatrix<C64> {
    let scale = 1.0 / (n as f64).sqrt();
    DMatrix::from_fn(n, n, |j, k| {
        C64::from_polar(scale, -2.0 * std::f64::consts::PI * (j * k) as f64 / n as f64)
    })
}

/// Full SVD with a reconstruction check. On some sparse, exactly
/// rank-deficient inputs the Golub-Kahan iteration returns factors that do
/// not reproduce the matrix; those are redone on `F m G*` for unitary DFTs
/// `F`, `G` and rotated back.
pub(crate) fn svd(m: &DMatrix<C64>) -> Svd {
    let m = flushed(m);
    let scale = m.norm().max(f64::MIN_POSITIVE);
    let limit = 1e-12 * scale * (m.nrows().max(1) as f64);
    let d = SVD::new(m.clone(), true, true);
    if reconstruction_gap(&m, &d) <= limit {
        return d;
    }
    let (f, g) = (dft(m.nrows()), dft(m.ncols()));
    let rotated = &f * &m * g.adjoint();
    let mut r = SVD::new(rotated, true, true);
    r.u = r.u.map(|u| f.adjoint() * u);
    r.v_t = r.v_t.map(|v_t| v_t * &g);
    r
}

fn cutoff(singular_values: &DVector<f64>, rank_tol: f64) -> f64 {
    rank_tol * singular_values.iter().copied().fold(0.0, f64::max)
}

/// Numerical rank of the coordinate matrix in the unitary picture.
pub fn numerical_rank(t: &Operator, tol: &ToleranceConfig) -> usize {
    rank_of(&t.to_unitary(), tol.rank_tol)
}

pub(crate) fn rank_of(m: &DMatrix<C64>, rank_tol: f64) -> usize {
    let sv = singular_values(m);
    let cut = cutoff(&sv, rank_tol);
    sv.iter().filter(|&&s| s > cut && s > 0.0).count()
}

/// Moore–Penrose inverse in the weighted geometry.
pub fn pinv(t: &Operator, tol: &ToleranceConfig) -> Operator {
    let m = t.to_unitary();
    let n = m.nrows();
    if m.iter().all(|z| *z == C64::new(0.0, 0.0)) {
        return Operator::zeros(t.space());
    }
    let d = svd(&m);
    let cut = cutoff(&d.singular_values, tol.rank_tol);
    let u = d.u.as_ref().expect("u requested");
    let v_t = d.v_t.as_ref().expect("v_t requested");
    let mut out = DMatrix::<C64>::zeros(n, n);
    for (k, &s) in d.singular_values.iter().enumerate() {
        if s > cut && s > 0.0 {
            let vk = v_t.row(k).adjoint();
            let uk = u.column(k);
            out += (vk * uk.adjoint()) * C64::new(1.0 / s, 0.0);
        }
    }
    Operator::from_unitary(t.space(), &out)
}

/// Weighted-orthonormal basis of the numerical null space.
pub fn kernel_basis(t: &Operator, tol: &ToleranceConfig) -> Vec<Vector> {
    let m = t.to_unitary();
    let space = t.space();
    let n = m.nrows();
    if m.iter().all(|z| *z == C64::new(0.0, 0.0)) {
        return (0..n).map(|i| Vector::basis(space, i).scale(C64::new(1.0 / space.weights()[i].sqrt(), 0.0))).collect();
    }
    let d = svd(&m);
    let cut = cutoff(&d.singular_values, tol.rank_tol);
    let v_t = d.v_t.as_ref().expect("v_t requested");
    d.singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= cut || s == 0.0)
        .map(|(k, _)| Vector::from_unitary(space, &v_t.row(k).adjoint()))
        .collect()
}

/// Weighted-orthonormal basis of the numerical range.
pub fn range_basis(t: &Operator, tol: &ToleranceConfig) -> Vec<Vector> {
    let m = t.to_unitary();
    if m.iter().all(|z| *z == C64::new(0.0, 0.0)) {
        return Vec::new();
    }
    let d = svd(&m);
    let cut = cutoff(&d.singular_values, tol.rank_tol);
    let u = d.u.as_ref().expect("u requested");
    d.singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > cut && s > 0.0)
        .map(|(k, _)| Vector::from_unitary(t.space(), &u.column(k).into_owned()))
        .collect()
}

/// Orthogonal projection onto the span of weighted-orthonormal vectors.
pub fn projection_onto(space: &Arc<MeasureSpace>, basis: &[Vector]) -> Operator {
    let n = space.dim();
    let mut m = DMatrix::<C64>::zeros(n, n);
    for v in basis {
        let u = v.to_unitary();
        m += &u * u.adjoint();
    }
    Operator::from_unitary(space, &m)
}

/// Relative distance `‖A − B‖ / max(scale, tiny)` measured in operator norm.
pub fn relative_residual(a: &Operator, b: &Operator, scale: f64) -> f64 {
    let diff = operator_norm(&(a - b));
    if diff == 0.0 {
        0.0
    } else {
        diff / scale.max(f64::MIN_POSITIVE)
    }
}

/// `‖A − B‖ / max(‖A‖, ‖B‖)`, zero when both vanish.
pub fn operator_gap(a: &Operator, b: &Operator) -> f64 {
    let d = operator_norm(&(a - b));
    if d == 0.0 {
        return 0.0;
    }
    d / operator_norm(a).max(operator_norm(b))
}
