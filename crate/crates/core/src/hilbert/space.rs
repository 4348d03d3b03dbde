//! Finite atomic measure spaces and the vectors and operators living on
//! `L²(μ)` over them.
//!
//! Coordinates are plain function values `f_i = f(atom i)`. The inner product
//! is weighted, `⟨f, g⟩ = Σ μ_i f_i conj(g_i)`, so the coordinate matrix of an
//! adjoint is `D⁻¹ Tᴴ D` with `D = diag(μ)`. Norms, SVDs and square roots go
//! through the unitary picture `D^{1/2} T D^{-1/2}`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpace {
    weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

impl MeasureSpace {
    pub fn new(weights: Vec<f64>) -> Result<Arc<Self>> {
        Self::with_labels(weights, None)
    }

    pub fn with_labels(weights: Vec<f64>, labels: Option<Vec<String>>) -> Result<Arc<Self>> {
        if weights.is_empty() {
            return Err(Error::InvalidSpace("at least one atom is required".into()));
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w > 0.0))
        {
            return Err(Error::InvalidSpace(format!(
                "atom {} has nonpositive mass {w}",
                i + 1
            )));
        }
        if let Some(labels) = &labels {
            if labels.len() != weights.len() {
                return Err(Error::DimensionMismatch {
                    expected: weights.len(),
                    found: labels.len(),
                });
            }
        }
        Ok(Arc::new(Self { weights, labels }))
    }

    pub fn uniform(n: usize) -> Arc<Self> {
        Self::new(vec![1.0; n.max(1)]).expect("uniform weights are valid")
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub(crate) fn sqrt_weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.weights.iter().map(|w| w.sqrt())
    }
}

pub(crate) fn ensure_same_space(a: &Arc<MeasureSpace>, b: &Arc<MeasureSpace>) -> Result<()> {
    if Arc::ptr_eq(a, b) || a.weights == b.weights {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        })
    }
}

/// An element of `L²(μ)`.
#[derive(Clone)]
pub struct Vector {
    space: Arc<MeasureSpace>,
    data: DVector<C64>,
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.data.iter()).finish()
    }
}

impl Vector {
    pub fn new(space: &Arc<MeasureSpace>, entries: Vec<C64>) -> Result<Self> {
        if entries.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: entries.len(),
            });
        }
        if let Some(i) = entries.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite { row: i, col: 0 });
        }
        Ok(Self {
            space: space.clone(),
            data: DVector::from_vec(entries),
        })
    }

    pub fn from_real(space: &Arc<MeasureSpace>, entries: &[f64]) -> Result<Self> {
        Self::new(space, entries.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn zeros(space: &Arc<MeasureSpace>) -> Self {
        Self {
            space: space.clone(),
            data: DVector::zeros(space.dim()),
        }
    }

    pub fn constant(space: &Arc<MeasureSpace>, value: C64) -> Self {
        Self {
            space: space.clone(),
            data: DVector::from_element(space.dim(), value),
        }
    }

    /// Indicator of a set of (0-based) atoms.
    pub fn indicator(space: &Arc<MeasureSpace>, atoms: impl IntoIterator<Item = usize>) -> Self {
        let mut v = Self::zeros(space);
        for i in atoms {
            v.data[i] = C64::new(1.0, 0.0);
        }
        v
    }

    pub fn basis(space: &Arc<MeasureSpace>, i: usize) -> Self {
        Self::indicator(space, [i])
    }

    pub(crate) fn from_dvector(space: &Arc<MeasureSpace>, data: DVector<C64>) -> Self {
        debug_assert_eq!(data.len(), space.dim());
        Self {
            space: space.clone(),
            data,
        }
    }

    pub fn space(&self) -> &Arc<MeasureSpace> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn entries(&self) -> &DVector<C64> {
        &self.data
    }

    pub fn get(&self, i: usize) -> C64 {
        self.data[i]
    }

    pub fn to_vec(&self) -> Vec<C64> {
        self.data.iter().copied().collect()
    }

    pub fn map(&self, f: impl FnMut(C64) -> C64) -> Self {
        Self {
            space: self.space.clone(),
            data: self.data.map(f),
        }
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn abs_sq(&self) -> Self {
        self.map(|z| C64::new(z.norm_sqr(), 0.0))
    }

    /// Entrywise product.
    pub fn hadamard(&self, other: &Vector) -> Self {
        assert_eq!(self.dim(), other.dim(), "vectors on different spaces");
        Self {
            space: self.space.clone(),
            data: self.data.component_mul(&other.data),
        }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            space: self.space.clone(),
            data: &self.data * c,
        }
    }

    pub fn norm(&self) -> f64 {
        self.data
            .iter()
            .zip(self.space.weights())
            .map(|(z, w)| w * z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(self.scale(C64::new(1.0 / n, 0.0)))
    }

    /// Coordinates in the orthonormal picture, `D^{1/2} f`.
    pub(crate) fn to_unitary(&self) -> DVector<C64> {
        let mut out = self.data.clone();
        for (z, s) in out.iter_mut().zip(self.space.sqrt_weights()) {
            *z *= s;
        }
        out
    }

    pub(crate) fn from_unitary(space: &Arc<MeasureSpace>, coords: &DVector<C64>) -> Self {
        let mut data = coords.clone();
        for (z, s) in data.iter_mut().zip(space.sqrt_weights()) {
            *z /= s;
        }
        Self::from_dvector(space, data)
    }
}

impl Add for &Vector {
    type Output = Vector;
    fn add(self, rhs: &Vector) -> Vector {
        assert_eq!(self.dim(), rhs.dim(), "vectors on different spaces");
        Vector::from_dvector(&self.space, &self.data + &rhs.data)
    }
}

impl Sub for &Vector {
    type Output = Vector;
    fn sub(self, rhs: &Vector) -> Vector {
        assert_eq!(self.dim(), rhs.dim(), "vectors on different spaces");
        Vector::from_dvector(&self.space, &self.data - &rhs.data)
    }
}

/// `⟨f, g⟩ = Σ μ_i f_i conj(g_i)`.
pub fn inner(f: &Vector, g: &Vector) -> Result<C64> {
    ensure_same_space(f.space(), g.space())?;
    Ok(f.data
        .iter()
        .zip(g.data.iter())
        .zip(f.space.weights())
        .map(|((a, b), w)| a * b.conj() * *w)
        .sum())
}

/// A linear operator on `L²(μ)`, stored as its coordinate matrix.
#[derive(Clone)]
pub struct Operator {
    space: Arc<MeasureSpace>,
    mat: DMatrix<C64>,
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Operator{}", self.mat)
    }
}

impl Operator {
    pub fn new(space: &Arc<MeasureSpace>, mat: DMatrix<C64>) -> Result<Self> {
        let n = space.dim();
        if mat.nrows() != n || mat.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: if mat.nrows() != n { mat.nrows() } else { mat.ncols() },
            });
        }
        for c in 0..n {
            for r in 0..n {
                let z = mat[(r, c)];
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(Error::NonFinite { row: r, col: c });
                }
            }
        }
        Ok(Self {
            space: space.clone(),
            mat,
        })
    }

    /// Builds an operator from row-major nested rows.
    pub fn from_rows(space: &Arc<MeasureSpace>, rows: &[Vec<C64>]) -> Result<Self> {
        let n = space.dim();
        if rows.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: rows.len(),
            });
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: bad.len(),
            });
        }
        Self::new(space, DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn from_real_rows(space: &Arc<MeasureSpace>, rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(space, &rows)
    }

    pub(crate) fn from_matrix(space: &Arc<MeasureSpace>, mat: DMatrix<C64>) -> Self {
        debug_assert_eq!(mat.nrows(), space.dim());
        Self {
            space: space.clone(),
            mat,
        }
    }

    pub fn identity(space: &Arc<MeasureSpace>) -> Self {
        Self::from_matrix(space, DMatrix::identity(space.dim(), space.dim()))
    }

    pub fn zeros(space: &Arc<MeasureSpace>) -> Self {
        Self::from_matrix(space, DMatrix::zeros(space.dim(), space.dim()))
    }

    /// Multiplication operator `M_u`.
    pub fn diagonal(u: &Vector) -> Self {
        Self::from_matrix(u.space(), DMatrix::from_diagonal(u.entries()))
    }

    pub fn space(&self) -> &Arc<MeasureSpace> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn rows(&self) -> Vec<Vec<C64>> {
        (0..self.dim())
            .map(|i| self.mat.row(i).iter().copied().collect())
            .collect()
    }

    pub fn apply(&self, f: &Vector) -> Vector {
        assert_eq!(self.dim(), f.dim(), "operator and vector on different spaces");
        Vector::from_dvector(&self.space, &self.mat * f.entries())
    }

    pub fn scale(&self, c: C64) -> Self {
        Self::from_matrix(&self.space, &self.mat * c)
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(C64::new(c, 0.0))
    }

    /// `T^n`, with `T^0 = I`.
    pub fn pow(&self, n: usize) -> Self {
        let mut acc = Self::identity(&self.space);
        for _ in 0..n {
            acc = self * &acc;
        }
        acc
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.mat.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Coordinate matrix in the orthonormal picture, `D^{1/2} T D^{-1/2}`.
    pub(crate) fn to_unitary(&self) -> DMatrix<C64> {
        let s: Vec<f64> = self.space.sqrt_weights().collect();
        DMatrix::from_fn(self.dim(), self.dim(), |i, j| self.mat[(i, j)] * (s[i] / s[j]))
    }

    pub(crate) fn from_unitary(space: &Arc<MeasureSpace>, m: &DMatrix<C64>) -> Self {
        let s: Vec<f64> = space.sqrt_weights().collect();
        let n = space.dim();
        Self::from_matrix(space, DMatrix::from_fn(n, n, |i, j| m[(i, j)] * (s[j] / s[i])))
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operators on different spaces");
        Operator::from_matrix(&self.space, &self.mat + &rhs.mat)
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operators on different spaces");
        Operator::from_matrix(&self.space, &self.mat - &rhs.mat)
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operators on different spaces");
        Operator::from_matrix(&self.space, &self.mat * &rhs.mat)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator::from_matrix(&self.space, -&self.mat)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn space_validation() {
        assert!(MeasureSpace::new(vec![]).is_err());
        assert!(MeasureSpace::new(vec![1.0, -1.0]).is_err());
        assert!(MeasureSpace::new(vec![1.0, 0.0]).is_err());
        assert!(MeasureSpace::new(vec![1.0, f64::NAN]).is_err());
        let s = MeasureSpace::new(vec![1.0, 3.0]).unwrap();
        assert_eq!(s.dim(), 2);
        assert_eq!(s.total_mass(), 4.0);
    }

    #[test]
    fn inner_product_examples() {
        let s = MeasureSpace::uniform(2);
        let e1 = Vector::basis(&s, 0);
        let e2 = Vector::basis(&s, 1);
        assert_eq!(inner(&e1, &e2).unwrap(), c(0.0));

        let s = MeasureSpace::new(vec![1.0, 3.0]).unwrap();
        let ones = Vector::constant(&s, c(1.0));
        // 1*1*1 + 3*1*1
        assert_eq!(inner(&ones, &ones).unwrap(), c(4.0));
    }

    #[test]
    fn inner_product_is_positive_definite() {
        let s = MeasureSpace::new(vec![0.5, 2.0, 1.5]).unwrap();
        let f = Vector::new(&s, vec![C64::new(1.0, -2.0), C64::new(0.0, 0.5), c(3.0)]).unwrap();
        let v = inner(&f, &f).unwrap();
        assert!(v.im.abs() < 1e-15 && v.re > 0.0);
        assert!((v.re.sqrt() - f.norm()).abs() < 1e-14);
        assert_eq!(inner(&Vector::zeros(&s), &Vector::zeros(&s)).unwrap(), c(0.0));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let a = MeasureSpace::uniform(2);
        let b = MeasureSpace::uniform(3);
        let err = inner(&Vector::zeros(&a), &Vector::zeros(&b)).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
        assert!(Vector::new(&a, vec![c(1.0)]).is_err());
        assert!(Operator::new(&a, DMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn rejects_non_finite_entries() {
        let s = MeasureSpace::uniform(2);
        let mut m = DMatrix::zeros(2, 2);
        m[(1, 0)] = C64::new(f64::INFINITY, 0.0);
        assert!(matches!(
            Operator::new(&s, m),
            Err(Error::NonFinite { row: 1, col: 0 })
        ));
    }

    #[test]
    fn unitary_picture_round_trips() {
        let s = MeasureSpace::new(vec![1.0, 4.0]).unwrap();
        let t = Operator::from_real_rows(&s, &[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let back = Operator::from_unitary(&s, &t.to_unitary());
        assert!((back.matrix() - t.matrix()).norm() < 1e-15);
        let f = Vector::from_real(&s, &[1.0, -1.0]).unwrap();
        let g = Vector::from_unitary(&s, &f.to_unitary());
        assert!((g.entries() - f.entries()).norm() < 1e-15);
        // the unitary picture is an isometry
        assert!((f.to_unitary().norm() - f.norm()).abs() < 1e-15);
    }

    #[test]
    fn powers() {
        let s = MeasureSpace::uniform(2);
        let n = Operator::from_real_rows(&s, &[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert_eq!(n.pow(0).matrix(), Operator::identity(&s).matrix());
        assert_eq!(n.pow(1).matrix(), n.matrix());
        assert_eq!(n.pow(2).max_abs_entry(), 0.0);
    }
}
