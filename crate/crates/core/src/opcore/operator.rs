use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Numerical threshold for operator identities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance(f64);

impl Tolerance {
    pub const DEFAULT_EPS: f64 = 1e-9;

    pub fn new(eps: f64) -> Result<Self> {
        if eps.is_finite() && eps >= 0.0 {
            Ok(Tolerance(eps))
        } else {
            Err(Error::Precondition(format!("tolerance must be finite and >= 0, got {eps}")))
        }
    }

    #[inline]
    pub fn eps(self) -> f64 {
        self.0
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance(Self::DEFAULT_EPS)
    }
}

/// A dense complex square matrix acting on a `dim`-dimensional Hilbert space.
#[derive(Clone, PartialEq)]
pub struct Operator {
    mat: CMatrix,
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Operator(dim={}){}", self.dim(), self.mat)
    }
}

impl Operator {
    pub fn from_matrix(mat: CMatrix) -> Result<Self> {
        if mat.nrows() == 0 || mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "operator must be square with dim >= 1, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        Ok(Operator { mat })
    }

    /// Wraps a matrix the caller knows to be square and non-empty.
    pub(crate) fn from_square(mat: CMatrix) -> Self {
        debug_assert!(mat.nrows() == mat.ncols() && mat.nrows() > 0);
        Operator { mat }
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("rows must form a square array".into()));
        }
        Self::from_matrix(CMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows.iter().map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect()).collect();
        Self::from_rows(&rows)
    }

    pub fn identity(dim: usize) -> Self {
        Operator::from_square(CMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Operator::from_square(CMatrix::zeros(dim, dim))
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Operator::from_square(CMatrix::from_fn(n, n, |i, j| if i == j { C64::new(diag[i], 0.0) } else { ZERO }))
    }

    /// Rank-one projector |v⟩⟨v| (the vector is used as given).
    pub fn outer(v: &CVector) -> Self {
        Operator::from_square(v * v.adjoint())
    }

    /// Computational-basis projector |k⟩⟨k| on a `dim`-dimensional space.
    pub fn basis_projector(dim: usize, k: usize) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        m[(k, k)] = ONE;
        Operator::from_square(m)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    #[inline]
    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.mat[(i, j)]
    }

    pub fn adjoint(&self) -> Self {
        Operator::from_square(self.mat.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Operator::from_square(self.mat.transpose())
    }

    pub fn conj(&self) -> Self {
        Operator::from_square(self.mat.map(|z| z.conj()))
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.mat.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: C64) -> Self {
        Operator::from_square(&self.mat * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn kron(&self, other: &Operator) -> Self {
        kron(self, other)
    }

    /// Real Hilbert–Schmidt inner product Re tr(A†B).
    pub fn hs_inner(&self, other: &Operator) -> f64 {
        self.mat.iter().zip(other.mat.iter()).map(|(a, b)| a.re * b.re + a.im * b.im).sum()
    }

    /// Frobenius distance ‖A − B‖_F.
    pub fn distance(&self, other: &Operator) -> f64 {
        self.mat.iter().zip(other.mat.iter()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
    }

    /// ‖A − A†‖_F
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (self.mat[(i, j)] - self.mat[(j, i)].conj()).norm_sqr();
            }
        }
        acc.sqrt()
    }

    pub fn is_hermitian(&self, tol: Tolerance) -> bool {
        self.hermiticity_residual() <= tol.eps()
    }

    /// (A + A†)/2
    pub fn hermitian_part(&self) -> Self {
        Operator::from_square((&self.mat + self.mat.adjoint()) * C64::new(0.5, 0.0))
    }

    /// ‖A†A − 𝟙‖_F
    pub fn unitarity_residual(&self) -> f64 {
        let n = self.dim();
        let g = self.mat.adjoint() * &self.mat;
        (g - CMatrix::identity(n, n)).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        commutator(self, other)
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        &self.mat * v
    }

    /// Matrix power for small non-negative exponents.
    pub fn powi(&self, k: u32) -> Self {
        let mut acc = CMatrix::identity(self.dim(), self.dim());
        for _ in 0..k {
            acc = &acc * &self.mat;
        }
        Operator::from_square(acc)
    }

    /// Diagonal entries as reals (imaginary parts discarded).
    pub fn real_diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.mat[(i, i)].re).collect()
    }

    /// Largest off-diagonal modulus.
    pub fn max_off_diagonal(&self) -> f64 {
        let n = self.dim();
        let mut m: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    m = m.max(self.mat[(i, j)].norm());
                }
            }
        }
        m
    }

    /// Conjugation V† A V by a (square) matrix.
    pub fn conjugate_by(&self, v: &CMatrix) -> Operator {
        Operator::from_square(v.adjoint() * &self.mat * v)
    }
}

/// Kronecker product; the first factor owns the most significant index block.
pub fn kron(a: &Operator, b: &Operator) -> Operator {
    Operator::from_square(a.mat.kronecker(&b.mat))
}

/// Kronecker product of a non-empty list of factors, left to right.
pub fn kron_all<'a, I>(factors: I) -> Option<Operator>
where
    I: IntoIterator<Item = &'a Operator>,
{
    let mut it = factors.into_iter();
    let first = it.next()?.clone();
    Some(it.fold(first, |acc, f| kron(&acc, f)))
}

/// [a, b] = ab − ba.
pub fn commutator(a: &Operator, b: &Operator) -> Result<Operator> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!("commutator of {}-dim and {}-dim operators", a.dim(), b.dim())));
    }
    Ok(Operator::from_square(&a.mat * &b.mat - &b.mat * &a.mat))
}

/// Frobenius norm of [a, b] without allocating the result twice.
pub fn commutator_norm(a: &Operator, b: &Operator) -> Result<f64> {
    Ok(commutator(a, b)?.frobenius_norm())
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn mul(self, rhs: &'a Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator product dimension mismatch");
        Operator::from_square(&self.mat * &rhs.mat)
    }
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn add(self, rhs: &'a Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator sum dimension mismatch");
        Operator::from_square(&self.mat + &rhs.mat)
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn sub(self, rhs: &'a Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator difference dimension mismatch");
        Operator::from_square(&self.mat - &rhs.mat)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator::from_square(-&self.mat)
    }
}

/// Pauli matrices and Pauli strings.
pub mod pauli {
    use super::*;

    pub fn id() -> Operator {
        Operator::identity(2)
    }

    pub fn x() -> Operator {
        Operator::from_square(CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]))
    }

    pub fn y() -> Operator {
        Operator::from_square(CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]))
    }

    pub fn z() -> Operator {
        Operator::from_square(CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]))
    }

    pub fn hadamard() -> Operator {
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Operator::from_square(CMatrix::from_row_slice(2, 2, &[h, h, h, -h]))
    }

    /// Single-qubit Pauli by letter; `I` and `1` both denote the identity.
    pub fn single(c: char) -> Result<Operator> {
        match c {
            'I' | '1' => Ok(id()),
            'X' => Ok(x()),
            'Y' => Ok(y()),
            'Z' => Ok(z()),
            other => Err(Error::Malformed(format!("unknown Pauli letter `{other}`"))),
        }
    }

    /// Tensor product of Pauli letters, e.g. `"XZ"` = X⊗Z. A leading `-` negates.
    pub fn string(label: &str) -> Result<Operator> {
        let (sign, body) = match label.strip_prefix('-') {
            Some(rest) => (-1.0, rest),
            None => (1.0, label.strip_prefix('+').unwrap_or(label)),
        };
        if body.is_empty() {
            return Err(Error::Malformed("empty Pauli string".into()));
        }
        let factors = body.chars().map(single).collect::<Result<Vec<_>>>()?;
        let op = kron_all(factors.iter()).expect("non-empty");
        Ok(op.scale_real(sign))
    }
}
