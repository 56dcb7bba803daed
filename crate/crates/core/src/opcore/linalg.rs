//! Eigendecompositions, partial traces, Schmidt ranks and subsystem plumbing.

use nalgebra::{DMatrix, SymmetricEigen, SVD};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::operator::{CMatrix, CVector, Operator, Tolerance, C64, ZERO};
use super::state::StateVector;
use crate::error::{Error, Result};

/// Eigendecomposition of a Hermitian operator, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermEig {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: CMatrix,
}

impl HermEig {
    pub fn reconstruct(&self) -> Operator {
        let n = self.values.len();
        let d = CMatrix::from_fn(n, n, |i, j| if i == j { C64::new(self.values[i], 0.0) } else { ZERO });
        Operator::from_square(&self.vectors * d * self.vectors.adjoint())
    }
}

fn hermitian_gate(a: &Operator) -> Result<()> {
    let r = a.hermiticity_residual();
    if r > Tolerance::DEFAULT_EPS * a.frobenius_norm().max(1.0) {
        return Err(Error::NotHermitian(r));
    }
    Ok(())
}

pub fn herm_eig(a: &Operator) -> Result<HermEig> {
    hermitian_gate(a)?;
    let h = a.hermitian_part().into_matrix();
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let n = order.len();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(HermEig { values, vectors })
}

/// Real symmetric eigendecomposition, eigenvalues ascending.
pub fn sym_eig_real(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let n = order.len();
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Common eigenbasis of a commuting Hermitian family.
#[derive(Clone, Debug)]
pub struct SimultaneousDiag {
    /// Orthonormal basis vectors as columns.
    pub basis: CMatrix,
    /// `diagonals[k][j]` = ⟨e_j| ops[k] |e_j⟩.
    pub diagonals: Vec<Vec<f64>>,
    /// Largest off-diagonal modulus of V† op V over the family.
    pub max_off_diagonal: f64,
    /// Largest pairwise commutator norm ‖[A, B]‖_F in the family.
    pub max_commutator: f64,
}

const SIMDIAG_ATTEMPTS: usize = 3;
const DEFAULT_SEED: u64 = 0x5eed_d1a6;

pub fn simultaneous_diag(ops: &[Operator], tol: Tolerance) -> Result<SimultaneousDiag> {
    simultaneous_diag_seeded(ops, tol, DEFAULT_SEED)
}

/// Diagonalizes a random real combination of the family, then checks every member.
pub fn simultaneous_diag_seeded(ops: &[Operator], tol: Tolerance, seed: u64) -> Result<SimultaneousDiag> {
    let Some(first) = ops.first() else {
        return Err(Error::Precondition("simultaneous_diag needs at least one operator".into()));
    };
    let dim = first.dim();
    for op in ops {
        if op.dim() != dim {
            return Err(Error::DimensionMismatch(format!("{} vs {}", op.dim(), dim)));
        }
        let r = op.hermiticity_residual();
        if r > tol.eps() {
            return Err(Error::NotHermitian(r));
        }
    }
    // For Hermitian A, B: [A, B] = AB − (AB)†, one product per pair.
    let herm: Vec<Operator> = ops.iter().map(Operator::hermitian_part).collect();
    let worst_comm = herm
        .par_iter()
        .enumerate()
        .map(|(i, a)| {
            herm[i + 1..]
                .iter()
                .map(|b| {
                    let p = a.matrix() * b.matrix();
                    (&p - p.adjoint()).norm()
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    if worst_comm > tol.eps() {
        return Err(Error::NonCommuting(worst_comm));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best_residual = f64::INFINITY;
    for _ in 0..SIMDIAG_ATTEMPTS {
        let mut combo = CMatrix::zeros(dim, dim);
        for op in ops {
            let c: f64 = StandardNormal.sample(&mut rng);
            combo += op.hermitian_part().matrix() * C64::new(c, 0.0);
        }
        let eig = herm_eig(&Operator::from_square(combo))?;
        let mut diagonals = Vec::with_capacity(ops.len());
        let mut residual: f64 = 0.0;
        for op in ops {
            let d = op.conjugate_by(&eig.vectors);
            residual = residual.max(d.max_off_diagonal());
            diagonals.push(d.real_diagonal());
        }
        if residual <= tol.eps() {
            return Ok(SimultaneousDiag {
                basis: eig.vectors,
                diagonals,
                max_off_diagonal: residual,
                max_commutator: worst_comm,
            });
        }
        best_residual = best_residual.min(residual);
    }
    Err(Error::Numerical(format!(
        "simultaneous diagonalization failed after {SIMDIAG_ATTEMPTS} attempts \
         (best off-diagonal residual {best_residual:.3e})"
    )))
}

fn check_factorization(total: usize, dims: &[usize]) -> Result<()> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::DimensionMismatch("subsystem dims must be positive".into()));
    }
    let prod: usize = dims.iter().product();
    if prod != total {
        return Err(Error::DimensionMismatch(format!("subsystem dims {dims:?} multiply to {prod}, expected {total}")));
    }
    Ok(())
}

/// Row-major strides for a mixed-radix index with the first subsystem most significant.
fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// All offsets spanned by the given subsystems, enumerated in their own row-major order.
fn offsets(dims: &[usize], strides: &[usize], subsystems: &[usize]) -> Vec<usize> {
    let mut out = vec![0usize];
    for &s in subsystems {
        let mut next = Vec::with_capacity(out.len() * dims[s]);
        for &base in &out {
            for v in 0..dims[s] {
                next.push(base + v * strides[s]);
            }
        }
        out = next;
    }
    out
}

fn validate_subset(n: usize, subset: &[usize]) -> Result<()> {
    let mut seen = vec![false; n];
    for &k in subset {
        if k >= n || seen[k] {
            return Err(Error::DimensionMismatch(format!("invalid subsystem index set {subset:?} for {n} subsystems")));
        }
        seen[k] = true;
    }
    Ok(())
}

/// Reorders tensor factors: subsystem `k` of the result is subsystem `order[k]` of the input.
pub fn permute_subsystems(state: &StateVector, dims: &[usize], order: &[usize]) -> Result<StateVector> {
    check_factorization(state.dim(), dims)?;
    if order.len() != dims.len() {
        return Err(Error::DimensionMismatch("permutation length".into()));
    }
    validate_subset(dims.len(), order)?;
    let old_strides = strides(dims);
    let offs = offsets(dims, &old_strides, order);
    let amps = state.amplitudes();
    let v = CVector::from_fn(state.dim(), |k, _| amps[offs[k]]);
    StateVector::from_amplitudes(v)
}

/// Applies `op` to the listed subsystems of a vector (first listed = most significant).
pub fn apply_local(amps: &CVector, dims: &[usize], targets: &[usize], op: &Operator) -> Result<CVector> {
    check_factorization(amps.len(), dims)?;
    validate_subset(dims.len(), targets)?;
    let st = strides(dims);
    let t_offs = offsets(dims, &st, targets);
    if t_offs.len() != op.dim() {
        return Err(Error::DimensionMismatch(format!("operator dim {} vs target dim {}", op.dim(), t_offs.len())));
    }
    let rest: Vec<usize> = (0..dims.len()).filter(|k| !targets.contains(k)).collect();
    let r_offs = offsets(dims, &st, &rest);
    let m = op.matrix();
    let dt = t_offs.len();
    let mut out = CVector::zeros(amps.len());
    let mut buf = vec![ZERO; dt];
    for &base in &r_offs {
        for (k, &o) in t_offs.iter().enumerate() {
            buf[k] = amps[base + o];
        }
        for i in 0..dt {
            let mut acc = ZERO;
            for (j, b) in buf.iter().enumerate() {
                acc += m[(i, j)] * b;
            }
            out[base + t_offs[i]] = acc;
        }
    }
    Ok(out)
}

/// Reduced operator on the kept subsystems (kept in ascending order).
pub fn partial_trace(op: &Operator, dims: &[usize], keep: &[usize]) -> Result<Operator> {
    check_factorization(op.dim(), dims)?;
    validate_subset(dims.len(), keep)?;
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep.contains(k)).collect();
    let st = strides(dims);
    let k_offs = offsets(dims, &st, &keep);
    let t_offs = offsets(dims, &st, &traced);
    let dk = k_offs.len();
    let m = op.matrix();
    let out = CMatrix::from_fn(dk, dk, |i, j| t_offs.iter().map(|&t| m[(k_offs[i] + t, k_offs[j] + t)]).sum());
    Ok(Operator::from_square(out))
}

/// Reduced density operator of a pure state on the kept subsystems.
pub fn partial_trace_state(state: &StateVector, dims: &[usize], keep: &[usize]) -> Result<Operator> {
    check_factorization(state.dim(), dims)?;
    validate_subset(dims.len(), keep)?;
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep.contains(k)).collect();
    let st = strides(dims);
    let k_offs = offsets(dims, &st, &keep);
    let t_offs = offsets(dims, &st, &traced);
    let a = state.amplitudes();
    let psi = CMatrix::from_fn(k_offs.len(), t_offs.len(), |i, j| a[k_offs[i] + t_offs[j]]);
    Ok(Operator::from_square(&psi * psi.adjoint()))
}

/// Schmidt coefficients (singular values of the coefficient matrix), descending.
pub fn schmidt_coefficients(state: &StateVector, d_a: usize, d_b: usize) -> Result<Vec<f64>> {
    let m = state.coefficient_matrix(d_a, d_b)?;
    let svd = SVD::new(m, false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

pub fn schmidt_rank(state: &StateVector, dims: (usize, usize), tol: Tolerance) -> Result<usize> {
    let s = schmidt_coefficients(state, dims.0, dims.1)?;
    Ok(s.iter().filter(|&&x| x > tol.eps()).count())
}

/// Singular values of a general complex matrix, descending.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let svd = SVD::new(m.clone(), false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Outcome of a POVM validity check.
#[derive(Clone, Debug, PartialEq)]
pub struct PovmCheck {
    pub valid: bool,
    pub max_hermiticity_residual: f64,
    pub min_eigenvalue: f64,
    /// ‖Σ E − 𝟙‖_F
    pub completeness_residual: f64,
}

pub fn is_povm<'a, I>(elements: I, tol: Tolerance) -> Result<PovmCheck>
where
    I: IntoIterator<Item = &'a Operator>,
{
    let mut it = elements.into_iter().peekable();
    let Some(dim) = it.peek().map(|e| e.dim()) else {
        return Ok(PovmCheck {
            valid: false,
            max_hermiticity_residual: 0.0,
            min_eigenvalue: 0.0,
            completeness_residual: f64::INFINITY,
        });
    };
    let mut sum = CMatrix::zeros(dim, dim);
    let mut herm: f64 = 0.0;
    let mut min_eig = f64::INFINITY;
    for e in it {
        if e.dim() != dim {
            return Err(Error::DimensionMismatch(format!("POVM element dims {} vs {dim}", e.dim())));
        }
        herm = herm.max(e.hermiticity_residual());
        let eig = herm_eig(&e.hermitian_part())?;
        min_eig = min_eig.min(eig.values[0]);
        sum += e.matrix();
    }
    let completeness = Operator::from_square(sum).distance(&Operator::identity(dim));
    Ok(PovmCheck {
        valid: herm <= tol.eps() && min_eig >= -tol.eps() && completeness <= tol.eps(),
        max_hermiticity_residual: herm,
        min_eigenvalue: min_eig,
        completeness_residual: completeness,
    })
}
