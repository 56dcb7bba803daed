use nalgebra::DVector;

use super::operator::{CMatrix, CVector, Operator, C64, ONE, ZERO};
use crate::error::{Error, Result};

const NORM_TOL: f64 = 1e-12;

/// A normalized pure state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: CVector,
}

impl StateVector {
    /// Validates that the amplitudes have unit norm (within 1e-12).
    pub fn from_amplitudes(amps: CVector) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::DimensionMismatch("state must have dim >= 1".into()));
        }
        let norm = amps.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(StateVector { amps })
    }

    /// Rescales a non-zero vector to unit norm.
    pub fn normalized(amps: CVector) -> Result<Self> {
        let norm = amps.norm();
        if amps.is_empty() || norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized(norm));
        }
        Ok(StateVector { amps: amps / C64::new(norm, 0.0) })
    }

    pub fn from_vec(amps: Vec<C64>) -> Result<Self> {
        Self::from_amplitudes(DVector::from_vec(amps))
    }

    /// Computational basis state |k⟩.
    pub fn basis(dim: usize, k: usize) -> Self {
        assert!(k < dim, "basis index {k} out of range for dim {dim}");
        let mut v = CVector::zeros(dim);
        v[k] = ONE;
        StateVector { amps: v }
    }

    /// |Φ_d⟩ = Σ_j |j⟩|j⟩ / √d with the first factor most significant.
    pub fn maximally_entangled(d: usize) -> Self {
        assert!(d >= 1);
        let mut v = CVector::zeros(d * d);
        let amp = C64::new(1.0 / (d as f64).sqrt(), 0.0);
        for j in 0..d {
            v[j * d + j] = amp;
        }
        StateVector { amps: v }
    }

    /// |φ⁺⟩ = (|00⟩ + |11⟩)/√2.
    pub fn bell() -> Self {
        Self::maximally_entangled(2)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    #[inline]
    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn into_amplitudes(self) -> CVector {
        self.amps
    }

    pub fn kron(&self, other: &StateVector) -> StateVector {
        StateVector { amps: self.amps.kronecker(&other.amps) }
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps.dotc(&other.amps)
    }

    pub fn density(&self) -> Operator {
        Operator::outer(&self.amps)
    }

    /// ⟨ψ|A|ψ⟩
    pub fn expectation(&self, op: &Operator) -> Result<C64> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch(format!("operator dim {} vs state dim {}", op.dim(), self.dim())));
        }
        Ok(self.amps.dotc(&(op.matrix() * &self.amps)))
    }

    /// Reshape into a `d_a × d_b` coefficient matrix with row = first factor.
    pub fn coefficient_matrix(&self, d_a: usize, d_b: usize) -> Result<CMatrix> {
        if d_a * d_b != self.dim() {
            return Err(Error::DimensionMismatch(format!("{d_a}·{d_b} != state dim {}", self.dim())));
        }
        Ok(CMatrix::from_fn(d_a, d_b, |i, j| self.amps[i * d_b + j]))
    }

    /// Inverse of [`coefficient_matrix`](Self::coefficient_matrix).
    pub fn from_coefficient_matrix(m: &CMatrix) -> Result<Self> {
        let (r, c) = m.shape();
        let v = CVector::from_fn(r * c, |k, _| m[(k / c, k % c)]);
        Self::from_amplitudes(v)
    }

    /// Tensor product of several states, left to right.
    pub fn kron_all(states: &[StateVector]) -> Option<StateVector> {
        let (first, rest) = states.split_first()?;
        Some(rest.iter().fold(first.clone(), |acc, s| acc.kron(s)))
    }

    pub fn zero_like(dim: usize) -> CVector {
        CVector::from_element(dim, ZERO)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opcore::operator::{kron, pauli};

    #[test]
    fn xx_fixes_bell_state() {
        let phi = StateVector::bell();
        let xx = kron(&pauli::x(), &pauli::x());
        let out = xx.apply(phi.amplitudes());
        assert!((out - phi.amplitudes()).norm() < 1e-15);
    }

    #[test]
    fn maximally_entangled_is_normalized() {
        for d in 1..9 {
            let s = StateVector::maximally_entangled(d);
            assert!((s.amplitudes().norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn phi8_equals_three_bell_pairs_after_regrouping() {
        // |φ⁺⟩^{⊗3} in (A1 B1 A2 B2 A3 B3) order regrouped to (A1 A2 A3 | B1 B2 B3) is |Φ_8⟩.
        let b = StateVector::bell();
        let triple = StateVector::kron_all(&[b.clone(), b.clone(), b]).unwrap();
        let regrouped = crate::opcore::permute_subsystems(&triple, &[2, 2, 2, 2, 2, 2], &[0, 2, 4, 1, 3, 5]).unwrap();
        let phi8 = StateVector::maximally_entangled(8);
        assert!((regrouped.amplitudes() - phi8.amplitudes()).norm() < 1e-14);
    }

    #[test]
    fn rejects_unnormalized() {
        let v = CVector::from_vec(vec![ONE, ONE]);
        assert!(matches!(StateVector::from_amplitudes(v.clone()), Err(Error::NotNormalized(_))));
        assert!(StateVector::normalized(v).is_ok());
    }

    #[test]
    fn coefficient_matrix_round_trip() {
        let s = StateVector::maximally_entangled(3);
        let m = s.coefficient_matrix(3, 3).unwrap();
        assert_eq!(StateVector::from_coefficient_matrix(&m).unwrap(), s);
        assert!(s.coefficient_matrix(2, 3).is_err());
    }
}
