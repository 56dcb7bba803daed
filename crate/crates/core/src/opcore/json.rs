//! JSON encoding for operators and states: complex entries are `[re, im]` pairs.
//!
//! serde_json is built with `float_roundtrip`, so doubles survive emit/parse bit-exactly.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::operator::{CMatrix, CVector, Operator, C64};
use super::state::StateVector;

#[derive(Serialize, Deserialize)]
struct OperatorRepr {
    dim: usize,
    entries: Vec<Vec<[f64; 2]>>,
}

#[derive(Serialize, Deserialize)]
struct StateRepr {
    dim: usize,
    amplitudes: Vec<[f64; 2]>,
}

impl Serialize for Operator {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let n = self.dim();
        let entries = (0..n).map(|i| (0..n).map(|j| [self.get(i, j).re, self.get(i, j).im]).collect()).collect();
        OperatorRepr { dim: n, entries }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Operator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = OperatorRepr::deserialize(d)?;
        if r.dim == 0 || r.entries.len() != r.dim || r.entries.iter().any(|row| row.len() != r.dim) {
            return Err(D::Error::custom(format!("operator entries must be a {0}x{0} array", r.dim)));
        }
        let m = CMatrix::from_fn(r.dim, r.dim, |i, j| {
            let [re, im] = r.entries[i][j];
            C64::new(re, im)
        });
        Operator::from_matrix(m).map_err(D::Error::custom)
    }
}

impl Serialize for StateVector {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let amplitudes = self.amplitudes().iter().map(|z| [z.re, z.im]).collect();
        StateRepr { dim: self.dim(), amplitudes }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for StateVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = StateRepr::deserialize(d)?;
        if r.amplitudes.len() != r.dim {
            return Err(D::Error::custom(format!("state has {} amplitudes, dim says {}", r.amplitudes.len(), r.dim)));
        }
        let v = CVector::from_iterator(r.dim, r.amplitudes.iter().map(|&[re, im]| C64::new(re, im)));
        StateVector::from_amplitudes(v).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opcore::random::{random_state, random_unitary};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    proptest! {
        #[test]
        fn operator_json_round_trip_is_bit_exact(seed in any::<u64>(), dim in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = random_unitary(dim, &mut rng);
            let text = serde_json::to_string(&u).unwrap();
            let back: Operator = serde_json::from_str(&text).unwrap();
            for (a, b) in u.matrix().iter().zip(back.matrix().iter()) {
                prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
                prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
            }
        }

        #[test]
        fn state_json_round_trip_is_bit_exact(seed in any::<u64>(), dim in 1usize..20) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_state(dim, &mut rng);
            let back: StateVector = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
            prop_assert_eq!(back, s);
        }
    }

    #[test]
    fn rejects_ragged_entries() {
        let bad = r#"{"dim": 2, "entries": [[[1,0],[0,0]],[[0,0]]]}"#;
        assert!(serde_json::from_str::<Operator>(bad).is_err());
        let bad_state = r#"{"dim": 2, "amplitudes": [[1,0],[1,0]]}"#;
        assert!(serde_json::from_str::<StateVector>(bad_state).is_err());
    }
}
