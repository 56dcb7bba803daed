use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{PovmFamily, QuantumStrategy};
use crate::error::{Error, Result};
use crate::opcore::{Operator, StateVector, Tolerance};

/// On-disk strategy: question index → list of elements indexed by outcome, `null` for an
/// outcome that never occurs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategySpec {
    pub dim_a: usize,
    pub dim_b: usize,
    pub state: StateVector,
    pub povms_a: BTreeMap<String, Vec<Option<Operator>>>,
    pub povms_b: BTreeMap<String, Vec<Option<Operator>>>,
}

fn to_map(fams: &[PovmFamily]) -> BTreeMap<String, Vec<Option<Operator>>> {
    fams.iter().enumerate().map(|(x, f)| (x.to_string(), f.clone())).collect()
}

fn from_map(side: &str, map: &BTreeMap<String, Vec<Option<Operator>>>) -> Result<Vec<PovmFamily>> {
    let mut indexed: Vec<(usize, PovmFamily)> = map
        .iter()
        .map(|(k, v)| {
            k.parse::<usize>()
                .map(|i| (i, v.clone()))
                .map_err(|_| Error::Malformed(format!("povms_{side} key `{k}` is not a question index")))
        })
        .collect::<Result<_>>()?;
    indexed.sort_by_key(|(i, _)| *i);
    if indexed.iter().enumerate().any(|(pos, (i, _))| pos != *i) {
        return Err(Error::Malformed(format!("povms_{side} questions must be numbered 0..n")));
    }
    Ok(indexed.into_iter().map(|(_, f)| f).collect())
}

impl StrategySpec {
    pub fn from_strategy(s: &QuantumStrategy) -> Self {
        StrategySpec {
            dim_a: s.dim_a(),
            dim_b: s.dim_b(),
            state: s.state().clone(),
            povms_a: to_map(s.povms_a()),
            povms_b: to_map(s.povms_b()),
        }
    }

    pub fn to_strategy(&self, tol: Tolerance) -> Result<QuantumStrategy> {
        QuantumStrategy::new(
            self.dim_a,
            self.dim_b,
            self.state.clone(),
            from_map("a", &self.povms_a)?,
            from_map("b", &self.povms_b)?,
            tol,
        )
    }
}

impl QuantumStrategy {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&StrategySpec::from_strategy(self))?)
    }

    pub fn from_json(text: &str, tol: Tolerance) -> Result<Self> {
        serde_json::from_str::<StrategySpec>(text)?.to_strategy(tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::ObservableSquare;
    use crate::strategies::{chsh_optimal_strategy, msg_canonical_strategy};

    #[test]
    fn strategies_round_trip_bit_exactly() {
        for s in [chsh_optimal_strategy(), msg_canonical_strategy(&ObservableSquare::standard()).unwrap()] {
            let back = QuantumStrategy::from_json(&s.to_json().unwrap(), Tolerance::default()).unwrap();
            assert_eq!(back, s);
        }
    }

    #[test]
    fn gaps_in_question_indices_are_rejected() {
        let mut spec = StrategySpec::from_strategy(&chsh_optimal_strategy());
        let f = spec.povms_a.remove("1").unwrap();
        spec.povms_a.insert("2".into(), f);
        assert!(matches!(spec.to_strategy(Tolerance::default()), Err(Error::Malformed(_))));
    }
}
