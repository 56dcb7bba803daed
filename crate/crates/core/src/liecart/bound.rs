use serde::{Deserialize, Serialize};

/// Smallest m with 2^m − 1 ≥ r, i.e. qubits whose Pauli algebra has at least r directions
/// in a maximal abelian family.
pub fn qubit_bound(r: usize) -> u32 {
    let mut m = 0u32;
    while (1u128 << m) - 1 < r as u128 {
        m += 1;
    }
    m
}

/// Qubit counts implied by the effective ranks, compared against the per-game budget.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct QubitBoundReport {
    pub r_a: usize,
    pub r_b: usize,
    pub n: u32,
    pub per_game_qubits: Vec<u32>,
    /// N = Σ n_i
    pub total_qubits: u32,
    /// Σ (2^{n_i} − 1)
    pub capacity: u64,
    /// max(r_A, r_B) < Σ (2^{n_i} − 1)
    pub strict_rank_condition: bool,
    /// max(r_A, r_B) ≤ Σ (2^{n_i} − 1)
    pub weak_rank_condition: bool,
    /// n < N
    pub saves_qubits: bool,
}

pub fn qubit_report(r_a: usize, r_b: usize, per_game_qubits: &[u32]) -> QubitBoundReport {
    let n = qubit_bound(r_a.max(r_b));
    let total_qubits: u32 = per_game_qubits.iter().sum();
    let capacity: u64 = per_game_qubits.iter().map(|&q| (1u64 << q) - 1).sum();
    let r = r_a.max(r_b) as u64;
    QubitBoundReport {
        r_a,
        r_b,
        n,
        per_game_qubits: per_game_qubits.to_vec(),
        total_qubits,
        capacity,
        strict_rank_condition: r < capacity,
        weak_rank_condition: r <= capacity,
        saves_qubits: n < total_qubits,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_values() {
        let expected = [(0, 0), (1, 1), (2, 2), (3, 2), (4, 3), (7, 3), (8, 4), (15, 4), (16, 5)];
        for (r, m) in expected {
            assert_eq!(qubit_bound(r), m, "r = {r}");
        }
    }

    #[test]
    fn strict_rank_condition_implies_savings() {
        for k in 2..=4usize {
            let mut ns = vec![2u32; k];
            loop {
                let report_cap: u64 = ns.iter().map(|&q| (1u64 << q) - 1).sum();
                for r in [1, report_cap / 2, report_cap - 1] {
                    let rep = qubit_report(r as usize, 0, &ns);
                    assert!(rep.strict_rank_condition);
                    assert!(rep.saves_qubits, "{rep:?}");
                }
                let mut i = 0;
                while i < k && ns[i] == 5 {
                    ns[i] = 2;
                    i += 1;
                }
                if i == k {
                    break;
                }
                ns[i] += 1;
            }
        }
    }

    #[test]
    fn readings_differ_at_the_boundary() {
        let rep = qubit_report(30, 30, &[4, 4]);
        assert!(!rep.strict_rank_condition && rep.weak_rank_condition);
        assert_eq!(rep.n, 5);
        assert!(rep.saves_qubits);
    }
}
