//! Quantum strategies — a shared pure state and one POVM per question — and their evaluation.

mod canonical;
mod json;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use canonical::{
    builtin_strategy, chsh_optimal_strategy, classical_embedding, ghz3_canonical_strategy, msg_canonical_strategy,
    pvm_from_commuting_observables, square_canonical_strategy, trivial_strategy, BUILTIN_STRATEGIES,
};
pub use json::StrategySpec;

use crate::error::{Error, Result};
use crate::games::Game;
use crate::opcore::{is_povm, CMatrix, Operator, PovmCheck, StateVector, Tolerance, C64, ZERO};

/// POVM elements indexed by outcome; `None` marks an outcome whose element is exactly zero.
pub type PovmFamily = Vec<Option<Operator>>;

/// Validity check of a sparse family (absent outcomes contribute nothing).
pub fn check_family(family: &PovmFamily, tol: Tolerance) -> Result<PovmCheck> {
    is_povm(family.iter().flatten(), tol)
}

/// A shared pure state on `dim_a · dim_b` plus per-question measurement families.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumStrategy {
    dim_a: usize,
    dim_b: usize,
    state: StateVector,
    povms_a: Vec<PovmFamily>,
    povms_b: Vec<PovmFamily>,
}

impl QuantumStrategy {
    /// Validates dimensions, normalization and every POVM family.
    pub fn new(
        dim_a: usize,
        dim_b: usize,
        state: StateVector,
        povms_a: Vec<PovmFamily>,
        povms_b: Vec<PovmFamily>,
        tol: Tolerance,
    ) -> Result<Self> {
        if state.dim() != dim_a * dim_b {
            return Err(Error::DimensionMismatch(format!("state dim {} != {dim_a}·{dim_b}", state.dim())));
        }
        for (side, fams, d) in [("A", &povms_a, dim_a), ("B", &povms_b, dim_b)] {
            if fams.is_empty() {
                return Err(Error::InvalidStrategy(format!("player {side} has no questions")));
            }
            for (x, fam) in fams.iter().enumerate() {
                if let Some(e) = fam.iter().flatten().find(|e| e.dim() != d) {
                    return Err(Error::DimensionMismatch(format!(
                        "player {side}, question {x}: element dim {} != {d}",
                        e.dim()
                    )));
                }
                let chk = check_family(fam, tol)?;
                if !chk.valid {
                    return Err(Error::InvalidStrategy(format!(
                        "player {side}, question {x} is not a POVM (completeness {:.3e}, \
                         min eigenvalue {:.3e}, hermiticity {:.3e})",
                        chk.completeness_residual, chk.min_eigenvalue, chk.max_hermiticity_residual
                    )));
                }
            }
        }
        Ok(QuantumStrategy { dim_a, dim_b, state, povms_a, povms_b })
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }

    pub fn povms_a(&self) -> &[PovmFamily] {
        &self.povms_a
    }

    pub fn povms_b(&self) -> &[PovmFamily] {
        &self.povms_b
    }

    /// Local qubit count `log₂ dim_a`, when the dimension is a power of two.
    pub fn qubits_per_player(&self) -> Option<u32> {
        let d = self.dim_a.max(self.dim_b);
        d.is_power_of_two().then(|| d.trailing_zeros())
    }

    /// Checks that the families line up with a game's alphabets.
    pub fn check_alphabets(&self, game: &Game) -> Result<()> {
        let (ia, ib, oa, ob) = game.sizes();
        let shape = |f: &[PovmFamily], n: usize, o: usize| f.len() == n && f.iter().all(|m| m.len() == o);
        if !shape(&self.povms_a, ia, oa) || !shape(&self.povms_b, ib, ob) {
            return Err(Error::InvalidStrategy(format!(
                "POVM outcome sets do not match the alphabets of game `{}`",
                game.name()
            )));
        }
        Ok(())
    }

    /// Joint answer distribution `p(a, b | x, y)` as an `|𝓞_A| × |𝓞_B|` table.
    pub fn answer_distribution(&self, x: usize, y: usize) -> Vec<Vec<f64>> {
        let c = self.state.coefficient_matrix(self.dim_a, self.dim_b).expect("dims validated");
        let fam_b = &self.povms_b[y];
        self.povms_a[x]
            .iter()
            .map(|ma| match ma {
                None => vec![0.0; fam_b.len()],
                Some(m) => {
                    // ⟨ψ|M⊗N|ψ⟩ = tr(C†MC·Nᵀ) = Σ_ij (C†MC)_ij N_ij
                    let r: CMatrix = c.adjoint() * m.matrix() * &c;
                    fam_b.iter().map(|nb| nb.as_ref().map_or(0.0, |n| contract(&r, n.matrix()).re)).collect()
                }
            })
            .collect()
    }
}

/// W(x, y) = Σ_{(a,b): λ=1} M_{x,a} ⊗ N_{y,b} from explicit families.
pub fn acceptance_matrix(
    game: &Game,
    x: usize,
    y: usize,
    fam_a: &PovmFamily,
    fam_b: &PovmFamily,
    dim_a: usize,
    dim_b: usize,
) -> Operator {
    let mut w = CMatrix::zeros(dim_a * dim_b, dim_a * dim_b);
    for (a, b) in game.accepted_answers(x, y) {
        if let (Some(m), Some(n)) = (&fam_a[a], &fam_b[b]) {
            w += m.matrix().kronecker(n.matrix());
        }
    }
    Operator::from_matrix(w).expect("square by construction")
}

impl QuantumStrategy {
    /// Acceptance operator of question `(x, y)` on the joint space.
    pub fn acceptance_operator(&self, game: &Game, x: usize, y: usize) -> Result<Operator> {
        self.check_alphabets(game)?;
        Ok(acceptance_matrix(game, x, y, &self.povms_a[x], &self.povms_b[y], self.dim_a, self.dim_b))
    }
}

fn contract(r: &CMatrix, n: &CMatrix) -> C64 {
    r.iter().zip(n.iter()).fold(ZERO, |acc, (a, b)| acc + a * b)
}

/// Per-question winning probabilities and the μ-weighted value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameValueReport {
    /// `per_question[x][y]`, clamped to `[0, 1]`.
    pub per_question: Vec<Vec<f64>>,
    /// Unclamped values as computed.
    pub raw: Vec<Vec<f64>>,
    /// Σ μ(x,y)·raw(x,y)
    pub value: f64,
    pub min_acceptance: f64,
    pub perfect: bool,
}

/// Winning probability of `strat` on every question pair of `game`.
pub fn evaluate(game: &Game, strat: &QuantumStrategy, tol: Tolerance) -> Result<GameValueReport> {
    strat.check_alphabets(game)?;
    let (ia, ib, _, _) = game.sizes();
    let raw: Vec<Vec<f64>> = (0..ia)
        .into_par_iter()
        .map(|x| {
            (0..ib)
                .map(|y| {
                    let dist = strat.answer_distribution(x, y);
                    game.accepted_answers(x, y).iter().map(|&(a, b)| dist[a][b]).sum()
                })
                .collect()
        })
        .collect();
    Ok(report_from_raw(game, raw, tol))
}

/// Assembles a report from unclamped per-question probabilities.
pub fn report_from_raw(game: &Game, raw: Vec<Vec<f64>>, tol: Tolerance) -> GameValueReport {
    let mut value = 0.0;
    let mut min_acceptance = f64::INFINITY;
    for (x, row) in raw.iter().enumerate() {
        for (y, &p) in row.iter().enumerate() {
            value += game.mu(x, y) * p;
            min_acceptance = min_acceptance.min(p);
        }
    }
    let per_question = raw.iter().map(|r| r.iter().map(|p| p.clamp(0.0, 1.0)).collect()).collect();
    GameValueReport { per_question, raw, value, min_acceptance, perfect: min_acceptance >= 1.0 - tol.eps() }
}

/// Refuses strategies that do not win every question pair.
pub fn require_perfect(game: &Game, strat: &QuantumStrategy, tol: Tolerance) -> Result<GameValueReport> {
    let rep = evaluate(game, strat, tol)?;
    if !rep.perfect {
        return Err(Error::NotPerfect { game: game.name().to_string(), min_acceptance: rep.min_acceptance });
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{classical_value, Game};

    #[test]
    fn chsh_optimal_value() {
        let rep = evaluate(&Game::chsh(), &chsh_optimal_strategy(), Tolerance::default()).unwrap();
        let want = (2.0 + 2f64.sqrt()) / 4.0;
        assert!((rep.value - want).abs() < 1e-12, "{}", rep.value);
        assert!(!rep.perfect);
    }

    #[test]
    fn diagonal_strategy_reproduces_classical_value() {
        let g = Game::magic_square();
        let cv = classical_value(&g).unwrap();
        let s = classical_embedding(&g, &cv.strategy).unwrap();
        let rep = evaluate(&g, &s, Tolerance::default()).unwrap();
        assert!((rep.value - cv.value).abs() < 1e-12);
    }

    #[test]
    fn alphabet_mismatch_is_rejected() {
        let err = evaluate(&Game::magic_square(), &chsh_optimal_strategy(), Tolerance::default());
        assert!(matches!(err, Err(Error::InvalidStrategy(_))));
    }

    #[test]
    fn non_povm_family_is_rejected() {
        let s = chsh_optimal_strategy();
        let mut fa = s.povms_a().to_vec();
        fa[0][0] = fa[0][0].as_ref().map(|e| e.scale_real(1.001));
        let r = QuantumStrategy::new(2, 2, s.state().clone(), fa, s.povms_b().to_vec(), Tolerance::default());
        assert!(matches!(r, Err(Error::InvalidStrategy(_))));
    }

    #[test]
    fn require_perfect_refuses_chsh() {
        let r = require_perfect(&Game::chsh(), &chsh_optimal_strategy(), Tolerance::default());
        assert!(matches!(r, Err(Error::NotPerfect { .. })));
    }
}
