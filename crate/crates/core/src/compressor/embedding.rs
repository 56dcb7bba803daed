use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::composer::{route_strategies, LiftMode};
use crate::error::{Error, Result};
use crate::games::{classical_value_with, ClassicalOptions, Game};
use crate::opcore::{Operator, StateVector, Tolerance};
use crate::strategies::{PovmFamily, QuantumStrategy};

/// Largest per-player dimension (data ⊗ control) handled with dense joint operators.
pub const MAX_PLAYER_DIM: usize = 32;

/// What a game's measurement does while its control block is inactive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OfflineChoice {
    /// M̂_{x,a} = 𝟙 / |answers|
    ScalarUniform,
    /// M̂_{x,a} = 𝟙 on an optimal classical answer, 0 elsewhere.
    ScalarDeterministic,
    /// M̂ = the game's own (padded) measurement.
    CopyActive,
}

impl OfflineChoice {
    pub const ALL: [OfflineChoice; 3] =
        [OfflineChoice::ScalarUniform, OfflineChoice::ScalarDeterministic, OfflineChoice::CopyActive];

    pub fn as_str(self) -> &'static str {
        match self {
            OfflineChoice::ScalarUniform => "scalar-uniform",
            OfflineChoice::ScalarDeterministic => "scalar-deterministic",
            OfflineChoice::CopyActive => "copy-active",
        }
    }
}

impl fmt::Display for OfflineChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OfflineChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Malformed(format!("unknown offline choice `{s}`")))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EmbeddingOptions {
    pub offline: OfflineChoice,
    /// Pads the data register beyond max nᵢ.
    pub min_data_qubits: Option<u32>,
    /// Seed for the sampled classical search used by `scalar-deterministic` on large games.
    pub seed: u64,
}

impl Default for EmbeddingOptions {
    fn default() -> Self {
        EmbeddingOptions { offline: OfflineChoice::ScalarUniform, min_data_qubits: None, seed: 0 }
    }
}

/// K games on one data register, selected by a maximally entangled control register.
///
/// Each player's space is data ⊗ control. Game i is active on control block `active_block[i]`
/// and plays its offline measurement on every other block.
#[derive(Clone, Debug)]
pub struct ControlEmbedding {
    pub data_qubits: u32,
    pub control_qubits: u32,
    pub active_block: Vec<usize>,
    /// Per game, per question: the game's measurement padded onto the data register.
    pub active_povms_a: Vec<Vec<PovmFamily>>,
    pub active_povms_b: Vec<Vec<PovmFamily>>,
    /// Per game, per question: the offline measurement on the data register.
    pub offline_povms_a: Vec<Vec<PovmFamily>>,
    pub offline_povms_b: Vec<Vec<PovmFamily>>,
    /// M̃ = M ⊗ P_active + M̂ ⊗ (𝟙 − P_active) on data ⊗ control.
    pub embedded_a: Vec<Vec<PovmFamily>>,
    pub embedded_b: Vec<Vec<PovmFamily>>,
    /// |Φ_data⟩ ⊗ |Φ_control⟩, written with each player's registers adjacent.
    pub state: StateVector,
    pub per_game_qubits: Vec<u32>,
    pub offline: OfflineChoice,
}

impl ControlEmbedding {
    pub fn data_dim(&self) -> usize {
        1 << self.data_qubits
    }

    pub fn control_dim(&self) -> usize {
        1 << self.control_qubits
    }

    pub fn player_dim(&self) -> usize {
        self.data_dim() * self.control_dim()
    }

    pub fn n_compressed(&self) -> u32 {
        self.data_qubits + self.control_qubits
    }

    pub fn n_baseline(&self) -> u32 {
        self.per_game_qubits.iter().sum()
    }
}

fn ceil_log2(k: usize) -> u32 {
    k.next_power_of_two().trailing_zeros()
}

fn pad(fams: &[PovmFamily], extra: usize) -> Vec<PovmFamily> {
    if extra == 1 {
        return fams.to_vec();
    }
    let id = Operator::identity(extra);
    fams.iter().map(|f| f.iter().map(|e| e.as_ref().map(|m| m.kron(&id))).collect()).collect()
}

fn scalar_uniform(fams: &[PovmFamily], d: usize) -> Vec<PovmFamily> {
    fams.iter()
        .map(|f| {
            let w = 1.0 / f.len() as f64;
            f.iter().map(|_| Some(Operator::identity(d).scale_real(w))).collect()
        })
        .collect()
}

fn scalar_deterministic(answers: &[usize], outcomes: usize, d: usize) -> Vec<PovmFamily> {
    answers.iter().map(|&ans| (0..outcomes).map(|a| (a == ans).then(|| Operator::identity(d))).collect()).collect()
}

/// An optimal (or, past the enumeration budget, best sampled) deterministic strategy.
fn classical_answers(game: &Game, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let exact = ClassicalOptions { seed, ..ClassicalOptions::default() };
    let cv = match classical_value_with(game, &exact) {
        Ok(cv) => cv,
        Err(Error::BudgetExceeded { .. }) => {
            classical_value_with(game, &ClassicalOptions { sampling: Some(4096), ..exact })?
        }
        Err(e) => return Err(e),
    };
    Ok((cv.strategy.f, cv.strategy.g))
}

fn embed(active: &[PovmFamily], offline: &[PovmFamily], block: usize, control_dim: usize) -> Vec<PovmFamily> {
    let p_on = Operator::basis_projector(control_dim, block);
    let p_off = &Operator::identity(control_dim) - &p_on;
    active
        .iter()
        .zip(offline)
        .map(|(fa, fo)| {
            fa.iter()
                .zip(fo)
                .map(|(m, mh)| match (m, mh) {
                    (None, None) => None,
                    (Some(m), None) => Some(m.kron(&p_on)),
                    (None, Some(mh)) => Some(mh.kron(&p_off)),
                    (Some(m), Some(mh)) => Some(&m.kron(&p_on) + &mh.kron(&p_off)),
                })
                .collect()
        })
        .collect()
}

/// Places K ≥ 2 perfect strategies on max nᵢ data qubits plus ⌈log₂K⌉ control qubits.
///
/// Nothing about the outcome is assumed here; the residuals are computed by
/// [`compute_checks`](super::compute_checks).
pub fn build_control_embedding(
    games: &[Game],
    strats: &[QuantumStrategy],
    opts: &EmbeddingOptions,
    tol: Tolerance,
) -> Result<ControlEmbedding> {
    let k = games.len();
    if k < 2 {
        return Err(Error::Precondition(format!("compression needs at least two games, got {k}")));
    }
    if strats.len() != k {
        return Err(Error::Precondition("need one strategy per game".into()));
    }
    // Padded routing checks perfection and rewrites every state as |Φ_d⟩ on the widest game.
    let routed = route_strategies(games, strats, LiftMode::Padded, tol)?;
    let nbar = routed.plan.nbar;
    let data_qubits = nbar.max(opts.min_data_qubits.unwrap_or(0));
    let control_qubits = ceil_log2(k);
    let data_dim = 1usize << data_qubits;
    let control_dim = 1usize << control_qubits;
    if data_dim * control_dim > MAX_PLAYER_DIM {
        return Err(Error::Precondition(format!(
            "{} qubits per player exceeds the dense limit of {MAX_PLAYER_DIM} dimensions",
            data_qubits + control_qubits
        )));
    }
    let extra = data_dim / routed.plan.d;
    let mut out = ControlEmbedding {
        data_qubits,
        control_qubits,
        active_block: (0..k).collect(),
        active_povms_a: Vec::new(),
        active_povms_b: Vec::new(),
        offline_povms_a: Vec::new(),
        offline_povms_b: Vec::new(),
        embedded_a: Vec::new(),
        embedded_b: Vec::new(),
        // |Φ_data⟩|Φ_control⟩ regrouped as (Aᵈ Aᶜ)(Bᵈ Bᶜ) is |Φ_{data·control}⟩.
        state: StateVector::maximally_entangled(data_dim * control_dim),
        per_game_qubits: strats.iter().map(|s| s.dim_a().trailing_zeros()).collect(),
        offline: opts.offline,
    };
    for (i, (g, lifted)) in games.iter().zip(&routed.lifted).enumerate() {
        let act_a = pad(lifted.povms_a(), extra);
        let act_b = pad(lifted.povms_b(), extra);
        let (off_a, off_b) = match opts.offline {
            OfflineChoice::ScalarUniform => (scalar_uniform(&act_a, data_dim), scalar_uniform(&act_b, data_dim)),
            OfflineChoice::ScalarDeterministic => {
                let (f, gg) = classical_answers(g, opts.seed)?;
                let (_, _, oa, ob) = g.sizes();
                (scalar_deterministic(&f, oa, data_dim), scalar_deterministic(&gg, ob, data_dim))
            }
            OfflineChoice::CopyActive => (act_a.clone(), act_b.clone()),
        };
        let block = out.active_block[i];
        out.embedded_a.push(embed(&act_a, &off_a, block, control_dim));
        out.embedded_b.push(embed(&act_b, &off_b, block, control_dim));
        out.active_povms_a.push(act_a);
        out.active_povms_b.push(act_b);
        out.offline_povms_a.push(off_a);
        out.offline_povms_b.push(off_b);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::ObservableSquare;
    use crate::opcore::{kron, CVector};
    use crate::strategies::{msg_canonical_strategy, trivial_strategy};

    fn msg_pair(offline: OfflineChoice) -> ControlEmbedding {
        let s = msg_canonical_strategy(&ObservableSquare::standard()).unwrap();
        let g = Game::magic_square();
        let opts = EmbeddingOptions { offline, ..Default::default() };
        build_control_embedding(&[g.clone(), g], &[s.clone(), s], &opts, Tolerance::default()).unwrap()
    }

    #[test]
    fn register_sizes() {
        let e = msg_pair(OfflineChoice::ScalarUniform);
        assert_eq!((e.data_qubits, e.control_qubits, e.n_compressed(), e.n_baseline()), (2, 1, 3, 4));
        assert_eq!(e.player_dim(), 8);
        assert_eq!(e.state.dim(), 64);
    }

    #[test]
    fn control_support_is_correlated() {
        // (P₀⊗P₀ + P₁⊗P₁)|Φ₂⟩ = |Φ₂⟩
        let p0 = Operator::basis_projector(2, 0);
        let p1 = Operator::basis_projector(2, 1);
        let corr = &kron(&p0, &p0) + &kron(&p1, &p1);
        let phi = StateVector::maximally_entangled(2);
        assert!((corr.apply(phi.amplitudes()) - phi.amplitudes()).norm() < 1e-12);
        // The regrouped register state equals |Φ_data⟩|Φ_control⟩ with the qubits reordered.
        let e = msg_pair(OfflineChoice::ScalarUniform);
        let direct = StateVector::maximally_entangled(4).kron(&StateVector::maximally_entangled(2));
        // Reorder (Aᵈ Bᵈ Aᶜ Bᶜ) → (Aᵈ Aᶜ Bᵈ Bᶜ).
        let reordered = crate::opcore::permute_subsystems(&direct, &[4, 4, 2, 2], &[0, 2, 1, 3]).unwrap();
        let diff: CVector = reordered.amplitudes() - e.state.amplitudes();
        assert!(diff.norm() < 1e-12);
    }

    #[test]
    fn embedded_families_are_block_diagonal_povms() {
        for choice in OfflineChoice::ALL {
            let e = msg_pair(choice);
            for fams in e.embedded_a.iter().chain(&e.embedded_b) {
                for f in fams {
                    let chk = crate::strategies::check_family(f, Tolerance::default()).unwrap();
                    assert!(chk.valid, "{choice}: {chk:?}");
                }
            }
        }
    }

    #[test]
    fn k_one_is_refused() {
        let s = trivial_strategy();
        let r = build_control_embedding(&[Game::trivial()], &[s], &EmbeddingOptions::default(), Tolerance::default());
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn offline_choice_parses() {
        for c in OfflineChoice::ALL {
            assert_eq!(c.as_str().parse::<OfflineChoice>().unwrap(), c);
        }
        assert!("nope".parse::<OfflineChoice>().is_err());
    }
}
