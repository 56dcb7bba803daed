use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::Game;
use crate::opcore::{CMatrix, CVector, Operator, StateVector, Tolerance, C64, ONE};
use crate::strategies::{evaluate, require_perfect, PovmFamily, QuantumStrategy};

/// How a 2^{nᵢ}-dimensional strategy is placed inside the common dimension d.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LiftMode {
    /// M ↦ M ⊗ 𝟙_{d/dᵢ}: the spare qubits are left untouched.
    Padded,
    /// M ↦ U M U† plus the completion 𝟙 − UU† on the first available outcome, with
    /// U: ℂ^{dᵢ} → ℂ^d the embedding of the first dᵢ basis vectors (Bob uses Ū).
    Isometric,
}

/// Common dimension, isometries and shared state of a routed composition.
#[derive(Clone, Debug)]
pub struct RoutedPlan {
    pub d: usize,
    pub nbar: u32,
    pub mode: LiftMode,
    /// d × dᵢ isometries (for [`LiftMode::Padded`], the column embedding 𝟙_{dᵢ} ⊗ |0⟩ that
    /// identifies the game's factor).
    pub isometries_a: Vec<CMatrix>,
    pub isometries_b: Vec<CMatrix>,
    pub shared_state: StateVector,
}

/// The lifted strategies, one per game, all on |Φ_d⟩.
#[derive(Clone, Debug)]
pub struct RoutedComposition {
    pub plan: RoutedPlan,
    pub lifted: Vec<QuantumStrategy>,
}

/// Location of the largest discrepancy |P^new − P^orig| for one game.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorstCase {
    pub x: usize,
    pub y: usize,
    pub a: usize,
    pub b: usize,
    pub p_new: f64,
    pub p_orig: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RoutedGameReport {
    pub game: String,
    pub qubits: u32,
    /// max |P^new − P^orig| with the lifted POVMs measured on |Φ_d⟩ as is.
    pub residual_unrescaled: f64,
    pub worst_unrescaled: WorstCase,
    /// Same comparison after post-selecting |Φ_d⟩ on the embedded subspace and renormalizing.
    pub residual_rescaled: f64,
    /// Minimum per-question acceptance of the lifted strategy on |Φ_d⟩.
    pub min_acceptance: f64,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RoutedReport {
    pub mode: LiftMode,
    /// n̄ = max nᵢ
    pub qubits_per_player: u32,
    /// N = Σ nᵢ for comparison.
    pub tensor_qubits: u32,
    pub per_game: Vec<RoutedGameReport>,
    pub max_residual_unrescaled: f64,
    pub max_residual_rescaled: f64,
    pub min_acceptance: f64,
    /// Winning probability when the referee picks the game uniformly.
    pub uniform_referee_value: f64,
    /// The distribution identity holds on the unrescaled |Φ_d⟩.
    pub distributions_match: bool,
}

fn log2_exact(d: usize) -> Result<u32> {
    if d.is_power_of_two() {
        Ok(d.trailing_zeros())
    } else {
        Err(Error::Precondition(format!("local dimension {d} is not a power of two")))
    }
}

/// Writes a maximally entangled `|ψ⟩` as `(𝟙 ⊗ V)|Φ_d⟩`, returning V.
fn bob_frame(s: &QuantumStrategy, tol: Tolerance) -> Result<Operator> {
    let d = s.dim_a();
    if s.dim_b() != d {
        return Err(Error::Precondition("routing needs equal local dimensions".into()));
    }
    let c = s.state().coefficient_matrix(d, d)?;
    let v = Operator::from_matrix(c.transpose() * C64::new((d as f64).sqrt(), 0.0))?;
    let r = v.unitarity_residual();
    if r > tol.eps().max(1e-9) {
        return Err(Error::Precondition(format!(
            "routing needs maximally entangled per-game states (deviation {r:.3e})"
        )));
    }
    Ok(v)
}

fn first_columns(d: usize, di: usize) -> CMatrix {
    CMatrix::from_fn(d, di, |i, j| if i == j { ONE } else { C64::new(0.0, 0.0) })
}

fn lift_family(fam: &PovmFamily, mode: LiftMode, d: usize, u: &CMatrix) -> PovmFamily {
    let di = u.ncols();
    let completion_at = fam.iter().position(Option::is_some);
    fam.iter()
        .enumerate()
        .map(|(k, e)| {
            e.as_ref().map(|m| {
                let lifted = match mode {
                    LiftMode::Padded => m.kron(&Operator::identity(d / di)),
                    LiftMode::Isometric => {
                        let mut big = u * m.matrix() * u.adjoint();
                        if Some(k) == completion_at {
                            big += CMatrix::identity(d, d) - u * u.adjoint();
                        }
                        Operator::from_matrix(big).expect("square")
                    }
                };
                lifted
            })
        })
        .collect()
}

/// Lifts each perfect strategy into the common dimension d = max 2^{nᵢ} on |Φ_d⟩.
pub fn route_strategies(
    games: &[Game],
    strats: &[QuantumStrategy],
    mode: LiftMode,
    tol: Tolerance,
) -> Result<RoutedComposition> {
    if games.is_empty() || games.len() != strats.len() {
        return Err(Error::Precondition("need one strategy per game and at least one game".into()));
    }
    let mut nbar = 0;
    for (g, s) in games.iter().zip(strats) {
        require_perfect(g, s, tol)?;
        nbar = nbar.max(log2_exact(s.dim_a())?);
    }
    let d = 1usize << nbar;
    let shared_state = StateVector::maximally_entangled(d);
    let mut isometries_a = Vec::new();
    let mut isometries_b = Vec::new();
    let mut lifted = Vec::new();
    for s in strats {
        let di = s.dim_a();
        let v = bob_frame(s, tol)?;
        // Bob's families rewritten for |Φ_dᵢ⟩: ⟨ψ|M⊗N|ψ⟩ = ⟨Φ|M⊗V†NV|Φ⟩.
        let bob: Vec<PovmFamily> = s
            .povms_b()
            .iter()
            .map(|f| f.iter().map(|e| e.as_ref().map(|n| n.conjugate_by(v.matrix()))).collect())
            .collect();
        let u = match mode {
            // |j⟩ ↦ |j⟩⊗|0⟩ for the padded lift.
            LiftMode::Padded => {
                CMatrix::from_fn(d, di, |i, j| if i == j * (d / di) { ONE } else { C64::new(0.0, 0.0) })
            }
            LiftMode::Isometric => first_columns(d, di),
        };
        let ub = u.map(|z| z.conj());
        let fa: Vec<PovmFamily> = s.povms_a().iter().map(|f| lift_family(f, mode, d, &u)).collect();
        let fb: Vec<PovmFamily> = bob.iter().map(|f| lift_family(f, mode, d, &ub)).collect();
        lifted.push(QuantumStrategy::new(d, d, shared_state.clone(), fa, fb, tol)?);
        isometries_a.push(u);
        isometries_b.push(ub);
    }
    Ok(RoutedComposition { plan: RoutedPlan { d, nbar, mode, isometries_a, isometries_b, shared_state }, lifted })
}

/// (Π⊗Π)|Φ_d⟩ renormalized, with Π the range projector of the game's isometry.
fn postselected_state(plan: &RoutedPlan, i: usize) -> Result<StateVector> {
    if plan.mode == LiftMode::Padded {
        // The padded lift acts on the whole space; nothing to post-select.
        return Ok(plan.shared_state.clone());
    }
    let pa = &plan.isometries_a[i] * plan.isometries_a[i].adjoint();
    let pb = &plan.isometries_b[i] * plan.isometries_b[i].adjoint();
    let v: CVector = pa.kronecker(&pb) * plan.shared_state.amplitudes();
    StateVector::normalized(v)
}

/// Compares every lifted answer distribution with the original one.
pub fn routed_report(
    games: &[Game],
    strats: &[QuantumStrategy],
    comp: &RoutedComposition,
    tol: Tolerance,
) -> Result<RoutedReport> {
    let mut per_game = Vec::new();
    for (i, ((g, s), l)) in games.iter().zip(strats).zip(&comp.lifted).enumerate() {
        let rescaled = QuantumStrategy::new(
            l.dim_a(),
            l.dim_b(),
            postselected_state(&comp.plan, i)?,
            l.povms_a().to_vec(),
            l.povms_b().to_vec(),
            tol,
        )?;
        let (ia, ib, _, _) = g.sizes();
        let mut worst = WorstCase { x: 0, y: 0, a: 0, b: 0, p_new: 0.0, p_orig: 0.0 };
        let mut res_un: f64 = -1.0;
        let mut res_re: f64 = 0.0;
        for x in 0..ia {
            for y in 0..ib {
                let orig = s.answer_distribution(x, y);
                let new = l.answer_distribution(x, y);
                let resc = rescaled.answer_distribution(x, y);
                for (a, row) in orig.iter().enumerate() {
                    for (b, &p) in row.iter().enumerate() {
                        let e = (new[a][b] - p).abs();
                        if e > res_un {
                            res_un = e;
                            worst = WorstCase { x, y, a, b, p_new: new[a][b], p_orig: p };
                        }
                        res_re = res_re.max((resc[a][b] - p).abs());
                    }
                }
            }
        }
        let rep = evaluate(g, l, tol)?;
        per_game.push(RoutedGameReport {
            game: g.name().to_string(),
            qubits: log2_exact(s.dim_a())?,
            residual_unrescaled: res_un,
            worst_unrescaled: worst,
            residual_rescaled: res_re,
            min_acceptance: rep.min_acceptance,
            value: rep.value,
        });
    }
    let max_un = per_game.iter().map(|r| r.residual_unrescaled).fold(0.0, f64::max);
    let max_re = per_game.iter().map(|r| r.residual_rescaled).fold(0.0, f64::max);
    let min_acc = per_game.iter().map(|r| r.min_acceptance).fold(f64::INFINITY, f64::min);
    let uniform = per_game.iter().map(|r| r.value).sum::<f64>() / per_game.len() as f64;
    Ok(RoutedReport {
        mode: comp.plan.mode,
        qubits_per_player: comp.plan.nbar,
        tensor_qubits: per_game.iter().map(|r| r.qubits).sum(),
        per_game,
        max_residual_unrescaled: max_un,
        max_residual_rescaled: max_re,
        min_acceptance: min_acc,
        uniform_referee_value: uniform,
        distributions_match: max_un <= tol.eps(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::ObservableSquare;
    use crate::strategies::{ghz3_canonical_strategy, msg_canonical_strategy};

    fn pair() -> (Vec<Game>, Vec<QuantumStrategy>) {
        (
            vec![Game::magic_square(), Game::ghz3()],
            vec![msg_canonical_strategy(&ObservableSquare::standard()).unwrap(), ghz3_canonical_strategy()],
        )
    }

    #[test]
    fn padded_lift_preserves_distributions() {
        let (g, s) = pair();
        let comp = route_strategies(&g, &s, LiftMode::Padded, Tolerance::default()).unwrap();
        assert_eq!((comp.plan.d, comp.plan.nbar), (8, 3));
        let rep = routed_report(&g, &s, &comp, Tolerance::default()).unwrap();
        assert!(rep.distributions_match, "{}", rep.max_residual_unrescaled);
        assert!(rep.min_acceptance >= 1.0 - 1e-9);
        assert_eq!(rep.tensor_qubits, 5);
    }

    #[test]
    fn isometric_lift_needs_rescaling() {
        let (g, s) = pair();
        let comp = route_strategies(&g, &s, LiftMode::Isometric, Tolerance::default()).unwrap();
        for u in &comp.plan.isometries_a {
            let gram = u.adjoint() * u;
            assert!((gram - CMatrix::identity(u.ncols(), u.ncols())).norm() < 1e-12);
        }
        let rep = routed_report(&g, &s, &comp, Tolerance::default()).unwrap();
        assert!(!rep.distributions_match);
        let msg = &rep.per_game[0];
        // Half of |Φ_8⟩ lies outside the embedded 4-dimensional block.
        assert!((msg.residual_unrescaled - 0.5).abs() < 1e-9, "{}", msg.residual_unrescaled);
        assert!(rep.max_residual_rescaled < 1e-9);
        assert!(rep.per_game[1].residual_unrescaled < 1e-9);
    }

    #[test]
    fn single_game_plan_is_identity() {
        let (g, s) = pair();
        for mode in [LiftMode::Padded, LiftMode::Isometric] {
            let comp = route_strategies(&g[..1], &s[..1], mode, Tolerance::default()).unwrap();
            assert_eq!(comp.plan.d, 4);
            assert_eq!(comp.plan.isometries_a[0], CMatrix::identity(4, 4));
            assert_eq!(comp.lifted[0], s[0]);
        }
    }
}
