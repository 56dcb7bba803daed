use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::{parallel_game, Game};
use crate::opcore::{
    apply_local, commutator_norm, kron, permute_subsystems, CVector, Operator, StateVector, Tolerance,
};
use crate::strategies::{report_from_raw, require_perfect, GameValueReport, PovmFamily, QuantumStrategy};

/// Dense materialization is refused above this many complex entries.
const DENSE_LIMIT: usize = 1 << 24;

/// The product of K per-game strategies, kept factored.
///
/// The global state is `⊗ᵢ|ψᵢ⟩` regrouped as (A₁…A_K) ⊗ (B₁…B_K); product POVM elements are
/// built on demand so that large compositions never materialize full families.
#[derive(Clone, Debug)]
pub struct TensorStrategy {
    games: Vec<Game>,
    components: Vec<QuantumStrategy>,
}

/// Checks performed on a tensor composition.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TensorReport {
    /// N = Σ nᵢ qubits per player.
    pub qubits_per_player: u32,
    pub per_game_qubits: Vec<u32>,
    pub value: f64,
    pub min_acceptance: f64,
    pub perfect: bool,
    /// max |⟨Ψ|⊗M⊗N|Ψ⟩ − ∏⟨ψᵢ|M⊗N|ψᵢ⟩| over the sampled outcome tuples.
    pub factorization_residual: f64,
    pub factorization_samples: usize,
    /// max ‖[M̃ᵢ, M̃ⱼ]‖ over sampled elements of distinct games, both players.
    pub cross_commutation_max: f64,
}

impl TensorStrategy {
    pub fn components(&self) -> &[QuantumStrategy] {
        &self.components
    }

    pub fn games(&self) -> &[Game] {
        &self.games
    }

    pub fn dims_a(&self) -> Vec<usize> {
        self.components.iter().map(QuantumStrategy::dim_a).collect()
    }

    pub fn dims_b(&self) -> Vec<usize> {
        self.components.iter().map(QuantumStrategy::dim_b).collect()
    }

    pub fn dim_a(&self) -> usize {
        self.dims_a().iter().product()
    }

    pub fn dim_b(&self) -> usize {
        self.dims_b().iter().product()
    }

    /// Σ nᵢ
    pub fn qubits_per_player(&self) -> u32 {
        self.components.iter().map(|c| c.qubits_per_player().unwrap_or(0)).sum()
    }

    /// Subsystem dimensions of the global state: Alice's factors then Bob's.
    pub fn subsystem_dims(&self) -> Vec<usize> {
        let mut d = self.dims_a();
        d.extend(self.dims_b());
        d
    }

    /// |Ψ⟩ = ⊗ᵢ|ψᵢ⟩ in (Alice-all) ⊗ (Bob-all) order.
    pub fn state(&self) -> StateVector {
        let k = self.components.len();
        let states: Vec<StateVector> = self.components.iter().map(|c| c.state().clone()).collect();
        let interleaved = StateVector::kron_all(&states).expect("non-empty");
        let dims: Vec<usize> = self.components.iter().flat_map(|c| [c.dim_a(), c.dim_b()]).collect();
        let order: Vec<usize> = (0..k).map(|i| 2 * i).chain((0..k).map(|i| 2 * i + 1)).collect();
        permute_subsystems(&interleaved, &dims, &order).expect("consistent dims")
    }

    /// ⊗ᵢ M_{xᵢ,aᵢ}, or `None` when any factor is absent.
    pub fn element_a(&self, xs: &[usize], outs: &[usize]) -> Option<Operator> {
        product_element(self.components.iter().map(|c| c.povms_a()), xs, outs)
    }

    pub fn element_b(&self, ys: &[usize], outs: &[usize]) -> Option<Operator> {
        product_element(self.components.iter().map(|c| c.povms_b()), ys, outs)
    }

    /// Fully materialized strategy on the parallel game; refused when it would be too large.
    pub fn to_quantum_strategy(&self, game: &Game, tol: Tolerance) -> Result<QuantumStrategy> {
        let (ia, ib, oa, ob) = game.sizes();
        let (da, db) = (self.dim_a(), self.dim_b());
        let cost = (ia * oa).saturating_mul(da * da).saturating_add((ib * ob).saturating_mul(db * db));
        if cost > DENSE_LIMIT {
            return Err(Error::Precondition(format!(
                "dense product strategy would need {cost} entries; use the factored evaluation"
            )));
        }
        let ra: Vec<usize> = self.games.iter().map(|g| g.inputs_a().len()).collect();
        let rb: Vec<usize> = self.games.iter().map(|g| g.inputs_b().len()).collect();
        let roa: Vec<usize> = self.games.iter().map(|g| g.outputs_a().len()).collect();
        let rob: Vec<usize> = self.games.iter().map(|g| g.outputs_b().len()).collect();
        let fams = |n: usize, o: usize, ri: &[usize], ro: &[usize], alice: bool| -> Vec<PovmFamily> {
            (0..n)
                .map(|x| {
                    let xs = Game::split_index(ri, x);
                    (0..o)
                        .map(|a| {
                            let outs = Game::split_index(ro, a);
                            if alice {
                                self.element_a(&xs, &outs)
                            } else {
                                self.element_b(&xs, &outs)
                            }
                        })
                        .collect()
                })
                .collect()
        };
        QuantumStrategy::new(da, db, self.state(), fams(ia, oa, &ra, &roa, true), fams(ib, ob, &rb, &rob, false), tol)
    }

    fn acceptance_ops(&self) -> Vec<Vec<Operator>> {
        self.games
            .iter()
            .zip(&self.components)
            .map(|(g, s)| {
                let (ia, ib, _, _) = g.sizes();
                (0..ia * ib).map(|q| s.acceptance_operator(g, q / ib, q % ib).expect("checked")).collect()
            })
            .collect()
    }

    /// Per-question acceptance ⟨Ψ|⊗ᵢWᵢ(xᵢ,yᵢ)|Ψ⟩ of the parallel game.
    ///
    /// Each Wᵢ acts on its own (Aᵢ, Bᵢ) pair of the global state. The games are split into two
    /// halves and ⟨Ψ|W_L W_R|Ψ⟩ = ⟨W_L Ψ|W_R Ψ⟩ is assembled from both sides (the Wᵢ are
    /// Hermitian and act on disjoint factors).
    pub fn per_question_acceptance(&self, game: &Game) -> Vec<Vec<f64>> {
        let k = self.games.len();
        let dims = self.subsystem_dims();
        let psi = self.state().into_amplitudes();
        let w = self.acceptance_ops();
        let nq: Vec<usize> = w.iter().map(Vec::len).collect();
        let split = k.div_ceil(2);
        let apply_tuple = |games: std::ops::Range<usize>, mut idx: usize| -> CVector {
            let mut v = psi.clone();
            for i in games.rev() {
                let q = idx % nq[i];
                idx /= nq[i];
                v = apply_local(&v, &dims, &[i, k + i], &w[i][q]).expect("consistent dims");
            }
            v
        };
        let n_right: usize = nq[split..].iter().product();
        let n_left: usize = nq[..split].iter().product();
        let right: Vec<CVector> = (0..n_right).into_par_iter().map(|r| apply_tuple(split..k, r)).collect();
        let pairs: Vec<(usize, Vec<f64>)> = (0..n_left)
            .into_par_iter()
            .map(|l| {
                let lv = apply_tuple(0..split, l);
                (l, right.iter().map(|rv| lv.dotc(rv).re).collect())
            })
            .collect();

        let (ia, ib, _, _) = game.sizes();
        let ra: Vec<usize> = self.games.iter().map(|g| g.inputs_a().len()).collect();
        let rb: Vec<usize> = self.games.iter().map(|g| g.inputs_b().len()).collect();
        let mut raw = vec![vec![0.0; ib]; ia];
        for (l, row) in pairs {
            let lq = Game::split_index(&nq[..split], l);
            for (r, val) in row.into_iter().enumerate() {
                let rq = Game::split_index(&nq[split..], r);
                let qs: Vec<usize> = lq.iter().chain(&rq).copied().collect();
                let xs: Vec<usize> = qs.iter().zip(&rb).map(|(q, nb)| q / nb).collect();
                let ys: Vec<usize> = qs.iter().zip(&rb).map(|(q, nb)| q % nb).collect();
                raw[Game::join_index(&ra, &xs)][Game::join_index(&rb, &ys)] = val;
            }
        }
        raw
    }

    /// Compares the global expectation of random product elements with the product of the
    /// per-game expectations.
    pub fn factorization_residual(&self, samples: usize, seed: u64) -> f64 {
        let k = self.games.len();
        let dims = self.subsystem_dims();
        let psi = self.state().into_amplitudes();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draws: Vec<Vec<(usize, usize, usize, usize)>> = (0..samples)
            .map(|_| {
                self.components
                    .iter()
                    .map(|c| {
                        let x = rng.random_range(0..c.povms_a().len());
                        let y = rng.random_range(0..c.povms_b().len());
                        let present = |f: &PovmFamily| -> Vec<usize> {
                            f.iter().enumerate().filter_map(|(i, e)| e.as_ref().map(|_| i)).collect()
                        };
                        let pa = present(&c.povms_a()[x]);
                        let pb = present(&c.povms_b()[y]);
                        (x, y, pa[rng.random_range(0..pa.len())], pb[rng.random_range(0..pb.len())])
                    })
                    .collect()
            })
            .collect();
        draws
            .par_iter()
            .map(|tuple| {
                let mut v = psi.clone();
                let mut product = 1.0;
                for (i, (&(x, y, a, b), c)) in tuple.iter().zip(&self.components).enumerate() {
                    let m = c.povms_a()[x][a].as_ref().expect("present");
                    let n = c.povms_b()[y][b].as_ref().expect("present");
                    v = apply_local(&v, &dims, &[i], m).expect("dims");
                    v = apply_local(&v, &dims, &[k + i], n).expect("dims");
                    product *= c.answer_distribution(x, y)[a][b];
                }
                (psi.dotc(&v).re - product).abs()
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Largest commutator between embedded elements of distinct games, sampled per player.
    pub fn cross_commutation(&self, seed: u64) -> f64 {
        let k = self.games.len();
        if k < 2 {
            return 0.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for alice in [true, false] {
            let dims = if alice { self.dims_a() } else { self.dims_b() };
            let embed = |i: usize, e: &Operator| -> Operator {
                let left = Operator::identity(dims[..i].iter().product());
                let right = Operator::identity(dims[i + 1..].iter().product());
                kron(&kron(&left, e), &right)
            };
            let mut pick = |i: usize| -> Operator {
                let c = &self.components[i];
                let fams = if alice { c.povms_a() } else { c.povms_b() };
                let fam = &fams[rng.random_range(0..fams.len())];
                let present: Vec<&Operator> = fam.iter().flatten().collect();
                present[rng.random_range(0..present.len())].clone()
            };
            for i in 0..k {
                for j in i + 1..k {
                    let (ei, ej) = (pick(i), pick(j));
                    let c = commutator_norm(&embed(i, &ei), &embed(j, &ej)).expect("dims");
                    worst = worst.max(c);
                }
            }
        }
        worst
    }
}

fn product_element<'a>(
    families: impl Iterator<Item = &'a [PovmFamily]>,
    qs: &[usize],
    outs: &[usize],
) -> Option<Operator> {
    let mut acc: Option<Operator> = None;
    for ((fams, &q), &o) in families.zip(qs).zip(outs) {
        let e = fams[q][o].as_ref()?;
        acc = Some(match acc {
            None => e.clone(),
            Some(a) => kron(&a, e),
        });
    }
    acc
}

/// Composes perfect strategies for simultaneous play.
///
/// Every input strategy must be perfect for its game; the result plays all games at once on
/// N = Σ nᵢ qubits per player.
pub fn tensor_strategies(games: &[Game], strats: &[QuantumStrategy], tol: Tolerance) -> Result<(Game, TensorStrategy)> {
    if games.is_empty() || games.len() != strats.len() {
        return Err(Error::Precondition("need one strategy per game and at least one game".into()));
    }
    for (g, s) in games.iter().zip(strats) {
        require_perfect(g, s, tol)?;
    }
    let game = parallel_game(games)?;
    Ok((game, TensorStrategy { games: games.to_vec(), components: strats.to_vec() }))
}

/// Runs every tensor-mode check.
pub fn tensor_report(game: &Game, ts: &TensorStrategy, tol: Tolerance, seed: u64) -> TensorReport {
    const SAMPLES: usize = 100;
    let raw = ts.per_question_acceptance(game);
    let rep: GameValueReport = report_from_raw(game, raw, tol);
    TensorReport {
        qubits_per_player: ts.qubits_per_player(),
        per_game_qubits: ts.components.iter().map(|c| c.qubits_per_player().unwrap_or(0)).collect(),
        value: rep.value,
        min_acceptance: rep.min_acceptance,
        perfect: rep.perfect,
        factorization_residual: ts.factorization_residual(SAMPLES, seed),
        factorization_samples: SAMPLES,
        cross_commutation_max: ts.cross_commutation(seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::ObservableSquare;
    use crate::strategies::{chsh_optimal_strategy, evaluate, msg_canonical_strategy, trivial_strategy};

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn single_game_is_passthrough() {
        let g = Game::magic_square();
        let s = msg_canonical_strategy(&ObservableSquare::standard()).unwrap();
        let (pg, ts) = tensor_strategies(std::slice::from_ref(&g), std::slice::from_ref(&s), tol()).unwrap();
        assert_eq!(pg, g);
        assert_eq!(ts.qubits_per_player(), 2);
        assert_eq!(ts.to_quantum_strategy(&pg, tol()).unwrap(), s);
    }

    #[test]
    fn imperfect_inputs_are_refused() {
        let g = Game::chsh();
        let s = chsh_optimal_strategy();
        let r = tensor_strategies(&[g.clone(), g], &[s.clone(), s], tol());
        assert!(matches!(r, Err(Error::NotPerfect { .. })));
    }

    #[test]
    fn structured_evaluation_matches_dense() {
        let games = [Game::trivial(), Game::magic_square()];
        let strats = [trivial_strategy(), msg_canonical_strategy(&ObservableSquare::standard()).unwrap()];
        let (pg, ts) = tensor_strategies(&games, &strats, tol()).unwrap();
        let dense = evaluate(&pg, &ts.to_quantum_strategy(&pg, tol()).unwrap(), tol()).unwrap();
        let raw = ts.per_question_acceptance(&pg);
        for (r, d) in raw.iter().flatten().zip(dense.raw.iter().flatten()) {
            assert!((r - d).abs() < 1e-12);
        }
        let rep = tensor_report(&pg, &ts, tol(), 7);
        assert!(rep.perfect && rep.factorization_residual < 1e-12);
        assert_eq!(rep.cross_commutation_max, 0.0);
    }
}
