use super::{PovmFamily, QuantumStrategy};
use crate::error::{Error, Result};
use crate::games::{builtin, sign_tuple, ClassicalStrategy, Game, ObservableSquare, GHZ3_LINE_POINTS, GHZ3_LINE_SIGNS};
use crate::opcore::{commutator_norm, pauli, CVector, Operator, StateVector, Tolerance, C64};

/// Names accepted by [`builtin_strategy`].
pub const BUILTIN_STRATEGIES: [&str; 5] = ["builtin", "msg-builtin", "chsh-builtin", "ghz3-builtin", "trivial-builtin"];

/// Joint eigenprojectors of commuting ±1 observables, indexed like [`sign_tuple`].
///
/// With a `constraint_sign`, tuples whose product disagrees with it are omitted (their
/// projectors vanish because the observables multiply to `constraint_sign · 𝟙`).
pub fn pvm_from_commuting_observables(
    obs: &[Operator],
    constraint_sign: Option<i8>,
    tol: Tolerance,
) -> Result<PovmFamily> {
    let Some(first) = obs.first() else {
        return Err(Error::Precondition("need at least one observable".into()));
    };
    let d = first.dim();
    let id = Operator::identity(d);
    for (i, o) in obs.iter().enumerate() {
        if o.dim() != d {
            return Err(Error::DimensionMismatch(format!("observable {i} has dim {}", o.dim())));
        }
        if (o * o).distance(&id) > tol.eps() || !o.is_hermitian(tol) {
            return Err(Error::Precondition(format!("observable {i} is not a ±1 involution")));
        }
        for (j, p) in obs.iter().enumerate().skip(i + 1) {
            let c = commutator_norm(o, p)?;
            if c > tol.eps() {
                return Err(Error::Precondition(format!("observables {i} and {j} do not commute (‖[A,B]‖ = {c:.3e})")));
            }
        }
    }
    if let Some(s) = constraint_sign {
        let prod = obs[1..].iter().fold(first.clone(), |acc, o| &acc * o);
        if prod.distance(&id.scale_real(s as f64)) > tol.eps() {
            return Err(Error::Precondition(format!("product of observables is not {s}·𝟙")));
        }
    }
    let n = obs.len();
    let half = C64::new(0.5, 0.0);
    Ok((0..1usize << n)
        .map(|k| {
            let t = sign_tuple(k, n);
            let parity: i8 = t.iter().product();
            if constraint_sign.is_some_and(|s| s != parity) {
                return None;
            }
            let p = obs.iter().zip(&t).fold(id.clone(), |acc, (o, &a)| {
                let factor = (&id + &o.scale_real(a as f64)).scale(half);
                &acc * &factor
            });
            Some(p)
        })
        .collect())
}

/// Alice measures rows, Bob measures transposed columns, on `|Φ_d⟩`.
///
/// Since ⟨Φ_d|A⊗Bᵀ|Φ_d⟩ = tr(AB)/d, Bob's transposed column projectors agree with Alice's
/// row projectors on the shared cell.
pub fn square_canonical_strategy(square: &ObservableSquare) -> Result<QuantumStrategy> {
    let tol = Tolerance::default();
    let d = square.local_dim();
    let povms_a = (0..square.rows())
        .map(|r| pvm_from_commuting_observables(&square.row(r), Some(square.row_signs()[r]), tol))
        .collect::<Result<Vec<_>>>()?;
    let povms_b = (0..square.cols())
        .map(|c| {
            let col: Vec<Operator> = square.column(c).iter().map(Operator::transpose).collect();
            pvm_from_commuting_observables(&col, Some(square.col_signs()[c]), tol)
        })
        .collect::<Result<Vec<_>>>()?;
    QuantumStrategy::new(d, d, StateVector::maximally_entangled(d), povms_a, povms_b, tol)
}

/// Two Bell pairs; Alice holds the first qubit of each, Bob the second.
pub fn msg_canonical_strategy(square: &ObservableSquare) -> Result<QuantumStrategy> {
    if square.local_dim() != 4 {
        return Err(Error::InvalidSquare("the magic-square strategy acts on two qubits".into()));
    }
    square_canonical_strategy(square)
}

/// Three Bell pairs; each player measures the four observables of their line.
pub fn ghz3_canonical_strategy() -> QuantumStrategy {
    let tol = Tolerance::default();
    let lines = |transpose: bool| -> Vec<PovmFamily> {
        GHZ3_LINE_POINTS
            .iter()
            .zip(GHZ3_LINE_SIGNS)
            .map(|(pts, sign)| {
                let obs: Vec<Operator> = pts
                    .iter()
                    .map(|p| {
                        let o = pauli::string(p).expect("valid Pauli label");
                        if transpose {
                            o.transpose()
                        } else {
                            o
                        }
                    })
                    .collect();
                pvm_from_commuting_observables(&obs, Some(sign), tol).expect("lines are consistent")
            })
            .collect()
    };
    QuantumStrategy::new(8, 8, StateVector::maximally_entangled(8), lines(false), lines(true), tol)
        .expect("ghz3 strategy is valid")
}

/// Bell state; Alice measures Z or X, Bob measures (Z ± X)/√2. Outcome 0 is eigenvalue +1.
pub fn chsh_optimal_strategy() -> QuantumStrategy {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = pauli::z();
    let x = pauli::x();
    let b0 = (&z + &x).scale_real(s);
    let b1 = (&z - &x).scale_real(s);
    let binary = |o: &Operator| {
        pvm_from_commuting_observables(std::slice::from_ref(o), None, Tolerance::default()).expect("involution")
    };
    QuantumStrategy::new(
        2,
        2,
        StateVector::bell(),
        vec![binary(&z), binary(&x)],
        vec![binary(&b0), binary(&b1)],
        Tolerance::default(),
    )
    .expect("chsh strategy is valid")
}

/// Perfect strategy for the trivial game: two Bell pairs, question 0 reads the computational
/// basis, question 1 the Hadamard basis of both qubits.
pub fn trivial_strategy() -> QuantumStrategy {
    let h2 = pauli::hadamard().kron(&pauli::hadamard());
    let basis = |rot: Option<&Operator>| -> PovmFamily {
        (0..4)
            .map(|k| {
                let p = Operator::basis_projector(4, k);
                Some(match rot {
                    Some(u) => &(u * &p) * &u.adjoint(),
                    None => p,
                })
            })
            .collect()
    };
    let fams = vec![basis(None), basis(Some(&h2))];
    QuantumStrategy::new(4, 4, StateVector::maximally_entangled(4), fams.clone(), fams, Tolerance::default())
        .expect("trivial strategy is valid")
}

/// A deterministic strategy on the product state |0⟩|0⟩ of two qubits.
pub fn classical_embedding(game: &Game, s: &ClassicalStrategy) -> Result<QuantumStrategy> {
    let (ia, ib, oa, ob) = game.sizes();
    if s.f.len() != ia || s.g.len() != ib {
        return Err(Error::InvalidStrategy("response table does not match the game".into()));
    }
    let fam = |answer: usize, outs: usize| -> PovmFamily {
        (0..outs).map(|a| (a == answer).then(|| Operator::identity(2))).collect()
    };
    let mut amps = CVector::zeros(4);
    amps[0] = C64::new(1.0, 0.0);
    QuantumStrategy::new(
        2,
        2,
        StateVector::from_amplitudes(amps)?,
        s.f.iter().map(|&a| fam(a, oa)).collect(),
        s.g.iter().map(|&b| fam(b, ob)).collect(),
        Tolerance::default(),
    )
}

/// Built-in `(game, strategy)` pairs.
///
/// `builtin` picks the canonical strategy of `game_name`; the other names fix the game.
pub fn builtin_strategy(strategy: &str, game_name: &str, variant: Option<usize>) -> Result<(Game, QuantumStrategy)> {
    let game_name = match strategy {
        "builtin" => game_name,
        "msg-builtin" => "magic_square",
        "chsh-builtin" => "chsh",
        "ghz3-builtin" => "ghz3",
        "trivial-builtin" => "trivial",
        other => {
            return Err(Error::InvalidStrategy(format!(
                "unknown builtin strategy `{other}` (known: {})",
                BUILTIN_STRATEGIES.join(", ")
            )))
        }
    };
    let game = builtin(game_name, variant)?;
    let strat = match game_name {
        "magic_square" | "msg" => {
            let sq = match variant {
                Some(k) => ObservableSquare::variant(k)?,
                None => ObservableSquare::standard(),
            };
            msg_canonical_strategy(&sq)?
        }
        "chsh" => chsh_optimal_strategy(),
        "ghz3" => ghz3_canonical_strategy(),
        "trivial" => trivial_strategy(),
        _ => unreachable!("builtin() validated the name"),
    };
    Ok((game, strat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{magic_square_game, sign_tuple_index};
    use crate::opcore::schmidt_rank;
    use crate::strategies::{check_family, evaluate};

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn row_pvm_has_four_rank_one_projectors() {
        let row: Vec<Operator> = ["XI", "IX", "XX"].iter().map(|s| pauli::string(s).unwrap()).collect();
        let fam = pvm_from_commuting_observables(&row, Some(1), tol()).unwrap();
        let present: Vec<&Operator> = fam.iter().flatten().collect();
        assert_eq!(present.len(), 4);
        for p in &present {
            assert!((p.trace().re - 1.0).abs() < 1e-12);
        }
        assert!(check_family(&fam, tol()).unwrap().valid);
        for (i, p) in fam.iter().enumerate() {
            for (j, q) in fam.iter().enumerate() {
                if let (Some(p), Some(q)) = (p, q) {
                    let want = if i == j { p.clone() } else { Operator::zeros(4) };
                    assert!((p * q).distance(&want) < 1e-9);
                }
            }
        }
    }

    #[test]
    fn single_observable_gives_two_projectors() {
        let fam = pvm_from_commuting_observables(&[pauli::z()], None, tol()).unwrap();
        assert_eq!(fam[0].as_ref().unwrap(), &Operator::basis_projector(2, 0));
        assert_eq!(fam[1].as_ref().unwrap(), &Operator::basis_projector(2, 1));
    }

    #[test]
    fn negative_column_supports_only_odd_tuples() {
        let col: Vec<Operator> = ["XX", "ZZ", "YY"].iter().map(|s| pauli::string(s).unwrap()).collect();
        // Without the constraint every tuple is built; even-parity ones must vanish.
        let all = pvm_from_commuting_observables(&col, None, tol()).unwrap();
        for (k, p) in all.iter().enumerate() {
            let parity: i8 = sign_tuple(k, 3).iter().product();
            let norm = p.as_ref().unwrap().frobenius_norm();
            if parity == 1 {
                assert!(norm <= 1e-9, "tuple {k}");
            } else {
                assert!(norm > 0.5);
            }
        }
        let constrained = pvm_from_commuting_observables(&col, Some(-1), tol()).unwrap();
        assert_eq!(constrained.iter().flatten().count(), 4);
        assert!(pvm_from_commuting_observables(&col, Some(1), tol()).is_err());
    }

    #[test]
    fn non_commuting_observables_are_rejected() {
        assert!(pvm_from_commuting_observables(&[pauli::x(), pauli::z()], None, tol()).is_err());
    }

    #[test]
    fn msg_strategy_is_perfect_on_every_square() {
        for sq in
            std::iter::once(ObservableSquare::standard()).chain((1..=4).map(|k| ObservableSquare::variant(k).unwrap()))
        {
            let g = magic_square_game(&sq);
            let s = msg_canonical_strategy(&sq).unwrap();
            let rep = evaluate(&g, &s, tol()).unwrap();
            assert!(rep.perfect, "min acceptance {}", rep.min_acceptance);
            assert!(rep.per_question.iter().flatten().all(|p| (p - 1.0).abs() < 1e-9));
        }
    }

    #[test]
    fn msg_distribution_is_supported_on_accepted_pairs() {
        let g = Game::magic_square();
        let s = msg_canonical_strategy(&ObservableSquare::standard()).unwrap();
        for x in 0..3 {
            for y in 0..3 {
                let dist = s.answer_distribution(x, y);
                for (a, row) in dist.iter().enumerate() {
                    for (b, &p) in row.iter().enumerate() {
                        if g.accepts(x, y, a, b) {
                            assert!((p - 1.0 / 8.0).abs() < 1e-9, "({x},{y},{a},{b}) = {p}");
                        } else {
                            assert!(p.abs() < 1e-12);
                        }
                    }
                }
                // Alice's marginal is uniform over her four valid answers.
                for (a, row) in dist.iter().enumerate() {
                    let m: f64 = row.iter().sum();
                    let parity: i8 = sign_tuple(a, 3).iter().product();
                    let want = if parity == g_row_sign(x) { 0.25 } else { 0.0 };
                    assert!((m - want).abs() < 1e-9);
                }
            }
        }
        assert_eq!(sign_tuple_index(&[1, 1, 1]), 0);
    }

    fn g_row_sign(x: usize) -> i8 {
        ObservableSquare::standard().row_signs()[x]
    }

    #[test]
    fn ghz3_strategy_is_perfect_and_entangled() {
        let s = ghz3_canonical_strategy();
        assert_eq!((s.dim_a(), s.dim_b()), (8, 8));
        let rep = evaluate(&Game::ghz3(), &s, tol()).unwrap();
        assert!(rep.perfect && (rep.value - 1.0).abs() < 1e-9);
        assert!(schmidt_rank(s.state(), (8, 8), tol()).unwrap() >= 2);
    }

    #[test]
    fn trivial_strategy_is_perfect() {
        let rep = evaluate(&Game::trivial(), &trivial_strategy(), tol()).unwrap();
        assert!(rep.perfect);
    }

    #[test]
    fn builtin_names_resolve() {
        for name in BUILTIN_STRATEGIES {
            let (g, s) = builtin_strategy(name, "ghz3", None).unwrap();
            let rep = evaluate(&g, &s, tol()).unwrap();
            assert!(rep.value > 0.8, "{name}");
        }
        assert!(builtin_strategy("builtin", "msg", Some(2)).is_ok());
        assert!(builtin_strategy("bogus", "chsh", None).is_err());
    }
}
