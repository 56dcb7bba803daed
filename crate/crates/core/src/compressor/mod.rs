//! Acceptance operators, the common winning sector, the control-register embedding of several
//! games into one register, and machine-checkable compression certificates.

mod certificate;
mod embedding;
mod pipeline;

use serde::Serialize;

pub use certificate::{
    compute_checks, verify_certificate, CertificateChecks, CertificatePovms, CompressionCertificate, VerifyReport,
    CERTIFICATE_VERSION,
};
pub use embedding::{build_control_embedding, ControlEmbedding, EmbeddingOptions, OfflineChoice};
pub use pipeline::{run_pipeline, ClosureSummary, CwsSummary, PipelineOptions, PipelineRecord, PipelineStep};

use crate::error::{Error, Result};
use crate::games::Game;
use crate::opcore::{simultaneous_diag, CMatrix, CVector, Operator, StateVector, Tolerance, C64, ZERO};
use crate::strategies::{acceptance_matrix, PovmFamily};

/// W(x, y) for one game, on the joint space of both players.
#[derive(Clone, Debug)]
pub struct AcceptanceOperator {
    pub game_index: usize,
    pub question: (usize, usize),
    pub op: Operator,
}

/// Σ_{(a,b): λ=1} M_{x,a} ⊗ N_{y,b} for explicit per-question families.
pub fn acceptance_operator(
    game: &Game,
    povms_a: &[PovmFamily],
    povms_b: &[PovmFamily],
    question: (usize, usize),
    game_index: usize,
) -> Result<AcceptanceOperator> {
    let (ia, ib, oa, ob) = game.sizes();
    if povms_a.len() != ia || povms_b.len() != ib {
        return Err(Error::InvalidStrategy(format!(
            "game `{}` has {ia}×{ib} questions, families cover {}×{}",
            game.name(),
            povms_a.len(),
            povms_b.len()
        )));
    }
    if povms_a.iter().any(|f| f.len() != oa) || povms_b.iter().any(|f| f.len() != ob) {
        return Err(Error::InvalidStrategy(format!(
            "family lengths do not match the {oa}/{ob} answers of `{}`",
            game.name()
        )));
    }
    let (x, y) = question;
    if x >= ia || y >= ib {
        return Err(Error::InvalidGame(format!("question ({x}, {y}) out of range")));
    }
    let dim_a = family_dim(&povms_a[x])?;
    let dim_b = family_dim(&povms_b[y])?;
    let op = acceptance_matrix(game, x, y, &povms_a[x], &povms_b[y], dim_a, dim_b);
    Ok(AcceptanceOperator { game_index, question, op })
}

/// Every acceptance operator of one game, questions in row-major order.
pub fn acceptance_operators(
    game: &Game,
    povms_a: &[PovmFamily],
    povms_b: &[PovmFamily],
    game_index: usize,
) -> Result<Vec<AcceptanceOperator>> {
    let (ia, ib, _, _) = game.sizes();
    (0..ia)
        .flat_map(|x| (0..ib).map(move |y| (x, y)))
        .map(|q| acceptance_operator(game, povms_a, povms_b, q, game_index))
        .collect()
}

pub(crate) fn family_dim(f: &PovmFamily) -> Result<usize> {
    f.iter()
        .flatten()
        .map(Operator::dim)
        .next()
        .ok_or_else(|| Error::InvalidStrategy("a measurement has no non-zero element".into()))
}

/// Accepted product basis vectors |e_j⟩⊗|f_ℓ⟩ in a local eigenbasis.
#[derive(Clone, Debug)]
pub struct ProductSector {
    /// Columns are the local basis vectors.
    pub basis_a: CMatrix,
    pub basis_b: CMatrix,
    pub accepted_indices: Vec<(usize, usize)>,
}

/// The common +1 eigenspace of a commuting family of acceptance operators.
#[derive(Clone, Debug)]
pub struct CwsResult {
    pub dims: (usize, usize),
    /// Orthonormal columns spanning the joint common +1 eigenspace.
    pub joint_vectors: CMatrix,
    /// Present when the supplied local operators of each player commute among themselves.
    pub product: Option<ProductSector>,
    /// Uniform superposition over the accepted product pairs.
    pub cws_state: Option<StateVector>,
    pub max_commutator: f64,
}

impl CwsResult {
    pub fn dimension(&self) -> usize {
        self.joint_vectors.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.dimension() == 0
    }

    /// Number of accepted product pairs L (0 without a product sector).
    pub fn accepted_pairs(&self) -> usize {
        self.product.as_ref().map_or(0, |p| p.accepted_indices.len())
    }

    /// ‖ψ − Pψ‖ for P the projector onto the sector.
    pub fn membership_residual(&self, state: &StateVector) -> f64 {
        let v = state.amplitudes();
        let proj = &self.joint_vectors * (self.joint_vectors.adjoint() * v);
        (v - proj).norm()
    }
}

/// Simultaneously diagonalizes the acceptance operators and keeps the directions on which
/// every one of them has eigenvalue 1.
///
/// `local` optionally supplies each player's operators; when each player's set commutes, the
/// product basis is scanned pair by pair and pairs fixed by every W are recorded.
pub fn common_winning_sector(
    ops: &[AcceptanceOperator],
    dims: (usize, usize),
    local: Option<(&[Operator], &[Operator])>,
    tol: Tolerance,
) -> Result<CwsResult> {
    let (da, db) = dims;
    if ops.is_empty() {
        return Err(Error::Precondition("common winning sector of an empty family".into()));
    }
    if let Some(bad) = ops.iter().find(|w| w.op.dim() != da * db) {
        return Err(Error::DimensionMismatch(format!("acceptance operator of dim {} on {da}×{db}", bad.op.dim())));
    }
    let raw: Vec<Operator> = ops.iter().map(|w| w.op.clone()).collect();
    // Fails with the largest commutator norm when the family does not commute.
    let sd = simultaneous_diag(&raw, tol)?;
    let max_commutator = sd.max_commutator;
    let keep: Vec<usize> =
        (0..da * db).filter(|&j| sd.diagonals.iter().all(|d| (d[j] - 1.0).abs() <= tol.eps())).collect();
    let joint_vectors = CMatrix::from_fn(da * db, keep.len(), |r, c| sd.basis[(r, keep[c])]);

    let product = match local {
        Some((la, lb)) => product_sector(&raw, la, lb, dims, tol)?,
        None => None,
    };
    let cws_state = product.as_ref().and_then(|p| {
        if p.accepted_indices.is_empty() {
            return None;
        }
        let mut v = CVector::zeros(da * db);
        for &(j, l) in &p.accepted_indices {
            v += p.basis_a.column(j).kronecker(&p.basis_b.column(l));
        }
        StateVector::normalized(v).ok()
    });
    Ok(CwsResult { dims, joint_vectors, product, cws_state, max_commutator })
}

fn local_basis(ops: &[Operator], dim: usize, tol: Tolerance) -> Result<Option<CMatrix>> {
    if ops.is_empty() {
        return Ok(Some(CMatrix::identity(dim, dim)));
    }
    match simultaneous_diag(ops, tol) {
        Ok(sd) => Ok(Some(sd.basis)),
        Err(Error::NonCommuting(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn product_sector(
    ws: &[Operator],
    la: &[Operator],
    lb: &[Operator],
    (da, db): (usize, usize),
    tol: Tolerance,
) -> Result<Option<ProductSector>> {
    let (Some(basis_a), Some(basis_b)) = (local_basis(la, da, tol)?, local_basis(lb, db, tol)?) else {
        return Ok(None);
    };
    let mut accepted_indices = Vec::new();
    for j in 0..da {
        for l in 0..db {
            let v = basis_a.column(j).kronecker(&basis_b.column(l));
            if ws.iter().all(|w| (w.apply(&v) - &v).norm() <= tol.eps()) {
                accepted_indices.push((j, l));
            }
        }
    }
    Ok(Some(ProductSector { basis_a, basis_b, accepted_indices }))
}

/// How well a state plays every acceptance operator at once.
#[derive(Clone, Debug, Serialize)]
pub struct CwsStateReport {
    /// Re ⟨Ψ| W₁ W₂ ⋯ W_m |Ψ⟩
    pub product_expectation: f64,
    pub product_expectation_imag: f64,
    /// ‖W_k Ψ − Ψ‖ per operator.
    pub fixed_point_residuals: Vec<f64>,
    pub pass: bool,
}

pub fn verify_cws_state(state: &StateVector, ops: &[AcceptanceOperator], tol: Tolerance) -> Result<CwsStateReport> {
    let psi = state.amplitudes();
    if let Some(bad) = ops.iter().find(|w| w.op.dim() != psi.len()) {
        return Err(Error::DimensionMismatch(format!("operator dim {} vs state dim {}", bad.op.dim(), psi.len())));
    }
    let fixed_point_residuals = ops.iter().map(|w| (w.op.apply(psi) - psi).norm()).collect();
    let mut v = psi.clone();
    for w in ops.iter().rev() {
        v = w.op.apply(&v);
    }
    let e: C64 = psi.iter().zip(v.iter()).fold(ZERO, |acc, (a, b)| acc + a.conj() * b);
    Ok(CwsStateReport {
        product_expectation: e.re,
        product_expectation_imag: e.im,
        fixed_point_residuals,
        pass: (e.re - 1.0).abs() <= tol.eps() && e.im.abs() <= tol.eps(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::ObservableSquare;
    use crate::games::{Game, Mu, Rule};
    use crate::opcore::{schmidt_rank, ONE};
    use crate::strategies::{msg_canonical_strategy, trivial_strategy, QuantumStrategy};
    use std::collections::BTreeSet;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    /// One question; answers 0, 1, 2; accept iff a = b ∈ {0, 1}.
    fn equality_game() -> (Game, QuantumStrategy) {
        let labels = |n: usize| (0..n).map(|i| i.to_string()).collect::<Vec<_>>();
        let accepted: BTreeSet<_> = [(0, 0, 0, 0), (0, 0, 1, 1)].into_iter().collect();
        let g =
            Game::new("equality", labels(1), labels(1), labels(3), labels(3), Mu::Uniform, Rule::Accepted(accepted))
                .unwrap();
        let fam: PovmFamily = (0..3).map(|k| Some(Operator::basis_projector(3, k))).collect();
        let state = StateVector::maximally_entangled(3);
        let s = QuantumStrategy::new(3, 3, state, vec![fam.clone()], vec![fam], tol()).unwrap();
        (g, s)
    }

    fn locals(s: &QuantumStrategy) -> (Vec<Operator>, Vec<Operator>) {
        let f = |fs: &[PovmFamily]| fs.iter().flatten().flatten().cloned().collect::<Vec<_>>();
        (f(s.povms_a()), f(s.povms_b()))
    }

    #[test]
    fn perfect_msg_strategy_is_a_fixed_point() {
        let s = msg_canonical_strategy(&ObservableSquare::standard()).unwrap();
        let g = Game::magic_square();
        let ws = acceptance_operators(&g, s.povms_a(), s.povms_b(), 0).unwrap();
        assert_eq!(ws.len(), 9);
        for w in &ws {
            let psi = s.state().amplitudes();
            assert!((w.op.apply(psi) - psi).norm() <= 1e-9);
        }
        let cws = common_winning_sector(&ws, (4, 4), None, tol()).unwrap();
        assert!(cws.membership_residual(s.state()) <= 1e-9);
        assert!(verify_cws_state(s.state(), &ws, tol()).unwrap().pass);
    }

    #[test]
    fn all_accepted_gives_identity() {
        let s = trivial_strategy();
        let g = Game::trivial();
        for w in acceptance_operators(&g, s.povms_a(), s.povms_b(), 0).unwrap() {
            assert!(w.op.distance(&Operator::identity(16)) < 1e-12);
        }
    }

    #[test]
    fn empty_accepted_set_gives_zero() {
        let labels = |n: usize| (0..n).map(|i| i.to_string()).collect::<Vec<_>>();
        let g = Game::new(
            "never",
            labels(1),
            labels(1),
            labels(2),
            labels(2),
            Mu::Uniform,
            Rule::Accepted(BTreeSet::new()),
        )
        .unwrap();
        let fam: PovmFamily = (0..2).map(|k| Some(Operator::basis_projector(2, k))).collect();
        let w = acceptance_operator(&g, std::slice::from_ref(&fam), std::slice::from_ref(&fam), (0, 0), 0).unwrap();
        assert!(w.op.max_abs() == 0.0);
        let cws = common_winning_sector(&[w], (2, 2), None, tol()).unwrap();
        assert!(cws.is_empty());
    }

    #[test]
    fn two_accepted_pairs_give_an_entangled_state() {
        let (g, s) = equality_game();
        let ws = acceptance_operators(&g, s.povms_a(), s.povms_b(), 0).unwrap();
        let (la, lb) = locals(&s);
        let cws = common_winning_sector(&ws, (3, 3), Some((&la, &lb)), tol()).unwrap();
        assert_eq!(cws.accepted_pairs(), 2);
        assert_eq!(cws.dimension(), 2);
        let state = cws.cws_state.clone().unwrap();
        assert_eq!(schmidt_rank(&state, (3, 3), tol()).unwrap(), 2);
        assert!((verify_cws_state(&state, &ws, tol()).unwrap().product_expectation - 1.0).abs() < 1e-12);
    }

    #[test]
    fn state_expectations_by_sector() {
        let (g, s) = equality_game();
        let ws = acceptance_operators(&g, s.povms_a(), s.povms_b(), 0).unwrap();
        // |22⟩ lies outside the sector, |00⟩ inside.
        let out = StateVector::basis(9, 8);
        let r = verify_cws_state(&out, &ws, tol()).unwrap();
        assert!(r.product_expectation.abs() < 1e-12 && !r.pass);
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let mut v = CVector::zeros(9);
        v[0] = h * ONE;
        v[8] = h;
        let mixed = StateVector::from_amplitudes(v).unwrap();
        let r = verify_cws_state(&mixed, &ws, tol()).unwrap();
        assert!((r.product_expectation - 0.5).abs() < 1e-12);
    }

    #[test]
    fn membership_matches_fixed_points_both_ways() {
        let (g, s) = equality_game();
        let ws = acceptance_operators(&g, s.povms_a(), s.povms_b(), 0).unwrap();
        let (la, lb) = locals(&s);
        let cws = common_winning_sector(&ws, (3, 3), Some((&la, &lb)), tol()).unwrap();
        let p = cws.product.unwrap();
        for j in 0..3 {
            for l in 0..3 {
                let v = p.basis_a.column(j).kronecker(&p.basis_b.column(l));
                let fixed = ws.iter().all(|w| (w.op.apply(&v) - &v).norm() <= 1e-9);
                assert_eq!(fixed, p.accepted_indices.contains(&(j, l)));
            }
        }
    }

    #[test]
    fn adding_an_operator_never_enlarges_the_sector() {
        let (g, s) = equality_game();
        let mut ws = acceptance_operators(&g, s.povms_a(), s.povms_b(), 0).unwrap();
        let before = common_winning_sector(&ws, (3, 3), None, tol()).unwrap().dimension();
        // A second commuting operator accepting only |00⟩.
        ws.push(AcceptanceOperator { game_index: 1, question: (0, 0), op: Operator::basis_projector(9, 0) });
        let after = common_winning_sector(&ws, (3, 3), None, tol()).unwrap().dimension();
        assert_eq!((before, after), (2, 1));
    }

    #[test]
    fn disjoint_factor_games_share_the_product_state() {
        let s = msg_canonical_strategy(&ObservableSquare::standard()).unwrap();
        let g = Game::magic_square();
        let id = Operator::identity(4);
        // Two copies on factors (A1 A2) ⊗ (B1 B2); reorder from (A1 B1)(A2 B2) by embedding each
        // player's elements directly.
        let lift = |fams: &[PovmFamily], first: bool| -> Vec<PovmFamily> {
            fams.iter()
                .map(|f| f.iter().map(|e| e.as_ref().map(|m| if first { m.kron(&id) } else { id.kron(m) })).collect())
                .collect()
        };
        let mut ws = Vec::new();
        for (k, first) in [(0, true), (1, false)] {
            ws.extend(acceptance_operators(&g, &lift(s.povms_a(), first), &lift(s.povms_b(), first), k).unwrap());
        }
        let psi = StateVector::maximally_entangled(16);
        for w in &ws {
            assert!((w.op.apply(psi.amplitudes()) - psi.amplitudes()).norm() <= 1e-9);
        }
        let cws = common_winning_sector(&ws, (16, 16), None, tol()).unwrap();
        assert!(cws.membership_residual(&psi) <= 1e-9);
    }

    #[test]
    fn non_commuting_operators_are_rejected() {
        let a = AcceptanceOperator { game_index: 0, question: (0, 0), op: Operator::basis_projector(4, 0) };
        let plus = CVector::from_element(4, C64::new(0.5, 0.0));
        let b = AcceptanceOperator { game_index: 1, question: (0, 0), op: Operator::outer(&plus) };
        assert!(matches!(common_winning_sector(&[a, b], (2, 2), None, tol()), Err(Error::NonCommuting(r)) if r > 0.1));
    }
}
