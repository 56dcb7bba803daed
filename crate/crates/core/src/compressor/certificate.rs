use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::embedding::{ControlEmbedding, OfflineChoice, MAX_PLAYER_DIM};
use super::pipeline::PipelineRecord;
use crate::error::{Error, Result};
use crate::games::{Game, GameSpec};
use crate::opcore::{is_povm, CMatrix, CVector, Operator, StateVector, Tolerance, C64, ZERO};
use crate::strategies::{acceptance_matrix, PovmFamily};

pub const CERTIFICATE_VERSION: u32 = 1;

/// Question tuples beyond this count are sampled for the product acceptance.
const PRODUCT_ENUMERATION_LIMIT: u64 = 1_000_000;
const PRODUCT_SAMPLES: usize = 4096;
const PRODUCT_SEED: u64 = 0xce27;

/// Embedded families per game: question index → elements by answer (`null` = zero).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificatePovms {
    pub a: Vec<BTreeMap<String, Vec<Option<Operator>>>>,
    pub b: Vec<BTreeMap<String, Vec<Option<Operator>>>>,
}

/// Everything recomputed from the raw operators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateChecks {
    pub povm_validity: bool,
    /// Largest hermiticity, negativity or completeness residual over all embedded families.
    pub povm_max_residual: f64,
    /// Largest off-block-diagonal norm (control register) of any embedded element.
    pub block_diagonal_max: f64,
    /// max ‖[M̃ᵢ, M̃ⱼ]‖ over distinct games, per player.
    pub cross_commutation_max: f64,
    /// max ‖Σ_{λ=1} M̂ ⊗ N̂ − 𝟙_data‖ over games, questions and inactive blocks.
    pub offline_identity_max: f64,
    /// The same sum applied to |Φ_data⟩ only.
    pub offline_identity_on_state_max: f64,
    /// Weight of the shared state outside the correlated control blocks.
    pub control_support_residual: f64,
    /// max ‖W̃ Ψ − Ψ‖
    pub fixed_point_max: f64,
    /// ⟨Ψ|W̃ᵢ(x, y)|Ψ⟩ per game, indexed x·|I_B| + y.
    pub per_question_acceptance: Vec<Vec<f64>>,
    pub min_acceptance: f64,
    /// min over question tuples of Re ⟨Ψ|W̃₁ ⋯ W̃_K|Ψ⟩.
    pub product_acceptance_min: f64,
    pub product_tuples: u64,
    pub product_sampled: bool,
    /// n_compressed matches the register size and is below n_baseline.
    pub compression: bool,
    pub overall_pass: bool,
}

/// A self-contained claim that K games are played on `n_compressed` qubits per player.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompressionCertificate {
    pub version: u32,
    pub games: Vec<GameSpec>,
    pub n_compressed: u32,
    pub n_baseline: u32,
    pub per_game_qubits: Vec<u32>,
    pub data_qubits: u32,
    pub control_qubits: u32,
    pub active_blocks: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offline_choice: Option<OfflineChoice>,
    pub state: StateVector,
    pub povms: CertificatePovms,
    pub checks: CertificateChecks,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pipeline: Option<PipelineRecord>,
}

fn to_map(fams: &[PovmFamily]) -> BTreeMap<String, Vec<Option<Operator>>> {
    fams.iter().enumerate().map(|(x, f)| (x.to_string(), f.clone())).collect()
}

fn from_map(map: &BTreeMap<String, Vec<Option<Operator>>>) -> Result<Vec<PovmFamily>> {
    let mut out = vec![None; map.len()];
    for (k, v) in map {
        let x: usize = k.parse().map_err(|_| Error::Malformed(format!("question key `{k}` is not an index")))?;
        let slot = out.get_mut(x).ok_or_else(|| Error::Malformed(format!("question keys must be 0..{}", map.len())))?;
        *slot = Some(v.clone());
    }
    Ok(out.into_iter().map(|f| f.expect("every slot filled")).collect())
}

/// The certificate's contents in computational form.
struct Parsed {
    games: Vec<Game>,
    fa: Vec<Vec<PovmFamily>>,
    fb: Vec<Vec<PovmFamily>>,
    data_dim: usize,
    control_dim: usize,
    tol: Tolerance,
}

impl CompressionCertificate {
    /// Packages an embedding; the checks are computed, never assumed.
    pub fn from_embedding(
        games: &[Game],
        emb: &ControlEmbedding,
        tol: Tolerance,
        pipeline: Option<PipelineRecord>,
    ) -> Result<Self> {
        let mut cert = CompressionCertificate {
            version: CERTIFICATE_VERSION,
            games: games.iter().map(GameSpec::from_game).collect(),
            n_compressed: emb.n_compressed(),
            n_baseline: emb.n_baseline(),
            per_game_qubits: emb.per_game_qubits.clone(),
            data_qubits: emb.data_qubits,
            control_qubits: emb.control_qubits,
            active_blocks: emb.active_block.clone(),
            offline_choice: Some(emb.offline),
            state: emb.state.clone(),
            povms: CertificatePovms {
                a: emb.embedded_a.iter().map(|f| to_map(f)).collect(),
                b: emb.embedded_b.iter().map(|f| to_map(f)).collect(),
            },
            checks: CertificateChecks::placeholder(),
            tolerance: tol.eps(),
            pipeline,
        };
        cert.checks = compute_checks(&cert, None)?;
        Ok(cert)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Malformed(format!("certificate: {e}")))
    }

    pub fn game_names(&self) -> Vec<String> {
        self.games.iter().map(|g| g.name.clone()).collect()
    }

    fn parse(&self, tol: Option<Tolerance>) -> Result<Parsed> {
        let bad = |m: String| Err(Error::Malformed(m));
        if self.version != CERTIFICATE_VERSION {
            return bad(format!("unsupported certificate version {}", self.version));
        }
        let tol = match tol {
            Some(t) => t,
            None => {
                Tolerance::new(self.tolerance).map_err(|_| Error::Malformed("tolerance must be positive".into()))?
            }
        };
        let k = self.games.len();
        if k == 0 || self.povms.a.len() != k || self.povms.b.len() != k || self.active_blocks.len() != k {
            return bad("games, povms and active_blocks must have one entry per game".into());
        }
        if self.per_game_qubits.len() != k {
            return bad("per_game_qubits must have one entry per game".into());
        }
        if self.data_qubits + self.control_qubits > MAX_PLAYER_DIM.trailing_zeros() {
            return bad(format!(
                "{} qubits per player exceeds the dense limit",
                self.data_qubits + self.control_qubits
            ));
        }
        let data_dim = 1usize << self.data_qubits;
        let control_dim = 1usize << self.control_qubits;
        let pd = data_dim * control_dim;
        let mut seen = vec![false; control_dim];
        for &b in &self.active_blocks {
            if b >= control_dim || std::mem::replace(&mut seen[b], true) {
                return bad(format!("active block {b} is out of range or repeated"));
            }
        }
        if self.state.dim() != pd * pd {
            return bad(format!("state has dimension {}, expected {}", self.state.dim(), pd * pd));
        }
        let games: Vec<Game> = self.games.iter().map(GameSpec::to_game).collect::<Result<_>>()?;
        let mut fa = Vec::with_capacity(k);
        let mut fb = Vec::with_capacity(k);
        for (i, g) in games.iter().enumerate() {
            let (ia, ib, oa, ob) = g.sizes();
            let a = from_map(&self.povms.a[i])?;
            let b = from_map(&self.povms.b[i])?;
            if a.len() != ia || b.len() != ib {
                return bad(format!("game {i}: families do not cover the questions"));
            }
            for (fams, outs) in [(&a, oa), (&b, ob)] {
                for f in fams.iter() {
                    if f.len() != outs {
                        return bad(format!("game {i}: a family has {} elements, expected {outs}", f.len()));
                    }
                    if f.iter().flatten().any(|e| e.dim() != pd) {
                        return bad(format!("game {i}: element dimension differs from {pd}"));
                    }
                }
            }
            fa.push(a);
            fb.push(b);
        }
        Ok(Parsed { games, fa, fb, data_dim, control_dim, tol })
    }
}

impl CertificateChecks {
    fn placeholder() -> Self {
        CertificateChecks {
            povm_validity: false,
            povm_max_residual: f64::NAN,
            block_diagonal_max: f64::NAN,
            cross_commutation_max: f64::NAN,
            offline_identity_max: f64::NAN,
            offline_identity_on_state_max: f64::NAN,
            control_support_residual: f64::NAN,
            fixed_point_max: f64::NAN,
            per_question_acceptance: Vec::new(),
            min_acceptance: f64::NAN,
            product_acceptance_min: f64::NAN,
            product_tuples: 0,
            product_sampled: false,
            compression: false,
            overall_pass: false,
        }
    }

    /// Field-by-field differences against `other`, as readable strings.
    fn differences(&self, other: &CertificateChecks) -> Vec<String> {
        let mut out = Vec::new();
        let mut num = |name: &str, a: f64, b: f64| {
            let same = (a.is_nan() && b.is_nan()) || (a - b).abs() <= 1e-12 * b.abs().max(1.0);
            if !same {
                out.push(format!("{name}: stored {a:e}, recomputed {b:e}"));
            }
        };
        num("povm_max_residual", self.povm_max_residual, other.povm_max_residual);
        num("block_diagonal_max", self.block_diagonal_max, other.block_diagonal_max);
        num("cross_commutation_max", self.cross_commutation_max, other.cross_commutation_max);
        num("offline_identity_max", self.offline_identity_max, other.offline_identity_max);
        num("offline_identity_on_state_max", self.offline_identity_on_state_max, other.offline_identity_on_state_max);
        num("control_support_residual", self.control_support_residual, other.control_support_residual);
        num("fixed_point_max", self.fixed_point_max, other.fixed_point_max);
        num("min_acceptance", self.min_acceptance, other.min_acceptance);
        num("product_acceptance_min", self.product_acceptance_min, other.product_acceptance_min);
        let shape = |v: &Vec<Vec<f64>>| v.iter().map(Vec::len).collect::<Vec<_>>();
        if shape(&self.per_question_acceptance) != shape(&other.per_question_acceptance) {
            out.push("per_question_acceptance: shape differs".into());
        } else {
            for (i, (s, r)) in self.per_question_acceptance.iter().zip(&other.per_question_acceptance).enumerate() {
                for (q, (&a, &b)) in s.iter().zip(r).enumerate() {
                    num(&format!("per_question_acceptance[{i}][{q}]"), a, b);
                }
            }
        }
        let mut flag = |name: &str, a: String, b: String| {
            if a != b {
                out.push(format!("{name}: stored {a}, recomputed {b}"));
            }
        };
        flag("povm_validity", self.povm_validity.to_string(), other.povm_validity.to_string());
        flag("product_tuples", self.product_tuples.to_string(), other.product_tuples.to_string());
        flag("product_sampled", self.product_sampled.to_string(), other.product_sampled.to_string());
        flag("compression", self.compression.to_string(), other.compression.to_string());
        flag("overall_pass", self.overall_pass.to_string(), other.overall_pass.to_string());
        out
    }
}

/// The (j, k) control block of an operator on data ⊗ control.
fn control_block(op: &Operator, j: usize, k: usize, data_dim: usize, control_dim: usize) -> CMatrix {
    let m = op.matrix();
    CMatrix::from_fn(data_dim, data_dim, |r, c| m[(r * control_dim + j, c * control_dim + k)])
}

fn off_block_norm(op: &Operator, control_dim: usize) -> f64 {
    let m = op.matrix();
    let mut s = 0.0;
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if r % control_dim != c % control_dim {
                s += m[(r, c)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn questions_with_weight(g: &Game) -> Vec<(usize, usize)> {
    let (ia, ib, _, _) = g.sizes();
    (0..ia).flat_map(|x| (0..ib).map(move |y| (x, y))).filter(|&(x, y)| g.mu(x, y) > 0.0).collect()
}

fn inner(a: &CVector, b: &CVector) -> C64 {
    a.iter().zip(b.iter()).fold(ZERO, |acc, (x, y)| acc + x.conj() * y)
}

/// min over question tuples of Re ⟨Ψ|W₁(q₁) ⋯ W_K(q_K)|Ψ⟩.
fn product_acceptance(ws: &[Vec<Operator>], psi: &CVector) -> (f64, u64, bool) {
    let total = ws.iter().try_fold(1u64, |acc, w| acc.checked_mul(w.len() as u64)).unwrap_or(u64::MAX);
    if total == 0 {
        return (f64::NAN, 0, false);
    }
    if total <= PRODUCT_ENUMERATION_LIMIT {
        // Apply the last game first and reuse every prefix; the first factor is folded into
        // the bra as W₁†Ψ.
        let bras: Vec<CVector> = ws[0].iter().map(|w| w.adjoint().apply(psi)).collect();
        let mut frontier = vec![psi.clone()];
        for w in ws[1..].iter().rev() {
            frontier = frontier.par_iter().flat_map_iter(|v| w.iter().map(move |op| op.apply(v))).collect();
        }
        let min = frontier
            .par_iter()
            .map(|v| bras.iter().map(|b| inner(b, v).re).fold(f64::INFINITY, f64::min))
            .reduce(|| f64::INFINITY, f64::min);
        return (min, total, false);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(PRODUCT_SEED);
    let tuples: Vec<Vec<usize>> =
        (0..PRODUCT_SAMPLES).map(|_| ws.iter().map(|w| rng.random_range(0..w.len())).collect()).collect();
    let min = tuples
        .par_iter()
        .map(|t| {
            let mut v = psi.clone();
            for (w, &q) in ws.iter().zip(t).rev() {
                v = w[q].apply(&v);
            }
            inner(psi, &v).re
        })
        .reduce(|| f64::INFINITY, f64::min);
    (min, PRODUCT_SAMPLES as u64, true)
}

/// Recomputes every check from the certificate's raw operators, ignoring the stored checks.
///
/// `tol` overrides the certificate's own tolerance when given.
pub fn compute_checks(cert: &CompressionCertificate, tol: Option<Tolerance>) -> Result<CertificateChecks> {
    let p = cert.parse(tol)?;
    let eps = p.tol.eps();
    let (d, c) = (p.data_dim, p.control_dim);
    let pd = d * c;
    let k = p.games.len();

    // Measurement validity and block structure.
    let mut povm_validity = true;
    let mut povm_max_residual: f64 = 0.0;
    let mut block_diagonal_max: f64 = 0.0;
    for fams in p.fa.iter().chain(&p.fb) {
        for f in fams {
            let chk = is_povm(f.iter().flatten(), p.tol)?;
            povm_validity &= chk.valid;
            let r = chk.max_hermiticity_residual.max(chk.completeness_residual).max((-chk.min_eigenvalue).max(0.0));
            povm_max_residual = povm_max_residual.max(r);
            for e in f.iter().flatten() {
                block_diagonal_max = block_diagonal_max.max(off_block_norm(e, c));
            }
        }
    }

    // Cross-game commutation on each player.
    let mut cross_commutation_max: f64 = 0.0;
    for side in [&p.fa, &p.fb] {
        for i in 0..k {
            for j in i + 1..k {
                let worst = side[i]
                    .par_iter()
                    .flat_map_iter(|f| f.iter().flatten())
                    .map(|m| {
                        side[j]
                            .iter()
                            .flat_map(|f| f.iter().flatten())
                            .map(|n| (&(m * n) - &(n * m)).frobenius_norm())
                            .fold(0.0, f64::max)
                    })
                    .reduce(|| 0.0, f64::max);
                cross_commutation_max = cross_commutation_max.max(worst);
            }
        }
    }

    // Offline identity on every inactive, correlated block.
    let phi_d = StateVector::maximally_entangled(d);
    let mut offline_identity_max: f64 = 0.0;
    let mut offline_identity_on_state_max: f64 = 0.0;
    let id_dd = CMatrix::identity(d * d, d * d);
    for (i, g) in p.games.iter().enumerate() {
        for block in (0..c).filter(|&b| b != cert.active_blocks[i]) {
            let restrict = |fams: &[PovmFamily]| -> Vec<PovmFamily> {
                fams.iter()
                    .map(|f| {
                        f.iter()
                            .map(|e| {
                                e.as_ref().map(|m| {
                                    Operator::from_matrix(control_block(m, block, block, d, c)).expect("square")
                                })
                            })
                            .collect()
                    })
                    .collect()
            };
            let (ra, rb) = (restrict(&p.fa[i]), restrict(&p.fb[i]));
            for (x, y) in questions_with_weight(g) {
                let s = acceptance_matrix(g, x, y, &ra[x], &rb[y], d, d);
                offline_identity_max = offline_identity_max.max((s.matrix() - &id_dd).norm());
                let v = s.apply(phi_d.amplitudes()) - phi_d.amplitudes();
                offline_identity_on_state_max = offline_identity_on_state_max.max(v.norm());
            }
        }
    }

    // Shared state support on matching control blocks.
    let psi = cert.state.amplitudes();
    let control_support_residual = psi
        .iter()
        .enumerate()
        .filter(|(idx, _)| (idx / pd) % c != (idx % pd) % c)
        .map(|(_, z)| z.norm_sqr())
        .sum::<f64>()
        .sqrt();

    // Acceptance operators on the embedded families.
    let mut fixed_point_max: f64 = 0.0;
    let mut min_acceptance = f64::INFINITY;
    let mut per_question_acceptance = Vec::with_capacity(k);
    let mut weighted_ops: Vec<Vec<Operator>> = Vec::with_capacity(k);
    for (i, g) in p.games.iter().enumerate() {
        let (ia, ib, _, _) = g.sizes();
        let ws: Vec<Operator> = (0..ia * ib)
            .into_par_iter()
            .map(|q| acceptance_matrix(g, q / ib, q % ib, &p.fa[i][q / ib], &p.fb[i][q % ib], pd, pd))
            .collect();
        let mut accs = Vec::with_capacity(ws.len());
        let mut kept = Vec::new();
        for (q, w) in ws.into_iter().enumerate() {
            let wpsi = w.apply(psi);
            let acc = inner(psi, &wpsi).re;
            accs.push(acc);
            if g.mu(q / ib, q % ib) > 0.0 {
                fixed_point_max = fixed_point_max.max((wpsi - psi).norm());
                min_acceptance = min_acceptance.min(acc);
                kept.push(w);
            }
        }
        per_question_acceptance.push(accs);
        weighted_ops.push(kept);
    }
    let (product_acceptance_min, product_tuples, product_sampled) = product_acceptance(&weighted_ops, psi);

    let compression = cert.n_compressed == cert.data_qubits + cert.control_qubits
        && cert.n_baseline == cert.per_game_qubits.iter().sum::<u32>()
        && cert.n_compressed < cert.n_baseline;
    let overall_pass = povm_validity
        && [
            povm_max_residual,
            block_diagonal_max,
            cross_commutation_max,
            offline_identity_max,
            offline_identity_on_state_max,
            control_support_residual,
            fixed_point_max,
        ]
        .iter()
        .all(|&r| r <= eps)
        && min_acceptance >= 1.0 - eps
        && product_acceptance_min >= 1.0 - eps
        && compression;
    Ok(CertificateChecks {
        povm_validity,
        povm_max_residual,
        block_diagonal_max,
        cross_commutation_max,
        offline_identity_max,
        offline_identity_on_state_max,
        control_support_residual,
        fixed_point_max,
        per_question_acceptance,
        min_acceptance,
        product_acceptance_min,
        product_tuples,
        product_sampled,
        compression,
        overall_pass,
    })
}

/// Outcome of re-checking a certificate from its raw operators.
#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub games: Vec<String>,
    pub n_compressed: u32,
    pub n_baseline: u32,
    pub recomputed: CertificateChecks,
    /// Stored values that disagree with the recomputation.
    pub mismatches: Vec<String>,
    /// Stored checks agree with the recomputation and the recomputed claim holds.
    pub pass: bool,
}

pub fn verify_certificate(cert: &CompressionCertificate, tol: Option<Tolerance>) -> Result<VerifyReport> {
    let recomputed = compute_checks(cert, tol)?;
    let mismatches = cert.checks.differences(&recomputed);
    Ok(VerifyReport {
        games: cert.game_names(),
        n_compressed: cert.n_compressed,
        n_baseline: cert.n_baseline,
        pass: mismatches.is_empty() && recomputed.overall_pass,
        recomputed,
        mismatches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compressor::{build_control_embedding, EmbeddingOptions};
    use crate::games::ObservableSquare;
    use crate::strategies::{msg_canonical_strategy, trivial_strategy};

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn trivial_cert(min_data_qubits: Option<u32>) -> CompressionCertificate {
        let g = Game::trivial();
        let s = trivial_strategy();
        let opts = EmbeddingOptions { min_data_qubits, ..Default::default() };
        let e = build_control_embedding(&[g.clone(), g.clone()], &[s.clone(), s], &opts, tol()).unwrap();
        CompressionCertificate::from_embedding(&[g.clone(), g], &e, tol(), None).unwrap()
    }

    fn msg_cert(offline: OfflineChoice) -> CompressionCertificate {
        let g = Game::magic_square();
        let s = msg_canonical_strategy(&ObservableSquare::standard()).unwrap();
        let opts = EmbeddingOptions { offline, ..Default::default() };
        let e = build_control_embedding(&[g.clone(), g.clone()], &[s.clone(), s], &opts, tol()).unwrap();
        CompressionCertificate::from_embedding(&[g.clone(), g], &e, tol(), None).unwrap()
    }

    #[test]
    fn trivial_games_pass() {
        let cert = trivial_cert(None);
        let c = &cert.checks;
        assert!(c.overall_pass, "{c:?}");
        assert!((c.min_acceptance - 1.0).abs() <= 1e-12 && (c.product_acceptance_min - 1.0).abs() <= 1e-12);
        assert_eq!((cert.n_compressed, cert.n_baseline), (3, 4));
        let r = verify_certificate(&cert, None).unwrap();
        assert!(r.pass && r.mismatches.is_empty());
    }

    #[test]
    fn json_round_trip_verifies_identically() {
        let cert = trivial_cert(None);
        let back = CompressionCertificate::from_json(&cert.to_json().unwrap()).unwrap();
        assert_eq!(back, cert);
        assert!(verify_certificate(&back, None).unwrap().pass);
    }

    #[test]
    fn perturbed_element_fails_with_its_completeness_residual() {
        let mut cert = trivial_cert(None);
        let fam = cert.povms.a[0].get_mut("0").unwrap();
        let e = fam[0].as_mut().unwrap();
        let mut m = e.matrix().clone();
        m[(0, 0)] += C64::new(1e-3, 0.0);
        *e = Operator::from_matrix(m).unwrap();
        let r = verify_certificate(&cert, None).unwrap();
        assert!(!r.pass && !r.recomputed.povm_validity);
        assert!((r.recomputed.povm_max_residual - 1e-3).abs() < 1e-9);
    }

    #[test]
    fn tampered_residual_is_detected() {
        let mut cert = trivial_cert(None);
        cert.checks.cross_commutation_max = 0.5;
        let r = verify_certificate(&cert, None).unwrap();
        assert!(!r.pass);
        assert_eq!(r.mismatches.len(), 1, "{:?}", r.mismatches);
    }

    #[test]
    fn no_compression_fails_only_the_size_criterion() {
        // Three data qubits plus one control qubit equals the four-qubit baseline.
        let cert = trivial_cert(Some(3));
        let c = &cert.checks;
        assert_eq!(cert.n_compressed, cert.n_baseline);
        assert!(!c.compression && !c.overall_pass);
        assert!(c.povm_validity && c.cross_commutation_max == 0.0 && c.offline_identity_max < 1e-12);
        assert!((c.min_acceptance - 1.0).abs() < 1e-12 && (c.product_acceptance_min - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scalar_uniform_msg_is_reported_honestly() {
        let cert = msg_cert(OfflineChoice::ScalarUniform);
        let c = &cert.checks;
        assert_eq!((cert.n_compressed, cert.n_baseline), (3, 4));
        assert!(c.povm_validity && c.cross_commutation_max <= 1e-12 && c.block_diagonal_max == 0.0);
        // Eight of the 64 answer pairs are accepted: Σ M̂⊗N̂ = 𝟙/8 on a 16-dim data space.
        assert!((c.offline_identity_max - 3.5).abs() < 1e-12);
        // Half the shared weight is on the active block (value 1), half offline (1/8).
        assert!((c.min_acceptance - 9.0 / 16.0).abs() < 1e-12);
        assert!(!c.overall_pass);
        let r = verify_certificate(&cert, None).unwrap();
        assert!(r.mismatches.is_empty() && !r.pass);
    }

    #[test]
    fn copy_active_breaks_cross_commutation() {
        let cert = msg_cert(OfflineChoice::CopyActive);
        let c = &cert.checks;
        assert!(c.offline_identity_on_state_max < 1e-12);
        assert!(c.offline_identity_max > 0.1);
        assert!(c.cross_commutation_max > 0.1);
        assert!((c.min_acceptance - 1.0).abs() < 1e-9);
        assert!(!c.overall_pass);
    }

    #[test]
    fn malformed_certificates_are_rejected() {
        let mut cert = trivial_cert(None);
        cert.version = 2;
        assert!(matches!(compute_checks(&cert, None), Err(Error::Malformed(_))));
        let mut cert = trivial_cert(None);
        cert.active_blocks = vec![0, 0];
        assert!(matches!(compute_checks(&cert, None), Err(Error::Malformed(_))));
        assert!(matches!(CompressionCertificate::from_json("{\"version\": 1}"), Err(Error::Malformed(_))));
    }
}
