//! Lie closures of game algebras, the Cartan decomposition of 𝔰𝔲(4) with its KAK
//! factorization, alignment of algebras into abelian targets, and the qubit-count bound.

mod bound;
mod cartan;
mod kak;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use bound::{qubit_bound, qubit_report, QubitBoundReport};
pub use cartan::{cartan_su4, check_cartan, CartanDecomposition, CartanReport};
pub use kak::{kak_su4, kak_su4_seeded, split_local, KakFactors};

use crate::error::{Error, Result};
use crate::opcore::{singular_values, CMatrix, Operator, C64, I};

/// Pivot threshold for accepting a new direction in a span.
pub const PIVOT_TOL: f64 = 1e-8;

/// An orthonormal basis (under Re tr(A†B)) of traceless skew-Hermitian matrices.
#[derive(Clone, Debug)]
pub struct LieBasis {
    dim_hilbert: usize,
    basis: Vec<Operator>,
}

fn traceless(m: &Operator) -> Operator {
    let n = m.dim();
    let t = m.trace() / C64::new(n as f64, 0.0);
    Operator::from_matrix(m.matrix() - CMatrix::identity(n, n) * t).expect("square")
}

fn skew_part(m: &Operator) -> Operator {
    Operator::from_matrix((m.matrix() - m.matrix().adjoint()) * C64::new(0.5, 0.0)).expect("square")
}

impl LieBasis {
    /// Orthonormalizes the traceless skew-Hermitian parts of `elements`, dropping dependent ones.
    pub fn span(dim_hilbert: usize, elements: &[Operator]) -> Result<Self> {
        let mut b = LieBasis { dim_hilbert, basis: Vec::new() };
        for e in elements {
            if e.dim() != dim_hilbert {
                return Err(Error::DimensionMismatch(format!("element dim {} != {dim_hilbert}", e.dim())));
            }
            b.try_add(&traceless(&skew_part(e)));
        }
        Ok(b)
    }

    /// The span of `i·H` for Hermitian `H`.
    pub fn from_hermitian(dim_hilbert: usize, hs: &[Operator]) -> Result<Self> {
        let skew: Vec<Operator> = hs.iter().map(|h| h.scale(I)).collect();
        Self::span(dim_hilbert, &skew)
    }

    pub fn dim_hilbert(&self) -> usize {
        self.dim_hilbert
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Operator] {
        &self.basis
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// Component of `x` orthogonal to the span.
    pub fn residual(&self, x: &Operator) -> Operator {
        let mut r = x.clone();
        // Two Gram–Schmidt passes keep round-off at the 1e-15 level.
        for _ in 0..2 {
            for b in &self.basis {
                let c = b.hs_inner(&r);
                r = &r - &b.scale_real(c);
            }
        }
        r
    }

    /// Adds `x` if it has a component of norm > [`PIVOT_TOL`] outside the span (after
    /// normalizing `x`). Returns whether it was added.
    pub fn try_add(&mut self, x: &Operator) -> bool {
        let n = x.frobenius_norm();
        if n < 1e-14 {
            return false;
        }
        let r = self.residual(&x.scale_real(1.0 / n));
        let rn = r.frobenius_norm();
        if rn > PIVOT_TOL {
            self.basis.push(r.scale_real(1.0 / rn));
            true
        } else {
            false
        }
    }

    /// Gram matrix deviation from the identity (max entry).
    pub fn orthonormality_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.basis.iter().enumerate() {
            for (j, b) in self.basis.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((a.hs_inner(b) - want).abs());
            }
        }
        worst
    }

    /// Largest deviation from skew-Hermitian tracelessness.
    pub fn structure_residual(&self) -> f64 {
        self.basis.iter().map(|b| (b + &b.adjoint()).frobenius_norm().max(b.trace().norm())).fold(0.0, f64::max)
    }

    /// Real coefficient matrix of the basis in the ambient real vectorization (one row per
    /// element).
    fn coefficient_rows(elements: &[&Operator]) -> DMatrix<f64> {
        let n = elements.first().map_or(0, |e| e.dim());
        let mut m = DMatrix::zeros(elements.len(), 2 * n * n);
        for (r, e) in elements.iter().enumerate() {
            for (k, z) in e.matrix().iter().enumerate() {
                m[(r, 2 * k)] = z.re;
                m[(r, 2 * k + 1)] = z.im;
            }
        }
        m
    }

    /// Rank of the combined span by singular-value thresholding at [`PIVOT_TOL`].
    pub fn combined_rank(bases: &[&LieBasis]) -> usize {
        let all: Vec<&Operator> = bases.iter().flat_map(|b| b.basis.iter()).collect();
        if all.is_empty() {
            return 0;
        }
        let m = Self::coefficient_rows(&all).map(|v| C64::new(v, 0.0));
        singular_values(&m).iter().filter(|&&s| s > PIVOT_TOL).count()
    }

    /// Rank of the span of the algebras placed on disjoint tensor factors 𝟙⊗…⊗𝔤ᵢ⊗…⊗𝟙.
    ///
    /// The Gram matrix of the embedded bases is computed factor by factor, so the product
    /// space is never materialized.
    pub fn disjoint_sum_rank(bases: &[&LieBasis]) -> usize {
        let dims: Vec<f64> = bases.iter().map(|b| b.dim_hilbert as f64).collect();
        let items: Vec<(usize, &Operator)> =
            bases.iter().enumerate().flat_map(|(i, b)| b.basis.iter().map(move |e| (i, e))).collect();
        if items.is_empty() {
            return 0;
        }
        let n = items.len();
        let gram = DMatrix::from_fn(n, n, |p, q| {
            let (i, a) = items[p];
            let (j, b) = items[q];
            // Re tr(X†Y) / Π d_k for the embedded X, Y.
            if i == j {
                a.hs_inner(b) / dims[i]
            } else {
                (a.trace().conj() * b.trace()).re / (dims[i] * dims[j])
            }
        });
        let (vals, _) = crate::opcore::sym_eig_real(&gram);
        vals.iter().filter(|&&v| v > PIVOT_TOL).count()
    }

    /// Largest ‖[A, B]‖ over basis pairs.
    pub fn abelian_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.basis.iter().enumerate() {
            for b in &self.basis[i + 1..] {
                worst = worst.max((&(a * b) - &(b * a)).frobenius_norm());
            }
        }
        worst
    }
}

/// The real Lie algebra generated by `{iM}` for Hermitian generators (traceless part).
pub fn lie_closure(generators: &[Operator], max_dim: Option<usize>) -> Result<LieBasis> {
    let Some(first) = generators.first() else {
        return Err(Error::Precondition("no generators".into()));
    };
    let n = first.dim();
    for g in generators {
        if g.dim() != n {
            return Err(Error::DimensionMismatch("generators have different dimensions".into()));
        }
        let h = g.hermiticity_residual();
        if h > 1e-9 {
            return Err(Error::NotHermitian(h));
        }
    }
    let cap = max_dim.unwrap_or(n * n - 1);
    let mut b = LieBasis::from_hermitian(n, generators)?;
    if b.dim() > cap {
        return Err(Error::ClosureOverflow(cap));
    }
    // Bracket every new element against everything found so far until nothing new appears.
    let mut frontier = 0;
    while frontier < b.dim() {
        let new_elem = b.basis[frontier].clone();
        let mut j = 0;
        while j < frontier {
            let other = b.basis[j].clone();
            let c = &(&new_elem * &other) - &(&other * &new_elem);
            if b.try_add(&c) && b.dim() > cap {
                return Err(Error::ClosureOverflow(cap));
            }
            j += 1;
        }
        frontier += 1;
    }
    Ok(b)
}

/// Ad_k: X ↦ k X k† on every basis element.
pub fn adjoint_conjugate(k: &Operator, basis: &LieBasis) -> Result<LieBasis> {
    if k.dim() != basis.dim_hilbert {
        return Err(Error::DimensionMismatch(format!(
            "conjugator dim {} vs algebra on dim {}",
            k.dim(),
            basis.dim_hilbert
        )));
    }
    let u = k.unitarity_residual();
    if u > 1e-9 {
        return Err(Error::NotUnitary(u));
    }
    let kd = k.adjoint();
    Ok(LieBasis { dim_hilbert: basis.dim_hilbert, basis: basis.basis.iter().map(|x| &(k * x) * &kd).collect() })
}

/// Outcome of an alignment check of conjugated game algebras into an abelian target.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlignmentReport {
    /// Norm of the component of Ad_{kᵢ}(𝔤ᵢ) outside the target span, per game.
    pub containment_residuals: Vec<f64>,
    /// dim span of all conjugated images together (r).
    pub effective_rank: usize,
    /// Largest bracket between target basis elements (0 iff the target is abelian).
    pub target_abelian_residual: f64,
    pub target_dim: usize,
    pub aligned: bool,
}

/// Checks that each Ad_{kᵢ}(𝔤ᵢ) lies in the span of an abelian target.
pub fn check_alignment(
    game_algebras: &[LieBasis],
    conjugators: &[Operator],
    target: &LieBasis,
    tol: f64,
) -> Result<AlignmentReport> {
    if game_algebras.len() != conjugators.len() {
        return Err(Error::Precondition("one conjugator per algebra".into()));
    }
    let mut images = Vec::new();
    let mut residuals = Vec::new();
    for (g, k) in game_algebras.iter().zip(conjugators) {
        if g.dim_hilbert != target.dim_hilbert {
            return Err(Error::DimensionMismatch("algebra and target act on different spaces".into()));
        }
        let img = adjoint_conjugate(k, g)?;
        let r = img.basis.iter().map(|x| target.residual(x).frobenius_norm()).fold(0.0, f64::max);
        residuals.push(r);
        images.push(img);
    }
    let refs: Vec<&LieBasis> = images.iter().collect();
    let abelian = target.abelian_residual();
    Ok(AlignmentReport {
        effective_rank: LieBasis::combined_rank(&refs),
        aligned: residuals.iter().all(|&r| r <= tol) && abelian <= tol,
        containment_residuals: residuals,
        target_abelian_residual: abelian,
        target_dim: target.dim(),
    })
}

/// Joins a centre part 𝔠 and an abelian part 𝔞 into one target, returning the largest
/// cross bracket ‖[c, a]‖ so that a non-commuting sum is reported instead of assumed away.
pub fn join_target(c: &LieBasis, a: &LieBasis) -> Result<(LieBasis, f64)> {
    let all: Vec<Operator> = c.basis.iter().chain(&a.basis).cloned().collect();
    let joined = LieBasis::span(c.dim_hilbert, &all)?;
    let mut cross: f64 = 0.0;
    for x in &c.basis {
        for y in &a.basis {
            cross = cross.max((&(x * y) - &(y * x)).frobenius_norm());
        }
    }
    Ok((joined, cross))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::ObservableSquare;
    use crate::opcore::{pauli, random::random_unitary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(s: &str) -> Operator {
        pauli::string(s).unwrap()
    }

    #[test]
    fn x_and_z_close_to_su2() {
        let b = lie_closure(&[pauli::x(), pauli::z()], None).unwrap();
        assert_eq!(b.dim(), 3);
        assert!(b.orthonormality_residual() < 1e-9 && b.structure_residual() < 1e-10);
    }

    #[test]
    fn single_generator_is_abelian() {
        assert_eq!(lie_closure(&[pauli::z()], None).unwrap().dim(), 1);
    }

    #[test]
    fn magic_square_observables_close_to_su4() {
        let obs = ObservableSquare::standard().observables();
        let b = lie_closure(&obs, None).unwrap();
        assert_eq!(b.dim(), 15);
        // Idempotence: closing a closed basis adds nothing.
        let again: Vec<Operator> = b.basis().iter().map(|x| x.scale(-I)).collect();
        assert_eq!(lie_closure(&again, None).unwrap().dim(), 15);
    }

    #[test]
    fn closure_overflow_is_reported() {
        let r = lie_closure(&[p("XI"), p("ZI"), p("IX"), p("IZ"), p("XX")], Some(5));
        assert!(matches!(r, Err(Error::ClosureOverflow(5))));
    }

    #[test]
    fn closure_dimension_is_conjugation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_unitary(4, &mut rng);
        let gens = [p("XI"), p("ZZ")];
        let conj: Vec<Operator> = gens.iter().map(|g| &(&u * g) * &u.adjoint()).collect();
        assert_eq!(lie_closure(&gens, None).unwrap().dim(), lie_closure(&conj, None).unwrap().dim());
    }

    #[test]
    fn hadamard_maps_z_to_x() {
        let b = LieBasis::from_hermitian(4, &[p("ZI")]).unwrap();
        let h = pauli::hadamard().kron(&pauli::id());
        let c = adjoint_conjugate(&h, &b).unwrap();
        let target = LieBasis::from_hermitian(4, &[p("XI")]).unwrap();
        assert!(target.residual(&c.basis()[0]).frobenius_norm() < 1e-12);
        assert!(c.orthonormality_residual() < 1e-10);
        let same = adjoint_conjugate(&Operator::identity(4), &b).unwrap();
        assert_eq!(same.basis(), b.basis());
    }

    #[test]
    fn alignment_examples() {
        let diag = LieBasis::from_hermitian(4, &[p("ZI"), p("IZ"), p("ZZ")]).unwrap();
        let g = LieBasis::from_hermitian(4, &[p("ZI"), p("IZ")]).unwrap();
        let r = check_alignment(&[g], &[Operator::identity(4)], &diag, 1e-9).unwrap();
        assert!(r.aligned && r.containment_residuals[0] == 0.0);
        assert_eq!(r.effective_rank, 2);

        let full = lie_closure(&ObservableSquare::standard().observables(), None).unwrap();
        let r = check_alignment(&[full], &[Operator::identity(4)], &diag, 1e-9).unwrap();
        assert!(!r.aligned && r.containment_residuals[0] > 0.1);

        // Two single-qubit algebras, conjugated into the diagonal of two qubits.
        let h = pauli::hadamard();
        let g1 = LieBasis::from_hermitian(4, &[p("XI")]).unwrap();
        let g2 = LieBasis::from_hermitian(4, &[p("IX")]).unwrap();
        let ks = [h.kron(&pauli::id()), pauli::id().kron(&h)];
        let r = check_alignment(&[g1, g2], &ks, &diag, 1e-9).unwrap();
        assert!(r.aligned && r.effective_rank <= 3);
    }

    #[test]
    fn disjoint_sum_rank_adds_dimensions() {
        let g = lie_closure(&[p("XI"), p("ZI"), p("IX"), p("IZ"), p("XX")], None).unwrap();
        assert_eq!(g.dim(), 15);
        let h = lie_closure(&[p("X"), p("Z")], None).unwrap();
        assert_eq!(LieBasis::disjoint_sum_rank(&[&g, &g]), 30);
        assert_eq!(LieBasis::disjoint_sum_rank(&[&g, &h, &h]), 21);
        // Same answer as materializing the embedding on a small case.
        let hx = LieBasis::from_hermitian(4, &[p("XI"), p("ZI"), p("YI"), p("IX"), p("IY"), p("IZ")]).unwrap();
        assert_eq!(LieBasis::combined_rank(&[&hx]), LieBasis::disjoint_sum_rank(&[&h, &h]));
    }

    #[test]
    fn join_target_reports_cross_brackets() {
        let c = LieBasis::from_hermitian(4, &[p("ZI")]).unwrap();
        let a = LieBasis::from_hermitian(4, &[p("XX")]).unwrap();
        let (t, cross) = join_target(&c, &a).unwrap();
        assert_eq!(t.dim(), 2);
        assert!((cross - 1.0).abs() < 1e-12);
    }
}
