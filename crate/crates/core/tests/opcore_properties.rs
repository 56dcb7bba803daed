//! Randomized algebraic identities for the dense operator toolkit.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nlgame::opcore::random::{random_hermitian, random_state, random_unitary};
use nlgame::opcore::{
    herm_eig, kron, partial_trace, partial_trace_state, schmidt_coefficients, schmidt_rank, simultaneous_diag, CMatrix,
    Operator, StateVector, Tolerance,
};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn tol() -> Tolerance {
    Tolerance::new(1e-9).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kron_mixed_product(seed in any::<u64>(), da in 1usize..4, db in 1usize..4) {
        let mut r = rng(seed);
        let (a, c) = (random_hermitian(da, &mut r), random_unitary(da, &mut r));
        let (b, d) = (random_hermitian(db, &mut r), random_unitary(db, &mut r));
        let lhs = Operator::from_matrix(kron(&a, &b).matrix() * kron(&c, &d).matrix()).unwrap();
        let rhs = kron(&Operator::from_matrix(a.matrix() * c.matrix()).unwrap(),
                       &Operator::from_matrix(b.matrix() * d.matrix()).unwrap());
        prop_assert!(lhs.distance(&rhs) < 1e-10);
    }

    #[test]
    fn partial_trace_of_product(seed in any::<u64>(), da in 1usize..4, db in 1usize..4) {
        let mut r = rng(seed);
        let (a, b) = (random_hermitian(da, &mut r), random_hermitian(db, &mut r));
        let ab = kron(&a, &b);
        let keep_a = partial_trace(&ab, &[da, db], &[0]).unwrap();
        let keep_b = partial_trace(&ab, &[da, db], &[1]).unwrap();
        prop_assert!(keep_a.distance(&a.scale(b.trace())) < 1e-10);
        prop_assert!(keep_b.distance(&b.scale(a.trace())) < 1e-10);
    }

    #[test]
    fn state_partial_trace_matches_density(seed in any::<u64>(), da in 1usize..4, db in 1usize..4) {
        let mut r = rng(seed);
        let psi = random_state(da * db, &mut r);
        let direct = partial_trace_state(&psi, &[da, db], &[0]).unwrap();
        let via_density = partial_trace(&psi.density(), &[da, db], &[0]).unwrap();
        prop_assert!(direct.distance(&via_density) < 1e-12);
        prop_assert!((direct.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hermitian_eigendecomposition_reconstructs(seed in any::<u64>(), d in 1usize..7) {
        let h = random_hermitian(d, &mut rng(seed));
        let e = herm_eig(&h).unwrap();
        prop_assert!(e.reconstruct().distance(&h) < 1e-10);
        let sum: f64 = e.values.iter().sum();
        prop_assert!((sum - h.trace().re).abs() < 1e-10);
        let gram = e.vectors.adjoint() * &e.vectors;
        prop_assert!((gram - CMatrix::identity(d, d)).norm() < 1e-10);
    }

    #[test]
    fn schmidt_data_of_local_rotations(seed in any::<u64>(), d in 2usize..5) {
        let mut r = rng(seed);
        let (u, v) = (random_unitary(d, &mut r), random_unitary(d, &mut r));
        let phi = StateVector::maximally_entangled(d);
        let rotated = StateVector::from_amplitudes(kron(&u, &v).apply(phi.amplitudes())).unwrap();
        prop_assert_eq!(schmidt_rank(&rotated, (d, d), tol()).unwrap(), d);
        let coeffs = schmidt_coefficients(&rotated, d, d).unwrap();
        for c in &coeffs {
            prop_assert!((c - 1.0 / (d as f64).sqrt()).abs() < 1e-10);
        }
        let product = random_state(d, &mut r).kron(&random_state(d, &mut r));
        prop_assert_eq!(schmidt_rank(&product, (d, d), tol()).unwrap(), 1);
    }

    #[test]
    fn commuting_polynomials_diagonalize_together(seed in any::<u64>(), d in 2usize..6) {
        let h = random_hermitian(d, &mut rng(seed));
        let h2 = Operator::from_matrix(h.matrix() * h.matrix()).unwrap();
        let sd = simultaneous_diag(&[h.clone(), h2.clone()], tol()).unwrap();
        prop_assert!(sd.max_commutator < 1e-9);
        for op in [&h, &h2] {
            prop_assert!(op.conjugate_by(&sd.basis).max_off_diagonal() < 1e-8);
        }
    }
}
