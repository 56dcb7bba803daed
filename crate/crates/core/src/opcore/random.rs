//! Seeded random draws for self-tests and retries.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::operator::{CMatrix, CVector, Operator, C64};
use super::state::StateVector;

fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im)
}

/// Haar-random unitary via QR of a complex Ginibre matrix with phase correction.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Operator {
    let g = CMatrix::from_fn(dim, dim, |_, _| gaussian_c64(rng));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = CMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            let d = r[(i, i)];
            if d.norm() > 0.0 {
                d / d.norm()
            } else {
                C64::new(1.0, 0.0)
            }
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Operator::from_square(q * phases)
}

/// Haar-random element of SU(dim).
pub fn random_special_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Operator {
    let u = random_unitary(dim, rng);
    let det = u.matrix().determinant();
    let fix = det.powf(-1.0 / dim as f64);
    u.scale(fix)
}

pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Operator {
    let g = CMatrix::from_fn(dim, dim, |_, _| gaussian_c64(rng));
    Operator::from_square((&g + g.adjoint()) * C64::new(0.5, 0.0))
}

pub fn random_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> StateVector {
    let v = CVector::from_fn(dim, |_, _| gaussian_c64(rng));
    StateVector::normalized(v).expect("gaussian vector is non-zero")
}

/// Random density operator ρ = G G† / tr(G G†).
pub fn random_density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Operator {
    let g = CMatrix::from_fn(dim, dim, |_, _| gaussian_c64(rng));
    let p = &g * g.adjoint();
    let tr = p.trace();
    Operator::from_square(p / tr)
}
