use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::opcore::{pauli, singular_values, sym_eig_real, CMatrix, Operator, C64, I, ONE, ZERO};

const CHAMBER_EPS: f64 = 1e-10;

/// U ≅ k1 · exp(i(c_x XX + c_y YY + c_z ZZ)) · k2 up to a global phase.
#[derive(Clone, Debug, Serialize)]
pub struct KakFactors {
    #[serde(skip)]
    pub k1: Operator,
    #[serde(skip)]
    pub k2: Operator,
    pub c: [f64; 3],
    /// e^{iφ} with U = e^{iφ} · k1 · A(c) · k2.
    pub global_phase: (f64, f64),
    /// ‖U − e^{iφ} k1 A(c) k2‖_F
    pub recon_error: f64,
    /// Distance of k1 and k2 from the nearest tensor product (Frobenius).
    pub locality_residual: f64,
}

impl KakFactors {
    /// exp(i(c_x XX + c_y YY + c_z ZZ))
    pub fn interaction(c: [f64; 3]) -> Operator {
        interaction(c)
    }

    pub fn reconstruct(&self) -> Operator {
        let phase = C64::new(self.global_phase.0, self.global_phase.1);
        (&(&self.k1 * &interaction(self.c)) * &self.k2).scale(phase)
    }
}

/// The magic basis: its columns are Bell states with phases chosen so that SU(2)⊗SU(2)
/// becomes SO(4).
fn magic() -> CMatrix {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let i = I * h;
    #[rustfmt::skip]
    let m = CMatrix::from_row_slice(4, 4, &[
        h,    ZERO, ZERO, i,
        ZERO, i,    h,    ZERO,
        ZERO, i,    -h,   ZERO,
        h,    ZERO, ZERO, -i,
    ]);
    m
}

fn sigma_pairs() -> [Operator; 3] {
    [pauli::string("XX").unwrap(), pauli::string("YY").unwrap(), pauli::string("ZZ").unwrap()]
}

fn interaction(c: [f64; 3]) -> Operator {
    // XX, YY, ZZ are simultaneously diagonal in the magic basis.
    let b = magic();
    let pats = diag_patterns(&b);
    let d = CMatrix::from_diagonal(&nalgebra::DVector::from_fn(4, |j, _| {
        let t = c[0] * pats[0][j] + c[1] * pats[1][j] + c[2] * pats[2][j];
        C64::new(0.0, t).exp()
    }));
    Operator::from_matrix(&b * d * b.adjoint()).expect("square")
}

/// Diagonals of B†(σσ)B for σ = X, Y, Z.
fn diag_patterns(b: &CMatrix) -> [[f64; 4]; 3] {
    let mut out = [[0.0; 4]; 3];
    for (k, p) in sigma_pairs().iter().enumerate() {
        let d = b.adjoint() * p.matrix() * b;
        for j in 0..4 {
            out[k][j] = d[(j, j)].re;
        }
    }
    out
}

/// Splits a 4×4 operator into a ⊗ b when it is (close to) a product; returns the factors and
/// the distance to the nearest product.
pub fn split_local(k: &Operator) -> Result<(Operator, Operator, f64)> {
    if k.dim() != 4 {
        return Err(Error::DimensionMismatch("split_local expects a two-qubit operator".into()));
    }
    // Realignment R[(i1 j1),(i2 j2)] = K[(i1 i2),(j1 j2)] is rank one iff K is a product.
    let m = k.matrix();
    let r = CMatrix::from_fn(4, 4, |row, col| {
        let (i1, j1) = (row / 2, row % 2);
        let (i2, j2) = (col / 2, col % 2);
        m[(2 * i1 + i2, 2 * j1 + j2)]
    });
    let svd = nalgebra::SVD::new(r.clone(), true, true);
    let s = singular_values(&r);
    let residual = s[1..].iter().map(|x| x * x).sum::<f64>().sqrt();
    let (idx, &s0) = svd.singular_values.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty");
    let u = svd.u.as_ref().expect("requested").column(idx).into_owned();
    let v = svd.v_t.as_ref().expect("requested").row(idx).into_owned();
    let scale = C64::new(s0.sqrt(), 0.0);
    let a = CMatrix::from_fn(2, 2, |i, j| u[2 * i + j] * scale);
    let b = CMatrix::from_fn(2, 2, |i, j| v[2 * i + j] * scale);
    Ok((Operator::from_matrix(a)?, Operator::from_matrix(b)?, residual))
}

/// Running factorization U = phase · k1 · A(c) · k2 updated by local moves.
struct Kak {
    k1: CMatrix,
    c: [f64; 3],
    k2: CMatrix,
    phase: C64,
}

impl Kak {
    /// Conjugation L A(c) L† = A(c′): rewrite A(c) = L† A(c′) L.
    fn conj(&mut self, l: &Operator, c_new: [f64; 3]) {
        self.k1 = &self.k1 * l.matrix().adjoint();
        self.k2 = l.matrix() * &self.k2;
        self.c = c_new;
    }

    /// c_k ← c_k − s·π/2, using exp(i s π/2 σσ) = (i s) σσ.
    fn shift(&mut self, k: usize, s: f64) {
        let sp = &sigma_pairs()[k];
        self.k2 = sp.matrix() * &self.k2;
        self.phase *= C64::new(0.0, s);
        self.c[k] -= s * FRAC_PI_2;
    }

    fn swap(&mut self, i: usize, j: usize) {
        let s = Operator::from_matrix(CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, I])).unwrap();
        let rx = {
            let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            Operator::from_matrix(CMatrix::from_row_slice(2, 2, &[h, -I * h, -I * h, h])).unwrap()
        };
        let l1 = match (i.min(j), i.max(j)) {
            (0, 1) => s,
            (1, 2) => rx,
            (0, 2) => pauli::hadamard(),
            _ => unreachable!(),
        };
        let mut c = self.c;
        c.swap(i, j);
        self.conj(&l1.kron(&l1), c);
    }

    /// Flips the signs of the two coefficients other than `keep`.
    fn flip(&mut self, keep: usize) {
        let l = match keep {
            0 => pauli::string("XI"),
            1 => pauli::string("YI"),
            _ => pauli::string("ZI"),
        }
        .unwrap();
        let mut c = self.c.map(|v| -v);
        c[keep] = self.c[keep];
        self.conj(&l, c);
    }
}

/// Reduces c to c_x ≥ c_y ≥ |c_z|, c_x ≤ π/4, with c_z ≥ 0 whenever c_x = π/4.
fn reduce_to_chamber(f: &mut Kak) {
    // Each coefficient into (−π/4, π/4].
    for k in 0..3 {
        let m = ((f.c[k] - FRAC_PI_4 - CHAMBER_EPS) / FRAC_PI_2).ceil();
        if m != 0.0 {
            let mi = m as i64;
            let s = if mi > 0 { 1.0 } else { -1.0 };
            for _ in 0..mi.abs() {
                f.shift(k, s);
            }
        }
    }
    // Sort by magnitude, descending.
    for _ in 0..3 {
        for (i, j) in [(0, 1), (1, 2)] {
            if f.c[i].abs() < f.c[j].abs() - CHAMBER_EPS {
                f.swap(i, j);
            }
        }
    }
    // Signs: make c_x, c_y ≥ 0 by pairwise flips.
    if f.c[0] < 0.0 && f.c[1] < 0.0 {
        f.flip(2);
    } else if f.c[0] < 0.0 {
        f.flip(1);
    } else if f.c[1] < 0.0 {
        f.flip(0);
    }
    // On the c_x = π/4 face, c_z < 0 is equivalent to −c_z.
    if (f.c[0] - FRAC_PI_4).abs() <= CHAMBER_EPS && f.c[2] < -CHAMBER_EPS {
        f.shift(0, 1.0);
        f.flip(1);
    }
}

/// KAK factorization of a two-qubit unitary with canonical coefficients in the Weyl chamber.
pub fn kak_su4(u: &Operator) -> Result<KakFactors> {
    kak_su4_seeded(u, 0x6b61_6b00)
}

/// As [`kak_su4`], with an explicit seed for the randomized real diagonalization.
pub fn kak_su4_seeded(u: &Operator, seed: u64) -> Result<KakFactors> {
    if u.dim() != 4 {
        return Err(Error::DimensionMismatch("KAK expects a 4×4 unitary".into()));
    }
    let ures = u.unitarity_residual();
    if ures > 1e-8 {
        return Err(Error::NotUnitary(ures));
    }
    let det = u.matrix().clone().determinant();
    let g = C64::from_polar(1.0, det.arg() / 4.0);
    let su = u.matrix() / g;
    let b = magic();
    let up = b.adjoint() * &su * &b;
    let m2 = up.transpose() * &up;
    let re = m2.map(|z| z.re);
    let im = m2.map(|z| z.im);

    // M2 is symmetric unitary, so Re M2 and Im M2 are commuting real symmetric matrices; a
    // generic real combination shares their eigenvectors.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut found = None;
    for _ in 0..16 {
        let (a, c): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
        let (_, p) = sym_eig_real(&(&re * a + &im * c));
        let pc = p.map(|v| C64::new(v, 0.0));
        let d = pc.transpose() * &m2 * &pc;
        let off = (0..4)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| d[(i, j)].norm())
            .fold(0.0, f64::max);
        if off < 1e-10 {
            found = Some((p, d));
            break;
        }
    }
    let (mut p, d) = found.ok_or_else(|| Error::Numerical("could not diagonalize UᵀU in the magic basis".into()))?;
    let diag: Vec<C64> = (0..4).map(|j| d[(j, j)]).collect();
    if p.determinant() < 0.0 {
        let col = -p.column(0);
        p.set_column(0, &col);
    }
    let mut theta: Vec<f64> = diag.iter().map(|z| z.arg() / 2.0).collect();
    theta[3] = -(theta[0] + theta[1] + theta[2]);

    let pc: CMatrix = p.map(|v| C64::new(v, 0.0));
    let phase_inv = CMatrix::from_diagonal(&nalgebra::DVector::from_fn(4, |j, _| C64::from_polar(1.0, -theta[j])));
    let o1 = &up * &pc * phase_inv;
    let k1 = &b * o1 * b.adjoint();
    let k2 = &b * pc.transpose() * b.adjoint();

    let pats = diag_patterns(&b);
    let c = [0, 1, 2].map(|k| (0..4).map(|j| pats[k][j] * theta[j]).sum::<f64>() / 4.0);

    let mut f = Kak { k1, c, k2, phase: g };
    reduce_to_chamber(&mut f);

    let k1 = Operator::from_matrix(f.k1)?;
    let k2 = Operator::from_matrix(f.k2)?;
    let mut out = KakFactors {
        locality_residual: split_local(&k1)?.2.max(split_local(&k2)?.2),
        k1,
        k2,
        c: f.c,
        global_phase: (f.phase.re, f.phase.im),
        recon_error: 0.0,
    };
    out.recon_error = out.reconstruct().distance(u);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opcore::random::random_special_unitary;

    fn in_chamber(c: [f64; 3]) -> bool {
        let e = 1e-9;
        c[0] + e >= c[1]
            && c[1] + e >= c[2].abs()
            && c[0] <= FRAC_PI_4 + e
            && ((c[0] - FRAC_PI_4).abs() > e || c[2] >= -e)
    }

    #[test]
    fn identity_has_zero_coefficients() {
        let f = kak_su4(&Operator::identity(4)).unwrap();
        assert!(f.c.iter().all(|v| v.abs() < 1e-12), "{:?}", f.c);
        assert!(f.recon_error < 1e-12);
    }

    #[test]
    fn swap_is_the_far_corner() {
        let swap = Operator::from_real_rows(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
        ])
        .unwrap();
        let f = kak_su4(&swap).unwrap();
        for v in f.c {
            assert!((v - FRAC_PI_4).abs() < 1e-9, "{:?}", f.c);
        }
        assert!(f.recon_error < 1e-8);
        // SWAP = e^{−iπ/4}·exp(iπ/4(XX+YY+ZZ)) directly.
        let direct = interaction([FRAC_PI_4; 3]).scale(C64::from_polar(1.0, -FRAC_PI_4));
        assert!(direct.distance(&swap) < 1e-12);
    }

    #[test]
    fn cnot_has_one_nonzero_coefficient() {
        let cnot = Operator::from_real_rows(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0, 1.0, 0.0],
        ])
        .unwrap();
        let f = kak_su4(&cnot).unwrap();
        assert!((f.c[0] - FRAC_PI_4).abs() < 1e-9 && f.c[1].abs() < 1e-9 && f.c[2].abs() < 1e-9);
    }

    #[test]
    fn haar_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let u = random_special_unitary(4, &mut rng);
            let f = kak_su4(&u).unwrap();
            assert!(f.recon_error < 1e-8, "{}", f.recon_error);
            assert!(f.locality_residual < 1e-8);
            assert!(in_chamber(f.c), "{:?}", f.c);
        }
    }

    #[test]
    fn local_products_split_exactly() {
        let a = pauli::hadamard();
        let b = pauli::y();
        let (_, _, r) = split_local(&a.kron(&b)).unwrap();
        assert!(r < 1e-12);
        let (_, _, r) = split_local(&interaction([0.3, 0.1, 0.0])).unwrap();
        assert!(r > 1e-3);
    }

    #[test]
    fn non_unitary_is_rejected() {
        assert!(matches!(kak_su4(&Operator::identity(4).scale_real(2.0)), Err(Error::NotUnitary(_))));
    }
}
