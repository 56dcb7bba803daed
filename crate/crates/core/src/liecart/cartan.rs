use serde::{Deserialize, Serialize};

use super::LieBasis;
use crate::opcore::{pauli, Operator};

/// 𝔤 = 𝔨 ⊕ 𝔭 together with a maximal abelian 𝔞 ⊂ 𝔭.
#[derive(Clone, Debug)]
pub struct CartanDecomposition {
    pub k_basis: LieBasis,
    pub p_basis: LieBasis,
    pub a_basis: LieBasis,
}

/// Largest bracket residual for each defining relation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CartanReport {
    pub dims: (usize, usize, usize),
    /// [𝔨,𝔨] ⊆ 𝔨
    pub kk_in_k: f64,
    /// [𝔨,𝔭] ⊆ 𝔭
    pub kp_in_p: f64,
    /// [𝔭,𝔭] ⊆ 𝔨
    pub pp_in_k: f64,
    /// 𝔞 ⊆ 𝔭
    pub a_in_p: f64,
    /// max ‖[a, a′]‖ over 𝔞
    pub a_abelian: f64,
    pub pass: bool,
}

fn labels(ls: &[&str]) -> Vec<Operator> {
    ls.iter().map(|s| pauli::string(s).expect("valid label")).collect()
}

/// 𝔨 = single-qubit directions, 𝔭 = two-body products, 𝔞 = span{XX, YY, ZZ}, all times i.
pub fn cartan_su4() -> CartanDecomposition {
    let k = labels(&["XI", "YI", "ZI", "IX", "IY", "IZ"]);
    let p = labels(&["XX", "XY", "XZ", "YX", "YY", "YZ", "ZX", "ZY", "ZZ"]);
    let a = labels(&["XX", "YY", "ZZ"]);
    CartanDecomposition {
        k_basis: LieBasis::from_hermitian(4, &k).expect("dims"),
        p_basis: LieBasis::from_hermitian(4, &p).expect("dims"),
        a_basis: LieBasis::from_hermitian(4, &a).expect("dims"),
    }
}

fn bracket_residual(x: &LieBasis, y: &LieBasis, into: &LieBasis) -> f64 {
    let mut worst: f64 = 0.0;
    for a in x.basis() {
        for b in y.basis() {
            let c = &(a * b) - &(b * a);
            worst = worst.max(into.residual(&c).frobenius_norm());
        }
    }
    worst
}

/// Verifies the three bracket inclusions and that 𝔞 is an abelian subspace of 𝔭.
pub fn check_cartan(cd: &CartanDecomposition, tol: f64) -> CartanReport {
    let kk_in_k = bracket_residual(&cd.k_basis, &cd.k_basis, &cd.k_basis);
    let kp_in_p = bracket_residual(&cd.k_basis, &cd.p_basis, &cd.p_basis);
    let pp_in_k = bracket_residual(&cd.p_basis, &cd.p_basis, &cd.k_basis);
    let a_in_p = cd.a_basis.basis().iter().map(|a| cd.p_basis.residual(a).frobenius_norm()).fold(0.0, f64::max);
    let a_abelian = cd.a_basis.abelian_residual();
    let pass = [kk_in_k, kp_in_p, pp_in_k, a_in_p, a_abelian].iter().all(|&r| r <= tol);
    CartanReport {
        dims: (cd.k_basis.dim(), cd.p_basis.dim(), cd.a_basis.dim()),
        kk_in_k,
        kp_in_p,
        pp_in_k,
        a_in_p,
        a_abelian,
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn su4_decomposition_is_valid() {
        let cd = cartan_su4();
        let r = check_cartan(&cd, 1e-9);
        assert!(r.pass, "{r:?}");
        assert_eq!(r.dims, (6, 9, 3));
        assert_eq!(r.dims.0 + r.dims.1, 15);
        assert!(cd.k_basis.orthonormality_residual() < 1e-12);
    }

    #[test]
    fn swapping_k_and_p_fails() {
        let cd = cartan_su4();
        let swapped =
            CartanDecomposition { k_basis: cd.p_basis.clone(), p_basis: cd.k_basis.clone(), a_basis: cd.a_basis };
        let r = check_cartan(&swapped, 1e-9);
        assert!(!r.pass && r.kk_in_k > 0.1 && r.pp_in_k > 0.1);
    }

    #[test]
    fn non_abelian_a_fails() {
        let mut cd = cartan_su4();
        cd.a_basis = LieBasis::from_hermitian(4, &labels(&["XX", "XY"])).unwrap();
        let r = check_cartan(&cd, 1e-9);
        assert!(!r.pass && r.a_abelian > 0.1);
    }
}
