//! Near-identity unitaries that move one subspace (or frame) onto a nearby one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

const PROJECTION_TOL: f64 = 1e-10;
const ORTHONORMAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RotationResult {
    #[serde(with = "crate::io::cmatrix")]
    pub unitary: CMatrix,
    /// `‖U − 1‖`.
    pub distance_to_identity: f64,
    pub claimed_bound: f64,
}

impl RotationResult {
    fn new(unitary: CMatrix, claimed_bound: f64) -> Self {
        let d = unitary.nrows();
        let distance_to_identity = linalg::operator_norm(&(&unitary - linalg::identity(d)));
        Self { unitary, distance_to_identity, claimed_bound }
    }

    pub fn within_bound(&self) -> bool {
        self.distance_to_identity <= self.claimed_bound + 1e-9
    }
}

/// How the leakage of a frame out of the target subspace is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LeakMode {
    /// `ε = max_i ‖(1−F)ψ_i‖`, requires `ε < 1/√n`, bound `2√n ε`.
    PerVector,
    /// `ε = √(Σ_i ‖(1−F)ψ_i‖²)`, requires `ε < 1`, bound `2ε`.
    Summed,
}

fn check_projection(e: &CMatrix) -> Result<()> {
    linalg::ensure_square(e)?;
    let defect = linalg::projection_defect(e);
    if defect > PROJECTION_TOL {
        return Err(Error::NotAProjection { deviation: defect });
    }
    Ok(())
}

fn check_orthonormal(v: &CMatrix) -> Result<()> {
    let deviation = linalg::operator_norm(&(v.adjoint() * v - linalg::identity(v.ncols())));
    if deviation > ORTHONORMAL_TOL {
        return Err(Error::NotOrthonormal { deviation });
    }
    Ok(())
}

fn rank(e: &CMatrix) -> Result<usize> {
    Ok(linalg::eigh(e)?.eigenvalues.iter().filter(|&&x| x >= 0.5).count())
}

/// Common rank of two projections closer than 1 in operator norm.
pub fn same_rank_or_fail(e: &CMatrix, f: &CMatrix) -> Result<usize> {
    check_projection(e)?;
    check_projection(f)?;
    if e.shape() != f.shape() {
        return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", e.shape(), f.shape())));
    }
    let distance = linalg::operator_norm(&(e - f));
    if distance >= 1.0 {
        return Err(Error::TooFar { distance, limit: 1.0 });
    }
    let (re, rf) = (rank(e)?, rank(f)?);
    if re != rf {
        return Err(Error::TooFar { distance: 1.0, limit: 1.0 });
    }
    Ok(re)
}

/// Polar factor of `Q_Fᵀ Q_E` lifted back: maps `ran Q_E` onto `ran Q_F`.
fn block_polar(q_e: &CMatrix, q_f: &CMatrix) -> Result<CMatrix> {
    let d = q_e.nrows();
    if q_e.ncols() == 0 {
        return Ok(CMatrix::zeros(d, d));
    }
    let s = linalg::svd(&(q_f.adjoint() * q_e))?;
    Ok(q_f * &s.left * s.right.adjoint() * q_e.adjoint())
}

/// Unitary `U` with `U E U† = F` and `‖U − 1‖ ≤ 2‖E − F‖`.
///
/// `U = Σ |v_i⟩⟨w_i|` over the singular vectors of `FE` and of `(1−F)(1−E)`.
pub fn align_projection(e: &CMatrix, f: &CMatrix) -> Result<RotationResult> {
    same_rank_or_fail(e, f)?;
    let q_e = linalg::projection_basis(e)?;
    let q_f = linalg::projection_basis(f)?;
    let c_e = linalg::orthogonal_complement(&q_e)?;
    let c_f = linalg::orthogonal_complement(&q_f)?;
    let u = block_polar(&q_e, &q_f)? + block_polar(&c_e, &c_f)?;
    let bound = 2.0 * linalg::operator_norm(&(e - f));
    Ok(RotationResult::new(u, bound))
}

/// Unitary with `U v_i = w_i` for two orthonormal frames given as columns.
pub fn align_vectors(v: &CMatrix, w: &CMatrix) -> Result<RotationResult> {
    if v.shape() != w.shape() {
        return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", v.shape(), w.shape())));
    }
    check_orthonormal(v)?;
    check_orthonormal(w)?;
    let d = v.nrows();
    let n = v.ncols();
    let e = linalg::projector_from_columns(v);
    let f = linalg::projector_from_columns(w);
    let u1 = align_projection(&e, &f)?.unitary;
    let u = w * v.adjoint() + u1 * (linalg::identity(d) - &e);
    let eps = (0..n).map(|i| (v.column(i) - w.column(i)).norm()).fold(0.0, f64::max);
    Ok(RotationResult::new(u, 5.0 * (n as f64).sqrt() * eps))
}

/// Leakage `‖(1−F)ψ_i‖` of each column of `psi` out of `ran F`.
pub fn leakages(psi: &CMatrix, f: &CMatrix) -> Vec<f64> {
    let out = (linalg::identity(f.nrows()) - f) * psi;
    (0..psi.ncols()).map(|i| out.column(i).norm()).collect()
}

/// Unitary with `F U ψ_i = U ψ_i` for every column `ψ_i` of `psi`.
pub fn align_into_subspace(psi: &CMatrix, f: &CMatrix, mode: LeakMode) -> Result<RotationResult> {
    check_orthonormal(psi)?;
    check_projection(f)?;
    if psi.nrows() != f.nrows() {
        return Err(Error::DimensionMismatch(format!("frame in {} vs projection on {}", psi.nrows(), f.nrows())));
    }
    let n = psi.ncols();
    let leak = leakages(psi, f);
    let (eps, limit, bound) = match mode {
        LeakMode::Summed => {
            let eps = leak.iter().map(|x| x * x).sum::<f64>().sqrt();
            (eps, 1.0, 2.0 * eps)
        }
        LeakMode::PerVector => {
            let eps = leak.iter().copied().fold(0.0, f64::max);
            let rn = (n as f64).sqrt();
            (eps, 1.0 / rn, 2.0 * rn * eps)
        }
    };
    if eps >= limit {
        return Err(Error::TooFar { distance: eps, limit });
    }
    let fpsi = f * psi;
    let s = linalg::svd(&fpsi)?;
    let q = s.left.columns(0, n).into_owned();
    let f_prime = linalg::projector_from_columns(&q);
    let e = linalg::projector_from_columns(psi);
    let u = align_projection(&e, &f_prime)?.unitary;
    Ok(RotationResult::new(u, bound))
}

/// Unitary with `U E_l U† = F_l` for two families of mutually orthogonal projections.
pub fn align_projection_family(es: &[CMatrix], fs: &[CMatrix]) -> Result<RotationResult> {
    if es.len() != fs.len() || es.is_empty() {
        return Err(Error::DimensionMismatch(format!("{} vs {} projections", es.len(), fs.len())));
    }
    let d = es[0].nrows();
    for fam in [es, fs] {
        for p in fam {
            check_projection(p)?;
            if p.nrows() != d {
                return Err(Error::DimensionMismatch("projections of different sizes".into()));
            }
        }
        for i in 0..fam.len() {
            for j in (i + 1)..fam.len() {
                let overlap = linalg::operator_norm(&(&fam[i] * &fam[j]));
                if overlap > PROJECTION_TOL {
                    return Err(Error::NotOrthogonalFamily { overlap });
                }
            }
        }
    }
    let n = es.len();
    let eps = es.iter().zip(fs).map(|(e, f)| linalg::operator_norm(&(e - f))).fold(0.0, f64::max);
    if eps >= 1.0 {
        return Err(Error::TooFar { distance: eps, limit: 1.0 });
    }
    let mut v = CMatrix::zeros(d, d);
    let mut e_sum = CMatrix::zeros(d, d);
    let mut f_sum = CMatrix::zeros(d, d);
    for (e, f) in es.iter().zip(fs) {
        v += align_projection(e, f)?.unitary * e;
        e_sum += e;
        f_sum += f;
    }
    let id = linalg::identity(d);
    let e_perp = &id - &e_sum;
    let u_perp = align_projection(&e_perp, &(&id - &f_sum))?.unitary;
    let u = v + u_perp * e_perp;
    Ok(RotationResult::new(u, 6.0 * (n as f64).sqrt() * eps))
}

/// `‖V − W‖`, which bounds half the diamond distance of the induced channels.
pub fn stinespring_distance_bound(v: &CMatrix, w: &CMatrix) -> Result<f64> {
    if v.shape() != w.shape() {
        return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", v.shape(), w.shape())));
    }
    for m in [v, w] {
        let deviation = linalg::unitarity_defect(m);
        if deviation > 1e-10 {
            return Err(Error::NotIsometry { deviation });
        }
    }
    Ok(linalg::operator_norm(&(v - w)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, cr, ket, projector, seeded_rng, CVector};

    fn rotated_ket(theta: f64) -> CVector {
        CVector::from_vec(vec![cr(theta.cos()), cr(theta.sin())])
    }

    fn near_identity(d: usize, eta: f64, seed: u64) -> CMatrix {
        let mut rng = seeded_rng(seed);
        let h = linalg::random_hermitian(d, &mut rng);
        linalg::unitary_exp(&h, eta).unwrap()
    }

    #[test]
    fn same_rank_examples() {
        let e = linalg::diag_real(&[1.0, 1.0, 0.0]);
        assert_eq!(same_rank_or_fail(&e, &e).unwrap(), 2);
        let f = projector(&rotated_ket(0.1));
        assert_eq!(same_rank_or_fail(&projector(&ket(2, 0)), &f).unwrap(), 1);
        assert!(matches!(
            same_rank_or_fail(&projector(&ket(2, 0)), &projector(&ket(2, 1))),
            Err(Error::TooFar { .. })
        ));
        assert!(matches!(same_rank_or_fail(&(e.clone() * cr(0.5)), &e), Err(Error::NotAProjection { .. })));
    }

    #[test]
    fn identical_projections_give_identity() {
        let e = linalg::conjugate(&linalg::haar_random_unitary(4, 2), &linalg::diag_real(&[1.0, 1.0, 0.0, 0.0]));
        let r = align_projection(&e, &e).unwrap();
        assert!(r.distance_to_identity < 1e-10);
    }

    #[test]
    fn qubit_rotation_angle() {
        let theta: f64 = 0.3;
        let e = projector(&ket(2, 0));
        let f = projector(&rotated_ket(theta));
        assert!((linalg::operator_norm(&(&e - &f)) - theta.sin()).abs() < 1e-14);
        let r = align_projection(&e, &f).unwrap();
        assert!(linalg::operator_norm(&(linalg::conjugate(&r.unitary, &e) - &f)) < 1e-9);
        assert!(r.distance_to_identity <= 2.0 * theta.sin() + 1e-9);
    }

    #[test]
    fn conjugated_projection_random() {
        for seed in 0..20 {
            let d = 2 + (seed as usize % 7);
            let k = 1 + seed as usize % (d - 1);
            let e = linalg::projector_from_columns(&linalg::random_isometry(k, d, seed).unwrap());
            let eta = 0.2;
            let w = near_identity(d, eta, seed + 100);
            let f = linalg::conjugate(&w, &e);
            let r = align_projection(&e, &f).unwrap();
            assert!(linalg::operator_norm(&(linalg::conjugate(&r.unitary, &e) - &f)) < 1e-9);
            assert!(linalg::is_unitary(&r.unitary, 1e-9));
            assert!(r.within_bound());
            assert!(r.claimed_bound <= 4.0 * linalg::operator_norm(&(&w - linalg::identity(d))) + 1e-9);
        }
    }

    #[test]
    fn align_vectors_examples() {
        let v = linalg::random_isometry(2, 5, 3).unwrap();
        let r = align_vectors(&v, &v).unwrap();
        assert!(r.distance_to_identity < 1e-10);

        let theta: f64 = 0.2;
        let v1 = linalg::random_isometry(1, 3, 4).unwrap();
        let w1 = &v1 * c(theta.cos(), theta.sin());
        let r = align_vectors(&v1, &w1).unwrap();
        assert!((&r.unitary * &v1 - &w1).norm() < 1e-9);
        let gap = (linalg::ONE - c(theta.cos(), theta.sin())).norm();
        assert!(r.distance_to_identity <= 5.0 * gap + 1e-9);

        let v = linalg::random_isometry(3, 6, 5).unwrap();
        let w = near_identity(6, 0.05, 6) * &v;
        let r = align_vectors(&v, &w).unwrap();
        assert!((&r.unitary * &v - &w).norm() < 1e-9);
        assert!(r.within_bound());
        assert!(matches!(align_vectors(&(v.clone() * cr(2.0)), &w), Err(Error::NotOrthonormal { .. })));
    }

    #[test]
    fn align_into_subspace_examples() {
        let f = projector(&ket(2, 0));
        let psi = CMatrix::from_column_slice(2, 1, ket(2, 0).as_slice());
        assert!(align_into_subspace(&psi, &f, LeakMode::Summed).unwrap().distance_to_identity < 1e-10);

        let theta: f64 = 0.25;
        let psi = CMatrix::from_column_slice(2, 1, rotated_ket(theta).as_slice());
        for mode in [LeakMode::Summed, LeakMode::PerVector] {
            let r = align_into_subspace(&psi, &f, mode).unwrap();
            let moved = &r.unitary * &psi;
            assert!(((linalg::identity(2) - &f) * &moved).norm() < 1e-9);
            assert!(r.distance_to_identity <= 2.0 * theta.sin() + 1e-9);
        }
    }

    #[test]
    fn align_into_subspace_random() {
        for seed in 0..20 {
            let d = 6;
            let f = linalg::projector_from_columns(&linalg::random_isometry(3, d, seed).unwrap());
            let inside = linalg::random_isometry(2, 3, seed + 1).unwrap();
            let basis = linalg::projection_basis(&f).unwrap();
            let psi = near_identity(d, 0.05, seed + 2) * (basis * inside);
            let psi = linalg::range_basis(&psi, 1e-12).unwrap();
            for mode in [LeakMode::Summed, LeakMode::PerVector] {
                let r = align_into_subspace(&psi, &f, mode).unwrap();
                let moved = &r.unitary * &psi;
                assert!(((linalg::identity(d) - &f) * moved).norm() < 1e-9);
                assert!(r.within_bound());
            }
        }
    }

    #[test]
    fn projection_family() {
        let es = vec![linalg::diag_real(&[1.0, 0.0, 0.0, 0.0]), linalg::diag_real(&[0.0, 1.0, 1.0, 0.0])];
        let r = align_projection_family(&es, &es).unwrap();
        assert!(r.distance_to_identity < 1e-10);

        let w = near_identity(4, 0.05, 9);
        let fs: Vec<CMatrix> = es.iter().map(|e| linalg::conjugate(&w, e)).collect();
        let r = align_projection_family(&es, &fs).unwrap();
        for (e, f) in es.iter().zip(&fs) {
            assert!(linalg::operator_norm(&(linalg::conjugate(&r.unitary, e) - f)) < 1e-9);
        }
        assert!(r.within_bound());

        let single = align_projection_family(&es[..1], &fs[..1]).unwrap();
        assert!(single.within_bound());

        let overlapping = vec![es[0].clone(), linalg::diag_real(&[1.0, 1.0, 0.0, 0.0])];
        assert!(matches!(align_projection_family(&overlapping, &overlapping), Err(Error::NotOrthogonalFamily { .. })));
    }

    #[test]
    fn stinespring_bound_examples() {
        let v = linalg::random_isometry(2, 6, 1).unwrap();
        assert_eq!(stinespring_distance_bound(&v, &v).unwrap(), 0.0);
        let u = near_identity(6, 0.1, 2);
        let eta = linalg::operator_norm(&(&u - linalg::identity(6)));
        assert!(stinespring_distance_bound(&v, &(u * &v)).unwrap() <= eta + 1e-12);
        assert!(matches!(stinespring_distance_bound(&(v.clone() * cr(2.0)), &v), Err(Error::NotIsometry { .. })));
    }
}
