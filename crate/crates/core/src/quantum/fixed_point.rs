use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::quantum::channel::Channel;
use crate::quantum::state::DensityMatrix;

pub const MAX_ITERATIONS: usize = 1_000_000;
/// Default tolerance for counting superoperator eigenvalues at 1.
pub const FIXED_SPACE_TOL: f64 = 1e-8;

fn vec_row_major(x: &CMatrix) -> CVector {
    CVector::from_iterator(x.len(), x.transpose().iter().cloned())
}

fn unvec_row_major(v: &CVector, d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |i, j| v[i * d + j])
}

/// Iterates `M` from `start` until the geometric tail `δ_k (1-λ)/λ` drops below `tol`.
///
/// `M` must contract at rate `λ` toward its fixed point, as a mixture
/// `(1-λ) N + λ Tr(·) τ` does. The returned state satisfies
/// `‖σ − start‖₁ ≤ ‖M(start) − start‖₁ / λ`; a violation is reported as an error.
pub fn unique_fixed_point(m: &Channel, start: &DensityMatrix, lambda: f64, tol: f64) -> Result<DensityMatrix> {
    unique_fixed_point_capped(m, start, lambda, tol, MAX_ITERATIONS)
}

pub fn unique_fixed_point_capped(
    m: &Channel,
    start: &DensityMatrix,
    lambda: f64,
    tol: f64,
    max_iterations: usize,
) -> Result<DensityMatrix> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::InvalidInput(format!("contraction rate {lambda} outside (0, 1]")));
    }
    let d = start.dim();
    if m.dim_in() != d || m.dim_out() != d {
        return Err(Error::DimensionMismatch(format!("channel {}->{} on state of dim {d}", m.dim_in(), m.dim_out())));
    }
    let s = m.superoperator();
    let x0 = vec_row_major(start.matrix());
    let mut x = x0.clone();
    let mut first_step = None;
    let mut last = f64::INFINITY;
    let sqrt_d = (d as f64).sqrt();
    let floor = 8.0 * (d * d) as f64 * f64::EPSILON;
    for _ in 0..max_iterations {
        let y = &s * &x;
        let step = &y - &x;
        // √d‖·‖₂ dominates ‖·‖₁ and avoids an eigendecomposition per step.
        let delta = sqrt_d * step.norm();
        if first_step.is_none() {
            first_step = Some(linalg::hermitian_trace_norm(&unvec_row_major(&step, d))?);
        }
        x = y;
        last = delta;
        if delta * (1.0 - lambda) / lambda <= tol || delta <= floor {
            let sigma = DensityMatrix::repaired(unvec_row_major(&x, d))?;
            let moved = linalg::hermitian_trace_norm(&(sigma.matrix() - start.matrix()))?;
            let allowed = first_step.unwrap_or(0.0) / lambda + tol + 1e-12;
            if moved > allowed {
                return Err(Error::BoundViolated(format!(
                    "fixed point moved {moved:.3e} from start, contraction allows {allowed:.3e}"
                )));
            }
            return Ok(sigma);
        }
    }
    Err(Error::NoConvergence { iterations: max_iterations, last_step: last })
}

pub fn is_unital(n: &Channel, tol: f64) -> bool {
    unitality_defect(n).map(|x| x <= tol).unwrap_or(false)
}

/// `‖N(1) − 1‖`.
pub fn unitality_defect(n: &Channel) -> Result<f64> {
    if n.dim_in() != n.dim_out() {
        return Err(Error::DimensionMismatch("unitality needs equal input and output".into()));
    }
    let d = n.dim_in();
    Ok(linalg::operator_norm(&(n.apply(&linalg::identity(d))? - linalg::identity(d))))
}

/// Eigenvalues of the superoperator, in Schur order.
pub fn superoperator_spectrum(n: &Channel) -> Vec<num_complex::Complex64> {
    let s = n.superoperator();
    let schur = nalgebra::Schur::new(s);
    let (_, t) = schur.unpack();
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

/// Number of superoperator eigenvalues within `tol` of 1.
pub fn fixed_point_space_dimension(n: &Channel, tol: f64) -> usize {
    superoperator_spectrum(n).iter().filter(|z| (*z - linalg::ONE).norm() <= tol).count()
}

/// Orthonormal basis (as matrices) of `ker(id − N)`, from singular vectors of `S − 1`.
pub fn fixed_point_basis(n: &Channel, tol: f64) -> Result<Vec<CMatrix>> {
    let d = n.dim_in();
    let s = n.superoperator() - linalg::identity(d * d);
    let svd = linalg::svd(&s)?;
    let mut out = Vec::new();
    for (k, &sv) in svd.singular_values.iter().enumerate() {
        if sv <= tol {
            out.push(unvec_row_major(&svd.right.column(k).into_owned(), d));
        }
    }
    Ok(out)
}

/// `Tr((1 − π) N(π))`, zero exactly when the range of `π` is invariant.
pub fn invariant_subspace_residual(n: &Channel, pi: &CMatrix) -> Result<f64> {
    let defect = linalg::projection_defect(pi);
    if defect > 1e-10 {
        return Err(Error::NotAProjection { deviation: defect });
    }
    let d = pi.nrows();
    let out = n.apply(pi)?;
    Ok(((linalg::identity(d) - pi) * out).trace().re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cr, seeded_rng};
    use crate::quantum::channel::{convex_combine, replacement_channel};
    use crate::quantum::random::{random_channel, random_density};

    #[test]
    fn pure_replacement_converges_in_one_step() {
        let mut rng = seeded_rng(1);
        let tau = random_density(3, &mut rng);
        let start = random_density(3, &mut rng);
        let sigma = unique_fixed_point(&replacement_channel(&tau), &start, 1.0, 1e-12).unwrap();
        assert!(linalg::hs_norm(&(sigma.matrix() - tau.matrix())) < 1e-12);
    }

    #[test]
    fn identity_mixture_fixes_tau() {
        let mut rng = seeded_rng(2);
        let tau = random_density(4, &mut rng);
        let start = random_density(4, &mut rng);
        let lam = 0.05;
        let m = convex_combine(&[1.0 - lam, lam], &[Channel::identity(4), replacement_channel(&tau)]).unwrap();
        let sigma = unique_fixed_point(&m, &start, lam, 1e-13).unwrap();
        assert!(linalg::trace_norm(&(sigma.matrix() - tau.matrix())) < 1e-11);
    }

    #[test]
    fn lemma_bound_on_random_mixtures() {
        let mut rng = seeded_rng(3);
        for _ in 0..10 {
            let n = random_channel(3, 3, 2, &mut rng);
            let rho = random_density(3, &mut rng);
            let lam = 0.1;
            let m = convex_combine(&[1.0 - lam, lam], &[n, replacement_channel(&rho)]).unwrap();
            let sigma = unique_fixed_point(&m, &rho, lam, 1e-13).unwrap();
            let lhs = linalg::trace_norm(&(sigma.matrix() - rho.matrix()));
            let rhs = linalg::trace_norm(&(m.apply(rho.matrix()).unwrap() - rho.matrix())) / lam;
            assert!(lhs <= rhs + 1e-12);
            let res = linalg::trace_norm(&(m.apply(sigma.matrix()).unwrap() - sigma.matrix()));
            assert!(res <= 1e-12);
        }
    }

    #[test]
    fn iteration_cap_reports_no_convergence() {
        let mut rng = seeded_rng(4);
        let n = random_channel(3, 3, 2, &mut rng);
        let rho = random_density(3, &mut rng);
        let lam = 1e-3;
        let m = convex_combine(&[1.0 - lam, lam], &[n, replacement_channel(&rho)]).unwrap();
        let r = unique_fixed_point_capped(&m, &rho, lam, 1e-14, 3);
        assert!(matches!(r, Err(Error::NoConvergence { .. })));
    }

    #[test]
    fn unitary_channel_fixed_space() {
        let u = linalg::haar_random_unitary(4, 9);
        let ch = Channel::unitary(u).unwrap();
        assert!(is_unital(&ch, 1e-10));
        assert_eq!(fixed_point_space_dimension(&ch, FIXED_SPACE_TOL), 4);
        let deg = linalg::diag_real(&[1.0, 1.0, -1.0]);
        assert_eq!(fixed_point_space_dimension(&Channel::unitary(deg).unwrap(), FIXED_SPACE_TOL), 5);
    }

    #[test]
    fn replacement_has_one_fixed_point() {
        let mut rng = seeded_rng(5);
        let tau = random_density(3, &mut rng);
        let r = replacement_channel(&tau);
        assert_eq!(fixed_point_space_dimension(&r, FIXED_SPACE_TOL), 1);
        assert!(!is_unital(&r, 1e-6));
        assert_eq!(fixed_point_basis(&r, 1e-8).unwrap().len(), 1);
    }

    #[test]
    fn support_of_fixed_state_is_invariant() {
        // Channel on C^3 fixing |0⟩⟨0| and mixing |1⟩,|2⟩ among themselves.
        let u = linalg::direct_sum(&linalg::identity(1), &linalg::haar_random_unitary(2, 3));
        let n = convex_combine(
            &[0.5, 0.5],
            &[Channel::unitary(u).unwrap(), replacement_channel(&DensityMatrix::diagonal(&[1.0, 0.0, 0.0]).unwrap())],
        )
        .unwrap();
        let pi = linalg::diag_real(&[1.0, 0.0, 0.0]);
        assert!(invariant_subspace_residual(&n, &pi).unwrap().abs() < 1e-12);
        let bad = linalg::diag_real(&[0.0, 1.0, 0.0]);
        assert!(invariant_subspace_residual(&n, &bad).unwrap() > 0.1);
        assert!(matches!(
            invariant_subspace_residual(&n, &(linalg::identity(3) * cr(0.5))),
            Err(Error::NotAProjection { .. })
        ));
    }
}
