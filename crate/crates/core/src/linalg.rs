//! Dense complex linear algebra used by every other module.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`. Bipartite spaces use the
//! ordering `a * d_b + b`, so the left factor is the slow index.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative tolerance for accepting a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Sorted descending.
    pub eigenvalues: Vec<f64>,
    /// Column `i` is the eigenvector for `eigenvalues[i]`.
    pub eigenvectors: CMatrix,
}

impl HermitianEigen {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn reconstruct(&self) -> CMatrix {
        weighted_projector(&self.eigenvectors, &self.eigenvalues)
    }

    /// Projection onto the span of eigenvectors whose eigenvalue satisfies `keep`.
    pub fn projection_where(&self, keep: impl Fn(f64) -> bool) -> CMatrix {
        let cols: Vec<usize> = (0..self.dim()).filter(|&i| keep(self.eigenvalues[i])).collect();
        projector_from_columns(&self.eigenvectors.select_columns(&cols))
    }
}

#[derive(Debug, Clone)]
pub struct Svd {
    /// Sorted descending, length `min(rows, cols)`.
    pub singular_values: Vec<f64>,
    /// `rows x k` with orthonormal columns.
    pub left: CMatrix,
    /// `cols x k` with orthonormal columns.
    pub right: CMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> CMatrix {
        let mut scaled = self.left.clone();
        for (j, s) in self.singular_values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(*s);
        }
        scaled * self.right.adjoint()
    }

    pub fn rank(&self, tol: f64) -> usize {
        self.singular_values.iter().filter(|&&s| s > tol).count()
    }
}

pub fn ensure_square(a: &CMatrix) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare { rows: a.nrows(), cols: a.ncols() });
    }
    Ok(a.nrows())
}

pub fn ensure_finite(a: &CMatrix) -> Result<()> {
    if a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput("matrix has non-finite entries".into()))
    }
}

/// Largest entry modulus of `A - A†`, scaled so the check is relative.
pub fn hermitian_defect(a: &CMatrix) -> f64 {
    let diff = a - a.adjoint();
    diff.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `(A + A†)/2` after checking `A` is Hermitian within tolerance.
pub fn hermitize(a: &CMatrix) -> Result<CMatrix> {
    ensure_square(a)?;
    ensure_finite(a)?;
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let defect = hermitian_defect(a);
    if defect > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian { asymmetry: defect });
    }
    Ok((a + a.adjoint()).scale(0.5))
}

pub fn eigh(a: &CMatrix) -> Result<HermitianEigen> {
    let h = hermitize(a)?;
    let n = h.nrows();
    if n == 0 {
        return Ok(HermitianEigen { eigenvalues: vec![], eigenvectors: CMatrix::zeros(0, 0) });
    }
    let se = nalgebra::SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[j].total_cmp(&se.eigenvalues[i]).then(i.cmp(&j)));
    let eigenvalues = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let eigenvectors = se.eigenvectors.select_columns(&order);
    Ok(HermitianEigen { eigenvalues, eigenvectors })
}

pub fn svd(a: &CMatrix) -> Result<Svd> {
    ensure_finite(a)?;
    let (m, n) = a.shape();
    let k = m.min(n);
    if k == 0 {
        return Ok(Svd { singular_values: vec![], left: CMatrix::zeros(m, 0), right: CMatrix::zeros(n, 0) });
    }
    let s = nalgebra::SVD::new(a.clone(), true, true);
    let u = s.u.expect("left vectors requested");
    let v = s.v_t.expect("right vectors requested").adjoint();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| s.singular_values[j].total_cmp(&s.singular_values[i]).then(i.cmp(&j)));
    Ok(Svd {
        singular_values: order.iter().map(|&i| s.singular_values[i]).collect(),
        left: u.select_columns(&order),
        right: v.select_columns(&order),
    })
}

pub fn trace(a: &CMatrix) -> Complex64 {
    a.trace()
}

pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    if a.nrows().min(a.ncols()) == 0 {
        return vec![];
    }
    let mut s: Vec<f64> = a.singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

pub fn trace_norm(a: &CMatrix) -> f64 {
    singular_values(a).iter().sum()
}

pub fn operator_norm(a: &CMatrix) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

pub fn hs_norm(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Trace norm of a Hermitian matrix via its spectrum.
pub fn hermitian_trace_norm(a: &CMatrix) -> Result<f64> {
    Ok(eigh(a)?.eigenvalues.iter().map(|x| x.abs()).sum())
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn ket(d: usize, i: usize) -> CVector {
    let mut v = CVector::zeros(d);
    v[i] = ONE;
    v
}

pub fn outer(u: &CVector, v: &CVector) -> CMatrix {
    u * v.adjoint()
}

pub fn projector(v: &CVector) -> CMatrix {
    outer(v, v)
}

pub fn diag_real(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(values.len(), values.iter().map(|&x| cr(x))))
}

/// `Q Q†` for a matrix of orthonormal columns.
pub fn projector_from_columns(q: &CMatrix) -> CMatrix {
    q * q.adjoint()
}

/// `Σ w_i q_i q_i†` over the columns of `q`.
pub fn weighted_projector(q: &CMatrix, weights: &[f64]) -> CMatrix {
    let mut scaled = q.clone();
    for (j, w) in weights.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*w);
    }
    scaled * q.adjoint()
}

pub fn direct_sum(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = CMatrix::zeros(ra + rb, ca + cb);
    out.view_mut((0, 0), (ra, ca)).copy_from(a);
    out.view_mut((ra, ca), (rb, cb)).copy_from(b);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Trace out `subsystem` of an operator on `H_A ⊗ H_B`.
pub fn partial_trace(x: &CMatrix, subsystem: Subsystem, dims: (usize, usize)) -> Result<CMatrix> {
    let (da, db) = dims;
    if x.nrows() != da * db || x.ncols() != da * db {
        return Err(Error::DimensionMismatch(format!(
            "partial trace expects {}x{}, got {}x{}",
            da * db,
            da * db,
            x.nrows(),
            x.ncols()
        )));
    }
    let out = match subsystem {
        Subsystem::B => CMatrix::from_fn(da, da, |a1, a2| (0..db).map(|b| x[(a1 * db + b, a2 * db + b)]).sum()),
        Subsystem::A => CMatrix::from_fn(db, db, |b1, b2| (0..da).map(|a| x[(a * db + b1, a * db + b2)]).sum()),
    };
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Schmidt {
    /// Probabilities `λ_i`, sorted descending; the amplitudes are `√λ_i`.
    pub coefficients: Vec<f64>,
    /// Columns `e_i` on `H_A`.
    pub vectors_a: CMatrix,
    /// Columns `f_i` on `H_B`.
    pub vectors_b: CMatrix,
}

impl Schmidt {
    pub fn reconstruct(&self) -> CVector {
        let (da, db) = (self.vectors_a.nrows(), self.vectors_b.nrows());
        let mut psi = CVector::zeros(da * db);
        for (i, &l) in self.coefficients.iter().enumerate() {
            let term = kron_vec(&self.vectors_a.column(i).into_owned(), &self.vectors_b.column(i).into_owned());
            psi += term * cr(l.sqrt());
        }
        psi
    }
}

pub fn kron_vec(u: &CVector, v: &CVector) -> CVector {
    let mut out = CVector::zeros(u.len() * v.len());
    for i in 0..u.len() {
        for j in 0..v.len() {
            out[i * v.len() + j] = u[i] * v[j];
        }
    }
    out
}

/// Reshape a vector on `H_A ⊗ H_B` into its `d_A x d_B` coefficient matrix.
pub fn coefficient_matrix(psi: &CVector, dims: (usize, usize)) -> CMatrix {
    let (da, db) = dims;
    CMatrix::from_fn(da, db, |a, b| psi[a * db + b])
}

pub fn schmidt_decompose(psi: &CVector, dims: (usize, usize)) -> Result<Schmidt> {
    let (da, db) = dims;
    if psi.len() != da * db {
        return Err(Error::DimensionMismatch(format!("vector of length {} on {}x{}", psi.len(), da, db)));
    }
    let norm = psi.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized(format!("state norm {norm}")));
    }
    let s = svd(&coefficient_matrix(psi, dims))?;
    Ok(Schmidt {
        coefficients: s.singular_values.iter().map(|x| x * x).collect(),
        vectors_a: s.left,
        vectors_b: s.right.map(|z| z.conj()),
    })
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_complex<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn ginibre<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian_complex(rng))
}

/// Ginibre matrix orthonormalized by QR with the diagonal of `R` made positive.
pub fn random_isometry_with<R: Rng>(d_in: usize, d_out: usize, rng: &mut R) -> Result<CMatrix> {
    if d_in > d_out {
        return Err(Error::DimensionMismatch(format!("isometry from {d_in} into {d_out}")));
    }
    Ok(qr_phase_fixed(&ginibre(d_out, d_in, rng)))
}

fn qr_phase_fixed(g: &CMatrix) -> CMatrix {
    let qr = g.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..q.ncols().min(r.nrows()) {
        let rjj = r[(j, j)];
        if rjj.norm() > 0.0 {
            let phase = rjj / rjj.norm();
            for i in 0..q.nrows() {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}

pub fn haar_random_unitary_with<R: Rng>(d: usize, rng: &mut R) -> CMatrix {
    qr_phase_fixed(&ginibre(d, d, rng))
}

pub fn haar_random_unitary(d: usize, seed: u64) -> CMatrix {
    haar_random_unitary_with(d, &mut seeded_rng(seed))
}

pub fn random_isometry(d_in: usize, d_out: usize, seed: u64) -> Result<CMatrix> {
    random_isometry_with(d_in, d_out, &mut seeded_rng(seed))
}

pub fn random_unit_vector<R: Rng>(d: usize, rng: &mut R) -> CVector {
    let v = CVector::from_fn(d, |_, _| gaussian_complex(rng));
    let n = v.norm();
    v / cr(n)
}

/// Random Hermitian matrix with unit operator norm.
pub fn random_hermitian<R: Rng>(d: usize, rng: &mut R) -> CMatrix {
    let g = ginibre(d, d, rng);
    let h = (&g + g.adjoint()).scale(0.5);
    let n = operator_norm(&h);
    if n > 0.0 {
        h.unscale(n)
    } else {
        h
    }
}

/// `exp(i t H)` for Hermitian `H`.
pub fn unitary_exp(h: &CMatrix, t: f64) -> Result<CMatrix> {
    let e = eigh(h)?;
    let mut scaled = e.eigenvectors.clone();
    for (j, &l) in e.eigenvalues.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, t * l);
        for i in 0..scaled.nrows() {
            scaled[(i, j)] *= phase;
        }
    }
    Ok(scaled * e.eigenvectors.adjoint())
}

pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let d = u.ncols();
    operator_norm(&(u.adjoint() * u - identity(d)))
}

pub fn is_unitary(u: &CMatrix, tol: f64) -> bool {
    u.nrows() == u.ncols() && unitarity_defect(u) <= tol
}

pub fn is_isometry(v: &CMatrix, tol: f64) -> bool {
    v.nrows() >= v.ncols() && unitarity_defect(v) <= tol
}

pub fn projection_defect(e: &CMatrix) -> f64 {
    operator_norm(&(e * e - e)).max(hermitian_defect(e))
}

/// Orthonormal basis of the range of a projection (eigenvalues at least 1/2).
pub fn projection_basis(e: &CMatrix) -> Result<CMatrix> {
    let eig = eigh(e)?;
    let cols: Vec<usize> = (0..eig.dim()).filter(|&i| eig.eigenvalues[i] >= 0.5).collect();
    Ok(eig.eigenvectors.select_columns(&cols))
}

/// Orthonormal basis of the orthogonal complement of the span of `q`'s columns.
pub fn orthogonal_complement(q: &CMatrix) -> Result<CMatrix> {
    let d = q.nrows();
    let comp = identity(d) - projector_from_columns(q);
    projection_basis(&comp)
}

/// Orthonormal basis of the column span of `a`, ignoring singular values below `tol`.
pub fn range_basis(a: &CMatrix, tol: f64) -> Result<CMatrix> {
    let s = svd(a)?;
    let r = s.rank(tol);
    Ok(s.left.columns(0, r).into_owned())
}

/// Conjugate a matrix: `U X U†`.
pub fn conjugate(u: &CMatrix, x: &CMatrix) -> CMatrix {
    u * x * u.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pauli_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }

    #[test]
    fn eigh_sorts_descending() {
        let e = eigh(&diag_real(&[0.2, 0.8])).unwrap();
        assert_abs_diff_eq!(e.eigenvalues[0], 0.8, epsilon = 1e-14);
        assert_abs_diff_eq!(e.eigenvalues[1], 0.2, epsilon = 1e-14);
        assert_abs_diff_eq!(e.eigenvectors[(1, 0)].norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn eigh_identity_and_pauli() {
        let e = eigh(&identity(3)).unwrap();
        assert!(e.eigenvalues.iter().all(|&x| (x - 1.0).abs() < 1e-14));
        let e = eigh(&pauli_x()).unwrap();
        assert_abs_diff_eq!(e.eigenvalues[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.eigenvalues[1], -1.0, epsilon = 1e-14);
        let plus = e.eigenvectors.column(0);
        assert_abs_diff_eq!((plus[0] - plus[1]).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn eigh_rejects_non_hermitian() {
        let a = CMatrix::from_row_slice(2, 2, &[ONE, ONE, ZERO, ONE]);
        assert!(matches!(eigh(&a), Err(Error::NotHermitian { .. })));
        let b = CMatrix::zeros(2, 3);
        assert!(matches!(eigh(&b), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn eigh_reconstructs_random() {
        let mut rng = seeded_rng(3);
        for d in 1..9 {
            let h = random_hermitian(d, &mut rng);
            let e = eigh(&h).unwrap();
            assert!(operator_norm(&(e.reconstruct() - &h)) <= 1e-10 * operator_norm(&h).max(1.0));
        }
    }

    #[test]
    fn svd_examples() {
        assert!(svd(&CMatrix::zeros(3, 3)).unwrap().singular_values.iter().all(|&s| s == 0.0));
        let u = haar_random_unitary(4, 9);
        assert!(svd(&u).unwrap().singular_values.iter().all(|&s| (s - 1.0).abs() < 1e-12));
        let s = svd(&diag_real(&[3.0, -4.0])).unwrap();
        assert_abs_diff_eq!(s.singular_values[0], 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.singular_values[1], 3.0, epsilon = 1e-14);
    }

    #[test]
    fn svd_reconstructs_rectangular() {
        let mut rng = seeded_rng(5);
        let a = ginibre(5, 3, &mut rng);
        let s = svd(&a).unwrap();
        assert!(operator_norm(&(s.reconstruct() - &a)) <= 1e-10 * operator_norm(&a));
    }

    #[test]
    fn partial_trace_product_and_entangled() {
        let ra = diag_real(&[0.3, 0.7]);
        let rb = diag_real(&[0.1, 0.2, 0.7]);
        let pt = partial_trace(&kron(&ra, &rb), Subsystem::B, (2, 3)).unwrap();
        assert!(hs_norm(&(pt - &ra)) < 1e-14);
        let pt = partial_trace(&kron(&ra, &rb), Subsystem::A, (2, 3)).unwrap();
        assert!(hs_norm(&(pt - &rb)) < 1e-14);

        let d = 3;
        let mut omega = CVector::zeros(d * d);
        for i in 0..d {
            omega[i * d + i] = cr(1.0 / (d as f64).sqrt());
        }
        let pt = partial_trace(&projector(&omega), Subsystem::B, (d, d)).unwrap();
        assert!(hs_norm(&(pt - identity(d).unscale(d as f64))) < 1e-14);
    }

    #[test]
    fn partial_trace_a_matches_index_loop() {
        let mut rng = seeded_rng(11);
        let (da, db) = (2, 3);
        let x = ginibre(da * db, da * db, &mut rng);
        let got = partial_trace(&x, Subsystem::A, (da, db)).unwrap();
        // Oracle: Σ_a (⟨a| ⊗ 1) X (|a⟩ ⊗ 1).
        let mut want = CMatrix::zeros(db, db);
        for a in 0..da {
            let col = CMatrix::from_column_slice(da, 1, ket(da, a).as_slice());
            let bra = kron(&col.adjoint(), &identity(db));
            want += &bra * &x * bra.adjoint();
        }
        assert!(hs_norm(&(got - want)) < 1e-12);
        assert!(partial_trace(&x, Subsystem::A, (3, 3)).is_err());
    }

    #[test]
    fn schmidt_examples() {
        let s = schmidt_decompose(&ket(4, 0), (2, 2)).unwrap();
        assert_abs_diff_eq!(s.coefficients[0], 1.0, epsilon = 1e-14);
        let mut bell = CVector::zeros(4);
        bell[0] = cr(std::f64::consts::FRAC_1_SQRT_2);
        bell[3] = cr(std::f64::consts::FRAC_1_SQRT_2);
        let s = schmidt_decompose(&bell, (2, 2)).unwrap();
        assert_abs_diff_eq!(s.coefficients[0], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(s.coefficients[1], 0.5, epsilon = 1e-14);
        assert!(schmidt_decompose(&(bell * cr(2.0)), (2, 2)).is_err());
    }

    #[test]
    fn schmidt_reconstructs_random() {
        let mut rng = seeded_rng(17);
        let psi = random_unit_vector(6, &mut rng);
        let s = schmidt_decompose(&psi, (2, 3)).unwrap();
        assert_abs_diff_eq!(s.coefficients.iter().sum::<f64>(), 1.0, epsilon = 1e-10);
        assert!((s.reconstruct() - &psi).norm() < 1e-9);
        let sv = svd(&coefficient_matrix(&psi, (2, 3))).unwrap();
        for (l, a) in s.coefficients.iter().zip(sv.singular_values.iter()) {
            assert_abs_diff_eq!(*l, a * a, epsilon = 1e-12);
        }
    }

    #[test]
    fn norm_examples() {
        let a = diag_real(&[1.0, -1.0]);
        assert_abs_diff_eq!(trace_norm(&a), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(operator_norm(&a), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(hs_norm(&a), 2f64.sqrt(), epsilon = 1e-14);
        let p = projector(&ket(3, 1));
        for n in [trace_norm(&p), operator_norm(&p), hs_norm(&p)] {
            assert_abs_diff_eq!(n, 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn haar_and_isometry() {
        let u = haar_random_unitary(1, 4);
        assert_abs_diff_eq!(u[(0, 0)].norm(), 1.0, epsilon = 1e-14);
        assert_eq!(haar_random_unitary(5, 8), haar_random_unitary(5, 8));
        assert!(is_unitary(&haar_random_unitary(7, 1), 1e-10));
        let v = random_isometry(3, 8, 2).unwrap();
        assert!(is_isometry(&v, 1e-10));
        assert!(random_isometry(4, 3, 0).is_err());
    }

    #[test]
    fn unitary_exp_is_unitary() {
        let mut rng = seeded_rng(1);
        let h = random_hermitian(4, &mut rng);
        let u = unitary_exp(&h, 0.3).unwrap();
        assert!(is_unitary(&u, 1e-12));
        assert!(operator_norm(&(u - identity(4))) <= 0.3 + 1e-12);
    }
}
