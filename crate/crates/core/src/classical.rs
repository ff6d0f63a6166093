//! Probability vectors, column-stochastic matrices and the classical fixer.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SUM_TOL: f64 = 1e-10;
const CLAMP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbabilityVector {
    entries: Vec<f64>,
}

impl ProbabilityVector {
    /// Entries in `[-1e-12, 0)` are clamped to zero.
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidDistribution("empty vector".into()));
        }
        if entries.iter().any(|x| !x.is_finite() || *x < -CLAMP_TOL) {
            return Err(Error::InvalidDistribution("negative or non-finite entry".into()));
        }
        let entries: Vec<f64> = entries.into_iter().map(|x| x.max(0.0)).collect();
        let total: f64 = entries.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidDistribution(format!("entries sum to {total}")));
        }
        Ok(Self { entries })
    }

    pub fn uniform(d: usize) -> Self {
        Self { entries: vec![1.0 / d as f64; d] }
    }

    pub fn basis(d: usize, i: usize) -> Self {
        let mut entries = vec![0.0; d];
        entries[i] = 1.0;
        Self { entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn as_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.entries)
    }

    /// `½‖P − Q‖₁`.
    pub fn tv_distance(&self, other: &Self) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!("{} vs {}", self.dim(), other.dim())));
        }
        Ok(0.5 * self.entries.iter().zip(&other.entries).map(|(a, b)| (a - b).abs()).sum::<f64>())
    }
}

impl TryFrom<Vec<f64>> for ProbabilityVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ProbabilityVector> for Vec<f64> {
    fn from(p: ProbabilityVector) -> Self {
        p.entries
    }
}

/// Column-stochastic matrix: `Σ_x T[x][y] = 1` for every column `y`.
/// Serialized as an array of columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct StochasticMatrix {
    matrix: DMatrix<f64>,
}

impl StochasticMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::NotStochastic(format!("shape {:?}", matrix.shape())));
        }
        if matrix.iter().any(|x| !x.is_finite() || *x < -CLAMP_TOL) {
            return Err(Error::NotStochastic("negative or non-finite entry".into()));
        }
        let matrix = matrix.map(|x| x.max(0.0));
        for (y, col) in matrix.column_iter().enumerate() {
            let s = col.sum();
            if (s - 1.0).abs() > SUM_TOL {
                return Err(Error::NotStochastic(format!("column {y} sums to {s}")));
            }
        }
        Ok(Self { matrix })
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let d = columns.len();
        if columns.iter().any(|c| c.len() != d) {
            return Err(Error::NotStochastic("columns of wrong length".into()));
        }
        Self::new(DMatrix::from_fn(d, d, |x, y| columns[y][x]))
    }

    pub fn identity(d: usize) -> Self {
        Self { matrix: DMatrix::identity(d, d) }
    }

    /// Every column equal to `p`.
    pub fn constant(p: &ProbabilityVector) -> Self {
        let d = p.dim();
        Self { matrix: DMatrix::from_fn(d, d, |x, _| p.entries[x]) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn entry(&self, x: usize, y: usize) -> f64 {
        self.matrix[(x, y)]
    }

    pub fn apply(&self, p: &ProbabilityVector) -> Result<ProbabilityVector> {
        if p.dim() != self.dim() {
            return Err(Error::DimensionMismatch(format!("{} vs {}", p.dim(), self.dim())));
        }
        let q = &self.matrix * p.as_vector();
        renormalized(q.as_slice())
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        self.matrix.column_iter().map(|c| c.iter().copied().collect()).collect()
    }
}

impl TryFrom<Vec<Vec<f64>>> for StochasticMatrix {
    type Error = Error;
    fn try_from(cols: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_columns(&cols)
    }
}

impl From<StochasticMatrix> for Vec<Vec<f64>> {
    fn from(t: StochasticMatrix) -> Self {
        t.columns()
    }
}

fn renormalized(v: &[f64]) -> Result<ProbabilityVector> {
    let clamped: Vec<f64> = v.iter().map(|x| x.max(0.0)).collect();
    let total: f64 = clamped.iter().sum();
    if (total - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidDistribution(format!("mass {total} after iteration")));
    }
    ProbabilityVector::new(clamped.iter().map(|x| x / total).collect())
}

/// `max_y Σ_x |T_xy − S_xy|`, in `[0, 2]`.
pub fn stochastic_norm(t: &StochasticMatrix, s: &StochasticMatrix) -> Result<f64> {
    if t.dim() != s.dim() {
        return Err(Error::DimensionMismatch(format!("{} vs {}", t.dim(), s.dim())));
    }
    let diff = &t.matrix - &s.matrix;
    Ok(diff.column_iter().map(|c| c.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassicalFixResult {
    pub q: ProbabilityVector,
    pub s: StochasticMatrix,
    pub epsilon_used: f64,
    /// Claimed bound on both `½‖Q − P‖₁` and `½‖S − T‖`.
    pub bound_claimed: f64,
    pub state_distance: f64,
    pub channel_distance: f64,
    /// `‖SQ − Q‖₁`.
    pub fixed_point_residual: f64,
}

/// `S = (1−√ε) T + √ε P 1ᵀ` and its unique fixed point `Q`.
///
/// With `epsilon` absent the measured `½‖TP − P‖₁` is used.
pub fn fix_classical(p: &ProbabilityVector, t: &StochasticMatrix, epsilon: Option<f64>) -> Result<ClassicalFixResult> {
    let tp = t.apply(p)?;
    let measured = tp.tv_distance(p)?;
    let eps = match epsilon {
        Some(e) => {
            if !(e >= 0.0) {
                return Err(Error::InvalidInput(format!("epsilon {e}")));
            }
            if measured > e + 1e-9 {
                return Err(Error::PromiseViolated { measured, supplied: e });
            }
            e
        }
        None => measured,
    };
    if eps == 0.0 {
        return Ok(ClassicalFixResult {
            q: p.clone(),
            s: t.clone(),
            epsilon_used: eps,
            bound_claimed: eps.sqrt(),
            state_distance: 0.0,
            channel_distance: 0.0,
            fixed_point_residual: 2.0 * measured,
        });
    }
    let lam = eps.sqrt().min(1.0);
    let d = t.dim();
    let s_mat = DMatrix::from_fn(d, d, |x, y| (1.0 - lam) * t.matrix[(x, y)] + lam * p.entries[x]);
    let s = StochasticMatrix::new(s_mat)?;
    let q = contractive_fixed_point(&s, p, lam, 1e-14)?;
    let sq = &s.matrix * q.as_vector();
    let residual = (sq - q.as_vector()).abs().sum();
    Ok(ClassicalFixResult {
        state_distance: q.tv_distance(p)?,
        channel_distance: 0.5 * stochastic_norm(&s, t)?,
        q,
        s,
        epsilon_used: eps,
        bound_claimed: lam,
        fixed_point_residual: residual,
    })
}

/// Power iteration for a map contracting at rate `λ`; stops on the geometric tail bound.
pub fn contractive_fixed_point(
    s: &StochasticMatrix,
    start: &ProbabilityVector,
    lambda: f64,
    tol: f64,
) -> Result<ProbabilityVector> {
    let mut x = start.as_vector();
    let mut last = f64::INFINITY;
    // Steps below rounding noise cannot shrink further.
    let floor = 8.0 * s.dim() as f64 * f64::EPSILON;
    for _ in 0..crate::quantum::MAX_ITERATIONS {
        let y = &s.matrix * &x;
        let delta = (&y - &x).abs().sum();
        x = y;
        last = delta;
        if delta * (1.0 - lambda) / lambda <= tol || delta <= floor {
            return renormalized(x.as_slice());
        }
    }
    Err(Error::NoConvergence { iterations: crate::quantum::MAX_ITERATIONS, last_step: last })
}

/// Stationary distribution via power iteration on the lazy chain `(S + 1)/2`,
/// which has the same stationary vectors and no periodicity.
pub fn stationary_distribution(s: &StochasticMatrix, tol: f64) -> Result<ProbabilityVector> {
    let d = s.dim();
    let lazy = (&s.matrix + DMatrix::identity(d, d)) * 0.5;
    let mut x = DVector::from_element(d, 1.0 / d as f64);
    let mut last = f64::INFINITY;
    for k in 0..crate::quantum::MAX_ITERATIONS {
        let y = &lazy * &x;
        x = y;
        if k % 16 == 0 {
            last = (&s.matrix * &x - &x).abs().sum();
            if last <= tol {
                return renormalized(x.as_slice());
            }
        }
    }
    Err(Error::NoConvergence { iterations: crate::quantum::MAX_ITERATIONS, last_step: last })
}

/// Number of eigenvalues of `S` within `tol` of 1.
pub fn eigenvalue_one_multiplicity(s: &StochasticMatrix, tol: f64) -> usize {
    s.matrix.complex_eigenvalues().iter().filter(|z| ((*z) - num_complex::Complex64::new(1.0, 0.0)).norm() <= tol).count()
}

/// Strong connectivity of the support graph (edge `y → x` when `S_xy > threshold`).
pub fn is_irreducible_with(s: &StochasticMatrix, threshold: f64) -> bool {
    let d = s.dim();
    let reach = |forward: bool| {
        let mut seen = vec![false; d];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for w in 0..d {
                let w_entry = if forward { s.matrix[(w, v)] } else { s.matrix[(v, w)] };
                if w_entry > threshold && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.iter().all(|&b| b)
    };
    reach(true) && reach(false)
}

pub fn is_irreducible(s: &StochasticMatrix) -> bool {
    is_irreducible_with(s, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn perm(d: usize, shift: usize) -> StochasticMatrix {
        StochasticMatrix::new(DMatrix::from_fn(d, d, |x, y| if x == (y + shift) % d { 1.0 } else { 0.0 })).unwrap()
    }

    #[test]
    fn norm_examples() {
        let t = perm(3, 1);
        assert_eq!(stochastic_norm(&t, &t).unwrap(), 0.0);
        assert_eq!(stochastic_norm(&perm(3, 1), &perm(3, 2)).unwrap(), 2.0);
        let u = StochasticMatrix::constant(&ProbabilityVector::uniform(2));
        assert!((stochastic_norm(&StochasticMatrix::identity(2), &u).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn validation() {
        assert!(ProbabilityVector::new(vec![0.5, 0.6]).is_err());
        assert!(ProbabilityVector::new(vec![1.0 + 1e-13, -1e-13]).is_ok());
        assert!(StochasticMatrix::from_columns(&[vec![1.0, 0.0], vec![0.5, 0.6]]).is_err());
        let json = serde_json::to_string(&StochasticMatrix::from_columns(&[vec![0.25, 0.75], vec![1.0, 0.0]]).unwrap()).unwrap();
        assert_eq!(json, "[[0.25,0.75],[1.0,0.0]]");
    }

    #[test]
    fn identity_is_already_fixed() {
        let p = ProbabilityVector::new(vec![0.2, 0.3, 0.5]).unwrap();
        let r = fix_classical(&p, &StochasticMatrix::identity(3), None).unwrap();
        assert_eq!(r.epsilon_used, 0.0);
        assert_eq!(r.q, p);
        assert_eq!(r.s, StochasticMatrix::identity(3));
    }

    #[test]
    fn two_state_leak() {
        let a = 1e-3;
        let p = ProbabilityVector::new(vec![1.0, 0.0]).unwrap();
        let t = StochasticMatrix::from_columns(&[vec![1.0 - a, a], vec![0.0, 1.0]]).unwrap();
        let r = fix_classical(&p, &t, None).unwrap();
        assert!((r.epsilon_used - a).abs() < 1e-15);
        // Oracle: S = (1-λ)T + λ e0 1ᵀ has fixed point q0 = λ / (λ + (1-λ) a).
        let lam = a.sqrt();
        let q0 = lam / (lam + (1.0 - lam) * a);
        assert!((r.q.entries()[0] - q0).abs() < 1e-12);
        assert!(r.fixed_point_residual <= 1e-10);
        assert!(r.state_distance <= lam + 1e-10);
        assert!(r.channel_distance <= lam + 1e-10);
    }

    #[test]
    fn promise_is_checked() {
        let p = ProbabilityVector::new(vec![1.0, 0.0]).unwrap();
        let t = perm(2, 1);
        assert!(matches!(fix_classical(&p, &t, Some(0.1)), Err(Error::PromiseViolated { .. })));
    }

    #[test]
    fn spectral_utilities() {
        let id = StochasticMatrix::identity(2);
        assert_eq!(eigenvalue_one_multiplicity(&id, 1e-8), 2);
        assert!(!is_irreducible(&id));
        let u = StochasticMatrix::constant(&ProbabilityVector::uniform(4));
        assert_eq!(eigenvalue_one_multiplicity(&u, 1e-8), 1);
        assert!(is_irreducible(&u));
        let st = stationary_distribution(&u, 1e-13).unwrap();
        assert!(st.tv_distance(&ProbabilityVector::uniform(4)).unwrap() < 1e-12);
        // Periodic chain 0 -> 1 -> {0, 2} -> 1: the lazy iteration still converges.
        let s = StochasticMatrix::from_columns(&[vec![0.0, 1.0, 0.0], vec![0.5, 0.0, 0.5], vec![0.0, 1.0, 0.0]]).unwrap();
        let st = stationary_distribution(&s, 1e-12).unwrap();
        let want = ProbabilityVector::new(vec![0.25, 0.5, 0.25]).unwrap();
        assert!(st.tv_distance(&want).unwrap() < 1e-10);
    }
}
