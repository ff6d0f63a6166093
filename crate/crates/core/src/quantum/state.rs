use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, cr, CMatrix, CVector};

/// Eigenvalues above this floor (but negative) are treated as float noise.
pub const PSD_FLOOR: f64 = -1e-10;
pub const TRACE_TOL: f64 = 1e-10;

/// A positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "crate::io::MatrixJson", into = "crate::io::MatrixJson")]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validates the matrix. Small negative eigenvalues in `[-1e-10, 0)` are
    /// clamped to zero and the result renormalized.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let h = linalg::hermitize(&matrix)?;
        let tr = h.trace().re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::NotNormalized(format!("trace {tr}")));
        }
        let eig = linalg::eigh(&h)?;
        let min = eig.eigenvalues.last().copied().unwrap_or(0.0);
        if min < PSD_FLOOR {
            return Err(Error::NotPsd { min_eigenvalue: min });
        }
        if min >= 0.0 {
            return Ok(Self { matrix: h });
        }
        Ok(Self { matrix: clamp_and_normalize(&eig) })
    }

    /// Like [`DensityMatrix::new`] but also renormalizes the trace, for
    /// outputs of long numerical pipelines.
    pub fn repaired(matrix: CMatrix) -> Result<Self> {
        let h = linalg::hermitize(&matrix)?;
        let tr = h.trace().re;
        if (tr - 1.0).abs() > 1e-8 {
            return Err(Error::NotNormalized(format!("trace {tr}")));
        }
        Self::new(h.unscale(tr))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self { matrix: linalg::identity(d).unscale(d as f64) }
    }

    pub fn from_pure(v: &CVector) -> Result<Self> {
        Ok(PureState::new(v.clone(), None)?.density())
    }

    pub fn diagonal(p: &[f64]) -> Result<Self> {
        Self::new(linalg::diag_real(p))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigh(&self.matrix).map(|e| e.eigenvalues).unwrap_or_default()
    }

    /// `Tr ρ²`, equal to 1 exactly for pure states.
    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn conjugated(&self, u: &CMatrix) -> Result<Self> {
        Self::repaired(linalg::conjugate(u, &self.matrix))
    }
}

fn clamp_and_normalize(eig: &linalg::HermitianEigen) -> CMatrix {
    let clamped: Vec<f64> = eig.eigenvalues.iter().map(|&x| x.max(0.0)).collect();
    let total: f64 = clamped.iter().sum();
    let weights: Vec<f64> = clamped.iter().map(|x| x / total).collect();
    let m = linalg::weighted_projector(&eig.eigenvectors, &weights);
    (&m + m.adjoint()).scale(0.5)
}

/// A unit vector, optionally carrying a bipartition `(d_A, d_B)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "crate::io::PureStateJson", into = "crate::io::PureStateJson")]
pub struct PureState {
    vector: CVector,
    dims: Option<(usize, usize)>,
}

impl PureState {
    pub fn new(vector: CVector, dims: Option<(usize, usize)>) -> Result<Self> {
        let n = vector.norm();
        if (n - 1.0).abs() > 1e-10 {
            return Err(Error::NotNormalized(format!("vector norm {n}")));
        }
        if let Some((da, db)) = dims {
            if da * db != vector.len() {
                return Err(Error::DimensionMismatch(format!("{}x{} bipartition of length {}", da, db, vector.len())));
            }
        }
        Ok(Self { vector, dims })
    }

    /// Scales a nonzero vector to unit norm.
    pub fn normalized(vector: CVector, dims: Option<(usize, usize)>) -> Result<Self> {
        let n = vector.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::NotNormalized("zero vector".into()));
        }
        Self::new(vector / cr(n), dims)
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    pub fn dims(&self) -> Option<(usize, usize)> {
        self.dims
    }

    pub fn vector(&self) -> &CVector {
        &self.vector
    }

    pub fn density(&self) -> DensityMatrix {
        let m = linalg::projector(&self.vector);
        DensityMatrix { matrix: (&m + m.adjoint()).scale(0.5) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, ket};

    #[test]
    fn rejects_bad_trace_and_negative() {
        assert!(matches!(DensityMatrix::diagonal(&[0.5, 0.6]), Err(Error::NotNormalized(_))));
        assert!(matches!(DensityMatrix::diagonal(&[1.1, -0.1]), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn clamps_float_noise() {
        let rho = DensityMatrix::diagonal(&[1.0 + 5e-11, -5e-11]).unwrap();
        assert!(rho.eigenvalues().iter().all(|&x| x >= 0.0));
        assert!((rho.matrix().trace().re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pure_state_density() {
        let v = CVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)]);
        let p = PureState::new(v, None).unwrap();
        assert!((p.density().purity() - 1.0).abs() < 1e-14);
        assert!(PureState::new(ket(2, 0) * cr(2.0), None).is_err());
        assert!(PureState::new(ket(6, 0), Some((2, 2))).is_err());
    }
}
