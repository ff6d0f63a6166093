//! Grouping a state's spectrum into clusters separated by gaps larger than `δ`.

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::quantum::DensityMatrix;

/// Eigenvalues closer than this are merged into one spectral point.
pub const MERGE_TOL: f64 = 1e-12;

/// A distinct eigenvalue and the eigenbasis columns spanning its eigenspace.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralPoint {
    pub value: f64,
    /// Column indices into [`ClusterDecomposition::eigenvectors`].
    pub columns: Vec<usize>,
}

impl SpectralPoint {
    pub fn multiplicity(&self) -> usize {
        self.columns.len()
    }
}

#[derive(Debug, Clone)]
pub struct ClusterDecomposition {
    pub delta: f64,
    /// Spectral points sorted by decreasing value.
    pub points: Vec<SpectralPoint>,
    /// Each cluster is a contiguous range of indices into `points`.
    pub clusters: Vec<Vec<usize>>,
    pub projections: Vec<CMatrix>,
    pub averages: Vec<f64>,
    /// Eigenvalues with multiplicity, sorted descending.
    pub source_spectrum: Vec<f64>,
    /// Orthonormal eigenbasis matching `source_spectrum`.
    pub eigenvectors: CMatrix,
}

impl ClusterDecomposition {
    pub fn dim(&self) -> usize {
        self.source_spectrum.len()
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Eigenbasis columns spanning the range of `E_l`.
    pub fn cluster_columns(&self, l: usize) -> Vec<usize> {
        self.clusters[l].iter().flat_map(|&i| self.points[i].columns.iter().copied()).collect()
    }

    pub fn cluster_basis(&self, l: usize) -> CMatrix {
        self.eigenvectors.select_columns(&self.cluster_columns(l))
    }

    pub fn rank(&self, l: usize) -> usize {
        self.cluster_columns(l).len()
    }

    /// Projection onto the eigenspace of spectral point `i`.
    pub fn point_projection(&self, i: usize) -> CMatrix {
        linalg::projector_from_columns(&self.eigenvectors.select_columns(&self.points[i].columns))
    }

    /// Gaps `λ_i − λ_{i+1}` between consecutive spectral points.
    pub fn gaps(&self) -> Vec<f64> {
        self.points.windows(2).map(|w| w[0].value - w[1].value).collect()
    }
}

/// Distinct eigenvalues (merged within [`MERGE_TOL`]) with their eigenbasis columns.
pub fn spectral_points(eigenvalues: &[f64]) -> Vec<SpectralPoint> {
    let mut points: Vec<SpectralPoint> = Vec::new();
    for (k, &l) in eigenvalues.iter().enumerate() {
        match points.last_mut() {
            Some(p) if (eigenvalues[*p.columns.last().unwrap()] - l).abs() <= MERGE_TOL => p.columns.push(k),
            _ => points.push(SpectralPoint { value: l, columns: vec![k] }),
        }
    }
    for p in &mut points {
        p.value = p.columns.iter().map(|&k| eigenvalues[k]).sum::<f64>() / p.columns.len() as f64;
    }
    points
}

pub fn cluster_spectrum(rho: &DensityMatrix, delta: f64) -> ClusterDecomposition {
    let eig = linalg::eigh(rho.matrix()).expect("density matrices are Hermitian");
    let points = spectral_points(&eig.eigenvalues);
    let mut clusters: Vec<Vec<usize>> = vec![];
    for i in 0..points.len() {
        let split = i == 0 || points[i - 1].value - points[i].value > delta;
        if split {
            clusters.push(vec![i]);
        } else {
            clusters.last_mut().unwrap().push(i);
        }
    }
    let mut decomp = ClusterDecomposition {
        delta,
        points,
        clusters,
        projections: vec![],
        averages: vec![],
        source_spectrum: eig.eigenvalues.clone(),
        eigenvectors: eig.eigenvectors,
    };
    for l in 0..decomp.len() {
        let cols = decomp.cluster_columns(l);
        let basis = decomp.eigenvectors.select_columns(&cols);
        decomp.projections.push(linalg::projector_from_columns(&basis));
        let mean = cols.iter().map(|&k| eig.eigenvalues[k]).sum::<f64>() / cols.len() as f64;
        decomp.averages.push(mean);
    }
    decomp
}

/// `σ = Σ_l μ_l E_l`.
pub fn cluster_state(decomp: &ClusterDecomposition) -> DensityMatrix {
    let mut weights = vec![0.0; decomp.dim()];
    for l in 0..decomp.len() {
        for k in decomp.cluster_columns(l) {
            weights[k] = decomp.averages[l];
        }
    }
    let m = linalg::weighted_projector(&decomp.eigenvectors, &weights);
    DensityMatrix::repaired((&m + m.adjoint()).scale(0.5)).expect("cluster averages form a state")
}

/// `½‖ρ − σ‖₁ ≤ d²δ/2` for the cluster state.
pub fn cluster_bound(d: usize, delta: f64) -> f64 {
    (d * d) as f64 * delta / 2.0
}

/// Spectral projection of a Hermitian matrix onto the closed interval `[lo, hi]`.
pub fn interval_projection(a: &CMatrix, lo: f64, hi: f64) -> Result<CMatrix> {
    Ok(linalg::eigh(a)?.projection_where(|x| x >= lo && x <= hi))
}

fn check_gap(a: &CMatrix, lo: f64, hi: f64, gap: f64, label: &str) -> Result<()> {
    let spec = linalg::eigh(a)?.eigenvalues;
    for &x in &spec {
        let dist = (x - lo).abs().min((x - hi).abs());
        if dist < gap / 2.0 {
            return Err(Error::GapViolated(format!(
                "eigenvalue {x:.6} of {label} lies within {:.3e} of the interval [{lo:.6}, {hi:.6}]",
                gap / 2.0
            )));
        }
    }
    Ok(())
}

/// `(‖P_{A₁}(J) − P_{A₂}(J)‖, 2‖A₁ − A₂‖/δ)` for `J = [lo, hi]`.
///
/// Every eigenvalue of both matrices must stay at least `δ/2` from the
/// endpoints of `J`, which is what midpoint splitting at a gap of `δ` gives.
pub fn spectral_projection_gap_bound_check(a1: &CMatrix, a2: &CMatrix, interval: (f64, f64), gap: f64) -> Result<(f64, f64)> {
    let (lo, hi) = interval;
    if !(gap > 0.0) || lo > hi {
        return Err(Error::InvalidInput(format!("interval [{lo}, {hi}] with gap {gap}")));
    }
    if a1.shape() != a2.shape() {
        return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", a1.shape(), a2.shape())));
    }
    check_gap(a1, lo, hi, gap, "first matrix")?;
    check_gap(a2, lo, hi, gap, "second matrix")?;
    let p1 = interval_projection(a1, lo, hi)?;
    let p2 = interval_projection(a2, lo, hi)?;
    let lhs = linalg::operator_norm(&(p1 - p2));
    let rhs = 2.0 * linalg::operator_norm(&(a1 - a2)) / gap;
    Ok((lhs, rhs))
}

/// Interval around cluster `l` with endpoints at the midpoints of the adjacent gaps.
pub fn cluster_interval(decomp: &ClusterDecomposition, l: usize) -> (f64, f64) {
    let first = decomp.clusters[l][0];
    let last = *decomp.clusters[l].last().unwrap();
    let hi = if first == 0 {
        f64::INFINITY
    } else {
        0.5 * (decomp.points[first - 1].value + decomp.points[first].value)
    };
    let lo = if last + 1 == decomp.points.len() {
        f64::NEG_INFINITY
    } else {
        0.5 * (decomp.points[last].value + decomp.points[last + 1].value)
    };
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::seeded_rng;
    use crate::quantum::random::random_density;
    use crate::quantum::trace_distance;

    fn diag(p: &[f64]) -> DensityMatrix {
        DensityMatrix::diagonal(p).unwrap()
    }

    #[test]
    fn maximally_mixed_is_one_cluster() {
        let rho = DensityMatrix::maximally_mixed(4);
        let c = cluster_spectrum(&rho, 0.3);
        assert_eq!(c.len(), 1);
        assert!((c.averages[0] - 0.25).abs() < 1e-15);
        assert!(linalg::hs_norm(&(&c.projections[0] - linalg::identity(4))) < 1e-12);
        assert!(linalg::hs_norm(&(cluster_state(&c).matrix() - rho.matrix())) < 1e-12);
    }

    #[test]
    fn hand_evaluated_three_level() {
        let rho = diag(&[0.5, 0.3, 0.2]);
        let c = cluster_spectrum(&rho, 0.15);
        assert_eq!(c.clusters, vec![vec![0], vec![1, 2]]);
        assert!((c.averages[0] - 0.5).abs() < 1e-15);
        assert!((c.averages[1] - 0.25).abs() < 1e-15);
        let sigma = cluster_state(&c);
        assert!(linalg::hs_norm(&(sigma.matrix() - linalg::diag_real(&[0.5, 0.25, 0.25]))) < 1e-14);

        let c = cluster_spectrum(&rho, 0.05);
        assert_eq!(c.clusters, vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn zero_delta_reproduces_state() {
        let mut rng = seeded_rng(1);
        let rho = random_density(5, &mut rng);
        let c = cluster_spectrum(&rho, 0.0);
        assert_eq!(c.len(), 5);
        assert!(linalg::hs_norm(&(cluster_state(&c).matrix() - rho.matrix())) < 1e-12);
    }

    #[test]
    fn merges_degenerate_eigenvalues() {
        let rho = diag(&[0.4, 0.4, 0.2]);
        let c = cluster_spectrum(&rho, 0.0);
        assert_eq!(c.points.len(), 2);
        assert_eq!(c.points[0].multiplicity(), 2);
    }

    #[test]
    fn cluster_bound_on_random_states() {
        let mut rng = seeded_rng(2);
        for d in 2..=8 {
            for &delta in &[0.001, 0.01, 0.05, 0.2] {
                let rho = random_density(d, &mut rng);
                let c = cluster_spectrum(&rho, delta);
                let sigma = cluster_state(&c);
                assert!(trace_distance(&rho, &sigma).unwrap() <= cluster_bound(d, delta) + 1e-10);
                let comm = rho.matrix() * sigma.matrix() - sigma.matrix() * rho.matrix();
                assert!(linalg::operator_norm(&comm) < 1e-10);
            }
        }
    }

    #[test]
    fn gap_check_examples() {
        let a = linalg::diag_real(&[1.0, 0.0]);
        let (lhs, _) = spectral_projection_gap_bound_check(&a, &a, (0.5, 2.0), 0.5).unwrap();
        assert_eq!(lhs, 0.0);
        // Commuting pair: projections agree, lhs is 0 and rhs is 2·0.1/0.5.
        let b = linalg::diag_real(&[1.1, 0.0]);
        let (lhs, rhs) = spectral_projection_gap_bound_check(&a, &b, (0.5, 2.0), 0.5).unwrap();
        assert_eq!(lhs, 0.0);
        assert!((rhs - 0.4).abs() < 1e-12);
        assert!(matches!(
            spectral_projection_gap_bound_check(&a, &linalg::diag_real(&[0.6, 0.0]), (0.5, 2.0), 0.5),
            Err(Error::GapViolated(_))
        ));
    }

    #[test]
    fn gap_check_random_perturbations() {
        let mut rng = seeded_rng(3);
        for _ in 0..100 {
            let a = linalg::diag_real(&[1.0, 0.9, 0.2, 0.1]);
            let w = linalg::haar_random_unitary(4, 7);
            let a1 = linalg::conjugate(&w, &a);
            let h = linalg::random_hermitian(4, &mut rng);
            let a2 = &a1 + h.scale(0.05);
            let (lhs, rhs) = spectral_projection_gap_bound_check(&a1, &a2, (0.55, 2.0), 0.5).unwrap();
            assert!(lhs <= rhs + 1e-12);
        }
    }

    #[test]
    fn monotone_in_delta() {
        let mut rng = seeded_rng(4);
        let rho = random_density(8, &mut rng);
        let mut prev = usize::MAX;
        for k in 0..20 {
            let n = cluster_spectrum(&rho, k as f64 * 0.01).len();
            assert!(n <= prev);
            prev = n;
        }
    }
}
