//! Seeded random states and channels.

use rand::Rng;

use crate::linalg::{self, cr, CMatrix};
use crate::quantum::channel::Channel;
use crate::quantum::state::DensityMatrix;

/// Full-rank state `G G† / Tr(G G†)` from a square Ginibre matrix.
pub fn random_density<R: Rng>(d: usize, rng: &mut R) -> DensityMatrix {
    let g = linalg::ginibre(d, d, rng);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityMatrix::new(m.unscale(tr)).expect("Ginibre states are valid")
}

/// Probability vector with exponential weights, sorted descending.
pub fn random_spectrum<R: Rng>(d: usize, rng: &mut R) -> Vec<f64> {
    let mut w: Vec<f64> = (0..d).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = w.iter().sum();
    for x in &mut w {
        *x /= total;
    }
    w.sort_by(|a, b| b.total_cmp(a));
    w
}

/// State with the given spectrum in the eigenbasis given by the columns of `basis`.
pub fn state_in_basis(spectrum: &[f64], basis: &CMatrix) -> DensityMatrix {
    let m = linalg::weighted_projector(basis, spectrum);
    DensityMatrix::repaired(m).expect("weights form a distribution")
}

/// Channel with a random Stinespring isometry into `d_out ⊗ env`.
pub fn random_channel<R: Rng>(d_in: usize, d_out: usize, env: usize, rng: &mut R) -> Channel {
    let v = linalg::random_isometry_with(d_in, d_out * env, rng).expect("env large enough");
    Channel::from_stinespring(v, d_out, env).expect("random isometry is valid")
}

/// Unitary `W diag(e^{iφ}) W†` with random phases.
pub fn unitary_in_basis<R: Rng>(basis: &CMatrix, rng: &mut R) -> CMatrix {
    let d = basis.nrows();
    let phases = CMatrix::from_diagonal(&linalg::CVector::from_fn(d, |_, _| {
        num_complex::Complex64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU)
    }));
    basis * phases * basis.adjoint()
}

/// `exp(i η H) U` for a random Hermitian `H` of unit norm.
pub fn kick_unitary<R: Rng>(u: &CMatrix, eta: f64, rng: &mut R) -> CMatrix {
    let h = linalg::random_hermitian(u.nrows(), rng);
    linalg::unitary_exp(&h, eta).expect("Hermitian by construction") * u
}

/// Mixes `rho` with a random state: `(1-t) ρ + t τ`.
pub fn mix_state<R: Rng>(rho: &DensityMatrix, t: f64, rng: &mut R) -> DensityMatrix {
    let tau = random_density(rho.dim(), rng);
    DensityMatrix::repaired(rho.matrix() * cr(1.0 - t) + tau.matrix() * cr(t)).expect("convex mixture")
}
