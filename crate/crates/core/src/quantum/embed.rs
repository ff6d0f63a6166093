use crate::classical::{ProbabilityVector, StochasticMatrix};
use crate::linalg::{cr, CMatrix};
use crate::quantum::channel::Channel;
use crate::quantum::state::DensityMatrix;

/// `Σ p_x |x⟩⟨x|`.
pub fn embed_classical_state(p: &ProbabilityVector) -> DensityMatrix {
    DensityMatrix::diagonal(p.entries()).expect("probability vectors embed as states")
}

/// Kraus operators `√T_xy |x⟩⟨y|` for the nonzero entries of `T`.
pub fn embed_classical_channel(t: &StochasticMatrix) -> Channel {
    let d = t.dim();
    let mut ops = Vec::new();
    for y in 0..d {
        for x in 0..d {
            let w = t.entry(x, y);
            if w > 0.0 {
                let mut k = CMatrix::zeros(d, d);
                k[(x, y)] = cr(w.sqrt());
                ops.push(k);
            }
        }
    }
    Channel::from_kraus(ops).expect("stochastic matrices embed as channels")
}

/// Diagonal of a matrix as real numbers.
pub fn diagonal_of(x: &CMatrix) -> Vec<f64> {
    (0..x.nrows()).map(|i| x[(i, i)].re).collect()
}
