use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::quantum::channel::{Channel, Representation};
use crate::quantum::state::DensityMatrix;

/// Number of random pure inputs tried for the diamond lower bound.
pub const DIAMOND_SAMPLES: usize = 64;
const DIAMOND_SEED: u64 = 0x0d1a_6071;

/// `½‖ρ − σ‖₁`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    trace_distance_matrices(rho.matrix(), sigma.matrix())
}

/// `½‖A − B‖₁` for Hermitian `A`, `B`.
pub fn trace_distance_matrices(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(0.5 * linalg::hermitian_trace_norm(&(a - b))?)
}

/// Certified interval around `½‖N − M‖⋄`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiamondBounds {
    pub lower: f64,
    pub upper: f64,
    /// Which estimates produced the lower and upper values.
    pub witnesses: Vec<String>,
}

impl DiamondBounds {
    pub fn exact_zero() -> Self {
        Self { lower: 0.0, upper: 0.0, witnesses: vec!["identical channels".into()] }
    }

    /// Lowers the upper bound if `value` is smaller.
    pub fn tighten_upper(&mut self, value: f64, witness: &str) {
        if value < self.upper {
            self.upper = value;
            self.witnesses.retain(|w| !w.starts_with("upper:"));
            self.witnesses.push(format!("upper: {witness}"));
        }
    }

    pub fn tighten_lower(&mut self, value: f64, witness: &str) {
        if value > self.lower {
            self.lower = value;
            self.witnesses.retain(|w| !w.starts_with("lower:"));
            self.witnesses.push(format!("lower: {witness}"));
        }
    }
}

pub fn diamond_distance_bounds(n: &Channel, m: &Channel) -> Result<DiamondBounds> {
    diamond_distance_bounds_with(n, m, DIAMOND_SAMPLES, DIAMOND_SEED)
}

/// Bounds from the Choi matrix of `N − M`, sampled entangled inputs, and a
/// shared-environment Stinespring distance when both channels carry one.
pub fn diamond_distance_bounds_with(n: &Channel, m: &Channel, samples: usize, seed: u64) -> Result<DiamondBounds> {
    if n.dim_in() != m.dim_in() || n.dim_out() != m.dim_out() {
        return Err(Error::DimensionMismatch(format!(
            "{}->{} vs {}->{}",
            n.dim_in(),
            n.dim_out(),
            m.dim_in(),
            m.dim_out()
        )));
    }
    let d = n.dim_in();
    let dout = n.dim_out();
    let delta = n.choi() - m.choi();
    let choi_norm = linalg::hermitian_trace_norm(&delta)?;

    let mut bounds = DiamondBounds { lower: 0.0, upper: f64::INFINITY, witnesses: vec![] };
    bounds.tighten_lower(choi_norm / (2.0 * d as f64), "maximally entangled input");
    bounds.lower = bounds.lower.max(0.0);
    if bounds.witnesses.is_empty() {
        bounds.witnesses.push("lower: maximally entangled input".into());
    }

    let mut rng = linalg::seeded_rng(seed);
    for s in 0..samples {
        // Inputs of Schmidt rank 1..=3 need only that many ancilla levels.
        let k = 1 + s % d.min(3);
        let phi = linalg::ginibre(d, k, &mut rng);
        let phi = phi.unscale(linalg::hs_norm(&phi));
        let out = ancilla_output(&delta, &phi, d, dout);
        let val = 0.5 * linalg::hermitian_trace_norm(&out)?;
        bounds.tighten_lower(val, &format!("sampled input of Schmidt rank {k}"));
    }

    bounds.tighten_upper(1.0, "trivial bound between channels");
    bounds.tighten_upper(0.5 * choi_norm, "half trace norm of Choi difference");
    if let Some(w) = shared_stinespring_distance(n, m) {
        bounds.tighten_upper(w, "Stinespring isometry distance");
    }
    Ok(bounds)
}

/// `(Δ ⊗ id_k)(|φ⟩⟨φ|)` for `|φ⟩ = Σ Φ_ij |i⟩|j⟩`, i.e. `(1 ⊗ Φᵀ) J (1 ⊗ Φᵀ)†`, one output block at a time.
fn ancilla_output(j: &CMatrix, phi: &CMatrix, d: usize, dout: usize) -> CMatrix {
    let k = phi.ncols();
    let pt = phi.transpose();
    let pc = phi.map(|z| z.conj());
    let mut out = CMatrix::zeros(dout * k, dout * k);
    for a in 0..dout {
        for b in 0..dout {
            let block = &pt * j.view((a * d, b * d), (d, d)) * &pc;
            out.view_mut((a * k, b * k), (k, k)).copy_from(&block);
        }
    }
    out
}

/// `‖V − W‖` when both channels natively carry isometries on the same environment.
pub fn shared_stinespring_distance(n: &Channel, m: &Channel) -> Option<f64> {
    let native = |c: &Channel| match c.representation() {
        Representation::Choi(_) => None,
        _ => Some(c.stinespring()),
    };
    let (v, ev) = native(n)?;
    let (w, ew) = native(m)?;
    (ev == ew).then(|| linalg::operator_norm(&(v - w)))
}
