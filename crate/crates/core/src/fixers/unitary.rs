use crate::clustering::{cluster_spectrum, cluster_state, ClusterDecomposition};
use crate::error::{Error, Result};
use crate::fixers::result::{
    resolve_epsilon, ChannelCertificate, ChannelClass, FixResult, FixedChannel, FixedState, NormTag,
};
use crate::linalg::{self, CMatrix};
use crate::quantum::{diamond_distance_bounds, trace_distance, trace_distance_matrices, Channel, DensityMatrix};
use crate::rotations::align_projection_family;

/// `4 d^{5/4} √ε`.
pub fn unitary_bound(d: usize, eps: f64) -> f64 {
    4.0 * (d as f64).powf(1.25) * eps.sqrt()
}

/// `√(48ε) / d^{3/4}`.
pub fn unitary_cluster_width(d: usize, eps: f64) -> f64 {
    (48.0 * eps).sqrt() / (d as f64).powf(0.75)
}

/// The target state, which depends only on `(ρ, ε)`.
pub(crate) enum UnitaryTarget {
    Trivial(DensityMatrix),
    Clustered(ClusterDecomposition, DensityMatrix),
}

impl UnitaryTarget {
    pub(crate) fn new(rho: &DensityMatrix, eps: f64) -> Self {
        let d = rho.dim();
        if unitary_bound(d, eps) >= 1.0 {
            return UnitaryTarget::Trivial(DensityMatrix::maximally_mixed(d));
        }
        let decomp = cluster_spectrum(rho, unitary_cluster_width(d, eps));
        let sigma = cluster_state(&decomp);
        UnitaryTarget::Clustered(decomp, sigma)
    }

    pub(crate) fn state(&self) -> &DensityMatrix {
        match self {
            UnitaryTarget::Trivial(s) | UnitaryTarget::Clustered(_, s) => s,
        }
    }
}

fn unitary_result(
    rho: &DensityMatrix,
    u: &CMatrix,
    v: CMatrix,
    sigma: DensityMatrix,
    eps: f64,
    trivial: bool,
    notes: Vec<String>,
) -> Result<FixResult> {
    let d = rho.dim();
    let op_distance = linalg::operator_norm(&(&v - u));
    let mut diamond = diamond_distance_bounds(&Channel::unitary(v.clone())?, &Channel::unitary(u.clone())?)?;
    diamond.tighten_upper(op_distance, "operator norm of unitary difference");
    let residual = trace_distance_matrices(&linalg::conjugate(&v, sigma.matrix()), sigma.matrix())?;
    let bound = unitary_bound(d, eps);
    Ok(FixResult {
        class: ChannelClass::Unitary,
        state_distance_measured: trace_distance(&sigma, rho)?,
        sigma: FixedState::Mixed { state: sigma },
        fixed_channel: FixedChannel::Unitary { unitary: v },
        epsilon_used: eps,
        state_bound_claimed: bound,
        channel_bound_claimed: bound,
        channel_certificate: ChannelCertificate { norm: NormTag::Operator, upper: op_distance, diamond },
        fixed_point_residual: residual,
        trivial,
        notes,
    })
}

/// Clusters the spectrum of `ρ` and rotates `U` so that it preserves every cluster.
pub fn fix_unitary(rho: &DensityMatrix, u: &CMatrix, epsilon: Option<f64>) -> Result<FixResult> {
    let d = rho.dim();
    if u.shape() != (d, d) {
        return Err(Error::DimensionMismatch(format!("unitary {:?} on state of dim {d}", u.shape())));
    }
    if !linalg::is_unitary(u, 1e-10) {
        return Err(Error::NotUnitary { deviation: linalg::unitarity_defect(u) });
    }
    let measured = trace_distance_matrices(&linalg::conjugate(u, rho.matrix()), rho.matrix())?;
    let eps = resolve_epsilon(measured, epsilon)?;
    if eps == 0.0 {
        return unitary_result(rho, u, u.clone(), rho.clone(), 0.0, false, vec!["input already fixes the state".into()]);
    }
    let (decomp, sigma) = match UnitaryTarget::new(rho, eps) {
        UnitaryTarget::Trivial(s) => {
            return unitary_result(rho, u, u.clone(), s, eps, true, vec!["claimed bound is at least 1".into()])
        }
        UnitaryTarget::Clustered(decomp, s) => (decomp, s),
    };
    let moved: Vec<CMatrix> = decomp.projections.iter().map(|e| linalg::conjugate(u, e)).collect();
    match align_projection_family(&moved, &decomp.projections) {
        Ok(rot) => {
            let v = &rot.unitary * u;
            unitary_result(rho, u, v, sigma, eps, false, vec![])
        }
        Err(Error::TooFar { distance, .. }) => unitary_result(
            rho,
            u,
            u.clone(),
            DensityMatrix::maximally_mixed(d),
            eps,
            true,
            vec![format!("cluster projections moved by {distance:.3e}; returned the trivial pair")],
        ),
        Err(e) => Err(e),
    }
}
