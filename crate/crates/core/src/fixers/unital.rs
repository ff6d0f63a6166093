use crate::clustering::{cluster_spectrum, cluster_state};
use crate::error::{Error, Result};
use crate::fixers::lemmas::{cumulative_projection_deviation, generalized_depolarizing_pullback, GenDepInput};
use crate::fixers::result::{
    deviation, resolve_epsilon, ChannelCertificate, ChannelClass, FixResult, FixedChannel, FixedState, NormTag,
    BOUND_SLACK,
};
use crate::linalg::{self, CMatrix};
use crate::quantum::fixed_point::unitality_defect;
use crate::quantum::{compose, diamond_distance_bounds, is_unital, trace_distance, Channel, DensityMatrix, DiamondBounds};
use crate::rotations::{align_into_subspace, LeakMode};

/// `7 d^{5/3} ε^{1/6}`.
pub fn unital_bound(d: usize, eps: f64) -> f64 {
    7.0 * (d as f64).powf(5.0 / 3.0) * eps.powf(1.0 / 6.0)
}

/// `48^{2/3} ε^{1/6} / d^{1/3}`.
pub fn unital_cluster_width(d: usize, eps: f64) -> f64 {
    48f64.powf(2.0 / 3.0) * eps.powf(1.0 / 6.0) / (d as f64).powf(1.0 / 3.0)
}

/// Depolarizing weight `min(1, 17 d^{3/2} ε^{1/4} / √δ)`.
pub fn unital_mixing_weight(d: usize, eps: f64, delta: f64) -> f64 {
    (17.0 * (d as f64).powf(1.5) * eps.powf(0.25) / delta.sqrt()).min(1.0)
}

fn unital_result(
    rho: &DensityMatrix,
    m: Channel,
    sigma: DensityMatrix,
    diamond: DiamondBounds,
    eps: f64,
    trivial: bool,
    notes: Vec<String>,
) -> Result<FixResult> {
    let bound = unital_bound(rho.dim(), eps);
    Ok(FixResult {
        class: ChannelClass::Unital,
        state_distance_measured: trace_distance(&sigma, rho)?,
        fixed_point_residual: deviation(&m, &sigma)?,
        sigma: FixedState::Mixed { state: sigma },
        fixed_channel: FixedChannel::Unital { channel: m },
        epsilon_used: eps,
        state_bound_claimed: bound,
        channel_bound_claimed: bound,
        channel_certificate: ChannelCertificate { norm: NormTag::Diamond, upper: diamond.upper, diamond },
        trivial,
        notes,
    })
}

/// Rotates the Stinespring isometry so each spectral cluster of `ρ` is invariant, then
/// pulls the cluster states back with a depolarizing correction.
pub fn fix_unital(rho: &DensityMatrix, n: &Channel, epsilon: Option<f64>) -> Result<FixResult> {
    let d = rho.dim();
    if n.dim_in() != d || n.dim_out() != d {
        return Err(Error::DimensionMismatch(format!("channel {}->{} on state of dim {d}", n.dim_in(), n.dim_out())));
    }
    if !is_unital(n, BOUND_SLACK) {
        return Err(Error::NotUnital { deviation: unitality_defect(n)? });
    }
    let eps = resolve_epsilon(deviation(n, rho)?, epsilon)?;
    if eps == 0.0 {
        return unital_result(rho, n.clone(), rho.clone(), DiamondBounds::exact_zero(), 0.0, false, vec![
            "input already fixes the state".into(),
        ]);
    }
    if eps > 1.0 || unital_bound(d, eps) >= 1.0 {
        return unital_result(
            rho,
            n.clone(),
            DensityMatrix::maximally_mixed(d),
            DiamondBounds::exact_zero(),
            eps,
            true,
            vec!["claimed bound is at least 1; returned the maximally mixed state".into()],
        );
    }
    let delta = unital_cluster_width(d, eps);
    let decomp = cluster_spectrum(rho, delta);
    let sigma = cluster_state(&decomp);
    let mut notes = vec![];

    for c in cumulative_projection_deviation(rho, n, eps)? {
        if c.measured > c.bound + BOUND_SLACK {
            return Err(Error::BoundViolated(format!(
                "cumulative projection {} deviates by {:.3e}, bound {:.3e}",
                c.j, c.measured, c.bound
            )));
        }
    }

    let (v, env) = n.stinespring();
    let id_env = linalg::identity(env);
    let leak_budget = (10.0 / delta).sqrt() * eps.powf(0.25);
    let mut v_new = CMatrix::zeros(d * env, d);
    for l in 0..decomp.len() {
        let basis = decomp.cluster_basis(l);
        let frame = &v * &basis;
        let target = decomp.projections[l].kronecker(&id_env);
        let rot = align_into_subspace(&frame, &target, LeakMode::Summed)?;
        if rot.claimed_bound > 2.0 * leak_budget + BOUND_SLACK {
            notes.push(format!("cluster {l} leaks {:.3e} beyond budget {leak_budget:.3e}", rot.claimed_bound / 2.0));
        }
        v_new += &rot.unitary * &v * &decomp.projections[l];
    }
    let n_rot = Channel::from_stinespring(v_new.clone(), d, env)?;
    let isometry_distance = linalg::operator_norm(&(&v_new - &v));

    let p = unital_mixing_weight(d, eps, delta);
    let mut pairs = Vec::with_capacity(decomp.len());
    for l in 0..decomp.len() {
        let k = decomp.rank(l) as f64;
        let e = &decomp.projections[l];
        let target = DensityMatrix::repaired(e.unscale(k))?;
        let source = DensityMatrix::repaired(n_rot.apply(e)?.unscale(k))?;
        pairs.push((target, source));
    }
    let pullback = generalized_depolarizing_pullback(&GenDepInput {
        pairs,
        p,
        projections: Some(decomp.projections.clone()),
    })?;
    let m = compose(&pullback.channel, &n_rot)?;

    let mut diamond = diamond_distance_bounds(&m, n)?;
    diamond.tighten_upper(isometry_distance + p, "isometry rotation plus depolarizing weight");
    unital_result(rho, m, sigma, diamond, eps, false, notes)
}
