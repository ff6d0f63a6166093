use crate::error::Result;
use crate::fixers::result::{
    deviation, resolve_epsilon, ChannelCertificate, ChannelClass, FixResult, FixedChannel, FixedState, NormTag,
};
use crate::quantum::{
    convex_combine, diamond_distance_bounds, replacement_channel, trace_distance, unique_fixed_point, Channel,
    DensityMatrix, DiamondBounds,
};

/// Tail tolerance for the fixed-point iteration.
pub const GENERAL_FIXED_POINT_TOL: f64 = 1e-11;

/// Mixes a little of the replacement channel onto `ρ` into `N` and takes the resulting fixed point.
pub fn fix_general(rho: &DensityMatrix, n: &Channel, epsilon: Option<f64>) -> Result<FixResult> {
    let measured = deviation(n, rho)?;
    let eps = resolve_epsilon(measured, epsilon)?;
    let bound = eps.sqrt();
    if eps == 0.0 {
        return Ok(FixResult {
            class: ChannelClass::General,
            sigma: FixedState::Mixed { state: rho.clone() },
            fixed_channel: FixedChannel::General { channel: n.clone() },
            epsilon_used: 0.0,
            state_bound_claimed: 0.0,
            channel_bound_claimed: 0.0,
            state_distance_measured: 0.0,
            channel_certificate: ChannelCertificate {
                norm: NormTag::Diamond,
                upper: 0.0,
                diamond: DiamondBounds::exact_zero(),
            },
            fixed_point_residual: measured,
            trivial: false,
            notes: vec!["input already fixes the state".into()],
        });
    }
    let lambda = bound.min(1.0);
    let m = convex_combine(&[1.0 - lambda, lambda], &[n.clone(), replacement_channel(rho)])?;
    let sigma = unique_fixed_point(&m, rho, lambda, GENERAL_FIXED_POINT_TOL)?;
    let mut diamond = diamond_distance_bounds(&m, n)?;
    diamond.tighten_upper(lambda, "mixing weight");
    let residual = deviation(&m, &sigma)?;
    Ok(FixResult {
        class: ChannelClass::General,
        state_distance_measured: trace_distance(&sigma, rho)?,
        sigma: FixedState::Mixed { state: sigma },
        fixed_channel: FixedChannel::General { channel: m },
        epsilon_used: eps,
        state_bound_claimed: bound,
        channel_bound_claimed: bound,
        channel_certificate: ChannelCertificate { norm: NormTag::Diamond, upper: diamond.upper, diamond },
        fixed_point_residual: residual,
        trivial: bound >= 1.0,
        notes: vec![],
    })
}
