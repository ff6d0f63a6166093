use crate::error::{Error, Result};
use crate::fixers::result::{
    resolve_epsilon, ChannelCertificate, ChannelClass, FixResult, FixedChannel, FixedState, NormTag,
};
use crate::fixers::unitary::{fix_unitary, UnitaryTarget};
use crate::linalg::{self, CMatrix};
use crate::quantum::{diamond_distance_bounds, trace_distance, trace_distance_matrices, DensityMatrix, MixedUnitaryChannel};

/// `(4 d² ε^{1/5}, 7 d² ε^{1/5})`.
pub fn mixed_unitary_bounds(d: usize, eps: f64) -> (f64, f64) {
    let base = (d * d) as f64 * eps.powf(0.2);
    (4.0 * base, 7.0 * base)
}

/// Weight threshold `4^{4/5} ε^{1/5} / d²` above which a component is rotated.
pub fn mixed_unitary_threshold(d: usize, eps: f64) -> f64 {
    4f64.powf(0.8) * eps.powf(0.2) / (d * d) as f64
}

fn mixed_result(
    rho: &DensityMatrix,
    input: &MixedUnitaryChannel,
    output: MixedUnitaryChannel,
    sigma: DensityMatrix,
    certificate: f64,
    eps: f64,
    trivial: bool,
    notes: Vec<String>,
) -> Result<FixResult> {
    let d = rho.dim();
    let (f, g) = mixed_unitary_bounds(d, eps);
    let m = output.to_channel();
    let mut diamond = diamond_distance_bounds(&m, &input.to_channel())?;
    diamond.tighten_upper(certificate, "weighted unitary differences");
    let residual = trace_distance_matrices(&output.apply(sigma.matrix()), sigma.matrix())?;
    Ok(FixResult {
        class: ChannelClass::MixedUnitary,
        state_distance_measured: trace_distance(&sigma, rho)?,
        sigma: FixedState::Mixed { state: sigma },
        fixed_channel: FixedChannel::MixedUnitary { mixture: output },
        epsilon_used: eps,
        state_bound_claimed: f,
        channel_bound_claimed: g,
        channel_certificate: ChannelCertificate { norm: NormTag::Diamond, upper: certificate, diamond },
        fixed_point_residual: residual,
        trivial,
        notes,
    })
}

/// Rotates every heavy component with the unitary fixer and replaces light ones by the identity.
pub fn fix_mixed_unitary(rho: &DensityMatrix, mixed: &MixedUnitaryChannel, epsilon: Option<f64>) -> Result<FixResult> {
    let d = rho.dim();
    if mixed.dim() != d {
        return Err(Error::DimensionMismatch(format!("channel on {} vs state on {d}", mixed.dim())));
    }
    let measured = trace_distance_matrices(&mixed.apply(rho.matrix()), rho.matrix())?;
    let eps = resolve_epsilon(measured, epsilon)?;
    if eps == 0.0 {
        return mixed_result(rho, mixed, mixed.clone(), rho.clone(), 0.0, 0.0, false, vec![
            "input already fixes the state".into(),
        ]);
    }
    let (f, _) = mixed_unitary_bounds(d, eps);
    if f >= 1.0 {
        return mixed_result(rho, mixed, mixed.clone(), DensityMatrix::maximally_mixed(d), 0.0, eps, true, vec![
            "claimed bound is at least 1".into(),
        ]);
    }
    let threshold = mixed_unitary_threshold(d, eps);
    let component_eps = (d as f64 * eps / threshold).sqrt();
    let target = UnitaryTarget::new(rho, component_eps);
    let mut notes = vec![];
    let mut components: Vec<(f64, CMatrix)> = Vec::with_capacity(mixed.components().len());
    let mut certificate = 0.0;
    let mut tail = 0.0;
    for (p, u) in mixed.components() {
        if *p >= threshold {
            let r = fix_unitary(rho, u, Some(component_eps))?;
            if r.sigma.density().matrix() != target.state().matrix() {
                return Err(Error::BoundViolated("component fixers disagree on the target state".into()));
            }
            let FixedChannel::Unitary { unitary } = r.fixed_channel else { unreachable!("unitary fixer output") };
            certificate += p * r.channel_certificate.upper;
            components.push((*p, unitary));
        } else {
            certificate += p;
            tail += p;
            components.push((*p, linalg::identity(d)));
        }
    }
    if mixed.components().len() > d.pow(4) {
        notes.push(format!(
            "{} components exceed d^4 = {}; certificate uses the measured tail weight {tail:.3e}",
            mixed.components().len(),
            d.pow(4)
        ));
    }
    let output = MixedUnitaryChannel::new(components)?;
    mixed_result(rho, mixed, output, target.state().clone(), certificate, eps, false, notes)
}
