use crate::error::{Error, Result};
use crate::fixers::result::{
    local_channel, resolve_epsilon, ChannelCertificate, ChannelClass, FixResult, FixedChannel, FixedState, NormTag,
    BOUND_SLACK,
};
use crate::linalg::{self, cr, CMatrix, CVector};
use crate::quantum::{diamond_distance_bounds, trace_distance_matrices, Channel, DiamondBounds, PureState};
use crate::rotations::align_vectors;

/// `7 √(min(d_A, d_B)) ε^{1/3}`.
pub fn local_bound(dims: (usize, usize), eps: f64) -> f64 {
    7.0 * (dims.0.min(dims.1) as f64).sqrt() * eps.cbrt()
}

/// Schmidt amplitudes below `15^{2/3} ε^{1/3}` are dropped.
pub fn local_truncation(eps: f64) -> f64 {
    15f64.powf(2.0 / 3.0) * eps.cbrt()
}

/// `½‖(id ⊗ N_B)(|Ψ⟩⟨Ψ|) − |Ψ⟩⟨Ψ|‖₁`.
pub fn local_deviation(psi: &PureState, d_a: usize, n_b: &Channel) -> Result<f64> {
    let rho = psi.density();
    let out = local_channel(d_a, n_b).apply(rho.matrix())?;
    trace_distance_matrices(&out, rho.matrix())
}

/// The truncated, renormalized Schmidt state kept by the fixer.
pub fn truncated_state(psi: &PureState, eps: f64) -> Result<PureState> {
    let dims = psi.dims().ok_or_else(|| Error::InvalidInput("pure state needs a bipartition".into()))?;
    let schmidt = linalg::schmidt_decompose(psi.vector(), dims)?;
    let delta = local_truncation(eps);
    let keep: Vec<usize> = (0..schmidt.coefficients.len()).filter(|&i| schmidt.coefficients[i].sqrt() >= delta).collect();
    if keep.is_empty() {
        return Err(Error::DegenerateTruncation);
    }
    let mut phi = CVector::zeros(psi.dim());
    for &i in &keep {
        let e = schmidt.vectors_a.column(i).into_owned();
        let f = schmidt.vectors_b.column(i).into_owned();
        phi += linalg::kron_vec(&e, &f) * cr(schmidt.coefficients[i].sqrt());
    }
    PureState::normalized(phi, Some(dims))
}

fn local_result(
    psi: &PureState,
    sigma: PureState,
    d_a: usize,
    m_b: Channel,
    certificate: f64,
    diamond: DiamondBounds,
    eps: f64,
    trivial: bool,
    notes: Vec<String>,
) -> Result<FixResult> {
    let dims = psi.dims().expect("checked bipartition");
    let bound = local_bound(dims, eps);
    let overlap = (psi.vector().dotc(sigma.vector())).norm();
    let state_distance = (1.0 - overlap * overlap).max(0.0).sqrt();
    let residual = local_deviation(&sigma, d_a, &m_b)?;
    Ok(FixResult {
        class: ChannelClass::LocalPure,
        sigma: FixedState::pure(&sigma),
        fixed_channel: FixedChannel::Local { d_a, channel_b: m_b },
        epsilon_used: eps,
        state_bound_claimed: bound,
        channel_bound_claimed: bound,
        state_distance_measured: state_distance,
        channel_certificate: ChannelCertificate { norm: NormTag::Diamond, upper: certificate, diamond },
        fixed_point_residual: residual,
        trivial,
        notes,
    })
}

fn trivial_local(psi: &PureState, n_b: &Channel, eps: f64, note: &str) -> Result<FixResult> {
    let (d_a, d_b) = psi.dims().expect("checked bipartition");
    let id = Channel::identity(d_b);
    let mut diamond = diamond_distance_bounds(&id, n_b)?;
    diamond.tighten_upper(1.0, "channels are at most 1 apart");
    let upper = diamond.upper;
    local_result(psi, psi.clone(), d_a, id, upper, diamond, eps, true, vec![note.into()])
}

/// Truncates the Schmidt decomposition of `Ψ` and rotates the Stinespring isometry of
/// `N_B` so that it sends every kept Schmidt vector to itself times a common environment state.
pub fn fix_local_pure(psi: &PureState, n_b: &Channel, epsilon: Option<f64>) -> Result<FixResult> {
    let (d_a, d_b) = psi.dims().ok_or_else(|| Error::InvalidInput("pure state needs a bipartition".into()))?;
    if n_b.dim_in() != d_b || n_b.dim_out() != d_b {
        return Err(Error::DimensionMismatch(format!(
            "channel {}->{} on subsystem of dim {d_b}",
            n_b.dim_in(),
            n_b.dim_out()
        )));
    }
    let eps = resolve_epsilon(local_deviation(psi, d_a, n_b)?, epsilon)?;
    if eps == 0.0 {
        return local_result(psi, psi.clone(), d_a, n_b.clone(), 0.0, DiamondBounds::exact_zero(), 0.0, false, vec![
            "input already fixes the state".into(),
        ]);
    }
    if eps > 0.5 || local_bound((d_a, d_b), eps) >= 1.0 {
        return trivial_local(psi, n_b, eps, "claimed bound is at least 1; returned the identity channel");
    }

    let sigma = match truncated_state(psi, eps) {
        Ok(s) => s,
        Err(Error::DegenerateTruncation) => {
            return trivial_local(psi, n_b, eps, "every Schmidt amplitude fell below the truncation threshold")
        }
        Err(e) => return Err(e),
    };
    let schmidt = linalg::schmidt_decompose(psi.vector(), (d_a, d_b))?;
    let delta = local_truncation(eps);
    let (v, env) = n_b.stinespring();

    // (1 ⊗ V)Ψ as a (d_A d_B) × d_E matrix; its top singular pair is α₁ ⊗ β₁.
    let coeff = linalg::coefficient_matrix(psi.vector(), (d_a, d_b));
    let dilated = &coeff * v.transpose();
    let split = CMatrix::from_fn(d_a * d_b, env, |ab, e| dilated[(ab / d_b, (ab % d_b) * env + e)]);
    let s = linalg::svd(&split)?;
    let lambda1 = s.singular_values[0] * s.singular_values[0];
    if lambda1 < 1.0 - eps - BOUND_SLACK {
        return Err(Error::BoundViolated(format!("leading dilation weight {lambda1:.6} below 1 - ε")));
    }
    let alpha = s.left.column(0).into_owned();
    let beta: CVector = s.right.column(0).map(|z| z.conj());
    let overlap = alpha.dotc(psi.vector());
    let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { linalg::ONE };

    let keep: Vec<usize> =
        (0..schmidt.coefficients.len()).filter(|&i| schmidt.coefficients[i].sqrt() >= delta).collect();
    let mut sources = CMatrix::zeros(d_b * env, keep.len());
    let mut targets = CMatrix::zeros(d_b * env, keep.len());
    let mut notes = vec![];
    for (col, &i) in keep.iter().enumerate() {
        let f = schmidt.vectors_b.column(i).into_owned();
        let vf = &v * &f;
        let target = linalg::kron_vec(&f, &beta) * phase.conj();
        let gap = (&target - &vf).norm_squared();
        let allowed = 8.0 * eps / schmidt.coefficients[i].sqrt();
        if gap > allowed + BOUND_SLACK {
            notes.push(format!("Schmidt vector {i} misses its target by {gap:.3e}, allowed {allowed:.3e}"));
        }
        sources.set_column(col, &vf);
        targets.set_column(col, &target);
    }
    let rot = align_vectors(&sources, &targets)?;
    let v_new = &rot.unitary * &v;
    let m_b = Channel::from_stinespring(v_new.clone(), d_b, env)?;
    let certificate = linalg::operator_norm(&(&v_new - &v));
    let mut diamond = diamond_distance_bounds(&m_b, n_b)?;
    diamond.tighten_upper(certificate, "Stinespring isometry distance");
    local_result(psi, sigma, d_a, m_b, certificate.min(diamond.upper), diamond, eps, false, notes)
}
