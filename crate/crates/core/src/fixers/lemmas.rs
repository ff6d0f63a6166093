//! Supporting inequalities used by the structured fixers, each with its measured side.

use serde::{Deserialize, Serialize};

use crate::clustering::spectral_points;
use crate::error::{Error, Result};
use crate::fixers::result::{deviation, resolve_epsilon, BOUND_SLACK};
use crate::linalg::{self, c, cr, CMatrix};
use crate::quantum::{is_unital, Channel, DensityMatrix, MixedUnitaryChannel};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComponentDeviation {
    pub weight: f64,
    /// `‖UρU† − ρ‖₂`.
    pub hs_measured: f64,
    /// `√(4ε/p)`.
    pub hs_bound: f64,
    /// `½‖UρU† − ρ‖₁`.
    pub trace_measured: f64,
    /// `√(dε/p)`.
    pub trace_bound: f64,
}

impl ComponentDeviation {
    pub fn holds(&self) -> bool {
        self.hs_measured <= self.hs_bound + BOUND_SLACK && self.trace_measured <= self.trace_bound + BOUND_SLACK
    }
}

/// How far each unitary of an almost-fixing mixture moves `ρ`.
pub fn mixture_component_deviation(
    rho: &DensityMatrix,
    mixed: &MixedUnitaryChannel,
    epsilon: f64,
) -> Result<Vec<ComponentDeviation>> {
    let d = rho.dim();
    if mixed.dim() != d {
        return Err(Error::DimensionMismatch(format!("channel on {} vs state on {d}", mixed.dim())));
    }
    let measured = crate::quantum::trace_distance_matrices(&mixed.apply(rho.matrix()), rho.matrix())?;
    let eps = resolve_epsilon(measured, Some(epsilon))?;
    mixed
        .components()
        .iter()
        .map(|(p, u)| {
            let diff = linalg::conjugate(u, rho.matrix()) - rho.matrix();
            let (hs_bound, trace_bound) = if *p > 0.0 {
                ((4.0 * eps / p).sqrt(), (d as f64 * eps / p).sqrt())
            } else {
                (f64::INFINITY, f64::INFINITY)
            };
            Ok(ComponentDeviation {
                weight: *p,
                hs_measured: linalg::hs_norm(&diff),
                hs_bound,
                trace_measured: 0.5 * linalg::hermitian_trace_norm(&diff)?,
                trace_bound,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixedPart {
    pub label: String,
    #[serde(with = "crate::io::cmatrix")]
    pub operator: CMatrix,
    pub deviation: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApproxFixedParts {
    pub epsilon: f64,
    pub real_deviation: f64,
    pub imag_deviation: f64,
    /// Positive and negative parts of the real and imaginary parts, in that order.
    pub parts: Vec<FixedPart>,
}

impl ApproxFixedParts {
    pub fn holds(&self) -> bool {
        self.real_deviation <= self.epsilon + BOUND_SLACK
            && self.imag_deviation <= self.epsilon + BOUND_SLACK
            && self.parts.iter().all(|p| p.deviation <= p.bound + BOUND_SLACK)
    }
}

fn signed_parts(h: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let eig = linalg::eigh(h)?;
    let pos: Vec<f64> = eig.eigenvalues.iter().map(|&x| x.max(0.0)).collect();
    let neg: Vec<f64> = eig.eigenvalues.iter().map(|&x| (-x).max(0.0)).collect();
    Ok((
        linalg::weighted_projector(&eig.eigenvectors, &pos),
        linalg::weighted_projector(&eig.eigenvectors, &neg),
    ))
}

/// Splits `A` into `[Re A]₊, [Re A]₋, [Im A]₊, [Im A]₋` and measures how well `N` fixes each.
pub fn approximate_fixed_parts(a: &CMatrix, n: &Channel, epsilon: f64) -> Result<ApproxFixedParts> {
    let d = linalg::ensure_square(a)?;
    if n.dim_in() != d || n.dim_out() != d {
        return Err(Error::DimensionMismatch(format!("channel {}->{} on operator of dim {d}", n.dim_in(), n.dim_out())));
    }
    let measured = 0.5 * linalg::trace_norm(&(n.apply(a)? - a));
    let eps = resolve_epsilon(measured, Some(epsilon))?;
    let re = (a + a.adjoint()).scale(0.5);
    let im = (a - a.adjoint()) * c(0.0, -0.5);
    let half_dev = |x: &CMatrix| -> Result<f64> { Ok(0.5 * linalg::hermitian_trace_norm(&(n.apply(x)? - x))?) };
    let (re_p, re_m) = signed_parts(&re)?;
    let (im_p, im_m) = signed_parts(&im)?;
    let mut parts = Vec::with_capacity(4);
    for (label, op) in [("re+", re_p), ("re-", re_m), ("im+", im_p), ("im-", im_m)] {
        let tr = linalg::trace(&op).re.max(0.0);
        parts.push(FixedPart {
            label: label.into(),
            deviation: half_dev(&op)?,
            bound: 1.5 * eps + (eps * tr).sqrt(),
            operator: op,
        });
    }
    Ok(ApproxFixedParts { epsilon: eps, real_deviation: half_dev(&re)?, imag_deviation: half_dev(&im)?, parts })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CumulativeDeviation {
    /// Index of the last spectral point included.
    pub j: usize,
    pub gap: f64,
    pub bound: f64,
    pub measured: f64,
}

/// Deviation of the spectral projections `Σ_{i≤j} π_i` of `ρ` under a unital channel.
pub fn cumulative_projection_deviation(
    rho: &DensityMatrix,
    n: &Channel,
    epsilon: f64,
) -> Result<Vec<CumulativeDeviation>> {
    if !is_unital(n, BOUND_SLACK) {
        return Err(Error::NotUnital { deviation: crate::quantum::fixed_point::unitality_defect(n)? });
    }
    let eps = resolve_epsilon(deviation(n, rho)?, Some(epsilon))?;
    if eps > 1.0 {
        return Err(Error::InvalidInput(format!("epsilon {eps} above 1")));
    }
    let eig = linalg::eigh(rho.matrix())?;
    let points = spectral_points(&eig.eigenvalues);
    let d = rho.dim();
    let mut cumulative = CMatrix::zeros(d, d);
    let mut out = Vec::new();
    for j in 0..points.len().saturating_sub(1) {
        let cols = eig.eigenvectors.select_columns(&points[j].columns);
        cumulative += linalg::projector_from_columns(&cols);
        let gap = points[j].value - points[j + 1].value;
        if gap <= 0.0 {
            continue;
        }
        let measured = 0.5 * linalg::hermitian_trace_norm(&(n.apply(&cumulative)? - &cumulative))?;
        out.push(CumulativeDeviation { j, gap, bound: 5.0 * eps.sqrt() / gap, measured });
    }
    Ok(out)
}

/// Target/source pairs and the mixing weight for the depolarizing pullback.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenDepInput {
    /// `(σ_i, σ′_i)`: the channel must send each source to its target.
    pub pairs: Vec<(DensityMatrix, DensityMatrix)>,
    pub p: f64,
    /// Projections `π_i` onto the source supports; derived from the sources when absent.
    #[serde(default, skip_serializing_if = "Option::is_none", with = "crate::io::cmatrix_list_opt")]
    pub projections: Option<Vec<CMatrix>>,
}

#[derive(Debug, Clone)]
pub struct GenDepResult {
    pub channel: Channel,
    pub omegas: Vec<DensityMatrix>,
    /// State placed on the complement of the supplied projections, if it is nonzero.
    pub complement_state: Option<DensityMatrix>,
    /// `max_i ½‖Φ(σ′_i) − σ_i‖₁`.
    pub pullback_error: f64,
    /// `½‖Φ − id‖⋄ ≤ p`.
    pub diamond_certificate: f64,
}

const SUPPORT_TOL: f64 = 1e-12;

/// `Φ = (1−p) id + p Σ_i Tr(π_i · π_i) ω_i` with `Φ(σ′_i) = σ_i`.
pub fn generalized_depolarizing_pullback(input: &GenDepInput) -> Result<GenDepResult> {
    let p = input.p;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidInput(format!("mixing weight {p} outside [0, 1]")));
    }
    let first = input.pairs.first().ok_or_else(|| Error::InvalidInput("no state pairs".into()))?;
    let d = first.0.dim();
    for (t, s) in &input.pairs {
        if t.dim() != d || s.dim() != d {
            return Err(Error::DimensionMismatch("pairs of different dimensions".into()));
        }
    }
    let sources: Vec<&CMatrix> = input.pairs.iter().map(|(_, s)| s.matrix()).collect();
    for i in 0..sources.len() {
        for j in (i + 1)..sources.len() {
            let overlap = linalg::operator_norm(&(sources[i] * sources[j]));
            if overlap > BOUND_SLACK {
                return Err(Error::SupportsNotOrthogonal { overlap });
            }
        }
    }
    for (t, s) in &input.pairs {
        let gap = t.matrix() * cr(1.0 + p) - s.matrix();
        let min_eigenvalue = *linalg::eigh(&gap)?.eigenvalues.last().unwrap();
        if min_eigenvalue < -BOUND_SLACK {
            return Err(Error::OperatorInequalityViolated { min_eigenvalue });
        }
    }

    let projections: Vec<CMatrix> = match &input.projections {
        Some(ps) => {
            if ps.len() != input.pairs.len() {
                return Err(Error::DimensionMismatch(format!("{} projections for {} pairs", ps.len(), input.pairs.len())));
            }
            let ps: Vec<CMatrix> = ps.clone();
            for (pi, s) in ps.iter().zip(&sources) {
                let deviation = linalg::projection_defect(pi);
                if deviation > 1e-10 || pi.nrows() != d {
                    return Err(Error::NotAProjection { deviation });
                }
                if linalg::operator_norm(&(pi * *s * pi - *s)) > BOUND_SLACK {
                    return Err(Error::InvalidInput("source not supported on its projection".into()));
                }
            }
            ps
        }
        None => sources
            .iter()
            .map(|s| Ok(linalg::eigh(s)?.projection_where(|x| x > SUPPORT_TOL)))
            .collect::<Result<_>>()?,
    };
    let mut total = CMatrix::zeros(d, d);
    for pi in &projections {
        total += pi;
    }
    let complement = linalg::identity(d) - &total;
    if linalg::projection_defect(&complement) > 1e-8 {
        return Err(Error::SupportsNotOrthogonal { overlap: linalg::projection_defect(&complement) });
    }

    let omegas: Vec<DensityMatrix> = if p == 0.0 {
        input.pairs.iter().map(|(t, _)| t.clone()).collect()
    } else {
        input
            .pairs
            .iter()
            .map(|(t, s)| DensityMatrix::repaired((t.matrix() - s.matrix() * cr(1.0 - p)).unscale(p)))
            .collect::<Result<_>>()?
    };
    let complement_rank = linalg::trace(&complement).re.round() as usize;
    let complement_state = (complement_rank > 0).then(|| {
        let q = linalg::projection_basis(&complement).expect("complement is a projection");
        DensityMatrix::repaired(linalg::projector_from_columns(&q).unscale(q.ncols() as f64))
            .expect("normalized projection")
    });

    let mut kraus = vec![linalg::identity(d) * cr((1.0 - p).sqrt())];
    if p > 0.0 {
        let blocks = projections
            .iter()
            .zip(&omegas)
            .map(|(pi, w)| (pi.clone(), w.clone()))
            .chain(complement_state.iter().map(|w| (complement.clone(), w.clone())));
        for (pi, omega) in blocks {
            let basis = linalg::projection_basis(&pi)?;
            let eig = linalg::eigh(omega.matrix())?;
            for (k, &t) in eig.eigenvalues.iter().enumerate() {
                if t <= 0.0 {
                    continue;
                }
                let phi = eig.eigenvectors.column(k).into_owned();
                for b in 0..basis.ncols() {
                    let psi = basis.column(b).into_owned();
                    kraus.push(linalg::outer(&phi, &psi) * cr((p * t).sqrt()));
                }
            }
        }
    }
    let channel = Channel::from_kraus(kraus)?.compressed();
    let mut pullback_error: f64 = 0.0;
    for (t, s) in &input.pairs {
        let out = channel.apply(s.matrix())?;
        pullback_error = pullback_error.max(crate::quantum::trace_distance_matrices(&out, t.matrix())?);
    }
    Ok(GenDepResult { channel, omegas, complement_state, pullback_error, diamond_certificate: p })
}
