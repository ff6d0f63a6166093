//! Explicit constructions showing where fixing is forced to move both the state and the
//! channel, where `√ε` is the best possible rate, and where no rapid fixing exists.
//!
//! Every constructor returns a [`CounterexampleInstance`] whose claimed facts were
//! re-measured at construction; a failed fact is an error.

use nalgebra::{DMatrix, DVector};
use num_rational::Ratio;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::classical::{eigenvalue_one_multiplicity, stochastic_norm, ProbabilityVector, StochasticMatrix};
use crate::error::{Error, Result};
use crate::fixers::{fix_general, is_local_channel, local_channel};
use crate::linalg::{self, cr, CMatrix, CVector};
use crate::quantum::distance::shared_stinespring_distance;
use crate::quantum::fixed_point::fixed_point_basis;
use crate::quantum::{
    diamond_distance_bounds, embed_classical_channel, embed_classical_state, fixed_point_space_dimension,
    invariant_subspace_residual, trace_distance, trace_distance_matrices, Channel, DensityMatrix, DiamondBounds,
};
use crate::quantum::fixed_point::FIXED_SPACE_TOL;

type Q = Ratio<i128>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `|value − expected| ≤ tolerance`.
    Eq,
    /// `value ≤ expected + tolerance`.
    Le,
    /// `value ≥ expected − tolerance`.
    Ge,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClaimedFact {
    pub description: String,
    pub value: f64,
    pub relation: Relation,
    pub expected: f64,
    pub tolerance: f64,
}

impl ClaimedFact {
    pub fn holds(&self) -> bool {
        match self.relation {
            Relation::Eq => (self.value - self.expected).abs() <= self.tolerance,
            Relation::Le => self.value <= self.expected + self.tolerance,
            Relation::Ge => self.value >= self.expected - self.tolerance,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CounterexampleInstance {
    pub name: String,
    pub epsilon: f64,
    pub states: Vec<DensityMatrix>,
    pub channels: Vec<Channel>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub distributions: Vec<ProbabilityVector>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stochastic: Vec<StochasticMatrix>,
    pub claimed_facts: Vec<ClaimedFact>,
}

impl CounterexampleInstance {
    fn new(name: &str, epsilon: f64) -> Self {
        Self {
            name: name.into(),
            epsilon,
            states: vec![],
            channels: vec![],
            distributions: vec![],
            stochastic: vec![],
            claimed_facts: vec![],
        }
    }

    fn fact(&mut self, description: impl Into<String>, value: f64, relation: Relation, expected: f64, tolerance: f64) {
        self.claimed_facts.push(ClaimedFact { description: description.into(), value, relation, expected, tolerance });
    }

    pub fn failed_facts(&self) -> Vec<&ClaimedFact> {
        self.claimed_facts.iter().filter(|f| !f.holds()).collect()
    }

    /// Errors on the first fact that does not hold.
    pub fn verify(&self) -> Result<()> {
        match self.failed_facts().first() {
            None => Ok(()),
            Some(f) => Err(Error::FactFailed(format!(
                "{}: {} (value {:.6e}, {:?} {:.6e} ± {:.1e})",
                self.name, f.description, f.value, f.relation, f.expected, f.tolerance
            ))),
        }
    }

    fn finish(self) -> Result<Self> {
        self.verify()?;
        Ok(self)
    }
}

fn require_dim(d: usize, min: usize) -> Result<()> {
    if d < min {
        return Err(Error::DimensionTooSmall { d, min });
    }
    Ok(())
}

/// Channel acting as `N₁` on the first block and `N₂` on the second, discarding coherences between them.
pub fn direct_sum_channel(n1: &Channel, n2: &Channel) -> Result<Channel> {
    let (d1, d2) = (n1.dim_in(), n2.dim_in());
    let z1 = CMatrix::zeros(d1, d1);
    let z2 = CMatrix::zeros(d2, d2);
    let mut ops: Vec<CMatrix> = n1.kraus().iter().map(|k| linalg::direct_sum(k, &z2)).collect();
    ops.extend(n2.kraus().iter().map(|k| linalg::direct_sum(&z1, k)));
    Channel::from_kraus(ops)
}

/// Lower bound on `½‖N − M‖⋄` from basis-state inputs.
fn basis_input_lower_bound(n: &Channel, m: &Channel) -> Result<f64> {
    let d = n.dim_in();
    let mut best: f64 = 0.0;
    for i in 0..d {
        let e = linalg::projector(&linalg::ket(d, i));
        best = best.max(trace_distance_matrices(&n.apply(&e)?, &m.apply(&e)?)?);
    }
    Ok(best)
}

/// Minimum over real `t` of `‖ρ − t X‖₁`, by ternary search on the convex function.
fn distance_to_ray(rho: &CMatrix, x: &CMatrix) -> Result<f64> {
    let f = |t: f64| linalg::trace_norm(&(rho - x * cr(t)));
    let (mut lo, mut hi) = (-4.0, 4.0);
    for _ in 0..200 {
        let a = lo + (hi - lo) / 3.0;
        let b = hi - (hi - lo) / 3.0;
        if f(a) <= f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    Ok(f(0.5 * (lo + hi)))
}

/// Two blocks, one fixable only by moving the channel and one only by moving the state,
/// and their direct sum, which needs both.
pub fn example_change_both(eps: f64) -> Result<CounterexampleInstance> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidInput(format!("epsilon {eps} outside (0, 1)")));
    }
    let mut inst = CounterexampleInstance::new("change_both", eps);

    let rho1 = DensityMatrix::diagonal(&[1.0, 0.0])?;
    let sink = DensityMatrix::diagonal(&[0.0, 1.0])?;
    let n1 = crate::quantum::convex_combine(&[1.0 - eps, eps], &[Channel::identity(2), crate::quantum::replacement_channel(&sink)])?;
    inst.fact("½‖N₁(ρ₁) − ρ₁‖₁ ≤ ε", trace_distance(&n1.apply_state(&rho1)?, &rho1)?, Relation::Le, eps, 1e-12);
    inst.fact("fixed space of N₁ is one-dimensional", fixed_point_space_dimension(&n1, FIXED_SPACE_TOL) as f64, Relation::Eq, 1.0, 0.0);
    let basis = fixed_point_basis(&n1, 1e-9)?;
    let fixed = basis.first().cloned().unwrap_or_else(|| CMatrix::zeros(2, 2));
    let scale = linalg::trace(&fixed);
    let fixed = if scale.norm() > 0.0 { fixed / scale } else { fixed };
    inst.fact(
        "fixed space of N₁ is spanned by |1⟩⟨1|",
        linalg::hs_norm(&(&fixed - sink.matrix())),
        Relation::Eq,
        0.0,
        1e-9,
    );
    inst.fact("min over the fixed space of ‖ρ₁ − x‖₁", distance_to_ray(rho1.matrix(), &fixed)?, Relation::Eq, 1.0, 1e-9);

    let rho2 = DensityMatrix::diagonal(&[eps, 0.0, 1.0 - eps])?;
    let swap = CMatrix::from_row_slice(3, 3, &[
        cr(0.0), cr(1.0), cr(0.0),
        cr(1.0), cr(0.0), cr(0.0),
        cr(0.0), cr(0.0), cr(1.0),
    ]);
    let n2 = Channel::unitary(swap)?;
    inst.fact("½‖N₂(ρ₂) − ρ₂‖₁ ≤ ε", trace_distance(&n2.apply_state(&rho2)?, &rho2)?, Relation::Le, eps, 1e-12);

    let rho = DensityMatrix::repaired(linalg::direct_sum(rho1.matrix(), rho2.matrix()).scale(0.5))?;
    let n = direct_sum_channel(&n1, &n2)?;
    inst.fact("½‖N(ρ) − ρ‖₁ ≤ ε on the direct sum", trace_distance(&n.apply_state(&rho)?, &rho)?, Relation::Le, eps, 1e-12);

    let fixed_pair = fix_general(&rho, &n, None)?;
    inst.fact("general fixer moves the state", fixed_pair.state_distance_measured, Relation::Ge, 1e-6, 0.0);
    let m = fixed_pair.fixed_channel.to_channel();
    let mut moved = fixed_pair.channel_certificate.diamond.clone();
    moved.tighten_lower(basis_input_lower_bound(&m, &n)?, "basis inputs");
    inst.fact("general fixer moves the channel", moved.lower, Relation::Ge, 1e-6, 0.0);

    // Any channel g-close to N puts weight at least (ε/2)(1 − g) on the empty level |1⟩ of the second block.
    let looser = fix_general(&rho, &n, Some((4.0 * eps).min(1.0)))?.fixed_channel.to_channel();
    for (label, cand) in [("N itself", n.clone()), ("fixer output", m), ("fixer output, looser promise", looser)] {
        let g = diamond_distance_bounds(&cand, &n)?.upper;
        let out = cand.apply(rho.matrix())? - rho.matrix();
        let weight = out[(3, 3)].re;
        inst.fact(
            format!("⟨1|M(ρ) − ρ|1⟩ on the second block ≥ (ε/2)(1 − g) for {label}"),
            weight,
            Relation::Ge,
            0.5 * eps * (1.0 - g),
            1e-12,
        );
    }

    inst.states = vec![rho1, rho2, rho.clone(), fixed_pair.sigma.density()];
    inst.channels = vec![n1, n2, n];
    inst.finish()
}

/// `T_ε = [[1−√ε, √ε, 0], [√ε, 1−√ε, 0], [0, 0, 1]]`.
pub fn optimality_matrix(eps: f64) -> Result<StochasticMatrix> {
    let s = eps.sqrt();
    StochasticMatrix::new(DMatrix::from_row_slice(3, 3, &[1.0 - s, s, 0.0, s, 1.0 - s, 0.0, 0.0, 0.0, 1.0]))
}

/// `ρ_ε = √ε|0⟩⟨0| + (1−√ε)|2⟩⟨2|` and the classical channel of `T_ε`.
pub fn optimality_instance(eps: f64) -> Result<CounterexampleInstance> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidInput(format!("epsilon {eps} outside (0, 1]")));
    }
    let mut inst = CounterexampleInstance::new("optimality", eps);
    let s = eps.sqrt();
    let p = ProbabilityVector::new(vec![s, 0.0, 1.0 - s])?;
    let t = optimality_matrix(eps)?;
    let rho = embed_classical_state(&p);
    let n = embed_classical_channel(&t);
    inst.fact("½‖N(ρ) − ρ‖₁ = ε", trace_distance(&n.apply_state(&rho)?, &rho)?, Relation::Eq, eps, 1e-12);
    inst.fact("½‖TP − P‖₁ = ε", t.apply(&p)?.tv_distance(&p)?, Relation::Eq, eps, 1e-12);
    if eps == 1.0 {
        let perm = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        inst.fact("T is a transposition plus a fixed point", (t.matrix() - perm).amax(), Relation::Eq, 0.0, 0.0);
    }
    inst.states = vec![rho];
    inst.channels = vec![n];
    inst.distributions = vec![p];
    inst.stochastic = vec![t];
    inst.finish()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub epsilon: f64,
    pub measured_deviation: f64,
    pub state_distance: f64,
    pub channel_certificate: f64,
    /// `max(state_distance, channel_certificate)`.
    pub achieved: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingReport {
    pub points: Vec<ScalingPoint>,
    pub slope: f64,
    pub intercept: f64,
}

/// Least-squares fit of `log y = a log x + b`, returning `(a, b)`.
pub fn log_log_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidInput("need at least two paired points".into()));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidInput("log-log fit needs positive values".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("all x values coincide".into()));
    }
    let a = sxy / sxx;
    Ok((a, my - a * mx))
}

/// Runs the general fixer on the optimality family and fits the achieved distance against `ε`.
pub fn optimality_scaling(epsilons: &[f64]) -> Result<ScalingReport> {
    let mut points = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let inst = optimality_instance(eps)?;
        let r = fix_general(&inst.states[0], &inst.channels[0], Some(eps))?;
        let measured = trace_distance(&inst.channels[0].apply_state(&inst.states[0])?, &inst.states[0])?;
        let cert = r.channel_certificate.upper;
        points.push(ScalingPoint {
            epsilon: eps,
            measured_deviation: measured,
            state_distance: r.state_distance_measured,
            channel_certificate: cert,
            achieved: r.state_distance_measured.max(cert),
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.epsilon).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.achieved).collect();
    let (slope, intercept) = log_log_fit(&xs, &ys)?;
    Ok(ScalingReport { points, slope, intercept })
}

fn q(n: i128, d: i128) -> Q {
    Q::new(n, d)
}

fn to_f64(x: &Q) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

/// Columns of the absorbing tridiagonal chain in exact arithmetic.
pub fn tridiagonal_exact(d: usize) -> Result<Vec<Vec<Q>>> {
    require_dim(d, 3)?;
    let mut cols = vec![vec![q(0, 1); d]; d];
    cols[0][0] = q(3, 4);
    cols[0][1] = q(1, 4);
    for i in 1..d - 1 {
        cols[i][i - 1] = q(1, 2);
        cols[i][i] = q(1, 4);
        cols[i][i + 1] = q(1, 4);
    }
    cols[d - 1][d - 1] = q(1, 1);
    Ok(cols)
}

/// `P₁ = c (1, 1/2, …, 1/2^{d−2}, 0)` with `c = 1/(2 − 2^{2−d})`, exactly.
pub fn p1_exact(d: usize) -> Result<Vec<Q>> {
    require_dim(d, 3)?;
    let c = normalization_exact(d);
    let mut v: Vec<Q> = (0..d - 1).map(|i| c / q(1i128 << i, 1)).collect();
    v.push(q(0, 1));
    Ok(v)
}

/// `c = 1/(2 − 2^{2−d})`.
pub fn normalization_exact(d: usize) -> Q {
    (q(2, 1) - q(4, 1i128 << d)).recip()
}

pub fn tridiagonal_t(d: usize) -> Result<StochasticMatrix> {
    let cols = tridiagonal_exact(d)?;
    StochasticMatrix::from_columns(&cols.iter().map(|c| c.iter().map(to_f64).collect()).collect::<Vec<_>>())
}

pub fn p1(d: usize) -> Result<ProbabilityVector> {
    ProbabilityVector::new(p1_exact(d)?.iter().map(to_f64).collect())
}

pub fn p2(d: usize) -> Result<ProbabilityVector> {
    require_dim(d, 3)?;
    Ok(ProbabilityVector::basis(d, d - 1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactTridiagonal {
    pub deviation: Q,
    pub expected: Q,
    pub tp2_is_p2: bool,
    pub p1_p2_distance: Q,
}

fn apply_exact(cols: &[Vec<Q>], p: &[Q]) -> Vec<Q> {
    let d = p.len();
    (0..d).map(|x| (0..d).map(|y| cols[y][x] * p[y]).sum()).collect()
}

fn half_l1(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).map(|(x, y)| if x > y { x - y } else { y - x }).sum::<Q>() / q(2, 1)
}

/// The tridiagonal family's identities checked in rational arithmetic.
pub fn exact_tridiagonal_check(d: usize) -> Result<ExactTridiagonal> {
    let cols = tridiagonal_exact(d)?;
    let p1 = p1_exact(d)?;
    let mut p2 = vec![q(0, 1); d];
    p2[d - 1] = q(1, 1);
    Ok(ExactTridiagonal {
        deviation: half_l1(&apply_exact(&cols, &p1), &p1),
        expected: normalization_exact(d) / q(1i128 << d, 1),
        tp2_is_p2: apply_exact(&cols, &p2) == p2,
        p1_p2_distance: half_l1(&p1, &p2),
    })
}

/// The absorbing chain with one exact and one approximate fixed distribution, far apart.
pub fn tridiagonal_counterexample(d: usize) -> Result<CounterexampleInstance> {
    require_dim(d, 3)?;
    let exact = exact_tridiagonal_check(d)?;
    let t = tridiagonal_t(d)?;
    let (p1v, p2v) = (p1(d)?, p2(d)?);
    let target = to_f64(&exact.expected);
    let mut inst = CounterexampleInstance::new("tridiagonal", 0.5f64.powi(d as i32));
    inst.fact("rational ½‖TP₁ − P₁‖₁ equals c/2^d", (exact.deviation == exact.expected) as u8 as f64, Relation::Eq, 1.0, 0.0);
    inst.fact("½‖TP₁ − P₁‖₁ = c/2^d", t.apply(&p1v)?.tv_distance(&p1v)?, Relation::Eq, target, 1e-12);
    inst.fact("½‖TP₁ − P₁‖₁ ≤ 2^{−d}", t.apply(&p1v)?.tv_distance(&p1v)?, Relation::Le, inst.epsilon, 1e-15);
    inst.fact("rational TP₂ = P₂", exact.tp2_is_p2 as u8 as f64, Relation::Eq, 1.0, 0.0);
    let tp2 = t.apply(&p2v)?;
    let gap = tp2.entries().iter().zip(p2v.entries()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    inst.fact("TP₂ = P₂ in floats", gap, Relation::Eq, 0.0, 0.0);
    inst.fact("½‖P₁ − P₂‖₁ = 1", p1v.tv_distance(&p2v)?, Relation::Eq, 1.0, 1e-15);
    inst.fact("rational ½‖P₁ − P₂‖₁ = 1", to_f64(&exact.p1_p2_distance), Relation::Eq, 1.0, 0.0);
    inst.fact("T has a single eigenvalue at 1", eigenvalue_one_multiplicity(&t, 1e-8) as f64, Relation::Eq, 1.0, 0.0);
    inst.distributions = vec![p1v, p2v];
    inst.stochastic = vec![t];
    inst.finish()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassicalRobustnessReport {
    pub d: usize,
    /// `max_y Σ_x |S_xy − T_xy|`.
    pub distance: f64,
    pub eigenvalue_one_multiplicity: usize,
    /// `S_{i+1,i} > 0` for every `i < d`.
    pub forward_flow: bool,
    /// `S_{i−1,i} > 0` for every interior `i`.
    pub backward_flow: bool,
}

impl ClassicalRobustnessReport {
    pub fn unique(&self) -> bool {
        self.eigenvalue_one_multiplicity == 1
    }
}

/// Radius around the tridiagonal chain inside which the fixed point stays unique.
pub const CLASSICAL_RADIUS: f64 = 0.25;

pub fn verify_classical_uniqueness_robustness(s: &StochasticMatrix) -> Result<ClassicalRobustnessReport> {
    let d = s.dim();
    let t = tridiagonal_t(d)?;
    let distance = stochastic_norm(s, &t)?;
    if distance >= CLASSICAL_RADIUS {
        return Err(Error::TooFarFromT { distance, limit: CLASSICAL_RADIUS });
    }
    Ok(ClassicalRobustnessReport {
        d,
        distance,
        eigenvalue_one_multiplicity: eigenvalue_one_multiplicity(s, 1e-8),
        forward_flow: (0..d - 1).all(|i| s.entry(i + 1, i) > 0.0),
        backward_flow: (1..d - 1).all(|i| s.entry(i - 1, i) > 0.0),
    })
}

fn random_distribution<R: Rng>(d: usize, rng: &mut R) -> Vec<f64> {
    let w: Vec<f64> = (0..d).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

/// A random stochastic matrix with `‖S − T‖ < radius`, mixing each column toward a random distribution.
pub fn random_near_tridiagonal<R: Rng>(d: usize, radius: f64, rng: &mut R) -> Result<StochasticMatrix> {
    let t = tridiagonal_t(d)?;
    let mut m = t.matrix().clone();
    for y in 0..d {
        let col = t.matrix().column(y).into_owned();
        let target = DVector::from_vec(random_distribution(d, rng));
        let spread = (&target - &col).abs().sum();
        if spread == 0.0 {
            continue;
        }
        let step = (rng.random::<f64>() * radius * 0.999 / spread).min(1.0);
        m.set_column(y, &(&col + (&target - &col) * step));
    }
    StochasticMatrix::new(m)
}

/// `ρ₁`, `ρ₂` and `N_T` embedded from the tridiagonal chain.
pub fn quantum_counterexample(d: usize) -> Result<CounterexampleInstance> {
    require_dim(d, 3)?;
    let t = tridiagonal_t(d)?;
    let rho1 = embed_classical_state(&p1(d)?);
    let rho2 = embed_classical_state(&p2(d)?);
    let n = embed_classical_channel(&t);
    let eps = 0.5f64.powi(d as i32);
    let mut inst = CounterexampleInstance::new("quantum", eps);
    let c = to_f64(&normalization_exact(d));
    inst.fact("½‖N(ρ₁) − ρ₁‖₁ = c/2^d", trace_distance(&n.apply_state(&rho1)?, &rho1)?, Relation::Eq, c * eps, 1e-12);
    inst.fact("½‖N(ρ₁) − ρ₁‖₁ ≤ 2^{−d}", trace_distance(&n.apply_state(&rho1)?, &rho1)?, Relation::Le, eps, 1e-12);
    inst.fact("½‖N(ρ₂) − ρ₂‖₁ ≤ 2^{−d}", trace_distance(&n.apply_state(&rho2)?, &rho2)?, Relation::Le, eps, 1e-12);
    inst.fact("½‖ρ₁ − ρ₂‖₁ = 1", trace_distance(&rho1, &rho2)?, Relation::Eq, 1.0, 1e-12);
    inst.fact("N has a one-dimensional fixed space", fixed_point_space_dimension(&n, FIXED_SPACE_TOL) as f64, Relation::Eq, 1.0, 0.0);
    inst.states = vec![rho1, rho2];
    inst.channels = vec![n];
    inst.stochastic = vec![t];
    inst.finish()
}

/// `1/(16d)`.
pub fn quantum_radius(d: usize) -> f64 {
    1.0 / (16.0 * d as f64)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuantumRobustnessReport {
    pub d: usize,
    /// Certified upper bound on `½‖M − N_T‖⋄`.
    pub certificate: f64,
    pub radius: f64,
    pub fixed_space_dimension: usize,
    /// `Tr((1−π) M(π))` for the absorbing level and for its complement.
    pub residuals: Vec<(String, f64)>,
}

impl QuantumRobustnessReport {
    pub fn unique(&self) -> bool {
        self.fixed_space_dimension == 1
    }
}

pub fn verify_quantum_uniqueness_robustness(m: &Channel) -> Result<QuantumRobustnessReport> {
    let d = m.dim_in();
    require_dim(d, 3)?;
    let n_t = embed_classical_channel(&tridiagonal_t(d)?);
    let certificate = match shared_stinespring_distance(m, &n_t) {
        Some(w) => w.min(diamond_distance_bounds(m, &n_t)?.upper),
        None => diamond_distance_bounds(m, &n_t)?.upper,
    };
    let radius = quantum_radius(d);
    if certificate > radius {
        return Err(Error::TooFarFromNT { certificate, limit: radius });
    }
    let absorbing = linalg::projector(&linalg::ket(d, d - 1));
    let transient = linalg::identity(d) - &absorbing;
    let residuals = vec![
        ("absorbing level".to_string(), invariant_subspace_residual(m, &absorbing)?),
        ("transient levels".to_string(), invariant_subspace_residual(m, &transient)?),
    ];
    Ok(QuantumRobustnessReport {
        d,
        certificate,
        radius,
        fixed_space_dimension: fixed_point_space_dimension(m, FIXED_SPACE_TOL),
        residuals,
    })
}

/// A channel `W V` from the Stinespring isometry `V` of `N_T` with `‖WV − V‖ ≤ radius`,
/// rejection-sampled on the certificate.
pub fn perturb_embedded_chain<R: Rng>(d: usize, radius: f64, rng: &mut R) -> Result<(Channel, f64)> {
    let n_t = embed_classical_channel(&tridiagonal_t(d)?);
    let (v, env) = n_t.stinespring();
    for _ in 0..100 {
        let h = linalg::random_hermitian(d * env, rng);
        let eta = rng.random::<f64>() * radius;
        let w = linalg::unitary_exp(&h, eta)?;
        let v_new = &w * &v;
        let cert = linalg::operator_norm(&(&v_new - &v));
        if cert <= radius {
            return Ok((Channel::from_stinespring(v_new, d, env)?, cert));
        }
    }
    Err(Error::GenerationFailed("no perturbation inside the radius after 100 draws".into()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrilemmaCandidate {
    pub label: String,
    /// Certified lower bound on `½‖M_B − N_B‖⋄`.
    pub channel_lower: f64,
    pub channel_upper: f64,
    /// `½‖σ₁ − ρ₁‖₁` and `½‖σ₂ − ρ₂‖₁` for the blocks of the dephased fixed point.
    pub state_distances: [f64; 2],
    /// Which of the three thresholds is reached.
    pub exceeded: Vec<String>,
}

fn trilemma(label: &str, d: usize, m_b: &Channel, n_b: &Channel, blocks: [&DensityMatrix; 2], rhos: [&DensityMatrix; 2]) -> Result<TrilemmaCandidate> {
    let mut bounds: DiamondBounds = diamond_distance_bounds(m_b, n_b)?;
    bounds.tighten_lower(basis_input_lower_bound(m_b, n_b)?, "basis inputs");
    let s = [trace_distance(blocks[0], rhos[0])?, trace_distance(blocks[1], rhos[1])?];
    let mut exceeded = vec![];
    if bounds.lower >= quantum_radius(d) {
        exceeded.push("channel".to_string());
    }
    for (i, si) in s.iter().enumerate() {
        if *si >= 0.5 {
            exceeded.push(format!("state {}", i + 1));
        }
    }
    Ok(TrilemmaCandidate { label: label.into(), channel_lower: bounds.lower, channel_upper: bounds.upper, state_distances: s, exceeded })
}

fn unique_fixed_state(m: &Channel) -> Result<DensityMatrix> {
    let basis = fixed_point_basis(m, 1e-8)?;
    let x = basis.first().ok_or_else(|| Error::BoundViolated("no fixed point found".into()))?;
    let tr = linalg::trace(x);
    DensityMatrix::repaired(linalg::hermitize(&(x / tr))?)
}

/// `ρ_AB = ½|0⟩⟨0| ⊗ ρ₁ + ½|1⟩⟨1| ⊗ ρ₂` with `id_A ⊗ N_T`, plus candidate local repairs
/// each of which misses one of the three closeness thresholds.
pub fn bipartite_counterexample(d: usize, d_a: usize) -> Result<(CounterexampleInstance, Vec<TrilemmaCandidate>)> {
    require_dim(d, 3)?;
    require_dim(d_a, 2)?;
    let base = quantum_counterexample(d)?;
    let (rho1, rho2) = (&base.states[0], &base.states[1]);
    let n_b = &base.channels[0];
    let e0 = linalg::projector(&linalg::ket(d_a, 0));
    let e1 = linalg::projector(&linalg::ket(d_a, 1));
    let rho_ab = DensityMatrix::repaired((e0.kronecker(rho1.matrix()) + e1.kronecker(rho2.matrix())).scale(0.5))?;
    let joint = local_channel(d_a, n_b);
    let eps = base.epsilon;
    let mut inst = CounterexampleInstance::new("bipartite", eps);

    let dev = trace_distance(&joint.apply_state(&rho_ab)?, &rho_ab)?;
    let blockwise = 0.5 * trace_distance(&n_b.apply_state(rho1)?, rho1)? + 0.5 * trace_distance(&n_b.apply_state(rho2)?, rho2)?;
    inst.fact("joint deviation equals the block average", dev, Relation::Eq, blockwise, 1e-12);
    inst.fact("½‖(id ⊗ N)(ρ_AB) − ρ_AB‖₁ ≤ 2^{−d}", dev, Relation::Le, eps, 1e-12);

    // A coherent fixed point of id ⊗ N_B stays fixed and becomes block diagonal after dephasing A.
    let plus = (linalg::ket(d_a, 0) + linalg::ket(d_a, 1)).unscale(2f64.sqrt());
    let coherent = DensityMatrix::repaired(linalg::projector(&plus).kronecker(rho2.matrix()))?;
    inst.fact("coherent state is fixed", trace_distance(&joint.apply_state(&coherent)?, &coherent)?, Relation::Eq, 0.0, 1e-12);
    let dephase_a = local_dephasing(d_a, d)?;
    let dephased = dephase_a.apply_state(&coherent)?;
    inst.fact("dephased state is fixed", trace_distance(&joint.apply_state(&dephased)?, &dephased)?, Relation::Eq, 0.0, 1e-12);
    let off_block = linalg::operator_norm(&dephased.matrix().view((0, d), (d, d)).into_owned());
    inst.fact("dephased state is block diagonal", off_block, Relation::Eq, 0.0, 1e-15);

    let naive = fix_general(&rho_ab, &joint, None)?;
    let naive_local = is_local_channel(&naive.fixed_channel.to_channel(), d_a, d, 1e-9);
    inst.fact("joint general fixer output is a local channel", naive_local as u8 as f64, Relation::Eq, 0.0, 0.0);

    let mut candidates = vec![];
    candidates.push(trilemma("keep N_B, move both blocks to its fixed point", d, n_b, n_b, [rho2, rho2], [rho1, rho2])?);
    let absorbing = linalg::projector(&linalg::ket(d, d - 1));
    let transient = linalg::identity(d) - &absorbing;
    let split = measure_and_prepare(&[(transient, rho1.clone()), (absorbing, rho2.clone())])?;
    candidates.push(trilemma("measure-and-prepare channel fixing both blocks", d, &split, n_b, [rho1, rho2], [rho1, rho2])?);
    let mut rng = linalg::seeded_rng(0x6269_7061 ^ d as u64);
    let (near, _) = perturb_embedded_chain(d, quantum_radius(d), &mut rng)?;
    let sigma = unique_fixed_state(&near)?;
    candidates.push(trilemma("perturbed channel inside the robustness radius", d, &near, n_b, [&sigma, &sigma], [rho1, rho2])?);
    for c in &candidates {
        let reach = (c.channel_lower * 16.0 * d as f64).max(2.0 * c.state_distances[0]).max(2.0 * c.state_distances[1]);
        inst.fact(format!("{}: some threshold reached ({})", c.label, c.exceeded.join(", ")), reach, Relation::Ge, 1.0, 1e-12);
    }

    inst.states = vec![rho_ab, coherent, dephased, naive.sigma.density()];
    inst.channels = vec![joint, naive.fixed_channel.to_channel()];
    Ok((inst.finish()?, candidates))
}

/// `X ↦ Σ_i Tr(π_i X) ω_i` for a resolution of identity `π_i`.
pub fn measure_and_prepare(blocks: &[(CMatrix, DensityMatrix)]) -> Result<Channel> {
    let mut ops = vec![];
    for (pi, omega) in blocks {
        let basis = linalg::projection_basis(pi)?;
        let eig = linalg::eigh(omega.matrix())?;
        for (k, &t) in eig.eigenvalues.iter().enumerate() {
            if t <= 0.0 {
                continue;
            }
            let phi = eig.eigenvectors.column(k).into_owned();
            for b in 0..basis.ncols() {
                ops.push(linalg::outer(&phi, &basis.column(b).into_owned()) * cr(t.sqrt()));
            }
        }
    }
    Ok(Channel::from_kraus(ops)?.compressed())
}

/// Dephasing of `A` in its computational basis, identity on `B`.
pub fn local_dephasing(d_a: usize, d_b: usize) -> Result<Channel> {
    let id_b = linalg::identity(d_b);
    Channel::from_kraus((0..d_a).map(|i| linalg::projector(&linalg::ket(d_a, i)).kronecker(&id_b)).collect())
}

/// How `B` was chosen among the linear maps fixing `v`.
#[derive(Debug, Clone)]
pub enum LinearBasis {
    /// Orthonormal completion of `v`; the correction is rank one along `v†`.
    Orthonormal,
    /// Columns form a basis whose first element is `v`.
    Custom(CMatrix),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearFix {
    #[serde(with = "crate::io::cmatrix")]
    pub map: CMatrix,
    /// `‖Av − v‖`.
    pub epsilon: f64,
    /// `‖B − A‖`.
    pub distance: f64,
    /// Norm of the coordinate functional of `v`; `‖B − A‖ ≤ c ε`.
    pub basis_constant: f64,
}

/// `B = A + (v − Av) φ` where `φ` reads off the `v` coordinate, so `Bv = v` and `B = A` on the rest of the basis.
pub fn fix_linear_map(v: &CVector, a: &CMatrix, basis: &LinearBasis) -> Result<LinearFix> {
    let d = linalg::ensure_square(a)?;
    if v.len() != d {
        return Err(Error::DimensionMismatch(format!("vector of length {} for a {d}x{d} map", v.len())));
    }
    if (v.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized(format!("vector norm {}", v.norm())));
    }
    let functional: CMatrix = match basis {
        LinearBasis::Orthonormal => CMatrix::from_row_slice(1, d, v.adjoint().as_slice()),
        LinearBasis::Custom(w) => {
            if w.shape() != (d, d) || (w.column(0) - v).norm() > 1e-12 {
                return Err(Error::InvalidInput("basis must be square with v as its first column".into()));
            }
            let inv = w.clone().try_inverse().ok_or_else(|| Error::InvalidInput("basis is singular".into()))?;
            CMatrix::from_fn(1, d, |_, j| inv[(0, j)])
        }
    };
    let residual = v - a * v;
    let residual_col = CMatrix::from_column_slice(d, 1, residual.as_slice());
    let map: CMatrix = a + &residual_col * &functional;
    Ok(LinearFix {
        epsilon: residual.norm(),
        distance: linalg::operator_norm(&(&map - a)),
        basis_constant: functional.norm(),
        map,
    })
}

/// Linear-only fixing moves `A` by `ε`, while a state-and-channel repair on the optimality family needs order `√ε`.
pub fn linear_contrast(eps: f64) -> Result<CounterexampleInstance> {
    let opt = optimality_instance(eps)?;
    let mut inst = CounterexampleInstance::new("linear", eps);
    let d = 3;
    let v = linalg::ket(d, 0);
    let a = linalg::identity(d) - linalg::projector(&v) * cr(eps);
    let fix = fix_linear_map(&v, &a, &LinearBasis::Orthonormal)?;
    inst.fact("‖Av − v‖ = ε", fix.epsilon, Relation::Eq, eps, 1e-15);
    inst.fact("Bv = v", (&fix.map * &v - &v).norm(), Relation::Eq, 0.0, 1e-15);
    inst.fact("‖B − A‖ = ε", fix.distance, Relation::Eq, eps, 1e-12);
    let general = fix_general(&opt.states[0], &opt.channels[0], Some(eps))?;
    let achieved = general.state_distance_measured.max(general.channel_certificate.upper);
    inst.fact("state-and-channel repair moves at least the linear distance", achieved, Relation::Ge, fix.distance, 0.0);
    inst.states = opt.states.clone();
    inst.channels = vec![opt.channels[0].clone(), general.fixed_channel.to_channel()];
    inst.finish()
}

/// Every named construction at default parameters.
pub fn named_counterexample(name: &str, d: usize, eps: f64) -> Result<CounterexampleInstance> {
    match name.replace('-', "_").as_str() {
        "change_both" => example_change_both(eps),
        "optimality" => optimality_instance(eps),
        "tridiagonal" | "classical" => tridiagonal_counterexample(d),
        "quantum" => quantum_counterexample(d),
        "bipartite" => bipartite_counterexample(d, 2).map(|(i, _)| i),
        "linear" => linear_contrast(eps),
        other => Err(Error::InvalidInput(format!("unknown counterexample {other:?}"))),
    }
}

pub const COUNTEREXAMPLE_NAMES: [&str; 6] = ["change_both", "optimality", "tridiagonal", "quantum", "bipartite", "linear"];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::seeded_rng;

    #[test]
    fn change_both_small_epsilon() {
        let inst = example_change_both(0.1).unwrap();
        assert!(inst.failed_facts().is_empty());
        assert_eq!(inst.states.len(), 4);
    }

    #[test]
    fn optimality_at_endpoints() {
        let inst = optimality_instance(0.01).unwrap();
        assert!(inst.verify().is_ok());
        let one = optimality_instance(1.0).unwrap();
        assert!(one.claimed_facts.iter().any(|f| f.description.contains("transposition")));
        assert!(optimality_instance(0.0).is_err());
    }

    #[test]
    fn tridiagonal_three_by_three() {
        let t = tridiagonal_t(3).unwrap();
        let expected = DMatrix::from_row_slice(3, 3, &[0.75, 0.5, 0.0, 0.25, 0.25, 0.0, 0.0, 0.25, 1.0]);
        assert_eq!(t.matrix(), &expected);
        let p = p1(3).unwrap();
        assert!((p.entries()[0] - 2.0 / 3.0).abs() < 1e-15 && (p.entries()[1] - 1.0 / 3.0).abs() < 1e-15);
        let exact = exact_tridiagonal_check(3).unwrap();
        assert_eq!(exact.deviation, q(1, 12));
        assert_eq!(normalization_exact(5), q(8, 15));
        assert_eq!(exact_tridiagonal_check(5).unwrap().deviation, q(8, 15) / q(32, 1));
        assert!(matches!(tridiagonal_t(2), Err(Error::DimensionTooSmall { .. })));
    }

    #[test]
    fn classical_robustness_gate() {
        let t = tridiagonal_t(5).unwrap();
        let r = verify_classical_uniqueness_robustness(&t).unwrap();
        assert!(r.unique() && r.forward_flow && r.backward_flow);
        let mut m = t.matrix().clone();
        m[(0, 0)] -= 0.15;
        m[(2, 0)] += 0.15;
        let far = StochasticMatrix::new(m).unwrap();
        assert!(matches!(verify_classical_uniqueness_robustness(&far), Err(Error::TooFarFromT { .. })));
        let mut rng = seeded_rng(1);
        for _ in 0..10 {
            let s = random_near_tridiagonal(5, CLASSICAL_RADIUS, &mut rng).unwrap();
            assert!(verify_classical_uniqueness_robustness(&s).unwrap().unique());
        }
    }

    #[test]
    fn quantum_robustness_at_reference() {
        let inst = quantum_counterexample(4).unwrap();
        let r = verify_quantum_uniqueness_robustness(&inst.channels[0]).unwrap();
        assert!(r.unique());
        assert!(r.certificate < 1e-12);
        let mut rng = seeded_rng(2);
        let (m, cert) = perturb_embedded_chain(4, quantum_radius(4), &mut rng).unwrap();
        assert!(cert <= quantum_radius(4));
        assert!(verify_quantum_uniqueness_robustness(&m).unwrap().unique());
    }

    #[test]
    fn bipartite_trilemma() {
        let (inst, candidates) = bipartite_counterexample(4, 2).unwrap();
        assert!(inst.verify().is_ok());
        assert_eq!(candidates.len(), 3);
        assert!(candidates.iter().all(|c| !c.exceeded.is_empty()));
    }

    #[test]
    fn linear_fix_examples() {
        let v = linalg::ket(3, 1);
        let id = linalg::identity(3);
        let r = fix_linear_map(&v, &id, &LinearBasis::Orthonormal).unwrap();
        assert_eq!(r.map, id);
        let w = CMatrix::from_row_slice(3, 3, &[
            cr(0.0), cr(1.0), cr(0.0),
            cr(1.0), cr(1.0), cr(0.0),
            cr(0.0), cr(0.0), cr(1.0),
        ]);
        let a = id.clone() * cr(0.9);
        let r = fix_linear_map(&v, &a, &LinearBasis::Custom(w)).unwrap();
        assert!((&r.map * &v - &v).norm() < 1e-15);
        assert!(r.distance <= r.basis_constant * r.epsilon + 1e-12);
        assert!(linear_contrast(0.01).unwrap().verify().is_ok());
    }

    #[test]
    fn log_log_fit_recovers_power() {
        let xs = [1e-1, 1e-2, 1e-3];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.sqrt()).collect();
        let (a, b) = log_log_fit(&xs, &ys).unwrap();
        assert!((a - 0.5).abs() < 1e-12 && (b - 3f64.ln()).abs() < 1e-12);
    }
}
