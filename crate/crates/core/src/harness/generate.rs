use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classical::{ProbabilityVector, StochasticMatrix};
use crate::error::{Error, Result};
use crate::fixers::local::local_deviation;
use crate::fixers::result::deviation;
use crate::linalg::{self, cr, CMatrix, CVector};
use crate::quantum::random::{random_channel, random_spectrum, state_in_basis, unitary_in_basis};
use crate::quantum::{
    convex_combine, replacement_channel, trace_distance_matrices, Channel, DensityMatrix, MixedUnitaryChannel, PureState,
};

/// Instance families the generator and the suites know about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceClass {
    General,
    Classical,
    Unitary,
    MixedUnitary,
    Unital,
    LocalPure,
}

impl InstanceClass {
    pub const ALL: [InstanceClass; 6] = [
        InstanceClass::General,
        InstanceClass::Classical,
        InstanceClass::Unitary,
        InstanceClass::MixedUnitary,
        InstanceClass::Unital,
        InstanceClass::LocalPure,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            InstanceClass::General => "general",
            InstanceClass::Classical => "classical",
            InstanceClass::Unitary => "unitary",
            InstanceClass::MixedUnitary => "mixed_unitary",
            InstanceClass::Unital => "unital",
            InstanceClass::LocalPure => "local_pure",
        }
    }
}

impl fmt::Display for InstanceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InstanceClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        InstanceClass::ALL
            .into_iter()
            .find(|c| c.name() == key || (key == "local" && *c == InstanceClass::LocalPure))
            .ok_or_else(|| Error::InvalidInput(format!("unknown class {s:?}")))
    }
}

/// Where the perturbation of an exact pair goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Keep the state, perturb the channel.
    #[default]
    ExactThenPerturb,
    /// Keep the channel, perturb the state; the fixer runs on the measured deviation.
    PromiseMeasured,
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "exact_then_perturb" | "channel" => Ok(Strategy::ExactThenPerturb),
            "promise_measured" | "state" => Ok(Strategy::PromiseMeasured),
            other => Err(Error::InvalidInput(format!("unknown strategy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub class: InstanceClass,
    /// Total dimension; for `local_pure` this is `d_B` unless `dims` is set.
    pub dim: usize,
    /// `(d_A, d_B)` for bipartite classes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<(usize, usize)>,
    pub epsilon_target: f64,
    pub seed: u64,
    #[serde(default)]
    pub strategy: Strategy,
}

impl InstanceSpec {
    pub fn new(class: InstanceClass, dim: usize, epsilon_target: f64, seed: u64) -> Self {
        Self { class, dim, dims: None, epsilon_target, seed, strategy: Strategy::default() }
    }

    pub fn bipartite(d_a: usize, d_b: usize, epsilon_target: f64, seed: u64) -> Self {
        Self {
            class: InstanceClass::LocalPure,
            dim: d_a * d_b,
            dims: Some((d_a, d_b)),
            epsilon_target,
            seed,
            strategy: Strategy::default(),
        }
    }

    pub fn with_strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = strategy;
        self
    }

    fn bipartition(&self) -> (usize, usize) {
        self.dims.unwrap_or((self.dim, self.dim))
    }
}

/// An input pair for one of the fixers.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum Instance {
    General { state: DensityMatrix, channel: Channel },
    Classical { distribution: ProbabilityVector, matrix: StochasticMatrix },
    Unitary { state: DensityMatrix, #[serde(with = "crate::io::cmatrix")] unitary: CMatrix },
    MixedUnitary { state: DensityMatrix, mixture: MixedUnitaryChannel },
    Unital { state: DensityMatrix, channel: Channel },
    LocalPure { state: PureState, channel_b: Channel },
}

impl Instance {
    pub fn class(&self) -> InstanceClass {
        match self {
            Instance::General { .. } => InstanceClass::General,
            Instance::Classical { .. } => InstanceClass::Classical,
            Instance::Unitary { .. } => InstanceClass::Unitary,
            Instance::MixedUnitary { .. } => InstanceClass::MixedUnitary,
            Instance::Unital { .. } => InstanceClass::Unital,
            Instance::LocalPure { .. } => InstanceClass::LocalPure,
        }
    }

    /// Dimension of the system the state lives on.
    pub fn dim(&self) -> usize {
        match self {
            Instance::General { state, .. }
            | Instance::Unitary { state, .. }
            | Instance::MixedUnitary { state, .. }
            | Instance::Unital { state, .. } => state.dim(),
            Instance::Classical { distribution, .. } => distribution.dim(),
            Instance::LocalPure { state, .. } => state.dim(),
        }
    }

    /// Environment dimension of the channel's Stinespring dilation, or the number of components.
    pub fn env_dim(&self) -> usize {
        match self {
            Instance::General { channel, .. } | Instance::Unital { channel, .. } => channel.kraus_count(),
            Instance::LocalPure { channel_b, .. } => channel_b.kraus_count(),
            Instance::Classical { .. } | Instance::Unitary { .. } => 1,
            Instance::MixedUnitary { mixture, .. } => mixture.components().len(),
        }
    }

    /// The approximate fixed point deviation `½‖N(ρ) − ρ‖₁` (total variation for classical pairs).
    pub fn deviation(&self) -> Result<f64> {
        match self {
            Instance::General { state, channel } | Instance::Unital { state, channel } => deviation(channel, state),
            Instance::Classical { distribution, matrix } => matrix.apply(distribution)?.tv_distance(distribution),
            Instance::Unitary { state, unitary } => {
                trace_distance_matrices(&linalg::conjugate(unitary, state.matrix()), state.matrix())
            }
            Instance::MixedUnitary { state, mixture } => {
                trace_distance_matrices(&mixture.apply(state.matrix()), state.matrix())
            }
            Instance::LocalPure { state, channel_b } => {
                let (d_a, _) = state.dims().ok_or_else(|| Error::InvalidInput("pure state without bipartition".into()))?;
                local_deviation(state, d_a, channel_b)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratedInstance {
    pub spec: InstanceSpec,
    pub instance: Instance,
    pub epsilon_measured: f64,
    /// Perturbation strength that produced the instance.
    pub eta: f64,
}

/// Lower and upper edges of the accepted band, as fractions of the target.
pub const BAND: (f64, f64) = (0.5, 1.0);
const MAX_SEARCH_STEPS: usize = 80;

fn dirichlet<R: Rng>(k: usize, rng: &mut R) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// Traceless Hermitian with unit trace norm.
fn traceless_kick<R: Rng>(d: usize, rng: &mut R) -> CMatrix {
    let a = state_in_basis(&dirichlet(d, rng), &linalg::haar_random_unitary_with(d, rng));
    let b = state_in_basis(&dirichlet(d, rng), &linalg::haar_random_unitary_with(d, rng));
    let k = a.matrix() - b.matrix();
    let n = linalg::trace_norm(&k);
    if n > 0.0 {
        k.unscale(n)
    } else {
        k
    }
}

fn kicked_state(rho: &DensityMatrix, kick: &CMatrix, eta: f64) -> Result<DensityMatrix> {
    DensityMatrix::repaired(rho.matrix() + kick * cr(eta))
}

/// Stationary chain with proposal `1/d` and acceptance `min(1, p_x/p_y)`.
fn metropolis(p: &[f64]) -> DMatrix<f64> {
    let d = p.len();
    let mut m = DMatrix::zeros(d, d);
    for y in 0..d {
        let mut stay = 1.0;
        for x in 0..d {
            if x != y {
                let a = if p[y] > 0.0 { (p[x] / p[y]).min(1.0) } else { 1.0 };
                m[(x, y)] = a / d as f64;
                stay -= m[(x, y)];
            }
        }
        m[(y, y)] = stay;
    }
    m
}

fn random_stochastic<R: Rng>(d: usize, rng: &mut R) -> Result<StochasticMatrix> {
    let cols: Vec<Vec<f64>> = (0..d).map(|_| dirichlet(d, rng)).collect();
    StochasticMatrix::from_columns(&cols)
}

type Build = Box<dyn Fn(f64) -> Result<Instance> + Send + Sync>;

/// Perturbed instances indexed by strength, with the largest admissible strength.
struct Family {
    build: Build,
    max_eta: f64,
}

fn unbounded(build: Build) -> Family {
    Family { build, max_eta: f64::INFINITY }
}

/// Convex mixtures only make sense up to weight one.
fn mixing(build: Build) -> Family {
    Family { build, max_eta: 1.0 }
}

fn general_family(d: usize, strategy: Strategy, rng: &mut ChaCha8Rng) -> Result<Family> {
    let basis = linalg::haar_random_unitary_with(d, rng);
    let rho = state_in_basis(&random_spectrum(d, rng), &basis);
    let w = dirichlet(3, rng);
    let exact = convex_combine(
        &w,
        &[Channel::unitary(unitary_in_basis(&basis, rng))?, Channel::dephasing(&basis)?, replacement_channel(&rho)],
    )?
    .compressed();
    Ok(match strategy {
        Strategy::ExactThenPerturb => {
            let noise = random_channel(d, d, 2, rng);
            mixing(Box::new(move |eta| {
                let channel = convex_combine(&[1.0 - eta, eta], &[exact.clone(), noise.clone()])?.compressed();
                Ok(Instance::General { state: rho.clone(), channel })
            }))
        }
        Strategy::PromiseMeasured => {
            let kick = traceless_kick(d, rng);
            unbounded(Box::new(move |eta| {
                Ok(Instance::General { state: kicked_state(&rho, &kick, eta)?, channel: exact.clone() })
            }))
        }
    })
}

fn classical_family(d: usize, strategy: Strategy, rng: &mut ChaCha8Rng) -> Result<Family> {
    let p = dirichlet(d, rng);
    let w = dirichlet(3, rng);
    let chain = metropolis(&p);
    let pv = ProbabilityVector::new(p.clone())?;
    let exact = StochasticMatrix::new(DMatrix::from_fn(d, d, |x, y| {
        w[0] * (x == y) as u8 as f64 + w[1] * p[x] + w[2] * chain[(x, y)]
    }))?;
    Ok(match strategy {
        Strategy::ExactThenPerturb => {
            let noise = random_stochastic(d, rng)?;
            mixing(Box::new(move |eta| {
                let m = exact.matrix() * (1.0 - eta) + noise.matrix() * eta;
                Ok(Instance::Classical { distribution: pv.clone(), matrix: StochasticMatrix::new(m)? })
            }))
        }
        Strategy::PromiseMeasured => {
            let a = dirichlet(d, rng);
            let b = dirichlet(d, rng);
            unbounded(Box::new(move |eta| {
                let moved: Vec<f64> = (0..d).map(|i| (p[i] + eta * 0.5 * (a[i] - b[i])).max(0.0)).collect();
                let s: f64 = moved.iter().sum();
                let distribution = ProbabilityVector::new(moved.into_iter().map(|x| x / s).collect())?;
                Ok(Instance::Classical { distribution, matrix: exact.clone() })
            }))
        }
    })
}

fn commuting_setup(d: usize, rng: &mut ChaCha8Rng) -> (CMatrix, DensityMatrix) {
    let basis = linalg::haar_random_unitary_with(d, rng);
    let rho = state_in_basis(&random_spectrum(d, rng), &basis);
    (basis, rho)
}

fn unitary_family(d: usize, strategy: Strategy, rng: &mut ChaCha8Rng) -> Result<Family> {
    let (basis, rho) = commuting_setup(d, rng);
    let u0 = unitary_in_basis(&basis, rng);
    Ok(match strategy {
        Strategy::ExactThenPerturb => {
            let h = linalg::random_hermitian(d, rng);
            unbounded(Box::new(move |eta| {
                Ok(Instance::Unitary { state: rho.clone(), unitary: linalg::unitary_exp(&h, eta)? * &u0 })
            }))
        }
        Strategy::PromiseMeasured => {
            let kick = traceless_kick(d, rng);
            unbounded(Box::new(move |eta| {
                Ok(Instance::Unitary { state: kicked_state(&rho, &kick, eta)?, unitary: u0.clone() })
            }))
        }
    })
}

/// Up to five unitaries diagonal in the eigenbasis of `ρ`, each with its own kick direction.
fn mixture_parts(d: usize, rng: &mut ChaCha8Rng) -> (DensityMatrix, Vec<(f64, CMatrix, CMatrix)>) {
    let (basis, rho) = commuting_setup(d, rng);
    let k = rng.random_range(1..=5);
    let weights = dirichlet(k, rng);
    let parts = weights
        .into_iter()
        .map(|p| (p, unitary_in_basis(&basis, rng), linalg::random_hermitian(d, rng)))
        .collect();
    (rho, parts)
}

fn build_mixture(parts: &[(f64, CMatrix, CMatrix)], eta: f64) -> Result<MixedUnitaryChannel> {
    let total: f64 = parts.iter().map(|(p, _, _)| p).sum();
    let comps = parts
        .iter()
        .map(|(p, u, h)| Ok((p / total, linalg::unitary_exp(h, eta)? * u)))
        .collect::<Result<Vec<_>>>()?;
    MixedUnitaryChannel::new(comps)
}

fn mixed_family(d: usize, strategy: Strategy, unital: bool, rng: &mut ChaCha8Rng) -> Result<Family> {
    let (rho, parts) = mixture_parts(d, rng);
    let wrap = move |state: DensityMatrix, mixture: MixedUnitaryChannel| {
        if unital {
            Instance::Unital { state, channel: mixture.to_channel() }
        } else {
            Instance::MixedUnitary { state, mixture }
        }
    };
    Ok(match strategy {
        Strategy::ExactThenPerturb => unbounded(Box::new(move |eta| Ok(wrap(rho.clone(), build_mixture(&parts, eta)?)))),
        Strategy::PromiseMeasured => {
            let kick = traceless_kick(d, rng);
            let exact = build_mixture(&parts, 0.0)?;
            unbounded(Box::new(move |eta| Ok(wrap(kicked_state(&rho, &kick, eta)?, exact.clone()))))
        }
    })
}

/// `Ψ = Σ √λ_i e_i ⊗ f_i` of random Schmidt rank and `V = Σ |f_i ⊗ β_i⟩⟨f_i|`, with
/// `β_i = β` on the Schmidt support so that `id ⊗ N_B` fixes `Ψ`.
fn local_family(d_a: usize, d_b: usize, strategy: Strategy, rng: &mut ChaCha8Rng) -> Result<Family> {
    let env = 2;
    let rank = rng.random_range(1..=d_a.min(d_b));
    let ua = linalg::haar_random_unitary_with(d_a, rng);
    let ub = linalg::haar_random_unitary_with(d_b, rng);
    let lambdas = dirichlet(rank, rng);
    let mut psi = CVector::zeros(d_a * d_b);
    for (i, l) in lambdas.iter().enumerate() {
        psi += linalg::kron_vec(&ua.column(i).into_owned(), &ub.column(i).into_owned()) * cr(l.sqrt());
    }
    let psi = PureState::normalized(psi, Some((d_a, d_b)))?;
    let beta = linalg::random_unit_vector(env, rng);
    let mut v0 = CMatrix::zeros(d_b * env, d_b);
    for i in 0..d_b {
        let f = ub.column(i).into_owned();
        let b = if i < rank { beta.clone() } else { linalg::random_unit_vector(env, rng) };
        v0 += linalg::outer(&linalg::kron_vec(&f, &b), &f);
    }
    Ok(match strategy {
        Strategy::ExactThenPerturb => {
            let h = linalg::random_hermitian(d_b * env, rng);
            unbounded(Box::new(move |eta| {
                let v = linalg::unitary_exp(&h, eta)? * &v0;
                Ok(Instance::LocalPure { state: psi.clone(), channel_b: Channel::from_stinespring(v, d_b, env)? })
            }))
        }
        Strategy::PromiseMeasured => {
            let g = linalg::random_unit_vector(d_a * d_b, rng);
            let channel_b = Channel::from_stinespring(v0, d_b, env)?;
            unbounded(Box::new(move |eta| {
                let state = PureState::normalized(psi.vector() + &g * cr(eta), Some((d_a, d_b)))?;
                Ok(Instance::LocalPure { state, channel_b: channel_b.clone() })
            }))
        }
    })
}

fn family(spec: &InstanceSpec, rng: &mut ChaCha8Rng) -> Result<Family> {
    let d = spec.dim;
    let min = if spec.class == InstanceClass::LocalPure { 1 } else { 2 };
    if d < min {
        return Err(Error::DimensionTooSmall { d, min });
    }
    match spec.class {
        InstanceClass::General => general_family(d, spec.strategy, rng),
        InstanceClass::Classical => classical_family(d, spec.strategy, rng),
        InstanceClass::Unitary => unitary_family(d, spec.strategy, rng),
        InstanceClass::MixedUnitary => mixed_family(d, spec.strategy, false, rng),
        InstanceClass::Unital => mixed_family(d, spec.strategy, true, rng),
        InstanceClass::LocalPure => {
            let (d_a, d_b) = spec.bipartition();
            if d_a < 1 || d_b < 2 {
                return Err(Error::DimensionTooSmall { d: d_a.min(d_b), min: 2 });
            }
            local_family(d_a, d_b, spec.strategy, rng)
        }
    }
}

/// Builds an exact fixed pair of the requested class and perturbs it until the measured
/// deviation lands in `[0.5, 1]·target`. The same spec always yields the same instance.
pub fn generate_instance(spec: &InstanceSpec) -> Result<GeneratedInstance> {
    let target = spec.epsilon_target;
    if !(target >= 0.0) || !target.is_finite() {
        return Err(Error::InvalidInput(format!("epsilon target {target}")));
    }
    let mut rng = linalg::seeded_rng(spec.seed);
    let fam = family(spec, &mut rng)?;
    let done = |instance: Instance, eps: f64, eta: f64| GeneratedInstance {
        spec: spec.clone(),
        instance,
        epsilon_measured: eps,
        eta,
    };

    let exact = (fam.build)(0.0)?;
    let base = exact.deviation()?;
    if target == 0.0 {
        if base > 1e-12 {
            return Err(Error::GenerationFailed(format!("exact pair deviates by {base:.3e}")));
        }
        return Ok(done(exact, base, 0.0));
    }
    let (lo, hi) = (BAND.0 * target, BAND.1 * target);
    let aim = 0.75 * target;

    // Secant steps in log-log coordinates, safeguarded by a bracket.
    let mut eta = target.min(fam.max_eta);
    let mut below: Option<f64> = None;
    let mut above: Option<f64> = None;
    let mut prev: Option<(f64, f64)> = None;
    for _ in 0..MAX_SEARCH_STEPS {
        let inst = (fam.build)(eta)?;
        let dev = inst.deviation()?;
        if dev >= lo && dev <= hi {
            return Ok(done(inst, dev, eta));
        }
        if dev < lo {
            below = Some(below.map_or(eta, |b: f64| b.max(eta)));
        } else {
            above = Some(above.map_or(eta, |a: f64| a.min(eta)));
        }
        let order = match prev {
            Some((pe, pd)) if pd > 0.0 && dev > 0.0 && (eta / pe).ln().abs() > 1e-12 => {
                ((dev / pd).ln() / (eta / pe).ln()).clamp(0.5, 3.0)
            }
            _ => 1.0,
        };
        prev = Some((eta, dev));
        let mut next = if dev > 0.0 { eta * (aim / dev).powf(1.0 / order) } else { eta * 10.0 };
        if let (Some(b), Some(a)) = (below, above) {
            if !(next > b && next < a) {
                next = (a * b).sqrt();
            }
        }
        if !next.is_finite() || next <= 0.0 || (eta >= fam.max_eta && next >= eta) {
            break;
        }
        eta = next.min(fam.max_eta);
    }
    Err(Error::GenerationFailed(format!(
        "{} d={} target {target:.3e}: deviation never entered [{lo:.3e}, {hi:.3e}]",
        spec.class, spec.dim
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_target_gives_exact_pair() {
        for class in InstanceClass::ALL {
            let spec = if class == InstanceClass::LocalPure {
                InstanceSpec::bipartite(2, 3, 0.0, 11)
            } else {
                InstanceSpec::new(class, 3, 0.0, 11)
            };
            let g = generate_instance(&spec).unwrap();
            assert!(g.epsilon_measured <= 1e-12, "{class}: {}", g.epsilon_measured);
        }
    }

    #[test]
    fn lands_in_band_for_every_class_and_strategy() {
        for strategy in [Strategy::ExactThenPerturb, Strategy::PromiseMeasured] {
            for class in InstanceClass::ALL {
                for target in [1e-3, 1e-7] {
                    let spec = if class == InstanceClass::LocalPure {
                        InstanceSpec::bipartite(3, 3, target, 5)
                    } else {
                        InstanceSpec::new(class, 4, target, 5)
                    }
                    .with_strategy(strategy);
                    let g = generate_instance(&spec).unwrap();
                    assert!(
                        g.epsilon_measured >= 0.5 * target && g.epsilon_measured <= target,
                        "{class} {strategy:?} {target}: {}",
                        g.epsilon_measured
                    );
                }
            }
        }
    }

    #[test]
    fn same_spec_same_instance() {
        let spec = InstanceSpec::new(InstanceClass::Unitary, 4, 1e-3, 7);
        let a = serde_json::to_string(&generate_instance(&spec).unwrap()).unwrap();
        let b = serde_json::to_string(&generate_instance(&spec).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn class_names_round_trip() {
        for c in InstanceClass::ALL {
            assert_eq!(c.name().parse::<InstanceClass>().unwrap(), c);
        }
        assert_eq!("local-pure".parse::<InstanceClass>().unwrap(), InstanceClass::LocalPure);
        assert!("bogus".parse::<InstanceClass>().is_err());
    }
}
