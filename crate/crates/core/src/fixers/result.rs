use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::quantum::{Channel, DensityMatrix, DiamondBounds, MixedUnitaryChannel, PureState};

/// Slack on every certified inequality.
pub const BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelClass {
    General,
    Unitary,
    MixedUnitary,
    Unital,
    LocalPure,
}

impl ChannelClass {
    pub fn name(&self) -> &'static str {
        match self {
            ChannelClass::General => "general",
            ChannelClass::Unitary => "unitary",
            ChannelClass::MixedUnitary => "mixed_unitary",
            ChannelClass::Unital => "unital",
            ChannelClass::LocalPure => "local_pure",
        }
    }
}

impl std::str::FromStr for ChannelClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "general" => ChannelClass::General,
            "unitary" => ChannelClass::Unitary,
            "mixed_unitary" | "mixed-unitary" => ChannelClass::MixedUnitary,
            "unital" => ChannelClass::Unital,
            "local_pure" | "local-pure" | "local" => ChannelClass::LocalPure,
            other => return Err(Error::InvalidInput(format!("unknown channel class {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FixedState {
    Mixed { state: DensityMatrix },
    Pure { vector: Vec<[f64; 2]>, dims: (usize, usize) },
}

impl FixedState {
    pub fn pure(psi: &PureState) -> Self {
        FixedState::Pure { vector: crate::io::vector_to_entries(psi.vector()), dims: psi.dims().unwrap_or((psi.dim(), 1)) }
    }

    pub fn density(&self) -> DensityMatrix {
        match self {
            FixedState::Mixed { state } => state.clone(),
            FixedState::Pure { vector, .. } => {
                PureState::normalized(crate::io::entries_to_vector(vector), None).expect("stored unit vector").density()
            }
        }
    }

    pub fn is_pure(&self) -> bool {
        matches!(self, FixedState::Pure { .. })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum FixedChannel {
    General {
        channel: Channel,
    },
    Unitary {
        #[serde(with = "crate::io::cmatrix")]
        unitary: CMatrix,
    },
    MixedUnitary {
        mixture: MixedUnitaryChannel,
    },
    Unital {
        channel: Channel,
    },
    /// `id_A ⊗ M_B`.
    Local {
        d_a: usize,
        channel_b: Channel,
    },
}

impl FixedChannel {
    pub fn class(&self) -> ChannelClass {
        match self {
            FixedChannel::General { .. } => ChannelClass::General,
            FixedChannel::Unitary { .. } => ChannelClass::Unitary,
            FixedChannel::MixedUnitary { .. } => ChannelClass::MixedUnitary,
            FixedChannel::Unital { .. } => ChannelClass::Unital,
            FixedChannel::Local { .. } => ChannelClass::LocalPure,
        }
    }

    /// The channel acting on the full space.
    pub fn to_channel(&self) -> Channel {
        match self {
            FixedChannel::General { channel } | FixedChannel::Unital { channel } => channel.clone(),
            FixedChannel::Unitary { unitary } => Channel::unitary(unitary.clone()).expect("validated unitary"),
            FixedChannel::MixedUnitary { mixture } => mixture.to_channel(),
            FixedChannel::Local { d_a, channel_b } => local_channel(*d_a, channel_b),
        }
    }

    /// Structural check that the channel belongs to its class.
    pub fn class_predicate(&self) -> bool {
        match self {
            FixedChannel::General { .. } => true,
            FixedChannel::Unitary { unitary } => linalg::is_unitary(unitary, BOUND_SLACK),
            FixedChannel::MixedUnitary { mixture } => {
                mixture.components().iter().all(|(_, u)| linalg::is_unitary(u, BOUND_SLACK))
            }
            FixedChannel::Unital { channel } => crate::quantum::is_unital(channel, BOUND_SLACK),
            FixedChannel::Local { d_a, channel_b } => {
                is_local_channel(&local_channel(*d_a, channel_b), *d_a, channel_b.dim_in(), BOUND_SLACK)
            }
        }
    }
}

/// `id_A ⊗ N_B` with Kraus operators `1 ⊗ K`.
pub fn local_channel(d_a: usize, channel_b: &Channel) -> Channel {
    let id = linalg::identity(d_a);
    Channel::from_kraus(channel_b.kraus().iter().map(|k| id.kronecker(k)).collect()).expect("tensor of channels")
}

/// Whether a channel on `A ⊗ B` equals `id_A ⊗ M_B` for the `M_B` it induces on `B`.
pub fn is_local_channel(full: &Channel, d_a: usize, d_b: usize, tol: f64) -> bool {
    if full.dim_in() != d_a * d_b || full.dim_out() != d_a * d_b {
        return false;
    }
    // Candidate M_B(X) = Tr_A N(|0⟩⟨0| ⊗ X), assembled from its action on matrix units.
    let mut choi_b = CMatrix::zeros(d_b * d_b, d_b * d_b);
    let e00 = linalg::projector(&linalg::ket(d_a, 0));
    for i in 0..d_b {
        for j in 0..d_b {
            let unit = linalg::outer(&linalg::ket(d_b, i), &linalg::ket(d_b, j));
            let Ok(out) = full.apply(&e00.kronecker(&unit)) else { return false };
            let Ok(reduced) = linalg::partial_trace(&out, linalg::Subsystem::A, (d_a, d_b)) else { return false };
            choi_b += reduced.kronecker(&unit);
        }
    }
    let Ok(m_b) = Channel::from_choi(choi_b, d_b, d_b) else { return false };
    let candidate = local_channel(d_a, &m_b);
    linalg::operator_norm(&(candidate.choi() - full.choi())) <= tol
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormTag {
    /// Half the diamond norm of the channel difference.
    Diamond,
    /// Operator norm of the unitary difference `‖V − U‖`.
    Operator,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelCertificate {
    pub norm: NormTag,
    /// Certified upper bound in the tagged norm.
    pub upper: f64,
    /// Bounds on half the diamond distance, for comparison across classes.
    pub diamond: DiamondBounds,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixResult {
    pub class: ChannelClass,
    pub sigma: FixedState,
    pub fixed_channel: FixedChannel,
    pub epsilon_used: f64,
    pub state_bound_claimed: f64,
    pub channel_bound_claimed: f64,
    pub state_distance_measured: f64,
    pub channel_certificate: ChannelCertificate,
    /// `½‖M(σ) − σ‖₁`.
    pub fixed_point_residual: f64,
    /// Set when the claimed bound is at least 1 and a canonical pair was returned.
    pub trivial: bool,
    pub notes: Vec<String>,
}

impl FixResult {
    /// Violated invariants, empty when the result is sound.
    pub fn violations(&self) -> Vec<String> {
        self.violations_with(BOUND_SLACK)
    }

    /// As [`FixResult::violations`] with a custom tolerance on the fixed point residual.
    pub fn violations_with(&self, residual_tol: f64) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.fixed_point_residual <= residual_tol) {
            v.push(format!("fixed point residual {:.3e}", self.fixed_point_residual));
        }
        if !(self.state_distance_measured <= self.state_bound_claimed + BOUND_SLACK) {
            v.push(format!(
                "state distance {:.6e} exceeds claimed {:.6e}",
                self.state_distance_measured, self.state_bound_claimed
            ));
        }
        if !(self.channel_certificate.upper <= self.channel_bound_claimed + BOUND_SLACK) {
            v.push(format!(
                "channel certificate {:.6e} exceeds claimed {:.6e}",
                self.channel_certificate.upper, self.channel_bound_claimed
            ));
        }
        let d = &self.channel_certificate.diamond;
        if !(d.lower <= d.upper + 1e-12) {
            v.push(format!("diamond bounds inverted: {:.6e} > {:.6e}", d.lower, d.upper));
        }
        if self.fixed_channel.class() != self.class || !self.fixed_channel.class_predicate() {
            v.push(format!("output channel fails the {} class predicate", self.class.name()));
        }
        v
    }

    pub fn is_sound(&self) -> bool {
        self.violations().is_empty()
    }
}

/// Uses the measured deviation when `supplied` is absent; rejects broken promises.
pub fn resolve_epsilon(measured: f64, supplied: Option<f64>) -> Result<f64> {
    match supplied {
        None => Ok(measured),
        Some(e) if !(e >= 0.0) || !e.is_finite() => Err(Error::InvalidInput(format!("epsilon {e}"))),
        Some(e) if measured > e + BOUND_SLACK => Err(Error::PromiseViolated { measured, supplied: e }),
        Some(e) => Ok(e),
    }
}

/// `½‖N(ρ) − ρ‖₁`.
pub fn deviation(n: &Channel, rho: &DensityMatrix) -> Result<f64> {
    crate::quantum::trace_distance_matrices(&n.apply(rho.matrix())?, rho.matrix())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::seeded_rng;
    use crate::quantum::random::random_channel;

    #[test]
    fn local_predicate() {
        let mut rng = seeded_rng(1);
        let nb = random_channel(2, 2, 2, &mut rng);
        assert!(is_local_channel(&local_channel(3, &nb), 3, 2, 1e-9));
        let joint = random_channel(6, 6, 2, &mut rng);
        assert!(!is_local_channel(&joint, 3, 2, 1e-9));
    }

    #[test]
    fn epsilon_resolution() {
        assert_eq!(resolve_epsilon(0.1, None).unwrap(), 0.1);
        assert_eq!(resolve_epsilon(0.1, Some(0.2)).unwrap(), 0.2);
        assert!(matches!(resolve_epsilon(0.3, Some(0.2)), Err(Error::PromiseViolated { .. })));
        assert!(resolve_epsilon(0.0, Some(-1.0)).is_err());
    }
}
