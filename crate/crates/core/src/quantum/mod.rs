//! States, channels in Kraus, Stinespring and Choi form, and distances between them.

pub mod channel;
pub mod distance;
pub mod embed;
pub mod fixed_point;
pub mod mixed_unitary;
pub mod random;
pub mod state;

pub use channel::{
    compose, convex_combine, dephasing_channel, replacement_channel, Channel, Representation, RepresentationKind,
};
pub use distance::{diamond_distance_bounds, trace_distance, trace_distance_matrices, DiamondBounds};
pub use embed::{embed_classical_channel, embed_classical_state};
pub use fixed_point::{
    fixed_point_space_dimension, invariant_subspace_residual, is_unital, unique_fixed_point, MAX_ITERATIONS,
};
pub use mixed_unitary::MixedUnitaryChannel;
pub use state::{DensityMatrix, PureState};
