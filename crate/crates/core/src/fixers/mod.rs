//! Constructive fixers: given a state `ρ` that a channel `N` almost fixes, produce a nearby
//! pair `(σ, M)` with `M(σ) = σ` and `M` in the same structural class as `N`.
//!
//! | class          | state bound          | channel bound        |
//! |----------------|----------------------|----------------------|
//! | general        | `√ε`                 | `√ε`                 |
//! | unitary        | `4 d^{5/4} √ε`       | `4 d^{5/4} √ε`       |
//! | mixed unitary  | `4 d² ε^{1/5}`       | `7 d² ε^{1/5}`       |
//! | unital         | `7 d^{5/3} ε^{1/6}`  | `7 d^{5/3} ε^{1/6}`  |
//! | local, pure    | `7 √d* ε^{1/3}`      | `7 √d* ε^{1/3}`      |

pub mod general;
pub mod lemmas;
pub mod local;
pub mod mixed_unitary;
pub mod result;
pub mod unital;
pub mod unitary;

pub use general::fix_general;
pub use lemmas::{
    approximate_fixed_parts, cumulative_projection_deviation, generalized_depolarizing_pullback,
    mixture_component_deviation, GenDepInput, GenDepResult,
};
pub use local::fix_local_pure;
pub use mixed_unitary::fix_mixed_unitary;
pub use result::{
    is_local_channel, local_channel, ChannelCertificate, ChannelClass, FixResult, FixedChannel, FixedState, NormTag,
    BOUND_SLACK,
};
pub use unital::fix_unital;
pub use unitary::fix_unitary;

/// `(f, g)` for a class at dimension `d` (for the local class, `d` is `min(d_A, d_B)`).
pub fn claimed_bounds(class: ChannelClass, d: usize, eps: f64) -> (f64, f64) {
    match class {
        ChannelClass::General => (eps.sqrt(), eps.sqrt()),
        ChannelClass::Unitary => {
            let b = unitary::unitary_bound(d, eps);
            (b, b)
        }
        ChannelClass::MixedUnitary => mixed_unitary::mixed_unitary_bounds(d, eps),
        ChannelClass::Unital => {
            let b = unital::unital_bound(d, eps);
            (b, b)
        }
        ChannelClass::LocalPure => {
            let b = local::local_bound((d, d), eps);
            (b, b)
        }
    }
}
