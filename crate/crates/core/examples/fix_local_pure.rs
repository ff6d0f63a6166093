//! A nearly maximally entangled two-qubit state under a slightly tilted unitary on B.
//! The fix keeps the state pure and the channel of the form id_A ⊗ M_B.

use fixforge::fixers::fix_local_pure;
use fixforge::linalg::{self, c, CVector};
use fixforge::quantum::{Channel, PureState};

fn main() -> fixforge::Result<()> {
    let a = 0.5f64.sqrt();
    let psi = PureState::normalized(
        CVector::from_vec(vec![c(a + 1e-3, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(a, 0.0)]),
        Some((2, 2)),
    )?;
    let h = linalg::random_hermitian(2, &mut linalg::seeded_rng(4));
    let n_b = Channel::unitary(linalg::unitary_exp(&h, 1e-4)?)?;
    let r = fix_local_pure(&psi, &n_b, None)?;
    println!("eps {:.3e}, bound {:.3e}", r.epsilon_used, r.state_bound_claimed);
    println!("state moved {:.3e}, channel moved {:.3e}", r.state_distance_measured, r.channel_certificate.upper);
    println!("σ pure: {}, residual {:.1e}", r.sigma.is_pure(), r.fixed_point_residual);
    println!("output acts as identity on A: {}", r.fixed_channel.class_predicate());
    Ok(())
}
