//! A qubit state almost invariant under a small rotation. The repaired state depends only on
//! the input state and ε, never on which unitary was supplied.

use fixforge::fixers::{fix_unitary, FixedChannel};
use fixforge::linalg::{self, c, CMatrix};
use fixforge::quantum::DensityMatrix;

fn rotation(theta: f64) -> CMatrix {
    let (s, co) = theta.sin_cos();
    CMatrix::from_row_slice(2, 2, &[c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0)])
}

fn main() -> fixforge::Result<()> {
    let rho = DensityMatrix::diagonal(&[0.6, 0.4])?;
    let r = fix_unitary(&rho, &rotation(1e-4), None)?;
    println!("eps {:.3e}, bound {:.3e}", r.epsilon_used, r.state_bound_claimed);
    println!("‖σ − ρ‖ = {:.3e}, ‖V − U‖ = {:.3e}", r.state_distance_measured, r.channel_certificate.upper);
    if let FixedChannel::Unitary { unitary: v } = &r.fixed_channel {
        let sigma = r.sigma.density();
        let comm = v * sigma.matrix() - sigma.matrix() * v;
        println!("‖[V, σ]‖ = {:.1e}", comm.norm());
    }

    let other = fix_unitary(&rho, &linalg::identity(2), Some(r.epsilon_used))?;
    println!("same σ for a different unitary: {}", other.sigma.density().matrix() == r.sigma.density().matrix());
    Ok(())
}
