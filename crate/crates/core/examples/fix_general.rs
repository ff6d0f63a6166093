//! Repair an amplitude-damped qubit and a random generated instance with the general fixer.

use fixforge::fixers::fix_general;
use fixforge::harness::{generate_instance, Instance, InstanceClass, InstanceSpec};
use fixforge::linalg::{cr, CMatrix};
use fixforge::quantum::{Channel, DensityMatrix};

fn damping(gamma: f64) -> fixforge::Result<Channel> {
    let k0 = CMatrix::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), cr((1.0 - gamma).sqrt())]);
    let k1 = CMatrix::from_row_slice(2, 2, &[cr(0.0), cr(gamma.sqrt()), cr(0.0), cr(0.0)]);
    Channel::from_kraus(vec![k0, k1])
}

fn main() -> fixforge::Result<()> {
    let rho = DensityMatrix::diagonal(&[0.6, 0.4])?;
    let r = fix_general(&rho, &damping(0.01)?, None)?;
    println!("amplitude damping: eps = {:.4e}", r.epsilon_used);
    println!("  state moved {:.4e} (bound {:.4e})", r.state_distance_measured, r.state_bound_claimed);
    println!(
        "  channel moved at most {:.4e}, at least {:.4e} (bound {:.4e})",
        r.channel_certificate.upper, r.channel_certificate.diamond.lower, r.channel_bound_claimed
    );
    println!("  residual ½‖M(σ) − σ‖₁ = {:.2e}", r.fixed_point_residual);

    let g = generate_instance(&InstanceSpec::new(InstanceClass::General, 5, 1e-3, 11))?;
    if let Instance::General { state, channel } = &g.instance {
        let r = fix_general(state, channel, None)?;
        println!("random d=5 instance: eps = {:.4e}, violations: {:?}", g.epsilon_measured, r.violations());
    }
    Ok(())
}
