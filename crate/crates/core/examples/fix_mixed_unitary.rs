//! Mixed-unitary channels: the repaired channel is again a mixture of unitaries.

use fixforge::fixers::{fix_mixed_unitary, FixedChannel};
use fixforge::harness::{generate_instance, Instance, InstanceClass, InstanceSpec};

fn main() -> fixforge::Result<()> {
    for (d, eps) in [(2, 1e-9), (4, 1e-11), (6, 1e-13)] {
        let g = generate_instance(&InstanceSpec::new(InstanceClass::MixedUnitary, d, eps, 3))?;
        let Instance::MixedUnitary { state, mixture } = &g.instance else { unreachable!() };
        let r = fix_mixed_unitary(state, mixture, None)?;
        let parts = match &r.fixed_channel {
            FixedChannel::MixedUnitary { mixture } => mixture.components().len(),
            _ => 0,
        };
        println!(
            "d={d} components {} -> {parts}: state {:.2e} / {:.2e}, channel {:.2e} / {:.2e}",
            mixture.components().len(),
            r.state_distance_measured,
            r.state_bound_claimed,
            r.channel_certificate.upper,
            r.channel_bound_claimed
        );
        for note in &r.notes {
            println!("  note: {note}");
        }
    }
    Ok(())
}
