use fixforge::fixers::fix_unital;
use fixforge::harness::{generate_instance, Instance, InstanceClass, InstanceSpec};
use fixforge::quantum::fixed_point::unitality_defect;

fn main() -> fixforge::Result<()> {
    for d in [2, 4, 8] {
        let g = generate_instance(&InstanceSpec::new(InstanceClass::Unital, d, 1e-12, 5))?;
        let Instance::Unital { state, channel } = &g.instance else { unreachable!() };
        let r = fix_unital(state, channel, None)?;
        let m = r.fixed_channel.to_channel();
        println!(
            "d={d}: eps {:.2e}, state {:.2e}, channel {:.2e}, bound {:.3}, ‖M(1) − 1‖ = {:.1e}, residual {:.1e}",
            r.epsilon_used,
            r.state_distance_measured,
            r.channel_certificate.upper,
            r.state_bound_claimed,
            unitality_defect(&m)?,
            r.fixed_point_residual
        );
    }
    Ok(())
}
