//! The classical fixer on a leaking two-state chain and on generated chains up to d = 64.

use fixforge::classical::{fix_classical, ProbabilityVector, StochasticMatrix};
use fixforge::harness::{generate_instance, Instance, InstanceClass, InstanceSpec};

fn main() -> fixforge::Result<()> {
    // Columns are the conditional distributions; state 0 leaks 2% into the absorbing state 1.
    let t = StochasticMatrix::from_columns(&[vec![0.98, 0.02], vec![0.0, 1.0]])?;
    let p = ProbabilityVector::new(vec![1.0, 0.0])?;
    let r = fix_classical(&p, &t, None)?;
    println!("leak: eps {:.3}, Q = {:?}", r.epsilon_used, r.q.entries());
    println!("  ½‖Q − P‖₁ = {:.4}, ½‖S − T‖ = {:.4}, bound {:.4}", r.state_distance, r.channel_distance, r.bound_claimed);

    for d in [4, 16, 64] {
        let g = generate_instance(&InstanceSpec::new(InstanceClass::Classical, d, 1e-4, d as u64))?;
        let Instance::Classical { distribution, matrix } = &g.instance else { unreachable!() };
        let r = fix_classical(distribution, matrix, None)?;
        println!(
            "d={d:>2}: eps {:.2e} -> state {:.2e}, channel {:.2e}, residual {:.1e}",
            r.epsilon_used, r.state_distance, r.channel_distance, r.fixed_point_residual
        );
    }
    Ok(())
}
