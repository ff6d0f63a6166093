//! Build every named construction and print its re-verified facts.

use fixforge::counterexamples::{bipartite_counterexample, named_counterexample, COUNTEREXAMPLE_NAMES};

fn main() -> fixforge::Result<()> {
    for name in COUNTEREXAMPLE_NAMES {
        let inst = named_counterexample(name, 5, 0.01)?;
        println!("{name} (ε = {:.3e})", inst.epsilon);
        for f in &inst.claimed_facts {
            println!("  [{}] {}: {:.6e}", if f.holds() { "ok" } else { "FAIL" }, f.description, f.value);
        }
    }
    let (_, candidates) = bipartite_counterexample(4, 2)?;
    for c in candidates {
        println!("local candidate {}: fails {}", c.label, c.exceeded.join(", "));
    }
    Ok(())
}
