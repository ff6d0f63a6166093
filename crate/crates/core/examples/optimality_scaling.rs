//! The general fixer on the optimality family: achieved distance against ε on a log-log scale.

use fixforge::counterexamples::optimality_scaling;

fn main() -> fixforge::Result<()> {
    let eps: Vec<f64> = (1..=6).map(|k| 10f64.powi(-k)).collect();
    let report = optimality_scaling(&eps)?;
    println!("{:>8} {:>12} {:>12} {:>12}", "eps", "deviation", "achieved", "√ε");
    for p in &report.points {
        println!("{:>8.0e} {:>12.4e} {:>12.4e} {:>12.4e}", p.epsilon, p.measured_deviation, p.achieved, p.epsilon.sqrt());
    }
    println!("slope {:.4}, intercept {:.4}", report.slope, report.intercept);
    Ok(())
}
