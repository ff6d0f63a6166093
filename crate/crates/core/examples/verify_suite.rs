//! Run a verification suite on a small grid and print the CSV report.
//!
//! `cargo run --example verify_suite -- unitary` picks another suite.

use fixforge::harness::{run_suite, SuiteConfig};

fn main() -> fixforge::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "general".into());
    let mut cfg = SuiteConfig::default_for(&name)?;
    cfg.dims.truncate(3);
    cfg.n = 2;
    let report = run_suite(&name, &cfg)?;
    print!("{}", report.csv_string()?);
    eprintln!("{}: {} records, pass = {}, {:.2}s", report.suite, report.records.len(), report.pass, report.wall_time_secs);
    for fit in &report.fits {
        eprintln!("fit {}: a = {:.3}", fit.class, fit.epsilon_exponent);
    }
    Ok(())
}
