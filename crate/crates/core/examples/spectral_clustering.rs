use fixforge::clustering::{cluster_bound, cluster_spectrum, cluster_state};
use fixforge::quantum::random::random_density;
use fixforge::quantum::{trace_distance, DensityMatrix};

fn main() -> fixforge::Result<()> {
    let rho = DensityMatrix::diagonal(&[0.5, 0.3, 0.2])?;
    for delta in [0.05, 0.15, 0.35] {
        let dec = cluster_spectrum(&rho, delta);
        let sigma = cluster_state(&dec);
        println!(
            "δ = {delta:.2}: clusters {:?}, averages {:?}, ½‖σ − ρ‖₁ = {:.3} ≤ {:.3}",
            dec.clusters,
            dec.averages,
            trace_distance(&sigma, &rho)?,
            cluster_bound(3, delta)
        );
    }

    let mut rng = fixforge::linalg::seeded_rng(8);
    let rho = random_density(8, &mut rng);
    let dec = cluster_spectrum(&rho, 0.02);
    println!("random d=8 state at δ = 0.02: {} clusters, gaps {:?}", dec.len(), dec.gaps());
    Ok(())
}
