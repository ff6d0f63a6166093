//! One channel in three representations, and certified bounds on the distance between channels.

use fixforge::linalg::seeded_rng;
use fixforge::quantum::random::{random_channel, random_density};
use fixforge::quantum::{convex_combine, diamond_distance_bounds, replacement_channel, trace_distance_matrices, RepresentationKind};

fn main() -> fixforge::Result<()> {
    let mut rng = seeded_rng(1);
    let n = random_channel(3, 3, 2, &mut rng);
    let rho = random_density(3, &mut rng);
    let reference = n.apply(rho.matrix())?;
    for kind in [RepresentationKind::Kraus, RepresentationKind::Stinespring, RepresentationKind::Choi] {
        let out = n.convert(kind)?.apply(rho.matrix())?;
        println!("{kind:?}: disagreement {:.1e}", trace_distance_matrices(&out, &reference)?);
    }

    let r = replacement_channel(&random_density(3, &mut rng));
    for t in [0.01, 0.1, 0.5] {
        let m = convex_combine(&[1.0 - t, t], &[n.clone(), r.clone()])?;
        let b = diamond_distance_bounds(&m, &n)?;
        println!("mix t = {t}: {:.4} ≤ ½‖M − N‖⋄ ≤ {:.4} ({})", b.lower, b.upper, b.witnesses.join("; "));
    }
    println!("{}", serde_json::to_string(&n.convert(RepresentationKind::Kraus)?)?.chars().take(120).collect::<String>());
    Ok(())
}
