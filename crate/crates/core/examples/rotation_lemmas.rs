//! Near-identity unitaries that carry one subspace, frame or projection family onto a nearby one.

use fixforge::linalg::{self, seeded_rng};
use fixforge::rotations::{align_into_subspace, align_projection, align_projection_family, align_vectors, LeakMode};

fn main() -> fixforge::Result<()> {
    let mut rng = seeded_rng(2);
    let d = 6;
    let q = linalg::haar_random_unitary_with(d, &mut rng);
    let w = linalg::unitary_exp(&linalg::random_hermitian(d, &mut rng), 1e-2)?;

    let e = linalg::projector_from_columns(&q.columns(0, 2).into_owned());
    let f = linalg::conjugate(&w, &e);
    let r = align_projection(&e, &f)?;
    println!("projection:   ‖U − 1‖ = {:.3e} ≤ {:.3e}", r.distance_to_identity, r.claimed_bound);

    let v = q.columns(0, 3).into_owned();
    let r = align_vectors(&v, &(&w * &v))?;
    println!("frame:        ‖U − 1‖ = {:.3e} ≤ {:.3e}", r.distance_to_identity, r.claimed_bound);

    let tilted = &w * q.columns(0, 2).into_owned();
    let target = linalg::projector_from_columns(&q.columns(0, 3).into_owned());
    for mode in [LeakMode::Summed, LeakMode::PerVector] {
        let r = align_into_subspace(&tilted, &target, mode)?;
        println!("into subspace ({mode:?}): ‖U − 1‖ = {:.3e} ≤ {:.3e}", r.distance_to_identity, r.claimed_bound);
    }

    let es: Vec<_> = [(0, 2), (2, 1), (3, 2)].iter().map(|&(s, k)| linalg::projector_from_columns(&q.columns(s, k).into_owned())).collect();
    let fs: Vec<_> = es.iter().map(|e| linalg::conjugate(&w, e)).collect();
    let r = align_projection_family(&es, &fs)?;
    println!("family of 3:  ‖U − 1‖ = {:.3e} ≤ {:.3e}", r.distance_to_identity, r.claimed_bound);
    Ok(())
}
