//! Property tests over seeded random inputs. Each case draws a seed and small sizes;
//! matrices come from the seeded generators so failures replay exactly.

use proptest::prelude::*;

use fixforge::classical::{eigenvalue_one_multiplicity, fix_classical, stochastic_norm, ProbabilityVector, StochasticMatrix};
use fixforge::clustering::{cluster_spectrum, cluster_state};
use fixforge::counterexamples::{example_change_both, linear_contrast, optimality_instance};
use fixforge::fixers::{fix_general, fix_local_pure, fix_unitary};
use fixforge::harness::{generate_instance, Instance, InstanceClass, InstanceSpec};
use fixforge::linalg::{self, cr, seeded_rng, CMatrix, Subsystem};
use fixforge::quantum::random::{random_channel, random_density, unitary_in_basis};
use fixforge::quantum::{
    convex_combine, diamond_distance_bounds, embed_classical_channel, replacement_channel, trace_distance,
    unique_fixed_point, Channel, DensityMatrix, PureState, RepresentationKind,
};
use fixforge::rotations::{align_projection, align_vectors};
use rand::Rng;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

fn sorted_desc(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

fn random_stochastic(d: usize, rng: &mut impl Rng) -> StochasticMatrix {
    let cols: Vec<Vec<f64>> = (0..d)
        .map(|_| {
            let w: Vec<f64> = (0..d).map(|_| rng.random::<f64>() + 1e-3).collect();
            let s: f64 = w.iter().sum();
            w.into_iter().map(|x| x / s).collect()
        })
        .collect();
    StochasticMatrix::from_columns(&cols).unwrap()
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn sorted_spectra_are_trace_norm_lipschitz(seed in any::<u64>(), d in 1usize..=10) {
        let mut rng = seeded_rng(seed);
        let a = linalg::random_hermitian(d, &mut rng);
        let b = linalg::random_hermitian(d, &mut rng);
        let la = sorted_desc(linalg::eigh(&a).unwrap().eigenvalues);
        let lb = sorted_desc(linalg::eigh(&b).unwrap().eigenvalues);
        let lhs: f64 = la.iter().zip(&lb).map(|(x, y)| (x - y).abs()).sum();
        prop_assert!(lhs <= linalg::trace_norm(&(&a - &b)) + 1e-9);
    }

    #[test]
    fn partial_trace_of_product(seed in any::<u64>(), da in 1usize..=4, db in 1usize..=4) {
        let mut rng = seeded_rng(seed);
        let x = linalg::ginibre(da, da, &mut rng);
        let y = linalg::ginibre(db, db, &mut rng);
        let xy = linalg::kron(&x, &y);
        let over_b = linalg::partial_trace(&xy, Subsystem::B, (da, db)).unwrap();
        let over_a = linalg::partial_trace(&xy, Subsystem::A, (da, db)).unwrap();
        prop_assert!((over_b - &x * linalg::trace(&y)).norm() <= 1e-10 * (1.0 + x.norm() * y.norm()));
        prop_assert!((over_a - &y * linalg::trace(&x)).norm() <= 1e-10 * (1.0 + x.norm() * y.norm()));
    }

    #[test]
    fn schmidt_coefficients_are_local_unitary_invariant(seed in any::<u64>(), da in 1usize..=4, db in 1usize..=4) {
        let mut rng = seeded_rng(seed);
        let psi = linalg::random_unit_vector(da * db, &mut rng);
        let ua = linalg::haar_random_unitary_with(da, &mut rng);
        let ub = linalg::haar_random_unitary_with(db, &mut rng);
        let moved = linalg::kron(&ua, &ub) * &psi;
        let s1 = linalg::schmidt_decompose(&psi, (da, db)).unwrap().coefficients;
        let s2 = linalg::schmidt_decompose(&moved, (da, db)).unwrap().coefficients;
        prop_assert_eq!(s1.len(), s2.len());
        for (a, b) in s1.iter().zip(&s2) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn representations_agree(seed in any::<u64>(), din in 1usize..=4, dout in 1usize..=4, env in 1usize..=4) {
        let mut rng = seeded_rng(seed);
        let env = env.max(din.div_ceil(dout));
        let n = random_channel(din, dout, env, &mut rng);
        let rho = random_density(din, &mut rng);
        let reference = n.apply(rho.matrix()).unwrap();
        for kind in [RepresentationKind::Kraus, RepresentationKind::Stinespring, RepresentationKind::Choi] {
            let out = n.convert(kind).unwrap().apply(rho.matrix()).unwrap();
            prop_assert!(linalg::trace_norm(&(out - &reference)) <= 1e-9);
        }
    }

    #[test]
    fn channels_contract_trace_distance(seed in any::<u64>(), d in 1usize..=5, env in 1usize..=4) {
        let mut rng = seeded_rng(seed);
        let n = random_channel(d, d, env, &mut rng);
        let rho = random_density(d, &mut rng);
        let sigma = random_density(d, &mut rng);
        let before = trace_distance(&rho, &sigma).unwrap();
        let after = trace_distance(&n.apply_state(&rho).unwrap(), &n.apply_state(&sigma).unwrap()).unwrap();
        prop_assert!(after <= before + 1e-10);
    }

    #[test]
    fn diamond_bounds_bracket_a_known_mixture(seed in any::<u64>(), d in 2usize..=4, t in 0.0f64..1.0) {
        let mut rng = seeded_rng(seed);
        let n = random_channel(d, d, 2, &mut rng);
        let r = replacement_channel(&random_density(d, &mut rng));
        let m = convex_combine(&[1.0 - t, t], &[n.clone(), r]).unwrap();
        let b = diamond_distance_bounds(&m, &n).unwrap();
        prop_assert!(b.lower <= b.upper + 1e-12);
        prop_assert!(b.lower <= t + 1e-12);
    }

    #[test]
    fn contracted_fixed_point_stays_near_the_start(seed in any::<u64>(), d in 2usize..=5, lambda in 0.05f64..0.9) {
        let mut rng = seeded_rng(seed);
        let n = random_channel(d, d, 2, &mut rng);
        let rho = random_density(d, &mut rng);
        let m = convex_combine(&[1.0 - lambda, lambda], &[n, replacement_channel(&rho)]).unwrap();
        let sigma = unique_fixed_point(&m, &rho, lambda, 1e-12).unwrap();
        let step = 2.0 * trace_distance(&m.apply_state(&rho).unwrap(), &rho).unwrap();
        prop_assert!(2.0 * trace_distance(&sigma, &rho).unwrap() <= step / lambda + 1e-9);
    }

    #[test]
    fn embedded_chains_bracket_the_classical_distance(seed in any::<u64>(), d in 2usize..=6) {
        let mut rng = seeded_rng(seed);
        let t = random_stochastic(d, &mut rng);
        let s = random_stochastic(d, &mut rng);
        let half = 0.5 * stochastic_norm(&t, &s).unwrap();
        let b = diamond_distance_bounds(&embed_classical_channel(&t), &embed_classical_channel(&s)).unwrap();
        prop_assert!(b.lower <= half + 1e-9);
        prop_assert!(half <= b.upper + 1e-9);
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn clusters_reconstruct_and_keep_trace(seed in any::<u64>(), d in 1usize..=12, delta in 0.0f64..0.3) {
        let mut rng = seeded_rng(seed);
        let rho = random_density(d, &mut rng);
        let dec = cluster_spectrum(&rho, delta);
        let mut rebuilt = CMatrix::zeros(d, d);
        for p in &dec.points {
            for &i in &p.columns {
                let v = dec.eigenvectors.column(i).into_owned();
                rebuilt += linalg::projector(&v) * cr(p.value);
            }
        }
        prop_assert!((rebuilt - rho.matrix()).norm() <= 1e-9);
        let sigma = cluster_state(&dec);
        prop_assert!((linalg::trace(sigma.matrix()).re - 1.0).abs() <= 1e-12);
        let df = d as f64;
        prop_assert!(trace_distance(&sigma, &rho).unwrap() <= df * df * delta / 2.0 + 1e-12);
    }

    #[test]
    fn wider_gaps_never_add_clusters(seed in any::<u64>(), d in 1usize..=12, a in 0.0f64..0.2, b in 0.0f64..0.2) {
        let mut rng = seeded_rng(seed);
        let rho = random_density(d, &mut rng);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(cluster_spectrum(&rho, hi).len() <= cluster_spectrum(&rho, lo).len());
    }

    #[test]
    fn projection_rotation_is_exact_and_within_two_gaps(seed in any::<u64>(), d in 2usize..=12, eta in 0.0f64..0.2) {
        let mut rng = seeded_rng(seed);
        let q = linalg::haar_random_unitary_with(d, &mut rng);
        let k = rng.random_range(1..d);
        let e = linalg::projector_from_columns(&q.columns(0, k).into_owned());
        let w = linalg::unitary_exp(&linalg::random_hermitian(d, &mut rng), eta).unwrap();
        let f = linalg::conjugate(&w, &e);
        let r = align_projection(&e, &f).unwrap();
        prop_assert!(linalg::unitarity_defect(&r.unitary) <= 1e-9);
        prop_assert!(linalg::operator_norm(&(linalg::conjugate(&r.unitary, &e) - &f)) <= 1e-9);
        prop_assert!(r.distance_to_identity <= 2.0 * linalg::operator_norm(&(&e - &f)) + 1e-9);
    }

    #[test]
    fn frame_rotation_maps_each_vector(seed in any::<u64>(), d in 2usize..=12, eta in 0.0f64..0.05) {
        let mut rng = seeded_rng(seed);
        let n = rng.random_range(1..=d);
        let v = linalg::haar_random_unitary_with(d, &mut rng).columns(0, n).into_owned();
        let w = linalg::unitary_exp(&linalg::random_hermitian(d, &mut rng), eta).unwrap() * &v;
        let r = align_vectors(&v, &w).unwrap();
        prop_assert!(linalg::unitarity_defect(&r.unitary) <= 1e-9);
        prop_assert!((&r.unitary * &v - &w).norm() <= 1e-9);
        let worst = (0..n).map(|i| (v.column(i) - w.column(i)).norm()).fold(0.0, f64::max);
        prop_assert!(r.distance_to_identity <= 5.0 * (n as f64).sqrt() * worst + 1e-9);
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn general_fixer_invariants_hold_and_loosen_monotonically(seed in any::<u64>(), d in 2usize..=6, k in 2i32..=5) {
        let g = generate_instance(&InstanceSpec::new(InstanceClass::General, d, 10f64.powi(-k), seed)).unwrap();
        let Instance::General { state, channel } = &g.instance else { unreachable!() };
        let tight = fix_general(state, channel, None).unwrap();
        prop_assert!(tight.violations().is_empty(), "{:?}", tight.violations());
        let loose = fix_general(state, channel, Some(2.0 * g.epsilon_measured)).unwrap();
        prop_assert!(loose.violations().is_empty(), "{:?}", loose.violations());
        prop_assert!(loose.state_bound_claimed >= tight.state_bound_claimed);
        prop_assert!(loose.channel_bound_claimed >= tight.channel_bound_claimed);
    }

    #[test]
    fn unitary_target_state_ignores_the_unitary(seed in any::<u64>(), d in 2usize..=8) {
        let g = generate_instance(&InstanceSpec::new(InstanceClass::Unitary, d, 1e-6, seed)).unwrap();
        let Instance::Unitary { state, unitary } = &g.instance else { unreachable!() };
        let basis = linalg::eigh(state.matrix()).unwrap().eigenvectors;
        let other = unitary_in_basis(&basis, &mut seeded_rng(seed ^ 7));
        let eps = Some(g.epsilon_measured);
        let a = fix_unitary(state, unitary, eps).unwrap();
        let b = fix_unitary(state, &other, eps).unwrap();
        prop_assert!(a.violations().is_empty() && b.violations().is_empty());
        prop_assert!(a.sigma.density().matrix() == b.sigma.density().matrix());
    }

    #[test]
    fn local_target_state_ignores_the_channel(seed in any::<u64>(), da in 2usize..=4, db in 2usize..=4) {
        let g = generate_instance(&InstanceSpec::bipartite(da, db, 1e-5, seed)).unwrap();
        let Instance::LocalPure { state, channel_b } = &g.instance else { unreachable!() };
        let eps = Some(g.epsilon_measured);
        let a = fix_local_pure(state, channel_b, eps).unwrap();
        let b = fix_local_pure(state, &Channel::identity(db), eps).unwrap();
        prop_assert!(a.violations().is_empty() && b.violations().is_empty());
        prop_assert!(a.sigma.density().matrix() == b.sigma.density().matrix());
    }

    #[test]
    fn classical_fixer_contracts_to_a_unique_point(seed in any::<u64>(), d in 2usize..=16, k in 2i32..=6) {
        let g = generate_instance(&InstanceSpec::new(InstanceClass::Classical, d, 10f64.powi(-k), seed)).unwrap();
        let Instance::Classical { distribution, matrix } = &g.instance else { unreachable!() };
        let r = fix_classical(distribution, matrix, None).unwrap();
        let lam = r.epsilon_used.sqrt();
        prop_assert!(r.fixed_point_residual <= 1e-10);
        prop_assert!(r.state_distance <= lam + 1e-10);
        prop_assert!(r.channel_distance <= lam + 1e-10);
        prop_assert_eq!(eigenvalue_one_multiplicity(&r.s, 1e-8), 1);
    }

    #[test]
    fn generation_is_reproducible_and_in_band(seed in any::<u64>(), d in 2usize..=5, k in 2i32..=4) {
        let spec = InstanceSpec::new(InstanceClass::General, d, 10f64.powi(-k), seed);
        let a = generate_instance(&spec).unwrap();
        let b = generate_instance(&spec).unwrap();
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        prop_assert!(a.epsilon_measured >= 0.5 * spec.epsilon_target && a.epsilon_measured <= spec.epsilon_target);
    }

    #[test]
    fn counterexample_facts_hold(k in 1.0f64..6.0) {
        let eps = 10f64.powf(-k);
        for inst in [example_change_both(eps), optimality_instance(eps), linear_contrast(eps)] {
            let inst = inst.unwrap();
            prop_assert!(inst.failed_facts().is_empty(), "{}", inst.name);
        }
    }

    #[test]
    fn json_round_trips(seed in any::<u64>(), d in 1usize..=4) {
        let mut rng = seeded_rng(seed);
        let rho = random_density(d, &mut rng);
        let back: DensityMatrix = serde_json::from_str(&serde_json::to_string(&rho).unwrap()).unwrap();
        prop_assert!((back.matrix() - rho.matrix()).norm() <= 1e-15);
        let n = random_channel(d, d, 2, &mut rng);
        let back: Channel = serde_json::from_str(&serde_json::to_string(&n).unwrap()).unwrap();
        prop_assert!((back.choi() - n.choi()).norm() <= 1e-12);
        let psi = PureState::new(linalg::random_unit_vector(d * 2, &mut rng), Some((d, 2))).unwrap();
        let back: PureState = serde_json::from_str(&serde_json::to_string(&psi).unwrap()).unwrap();
        prop_assert_eq!(back.dims(), Some((d, 2)));
        let p = ProbabilityVector::uniform(d);
        let back: ProbabilityVector = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        prop_assert_eq!(back.entries(), p.entries());
    }
}
