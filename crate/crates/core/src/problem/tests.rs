use rand::Rng as _;

use super::*;
use crate::sampling::{sobol_points, SampleDesign};

fn rng(tag: &str) -> seed::Rng {
    seed::rng_for(2024, tag, &[])
}

#[test]
fn instantiation_is_deterministic() {
    let a = instantiate_component(1, 1, 2, 42).unwrap();
    let b = instantiate_component(1, 1, 2, 42).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.scale_factor.to_bits(), b.scale_factor.to_bits());
}

#[test]
fn rotations_are_orthogonal() {
    for cid in 1..=REGISTRY_SIZE as u32 {
        for d in [1, 2, 5, 10] {
            let ci = build_instance(cid, 7, d, 1, 100).unwrap();
            let r = ci.rotation_matrix();
            let err = (&r * r.transpose() - DMatrix::<f64>::identity(d, d)).abs().max();
            assert!(err < 1e-10, "cid={cid} d={d} err={err}");
            assert!(ci.shift.iter().all(|s| s.abs() <= SHIFT_BOUND));
        }
    }
}

#[test]
fn separable_functions_are_not_rotated() {
    let ci = build_instance(2, 3, 4, 1, 100).unwrap();
    assert_eq!(ci.rotation, identity(4));
    let ci = build_instance(10, 3, 4, 1, 100).unwrap();
    assert_ne!(ci.rotation, identity(4));
}

#[test]
fn distinct_instances_get_distinct_shifts() {
    let a = instantiate_component(1, 1, 2, 42).unwrap();
    let b = instantiate_component(1, 2, 2, 42).unwrap();
    assert_ne!(a.shift, b.shift);
}

#[test]
fn invalid_arguments_are_rejected() {
    assert!(matches!(
        instantiate_component(99, 1, 2, 0),
        Err(Error::UnknownComponent(99))
    ));
    assert!(matches!(instantiate_component(1, 0, 2, 0), Err(Error::Domain(_))));
    assert!(matches!(instantiate_component(1, 101, 2, 0), Err(Error::Domain(_))));
    assert!(generate_problem(2, 25, 0, 0).is_err());
    assert!(generate_problem(2, 0, 0, 0).is_err());
}

#[test]
fn precision_at_and_around_optimum() {
    let ci = instantiate_component(1, 1, 2, 42).unwrap();
    let opt = [0.5, -1.0];
    assert_eq!(component_precision(&ci, &opt, &opt).unwrap(), 0.0);
    // sphere is unrotated: z = x - x*
    assert_eq!(component_precision(&ci, &opt, &[1.5, -1.0]).unwrap(), 1.0);
    assert!(component_precision(&ci, &opt, &[1.0, 2.0, 3.0]).is_err());
    let mut r = rng("precision");
    for cid in 1..=REGISTRY_SIZE as u32 {
        let ci = instantiate_component(cid, 3, 3, 9).unwrap();
        for _ in 0..200 {
            let x: Vec<f64> = (0..3).map(|_| r.random_range(-5.0..5.0)).collect();
            let o: Vec<f64> = (0..3).map(|_| r.random_range(-5.0..5.0)).collect();
            assert!(component_precision(&ci, &o, &x).unwrap() >= 0.0);
        }
        assert_eq!(component_precision(&ci, &ci.shift, &ci.shift).unwrap(), 0.0);
    }
}

#[test]
fn sphere_scale_factor_matches_brute_force() {
    let ci = instantiate_component(1, 1, 2, 42).unwrap();
    let n = SCALE_SAMPLE_FACTOR * 2;
    let s = estimate_scale_factor_at(&ci, &[0.0, 0.0], n).unwrap();
    let design = SampleDesign::new(n, 2, -5.0, 5.0).with_scramble(SCALE_SAMPLE_SEED);
    let brute = sobol_points(&design)
        .unwrap()
        .iter()
        .map(|p| p[0] * p[0] + p[1] * p[1])
        .fold(0.0f64, f64::max)
        .log10();
    assert_eq!(s, brute);
    assert!((1.0..=50f64.log10()).contains(&s), "s = {s}");
}

#[test]
fn scale_factor_needs_two_points() {
    let ci = instantiate_component(1, 1, 2, 42).unwrap();
    assert!(estimate_scale_factor(&ci, 1).is_err());
}

#[test]
fn flat_component_is_degenerate() {
    // linear slope is flat on the positive orthant of its optimum; with the
    // optimum in the lower corner no sample point has positive precision
    let ci = build_instance(5, 1, 2, 1, 100).unwrap();
    let err = estimate_scale_factor_at(&ci, &[-5.0, -5.0], 1000).unwrap_err();
    assert!(matches!(err, Error::DegenerateComponent { component_id: 5, .. }));
}

#[test]
fn scale_cache_is_stable_and_round_trips() {
    let gen = Generator::new(5, 100);
    let a = gen.instance(3, 4, 2).unwrap().scale_factor;
    assert_eq!(gen.cache().get(3, 4, 2), Some(a));
    assert_eq!(gen.instance(3, 4, 2).unwrap().scale_factor.to_bits(), a.to_bits());
    let manifest = gen.cache().to_manifest();
    let json = serde_json::to_string(&manifest).unwrap();
    assert!(json.contains("\"3.4.2\""));
    let back: ScaleFactorManifest = serde_json::from_str(&json).unwrap();
    assert_eq!(back, manifest);
    gen.cache().clear();
    assert!(gen.cache().is_empty());
    assert_eq!(gen.instance(3, 4, 2).unwrap().scale_factor.to_bits(), a.to_bits());
}

#[test]
fn optimum_evaluates_to_exactly_zero() {
    let gen = Generator::new(11, 100);
    for pid in 0..50 {
        let k = 1 + pid as usize % REGISTRY_SIZE;
        let p = gen.problem(3, k, pid).unwrap();
        assert_eq!(evaluate_problem(&p, &p.optimum).unwrap(), 0.0);
    }
}

#[test]
fn evaluation_rejects_wrong_dimension() {
    let p = generate_problem(2, 2, 1, 1).unwrap();
    assert!(evaluate_problem(&p, &[0.0; 3]).is_err());
}

#[test]
fn two_components_at_target_give_hundred() {
    let gen = Generator::new(1, 100);
    let mut p = gen.problem(2, 2, 0).unwrap();
    p.weights = vec![0.5, 0.5];
    let x = [1.0, 2.0];
    for ci in &mut p.components {
        let prec = component_precision(ci, &p.optimum, &x).unwrap();
        ci.scale_factor = (prec + LOG_EPS).log10();
    }
    let f = evaluate_problem(&p, &x).unwrap();
    assert!((f - (100.0 - 1e-8)).abs() < 1e-9, "f = {f}");
}

#[test]
fn normalizing_equal_weights() {
    assert_eq!(normalize_weights(&[2.0, 2.0]).unwrap(), vec![0.5, 0.5]);
    assert!(normalize_weights(&[1.0, 0.0]).is_err());
    assert!(normalize_weights(&[]).is_err());
}

#[test]
fn problem_generation_is_deterministic() {
    let a = generate_problem(2, 4, 77, 12).unwrap();
    let b = generate_problem(2, 4, 77, 12).unwrap();
    assert_eq!(a, b);
    let c = generate_problem(2, 4, 77, 13).unwrap();
    assert_ne!(a.optimum, c.optimum);
}

#[test]
fn generated_problems_are_well_formed() {
    let gen = Generator::new(3, 100);
    for pid in 0..300 {
        let k = 1 + (pid as usize * 7) % REGISTRY_SIZE;
        let p = gen.problem(2, k, pid).unwrap();
        assert_eq!(p.k(), k);
        let mut ids: Vec<u32> = p.active().iter().map(|a| a.0).collect();
        ids.dedup();
        assert_eq!(ids.len(), k, "component ids must be distinct and sorted");
        assert!(p.weights.iter().all(|&w| w > 0.0));
        assert!((p.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.optimum.iter().all(|v| (-5.0..=5.0).contains(v)));
        assert!(p.active().iter().all(|a| (1..=100).contains(&a.1)));
    }
}

#[test]
fn optimum_locations_are_centered() {
    let gen = Generator::new(8, 100);
    let mut sums = [0.0; 2];
    for pid in 0..10_000 {
        let p = gen.problem(2, 1, pid).unwrap();
        sums[0] += p.optimum[0];
        sums[1] += p.optimum[1];
    }
    for s in sums {
        assert!((s / 10_000.0).abs() <= 0.3);
    }
}

#[test]
fn suite_counts_and_hash() {
    let spec = GeneratorSpec {
        dim: 2,
        counts_per_k: [(3, 5)].into_iter().collect(),
        instance_pool_size: 100,
        master_seed: 1,
    };
    let (problems, manifest) = generate_suite(&spec).unwrap();
    assert_eq!(problems.len(), 5);
    assert!(problems.iter().all(|p| p.k() == 3));
    let ids: Vec<u64> = problems.iter().map(|p| p.problem_id).collect();
    assert_eq!(ids, vec![0, 1, 2, 3, 4]);
    let (_, again) = generate_suite(&spec).unwrap();
    assert_eq!(manifest.hash(), again.hash());

    let json = serde_json::to_string(&manifest).unwrap();
    let back: SuiteManifest = serde_json::from_str(&json).unwrap();
    assert_eq!(back, manifest);
    let gen = Generator::new(1, 100);
    for (rec, p) in back.problems.iter().zip(&problems) {
        assert_eq!(&gen.from_record(rec).unwrap(), p);
    }
}

#[test]
fn full_scale_suite_size() {
    let spec = GeneratorSpec::full_scale(2, 0);
    assert_eq!(spec.total(), 11_800);
    let (problems, manifest) = generate_suite(&spec).unwrap();
    assert_eq!(problems.len(), 11_800);
    assert_eq!(manifest.problems.len(), 11_800);
}

#[test]
fn component_problem_ids_round_trip() {
    let id = component_problem_id(17, 5);
    assert_eq!(parse_component_problem_id(id), Some((17, 5)));
    assert_eq!(parse_component_problem_id(12), None);
    let p = Generator::new(0, 100).component_problem(17, 5, 2).unwrap();
    assert_eq!(p.problem_id, id);
    assert_eq!(p.optimum, p.components[0].shift);
    assert_eq!(evaluate_problem(&p, &p.optimum).unwrap(), 0.0);
}

mod properties {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn values_nonnegative_and_permutation_invariant(pid in 0u64..10_000, k in 1usize..=8, seed in 0u64..4) {
            let p = generate_problem(2, k, seed, pid).unwrap();
            let mut reversed = p.clone();
            reversed.components.reverse();
            reversed.weights.reverse();
            let mut r = seed::rng_for(pid, "points", &[]);
            for _ in 0..200 {
                let x: Vec<f64> = (0..2).map(|_| r.random_range(-5.0..5.0)).collect();
                let f = p.evaluate(&x);
                prop_assert!(f >= 0.0);
                let g = reversed.evaluate(&x);
                prop_assert!((f - g).abs() <= 1e-12 * f.max(1e-300), "{} vs {}", f, g);
            }
        }

        #[test]
        fn single_component_preserves_precision_order(cid in 1u32..=24, iid in 1u32..=100, pid in 0u64..100) {
            let gen = Generator::new(pid, 100);
            let p = gen.component_problem(cid, iid, 2).unwrap();
            let ci = &p.components[0];
            let mut r = seed::rng_for(pid, "pairs", &[cid as u64]);
            for _ in 0..100 {
                let x: Vec<f64> = (0..2).map(|_| r.random_range(-5.0..5.0)).collect();
                let y: Vec<f64> = (0..2).map(|_| r.random_range(-5.0..5.0)).collect();
                let (px, py) = (
                    component_precision(ci, &p.optimum, &x).unwrap(),
                    component_precision(ci, &p.optimum, &y).unwrap(),
                );
                let (fx, fy) = (p.evaluate(&x), p.evaluate(&y));
                // strictly monotone above the precision floor, flat below it
                if px < py && py > 2.0 * PRECISION_FLOOR {
                    prop_assert!(fx < fy, "p: {} < {} but F: {} >= {}", px, py, fx, fy);
                }
                if px == py {
                    prop_assert_eq!(fx, fy);
                }
            }
        }
    }
}
