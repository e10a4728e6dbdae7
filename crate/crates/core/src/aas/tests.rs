use rand::Rng as _;

use super::*;

/// Table with one run per cell, rows indexed by problem id 0..n.
fn table(means: &[Vec<f64>], algorithm_ids: &[u32]) -> PerformanceTable {
    let runs = means
        .iter()
        .map(|r| r.iter().map(|v| vec![*v]).collect())
        .collect();
    PerformanceTable::new(2, 4000, (0..means.len() as u64).collect(), algorithm_ids.to_vec(), runs).unwrap()
}

fn random_table(seed: u64, problems: usize, algorithms: usize) -> PerformanceTable {
    let mut rng = crate::seed::rng_for(seed, "table", &[]);
    let means: Vec<Vec<f64>> = (0..problems)
        .map(|_| (0..algorithms).map(|_| rng.random::<f64>()).collect())
        .collect();
    let ids: Vec<u32> = (1..=algorithms as u32).collect();
    table(&means, &ids)
}

fn no_features(n: usize) -> BTreeMap<u64, Vec<f64>> {
    (0..n as u64).map(|i| (i, vec![0.0])).collect()
}

#[test]
fn labels_follow_argmax_with_low_id_ties() {
    let t = table(&[vec![0.2, 0.9], vec![0.5, 0.5]], &[1, 2]);
    assert_eq!(label_instances(&t, &[1, 2], &[0, 1]).unwrap(), vec![2, 1]);
    assert_eq!(label_instances(&t, &[2], &[0, 1]).unwrap(), vec![2, 2]);
    assert!(label_instances(&t, &[], &[0]).is_err());
    // subset order does not matter
    assert_eq!(label_instances(&t, &[2, 1], &[1]).unwrap(), vec![1]);
}

#[test]
fn sbs_and_vbs_example() {
    let t = table(&[vec![0.9, 0.5], vec![0.1, 0.6]], &[1, 2]);
    let (id, m) = sbs(&t, &[0, 1], &[1, 2]).unwrap();
    assert_eq!(id, 2);
    assert!((m - 0.55).abs() < 1e-15);
    let v = vbs_mean(&t, &[0, 1], &[1, 2]).unwrap();
    assert!((v - 0.75).abs() < 1e-15);
    assert!((v - m - 0.2).abs() < 1e-15);
    assert!(sbs(&t, &[], &[1, 2]).is_err());
}

#[test]
fn degenerate_gap_cases() {
    let same = table(&[vec![0.3, 0.3], vec![0.8, 0.8]], &[1, 2]);
    let r = gap_closed(&ConstantSelector(2), &same, &[0, 1], &[1, 2], &no_features(2), None).unwrap();
    assert_eq!(r.gap, 0.0);
    assert!(r.zero_gap);
    assert_eq!(r.gap_closed_pct, None);
    let single = table(&[vec![0.3, 0.7, 0.1]], &[1, 2, 3]);
    assert_eq!(sbs(&single, &[0], &[1, 2, 3]).unwrap(), (2, 0.7));
    assert_eq!(vbs_mean(&single, &[0], &[1, 2, 3]).unwrap(), 0.7);
}

#[test]
fn gap_closed_examples() {
    let t = table(&[vec![0.9, 0.5], vec![0.1, 0.6]], &[1, 2]);
    let f = no_features(2);
    let oracle = OracleSelector::new(&t, &[1, 2]).unwrap();
    let r = gap_closed(&oracle, &t, &[0, 1], &[1, 2], &f, None).unwrap();
    assert_eq!(r.gap_closed_pct, Some(100.0));
    let r = gap_closed(&ConstantSelector(2), &t, &[0, 1], &[1, 2], &f, None).unwrap();
    assert_eq!(r.gap_closed_pct, Some(0.0));
    // A on the first instance, B on the second
    struct Toy;
    impl Selector for Toy {
        fn select(&self, pid: u64, _: &[f64]) -> u32 {
            if pid == 0 { 1 } else { 2 }
        }
    }
    let r = gap_closed(&Toy, &t, &[0, 1], &[1, 2], &f, None).unwrap();
    assert!((r.selector_mean - 0.75).abs() < 1e-15);
    assert!((r.gap_closed_pct.unwrap() - 100.0).abs() < 1e-9);
    // the worse constant choice gives a negative share
    let r = gap_closed(&ConstantSelector(1), &t, &[0, 1], &[1, 2], &f, None).unwrap();
    assert!(r.gap_closed_pct.unwrap() < 0.0);
    // baseline taken from elsewhere
    let r = gap_closed(&ConstantSelector(1), &t, &[0, 1], &[1, 2], &f, Some(1)).unwrap();
    assert_eq!(r.sbs_id, 1);
    assert_eq!(r.gap_closed_pct, Some(0.0));
    assert!(gap_closed(&oracle, &t, &[0, 1], &[1, 2], &BTreeMap::new(), None).is_err());
}

#[test]
fn powerset_counting() {
    let t = random_table(1, 10, 3);
    let rows = portfolio_powerset_gaps(&t, &t.problem_ids, 3).unwrap();
    assert_eq!(rows.len(), 1);
    let rows = portfolio_powerset_gaps(&t, &t.problem_ids, 1).unwrap();
    assert_eq!(rows.len(), 7);
    assert!(rows.iter().filter(|r| r.subset.len() == 1).all(|r| r.gap == 0.0));
    let big = random_table(1, 3, 13);
    assert!(matches!(
        portfolio_powerset_gaps(&big, &big.problem_ids, 3),
        Err(Error::PortfolioTooLarge(13))
    ));
}

#[test]
fn separable_toy_is_fit_exactly() {
    let rows: Vec<LabeledRow> = (0..100)
        .map(|i| {
            let x = i as f64 / 99.0;
            LabeledRow {
                problem_id: i,
                features: vec![x, ((i * 37) % 11) as f64 / 10.0],
                label: if x < 0.5 { 1 } else { 2 },
                aocc: vec![],
            }
        })
        .collect();
    let data = LabeledDataset {
        feature_names: vec!["a".into(), "b".into()],
        algorithm_ids: vec![1, 2],
        rows,
    };
    for kind in [ModelKind::Boosted, ModelKind::Forest] {
        let params = SelectorParams {
            kind,
            ..Default::default()
        };
        let m = train_selector(&data, &params, 3, "toy", "v").unwrap();
        assert!(!m.constant);
        for r in &data.rows {
            assert_eq!(m.predict(&r.features), r.label, "{kind:?}");
        }
    }
}

fn noisy_dataset(seed: u64, n: usize) -> LabeledDataset {
    let mut rng = crate::seed::rng_for(seed, "noisy", &[]);
    let rows = (0..n as u64)
        .map(|i| {
            let f: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
            let label = if f[0] + 0.3 * f[1] > 0.6 { 3 } else if f[2] > 0.5 { 1 } else { 7 };
            LabeledRow {
                problem_id: i,
                features: f,
                label,
                aocc: vec![],
            }
        })
        .collect();
    LabeledDataset {
        feature_names: (0..4).map(|j| format!("f{j}")).collect(),
        algorithm_ids: vec![1, 3, 7],
        rows,
    }
}

#[test]
fn single_label_gives_constant_model() {
    let mut data = noisy_dataset(1, 20);
    data.rows.iter_mut().for_each(|r| r.label = 3);
    let m = train_selector(&data, &SelectorParams::default(), 0, "x", "v").unwrap();
    assert!(m.constant);
    assert_eq!(m.predict(&[0.1, 0.2, 0.3, 0.4]), 3);
}

#[test]
fn catalog_mismatch_is_rejected() {
    let mut data = noisy_dataset(1, 20);
    data.rows[4].features.pop();
    assert!(train_selector(&data, &SelectorParams::default(), 0, "x", "v").is_err());
}

#[test]
fn training_is_deterministic_and_serializable() {
    let data = noisy_dataset(2, 120);
    let mut rng = crate::seed::rng_for(9, "probe", &[]);
    let probes: Vec<Vec<f64>> = (0..1000)
        .map(|_| (0..4).map(|_| rng.random::<f64>()).collect())
        .collect();
    for kind in [ModelKind::Boosted, ModelKind::Forest] {
        let params = SelectorParams {
            kind,
            ..Default::default()
        };
        let a = train_selector(&data, &params, 5, "s", "v").unwrap();
        let b = train_selector(&data, &params, 5, "s", "v").unwrap();
        assert_eq!(a, b);
        let back = SelectorModel::from_json(&a.to_json().unwrap()).unwrap();
        for p in &probes {
            assert_eq!(a.predict(p), b.predict(p));
            let (s1, s2) = (a.scores(p), back.scores(p));
            assert!(s1.iter().zip(&s2).all(|(u, v)| u.to_bits() == v.to_bits()));
            assert!(a.classes.contains(&a.predict(p)));
        }
    }
}

#[test]
fn boosted_trees_respect_depth() {
    let data = noisy_dataset(3, 200);
    let params = SelectorParams {
        max_depth: 2,
        rounds: 5,
        ..Default::default()
    };
    let m = train_selector(&data, &params, 0, "s", "v").unwrap();
    let Ensemble::Boosted(b) = &m.ensemble else { panic!() };
    assert_eq!(b.rounds.len(), 5);
    assert!(b.rounds.iter().flatten().all(|t| t.depth() <= 2));
}

fn meta(label: &str, strategy: &str, size: usize, rep: usize) -> SetMeta {
    SetMeta {
        label: label.into(),
        strategy: strategy.into(),
        size,
        repetition: rep,
    }
}

#[test]
fn cross_matrix_shape_and_oracle_row() {
    let t = random_table(4, 30, 4);
    let subset = [1, 2, 3, 4];
    let f: BTreeMap<u64, Vec<f64>> = (0..30).map(|i| (i, vec![i as f64 / 30.0])).collect();
    let oracle = OracleSelector::new(&t, &subset).unwrap();
    let constant = ConstantSelector(2);
    let models = vec![
        ModelEntry {
            meta: meta("oracle", "random", 10, 0),
            selector: &oracle,
            training_ids: (0..10).collect(),
        },
        ModelEntry {
            meta: meta("const", "greedy", 10, 0),
            selector: &constant,
            training_ids: (10..20).collect(),
        },
    ];
    let evals = vec![
        (meta("a", "random", 10, 0), (0..10).collect::<Vec<u64>>()),
        (meta("b", "random", 10, 1), (20..30).collect()),
        (meta("c", "greedy", 10, 0), (10..20).collect()),
    ];
    let pool: Vec<u64> = (0..30).collect();
    let m = cross_evaluate(&models, &evals, &pool, &t, &subset, &f).unwrap();
    assert_eq!(m.cells.len(), 2);
    assert!(m.cells.iter().all(|r| r.len() == 4));
    for cell in &m.cells[0] {
        assert_eq!(cell.gap_closed_pct, Some(100.0));
    }
    assert!(m.cells[0][0].diagonal && !m.cells[0][1].diagonal);
    assert!(m.cells[1][2].diagonal);
    let agg = aggregate_by_strategy_size(&m);
    assert_eq!(agg[&(("random".into(), 10), ("random".into(), 10))], 100.0);
    assert!(!agg.contains_key(&(("greedy".into(), 10), ("greedy".into(), 10))));
}

#[test]
fn aggregation_examples() {
    let cell = |v: f64| Cell {
        gap_closed_pct: Some(v),
        diagonal: false,
    };
    let m = CrossMatrix {
        rows: vec![meta("m1", "random", 24, 0), meta("m2", "random", 24, 1)],
        columns: vec![meta("e1", "greedy", 24, 0), meta("e2", "greedy", 24, 1)],
        cells: vec![vec![cell(10.0), cell(20.0)], vec![cell(30.0), cell(40.0)]],
    };
    let agg = aggregate_by_strategy_size(&m);
    assert_eq!(agg.len(), 1);
    assert_eq!(*agg.values().next().unwrap(), 25.0);
    let single = CrossMatrix {
        rows: vec![meta("m", "random", 24, 0)],
        columns: vec![meta("e", "random", 120, 0)],
        cells: vec![vec![cell(-7.5)]],
    };
    assert_eq!(*aggregate_by_strategy_size(&single).values().next().unwrap(), -7.5);
}

#[test]
fn pca_degenerate_inputs() {
    let same = vec![vec![0.3, 0.1, 0.7]; 5];
    let out = pca_project(&same, &same, 2).unwrap();
    assert!(out.iter().all(|p| p == &vec![0.0, 0.0]));
    let line: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, 2.0 * i as f64, -(i as f64)]).collect();
    let out = pca_project(&line, &line, 2).unwrap();
    assert!(out.iter().all(|p| p[1].abs() < 1e-9));
    // the first axis is oriented towards the largest loading (+y)
    assert!(out[5][0] > out[0][0]);
    assert!(pca_project(&line[..2], &line, 2).is_err());
}

#[test]
fn pca_is_rotation_invariant_up_to_isometry() {
    let mut rng = crate::seed::rng_for(6, "pca", &[]);
    let reference: Vec<Vec<f64>> = (0..40)
        .map(|_| vec![3.0 * rng.random::<f64>(), rng.random::<f64>(), 0.2 * rng.random::<f64>()])
        .collect();
    let all: Vec<Vec<f64>> = (0..30)
        .map(|_| (0..3).map(|_| rng.random::<f64>()).collect())
        .collect();
    let q = nalgebra::DMatrix::from_fn(3, 3, |_, _| rng.random::<f64>() - 0.5).qr().q();
    let rotate = |v: &Vec<f64>| -> Vec<f64> { (q.clone() * nalgebra::DVector::from_column_slice(v)).iter().copied().collect() };
    let a = pca_project(&reference, &all, 2).unwrap();
    let b = pca_project(
        &reference.iter().map(rotate).collect::<Vec<_>>(),
        &all.iter().map(rotate).collect::<Vec<_>>(),
        2,
    )
    .unwrap();
    for i in 0..all.len() {
        for j in 0..all.len() {
            let da = crate::stats::euclidean(&a[i], &a[j]);
            let db = crate::stats::euclidean(&b[i], &b[j]);
            assert!((da - db).abs() < 1e-9);
        }
    }
}

mod properties {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn removing_a_non_sbs_algorithm_never_increases_gap(seed in any::<u64>()) {
            let t = random_table(seed, 12, 5);
            let ids = t.problem_ids.clone();
            for mask in 1u32..32 {
                let s: Vec<u32> = (0..5).filter(|b| mask >> b & 1 == 1).map(|b| b + 1).collect();
                let (sbs_id, sbs_m) = sbs(&t, &ids, &s).unwrap();
                let gap = vbs_mean(&t, &ids, &s).unwrap() - sbs_m;
                for &a in &s {
                    if a == sbs_id || s.len() == 1 {
                        continue;
                    }
                    let smaller: Vec<u32> = s.iter().copied().filter(|&b| b != a).collect();
                    let (_, m2) = sbs(&t, &ids, &smaller).unwrap();
                    let v2 = vbs_mean(&t, &ids, &smaller).unwrap();
                    prop_assert!(v2 - m2 <= gap + 1e-12);
                    prop_assert!(v2 <= vbs_mean(&t, &ids, &s).unwrap());
                }
            }
        }

        #[test]
        fn report_bounds(seed in any::<u64>()) {
            let t = random_table(seed, 15, 4);
            let ids = t.problem_ids.clone();
            let subset = [1, 2, 3, 4];
            let f = no_features(15);
            for pick in 1..=4 {
                let r = gap_closed(&ConstantSelector(pick), &t, &ids, &subset, &f, None).unwrap();
                prop_assert!(r.vbs_mean >= r.sbs_mean && r.vbs_mean >= r.selector_mean);
                prop_assert!(r.sbs_mean >= r.selector_mean);
            }
        }

        #[test]
        fn relabeling_algorithms_preserves_gap_closed(seed in any::<u64>()) {
            let t = random_table(seed, 15, 4);
            let ids = t.problem_ids.clone();
            let f = no_features(15);
            let relabel = [40u32, 10, 30, 20];
            let t2 = PerformanceTable::new(2, t.budget, ids.clone(), relabel.to_vec(), t.runs.clone()).unwrap();
            struct ByParity(u32, u32);
            impl Selector for ByParity {
                fn select(&self, pid: u64, _: &[f64]) -> u32 {
                    if pid % 2 == 0 { self.0 } else { self.1 }
                }
            }
            let r1 = gap_closed(&ByParity(1, 3), &t, &ids, &[1, 2, 3, 4], &f, None).unwrap();
            let r2 = gap_closed(&ByParity(40, 30), &t2, &ids, &relabel, &f, None).unwrap();
            prop_assert_eq!(r1.gap_closed_pct, r2.gap_closed_pct);
        }

        #[test]
        fn dominated_algorithm_does_not_change_labels(seed in any::<u64>()) {
            let t = random_table(seed, 15, 3);
            let runs: Vec<Vec<Vec<f64>>> = t
                .mean
                .iter()
                .map(|row| {
                    let best = row.iter().copied().fold(0.0, f64::max);
                    let mut r: Vec<Vec<f64>> = row.iter().map(|v| vec![*v]).collect();
                    r.push(vec![best * 0.999]);
                    r
                })
                .collect();
            let t2 = PerformanceTable::new(2, t.budget, t.problem_ids.clone(), vec![1, 2, 3, 4], runs).unwrap();
            prop_assert_eq!(
                label_instances(&t, &[1, 2, 3], &t.problem_ids).unwrap(),
                label_instances(&t2, &[1, 2, 3, 4], &t.problem_ids).unwrap()
            );
        }
    }
}
