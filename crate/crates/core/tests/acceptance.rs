//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any fails.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use aaslab::aas::{self, ConstantSelector, OracleSelector, Selector};
use aaslab::ela::{prune_features, FeatureVector};
use aaslab::pipeline::{self, ExperimentConfig, Pipeline};
use aaslab::portfolio::{aocc_values, AoccConfig};
use aaslab::problem::{component_precision, Generator, PRECISION_FLOOR};
use aaslab::sampling::{sobol_points, SampleDesign};
use aaslab::selection::{select_greedy, Strategy};
use aaslab::seed::rng_for;
use rand::Rng as _;

// pinned tolerances
const AOCC_EXACT_TOL: f64 = 1e-12;
const PRUNE_THRESHOLD: f64 = 0.9;
const RATIO_SLACK: f64 = 1.05;
const DIAGONAL_MIN_PCT: f64 = 99.0;
const BASELINE_TOL: f64 = 1e-9;
const POWERSET_TOL: f64 = 1e-12;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn criterion_1() -> Outcome {
    let g = Generator::new(7, 100);
    let probes = sobol_points(&SampleDesign::new(1000, 2, -5.0, 5.0)).map_err(|e| e.to_string())?;
    for i in 0..200u64 {
        let k = 1 + (i as usize % 6);
        let p = g.problem(2, k, i).map_err(|e| e.to_string())?;
        check(p.evaluate(&p.optimum) == 0.0, format!("problem {i}: F(x*) != 0"))?;
        for x in &probes {
            let f = p.evaluate(x);
            check(f >= 0.0, format!("problem {i}: F({x:?}) = {f} < 0"))?;
        }
    }
    let mut rng = rng_for(7, "acceptance-pairs", &[]);
    for j in 0..20u32 {
        let p = g.component_problem(1 + j, 1 + j, 2).map_err(|e| e.to_string())?;
        let ci = &p.components[0];
        for _ in 0..100 {
            let x: Vec<f64> = (0..2).map(|_| rng.random_range(-5.0..5.0)).collect();
            let y: Vec<f64> = (0..2).map(|_| rng.random_range(-5.0..5.0)).collect();
            let px = component_precision(ci, &p.optimum, &x).map_err(|e| e.to_string())?;
            let py = component_precision(ci, &p.optimum, &y).map_err(|e| e.to_string())?;
            let (fx, fy) = (p.evaluate(&x), p.evaluate(&y));
            // order preserved above the precision floor, where the log scale is not clamped
            if px < py && py > 2.0 * PRECISION_FLOOR {
                check(fx < fy, format!("function {}: precision {px} < {py} but F {fx} >= {fy}", 1 + j))?;
            }
        }
    }
    Ok("200 problems x 1000 probes, 20 x 100 pairs".into())
}

fn criterion_2() -> Outcome {
    let cfg = AoccConfig::default();
    let cases = [(cfg.upper, 0.0), (cfg.lower, 1.0), ((cfg.lower * cfg.upper).sqrt(), 0.5)];
    for (v, expected) in cases {
        let got = aocc_values(&vec![v; 100], 100, &cfg).map_err(|e| e.to_string())?;
        check((got - expected).abs() <= AOCC_EXACT_TOL, format!("constant {v}: {got} != {expected}"))?;
    }
    let mut rng = rng_for(2, "acceptance-dominance", &[]);
    for t in 0..100 {
        let n = rng.random_range(1..300usize);
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        let (mut ba, mut bb) = (f64::INFINITY, f64::INFINITY);
        for _ in 0..n {
            let va = 10f64.powf(rng.random_range(-10.0..4.0));
            ba = ba.min(va);
            bb = bb.min(ba * 10f64.powf(-rng.random_range(0.0..2.0)));
            a.push(ba);
            b.push(bb);
        }
        let (sa, sb) = (
            aocc_values(&a, n, &cfg).map_err(|e| e.to_string())?,
            aocc_values(&b, n, &cfg).map_err(|e| e.to_string())?,
        );
        check(sb >= sa, format!("pair {t}: dominating trajectory scores {sb} < {sa}"))?;
    }
    Ok("3 analytic cases, 100 dominance pairs".into())
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    (saa > 0.0 && sbb > 0.0).then(|| sab / (saa * sbb).sqrt())
}

fn criterion_3() -> Outcome {
    let names: Vec<String> = (0..20).map(|j| format!("f{j:02}")).collect();
    let mut retained_total = 0;
    for pop in 0..50u64 {
        let mut rng = rng_for(pop, "acceptance-population", &[]);
        let rows_n = rng.random_range(10..60usize);
        let factors = rng.random_range(1..8usize);
        let latent: Vec<Vec<f64>> = (0..factors)
            .map(|_| (0..rows_n).map(|_| rng.random::<f64>()).collect())
            .collect();
        let noise: Vec<f64> = (0..20).map(|_| rng.random_range(0.0..1.0)).collect();
        let mut cols: Vec<Vec<f64>> = Vec::new();
        for j in 0..20 {
            cols.push(
                (0..rows_n)
                    .map(|i| latent[j % factors][i] + noise[j] * rng.random::<f64>())
                    .collect(),
            );
        }
        let rows: Vec<FeatureVector> = (0..rows_n)
            .map(|i| FeatureVector {
                problem_id: i as u64,
                names: names.clone(),
                values: cols.iter().map(|c| Some(c[i])).collect(),
                normalized: false,
            })
            .collect();
        let kept = prune_features(&rows, PRUNE_THRESHOLD).map_err(|e| e.to_string())?;
        for _ in 0..2 {
            let again = prune_features(&rows, PRUNE_THRESHOLD).map_err(|e| e.to_string())?;
            check(again == kept, format!("population {pop}: pruning not deterministic"))?;
        }
        let idx: Vec<usize> = kept.iter().map(|n| names.iter().position(|m| m == n).unwrap()).collect();
        for a in 0..idx.len() {
            for b in a + 1..idx.len() {
                if let Some(r) = pearson(&cols[idx[a]], &cols[idx[b]]) {
                    check(
                        r.abs() <= PRUNE_THRESHOLD,
                        format!("population {pop}: {} and {} have |r| = {}", kept[a], kept[b], r.abs()),
                    )?;
                }
            }
        }
        retained_total += kept.len();
    }
    Ok(format!("50 populations, {retained_total} features retained in total"))
}

fn manhattan(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Best ordered triple by (distance of the first pick to the pool centroid,
/// min distance of the second to the first, min distance of the third to
/// both), compared lexicographically over all triples.
fn exhaustive_maximin3(ids: &[u64], rows: &BTreeMap<u64, Vec<f64>>) -> Vec<u64> {
    let width = rows[&ids[0]].len();
    let centroid: Vec<f64> = (0..width)
        .map(|j| ids.iter().map(|i| rows[i][j]).sum::<f64>() / ids.len() as f64)
        .collect();
    let mut best: Option<([f64; 3], Vec<u64>)> = None;
    for &a in ids {
        for &b in ids.iter().filter(|&&b| b != a) {
            for &c in ids.iter().filter(|&&c| c != a && c != b) {
                let key = [
                    manhattan(&rows[&a], &centroid),
                    manhattan(&rows[&b], &rows[&a]),
                    manhattan(&rows[&c], &rows[&a]).min(manhattan(&rows[&c], &rows[&b])),
                ];
                let better = match &best {
                    None => true,
                    Some((k, _)) => key.partial_cmp(k) == Some(std::cmp::Ordering::Greater),
                };
                if better {
                    best = Some((key, vec![a, b, c]));
                }
            }
        }
    }
    best.unwrap().1
}

fn criterion_4() -> Outcome {
    for t in 0..100u64 {
        let mut rng = rng_for(t, "acceptance-greedy", &[]);
        let n = rng.random_range(3..=8usize);
        let width = rng.random_range(1..=2usize);
        let ids: Vec<u64> = (0..n as u64).map(|i| 100 + 3 * i).collect();
        let rows: BTreeMap<u64, Vec<f64>> = ids
            .iter()
            .map(|&i| (i, (0..width).map(|_| rng.random::<f64>()).collect()))
            .collect();
        let set = select_greedy(&ids, &rows, 3, &BTreeSet::new(), 2).map_err(|e| e.to_string())?;
        let expected = exhaustive_maximin3(&ids, &rows);
        check(set.ids == expected, format!("pool {t}: greedy {:?} vs exhaustive {expected:?}", set.ids))?;
    }
    Ok("100 pools".into())
}

struct Desk {
    p: Pipeline,
    elapsed: f64,
}

fn desk_dir(tag: &str) -> PathBuf {
    let d = Path::new(env!("CARGO_TARGET_TMPDIR")).join(format!("acceptance-desk-{tag}"));
    if d.exists() {
        std::fs::remove_dir_all(&d).unwrap();
    }
    d
}

fn run_desk(tag: &str, jobs: usize) -> Result<Desk, String> {
    let mut cfg = ExperimentConfig::desk_scale();
    cfg.output_dir = desk_dir(tag);
    let p = Pipeline::new(cfg, jobs).map_err(|e| e.to_string())?;
    let t = Instant::now();
    p.all().map_err(|e| e.to_string())?;
    Ok(Desk {
        p,
        elapsed: t.elapsed().as_secs_f64(),
    })
}

fn criterion_5(d: &Desk) -> Outcome {
    let c = &d.p.config;
    check(c.dim == 2, "desk suite must be two-dimensional")?;
    check(
        c.generator_spec().map_err(|e| e.to_string())?.total() == 600,
        "desk suite must hold 600 problems",
    )?;
    let sets = d.p.load_sets().map_err(|e| e.to_string())?;
    let features = d.p.load_features().map_err(|e| e.to_string())?.dense();
    let mean_apd = |strategy: Strategy, size: usize| -> Result<f64, String> {
        let vals: Vec<f64> = sets
            .iter()
            .filter(|s| s.strategy == strategy && s.size == size)
            .map(|s| {
                let rows: Vec<&Vec<f64>> = s.ids.iter().map(|i| &features[i]).collect();
                let mut total = 0.0;
                let mut pairs = 0usize;
                for a in 0..rows.len() {
                    for b in a + 1..rows.len() {
                        total += manhattan(rows[a], rows[b]);
                        pairs += 1;
                    }
                }
                total / pairs as f64
            })
            .collect();
        check(vals.len() == 5, format!("{strategy}-{size}: {} repetitions, want 5", vals.len()))?;
        Ok(vals.iter().sum::<f64>() / vals.len() as f64)
    };
    // repetitions must be disjoint
    for strategy in [Strategy::Random, Strategy::Greedy] {
        for size in [24, 120] {
            let mut seen = BTreeSet::new();
            for s in sets.iter().filter(|s| s.strategy == strategy && s.size == size) {
                for id in &s.ids {
                    check(seen.insert(*id), format!("{strategy}-{size}: problem {id} repeated"))?;
                }
            }
        }
    }
    let (g24, r24) = (mean_apd(Strategy::Greedy, 24)?, mean_apd(Strategy::Random, 24)?);
    let (g120, r120) = (mean_apd(Strategy::Greedy, 120)?, mean_apd(Strategy::Random, 120)?);
    let (q24, q120) = (g24 / r24, g120 / r120);
    let msg = format!("s=24 greedy {g24:.4} random {r24:.4} ratio {q24:.3}; s=120 ratio {q120:.3}");
    check(g24 > r24, format!("greedy not more diverse: {msg}"))?;
    check(q120 <= q24 * RATIO_SLACK, format!("ratio grows with size: {msg}"))?;
    Ok(format!("{msg}; pipeline {:.0} s", d.elapsed))
}

fn criterion_6(d: &Desk) -> Outcome {
    let cross = d.p.load_cross().map_err(|e| e.to_string())?;
    let mut worst = f64::INFINITY;
    for c in cross.iter().filter(|c| c.diagonal) {
        let v = c.gap_closed_pct.ok_or_else(|| format!("{}: no gap on its own training set", c.model))?;
        check(v >= DIAGONAL_MIN_PCT, format!("{} closes {v:.3}% of its training gap", c.model))?;
        worst = worst.min(v);
    }
    let perf = d.p.load_performance().map_err(|e| e.to_string())?;
    let features = d.p.load_features().map_err(|e| e.to_string())?.dense();
    let subset: Vec<u32> = d.p.config.portfolio.algorithms.iter().map(|a| a.algorithm_id).collect();
    let oracle = OracleSelector::new(&perf, &subset).map_err(|e| e.to_string())?;
    let sets = d.p.load_sets().map_err(|e| e.to_string())?;
    let pool = d.p.load_suite().map_err(|e| e.to_string())?.generated_ids();
    let mut evals: Vec<(String, Vec<u64>)> = sets.iter().map(|s| (s.label(), s.ids.clone())).collect();
    evals.push(("pool".into(), pool));
    for (label, ids) in &evals {
        let (sbs, _) = aas::sbs(&perf, ids, &subset).map_err(|e| e.to_string())?;
        for (name, sel, want) in [
            ("oracle", &oracle as &dyn Selector, 100.0),
            ("sbs", &ConstantSelector(sbs) as &dyn Selector, 0.0),
        ] {
            let r = aas::gap_closed(sel, &perf, ids, &subset, &features, None).map_err(|e| e.to_string())?;
            let v = r.gap_closed_pct.ok_or_else(|| format!("{label}: zero gap"))?;
            check((v - want).abs() <= BASELINE_TOL, format!("{label}: {name} scores {v}"))?;
        }
    }
    Ok(format!("{} diagonal cells, worst {worst:.3}%; baselines on {} sets", cross.iter().filter(|c| c.diagonal).count(), evals.len()))
}

fn criterion_7(d: &Desk) -> Outcome {
    let t = Instant::now();
    let perf = d.p.load_performance().map_err(|e| e.to_string())?;
    let pool = d.p.load_suite().map_err(|e| e.to_string())?.generated_ids();
    let algs: Vec<u32> = d.p.config.portfolio.algorithms.iter().map(|a| a.algorithm_id).collect();
    check(algs.len() >= 5, "fewer than 5 algorithms")?;
    // independent gap computation straight from the mean table
    let rows: Vec<Vec<f64>> = pool.iter().map(|p| perf.row(*p).unwrap().to_vec()).collect();
    let col = |a: u32| perf.algorithm_index(a).unwrap();
    let stats = |s: &[u32]| -> (u32, f64) {
        let means: Vec<f64> = s
            .iter()
            .map(|&a| rows.iter().map(|r| r[col(a)]).sum::<f64>() / rows.len() as f64)
            .collect();
        let mut best = 0;
        for i in 1..s.len() {
            if means[i] > means[best] || (means[i] == means[best] && s[i] < s[best]) {
                best = i;
            }
        }
        let vbs = rows
            .iter()
            .map(|r| s.iter().map(|&a| r[col(a)]).fold(f64::NEG_INFINITY, f64::max))
            .sum::<f64>()
            / rows.len() as f64;
        (s[best], vbs - means[best])
    };
    let (sbs_all, gap_all) = stats(&algs);
    let mut checked = 0;
    let mut larger = 0;
    for mask in 1u32..(1 << algs.len()) {
        let s: Vec<u32> = (0..algs.len()).filter(|i| mask >> i & 1 == 1).map(|i| algs[i]).collect();
        if s.len() < 3 {
            continue;
        }
        let (sbs, gap) = stats(&s);
        if !s.contains(&sbs_all) && gap > gap_all {
            larger += 1;
        }
        for &a in s.iter().filter(|&&a| a != sbs) {
            let rest: Vec<u32> = s.iter().copied().filter(|&b| b != a).collect();
            let (_, g) = stats(&rest);
            check(g <= gap + POWERSET_TOL, format!("removing {a} from {s:?} raises the gap {gap} -> {g}"))?;
            checked += 1;
        }
    }
    let summary: pipeline::Summary = serde_json::from_str(
        &std::fs::read_to_string(d.p.path(pipeline::SUMMARY_FILE)).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    check(summary.sbs_id == sbs_all, "report names a different SBS")?;
    check(summary.larger_gap_subsets_without_sbs == larger, "report count disagrees with brute force")?;
    let flagged = summary.observations.iter().any(|o| o.contains("no subset without the overall SBS"));
    check(larger > 0 || flagged, "no larger-gap subset and the report does not say so")?;
    Ok(format!(
        "{checked} removals checked; SBS {sbs_all}, full gap {gap_all:.4}, {larger} subsets without SBS have a larger gap; {:.2} s",
        t.elapsed().as_secs_f64()
    ))
}

fn criterion_8(d: &Desk) -> Outcome {
    let summary: pipeline::Summary = serde_json::from_str(
        &std::fs::read_to_string(d.p.path(pipeline::SUMMARY_FILE)).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let c = &d.p.config;
    check(
        c.portfolio.algorithms.len() == 5 && c.portfolio.runs == 5 && c.portfolio.budget_factor == 2000,
        "desk configuration differs from the acceptance experiment",
    )?;
    let mut parts = Vec::new();
    for size in [24, 120] {
        let get = |s: &str| {
            summary
                .unseen_gap_closed
                .get(&format!("{s}-{size}"))
                .copied()
                .ok_or_else(|| format!("no unseen result for {s}-{size}"))
        };
        let (r, comp) = (get("random")?, get("components")?);
        parts.push(format!("s={size}: random {r:.2}% vs components {comp:.2}% (greedy {:.2}%)", get("greedy")?));
        check(r >= comp, format!("random below components: {}", parts.join("; ")))?;
    }
    Ok(parts.join("; "))
}

fn criterion_9(a: &Desk, jobs_b: usize) -> Outcome {
    let b = run_desk("j2", jobs_b)?;
    let root_a = a.p.config.output_dir.clone();
    let root_b = b.p.config.output_dir.clone();
    let mut files = Vec::new();
    let mut stack = vec![root_a.clone()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir).map_err(|e| e.to_string())? {
            let path = e.map_err(|e| e.to_string())?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|x| x == "csv") {
                files.push(path.strip_prefix(&root_a).unwrap().to_path_buf());
            }
        }
    }
    files.sort();
    check(!files.is_empty(), "no CSV artifacts")?;
    for f in &files {
        let (x, y) = (std::fs::read(root_a.join(f)), std::fs::read(root_b.join(f)));
        check(
            matches!((&x, &y), (Ok(x), Ok(y)) if x == y),
            format!("{} differs between --jobs 1 and --jobs {jobs_b}", f.display()),
        )?;
    }
    Ok(format!("{} CSV files identical across --jobs 1 and --jobs {jobs_b}", files.len()))
}

fn report(id: usize, name: &str, outcome: Outcome, results: &mut Vec<bool>) {
    let line = match &outcome {
        Ok(m) => format!("criterion {id} PASS {name}: {m}"),
        Err(m) => format!("criterion {id} FAIL {name}: {m}"),
    };
    let _ = writeln!(std::io::stdout(), "{line}");
    results.push(outcome.is_ok());
}

fn main() {
    let mut results = Vec::new();
    report(1, "generator invariants", criterion_1(), &mut results);
    report(2, "AOCC unit suite", criterion_2(), &mut results);
    report(3, "pruning oracle", criterion_3(), &mut results);
    report(4, "greedy selection oracle", criterion_4(), &mut results);
    match run_desk("j1", 1) {
        Ok(desk) => {
            report(5, "diversity trend", criterion_5(&desk), &mut results);
            report(6, "selector sanity", criterion_6(&desk), &mut results);
            report(7, "powerset monotonicity", criterion_7(&desk), &mut results);
            report(8, "random vs component training sets", criterion_8(&desk), &mut results);
            report(9, "determinism", criterion_9(&desk, 2), &mut results);
        }
        Err(e) => {
            for (id, name) in [
                (5, "diversity trend"),
                (6, "selector sanity"),
                (7, "powerset monotonicity"),
                (8, "random vs component training sets"),
                (9, "determinism"),
            ] {
                report(id, name, Err(format!("desk pipeline failed: {e}")), &mut results);
            }
        }
    }
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
