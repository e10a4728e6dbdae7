//! Training and evaluation instance sets: uniform random sampling, greedy
//! maximin diversity in feature space, and component-function sets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::artifact::sha256_hex;
use crate::ela::FeatureVector;
use crate::error::{Error, Result};
use crate::problem::component_problem_id;
use crate::seed;

/// Value used for infeasible features in distance computations.
pub const INFEASIBLE_FILL: f64 = 0.5;
/// Instances every component function must provide.
pub const MIN_COMPONENT_INSTANCES: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Random,
    Greedy,
    Components,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Random => "random",
            Strategy::Greedy => "greedy",
            Strategy::Components => "components",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSet {
    pub strategy: Strategy,
    pub size: usize,
    pub repetition: usize,
    pub dim: usize,
    /// Hash of the sorted exclusion list.
    pub excluded_hash: String,
    pub ids: Vec<u64>,
    #[serde(skip)]
    pub excluded: BTreeSet<u64>,
}

impl InstanceSet {
    fn new(strategy: Strategy, ids: Vec<u64>, repetition: usize, dim: usize, excluded: &BTreeSet<u64>) -> Self {
        let list: Vec<String> = excluded.iter().map(u64::to_string).collect();
        InstanceSet {
            strategy,
            size: ids.len(),
            repetition,
            dim,
            excluded_hash: sha256_hex(list.join(",").as_bytes()),
            ids,
            excluded: excluded.clone(),
        }
    }

    /// Stable identifier such as `greedy-24-r3`.
    pub fn label(&self) -> String {
        match self.strategy {
            Strategy::Components => format!("components-{}", self.size),
            s => format!("{s}-{}-r{}", self.size, self.repetition),
        }
    }

    pub fn id_set(&self) -> BTreeSet<u64> {
        self.ids.iter().copied().collect()
    }
}

fn candidates(pool: &[u64], excluded: &BTreeSet<u64>, s: usize) -> Result<Vec<u64>> {
    let set: BTreeSet<u64> = pool.iter().copied().collect();
    if set.len() != pool.len() {
        return Err(Error::Data("duplicate ids in instance pool".into()));
    }
    let free: Vec<u64> = set.difference(excluded).copied().collect();
    if free.len() < s {
        return Err(Error::Capacity {
            need: s,
            available: free.len(),
        });
    }
    Ok(free)
}

/// Uniform sample without replacement from `pool \ excluded`.
pub fn select_random(
    pool: &[u64],
    s: usize,
    excluded: &BTreeSet<u64>,
    seed: u64,
    dim: usize,
) -> Result<InstanceSet> {
    let free = candidates(pool, excluded, s)?;
    let mut rng = seed::rng_for(seed, "select-random", &[]);
    let ids = index::sample(&mut rng, free.len(), s)
        .into_iter()
        .map(|i| free[i])
        .collect();
    Ok(InstanceSet::new(Strategy::Random, ids, 0, dim, excluded))
}

/// Dense feature rows keyed by problem id, infeasible values filled.
pub fn dense_features(vectors: &[FeatureVector]) -> BTreeMap<u64, Vec<f64>> {
    vectors
        .iter()
        .map(|v| (v.problem_id, v.dense(INFEASIBLE_FILL)))
        .collect()
}

fn lookup<'a>(features: &'a BTreeMap<u64, Vec<f64>>, id: u64) -> Result<&'a [f64]> {
    features
        .get(&id)
        .map(Vec::as_slice)
        .ok_or_else(|| Error::Data(format!("no features for problem {id}")))
}

/// Maximin greedy selection. The first pick is the candidate farthest from
/// the centroid of the whole pool; ties go to the lowest id.
pub fn select_greedy(
    pool: &[u64],
    features: &BTreeMap<u64, Vec<f64>>,
    s: usize,
    excluded: &BTreeSet<u64>,
    dim: usize,
) -> Result<InstanceSet> {
    let free = candidates(pool, excluded, s)?;
    let rows: Vec<&[f64]> = free
        .iter()
        .map(|&id| lookup(features, id))
        .collect::<Result<_>>()?;
    let mut ids = Vec::with_capacity(s);
    if s > 0 {
        let width = rows[0].len();
        let mut centroid = vec![0.0; width];
        for &id in pool {
            for (c, v) in centroid.iter_mut().zip(lookup(features, id)?) {
                *c += v;
            }
        }
        for c in &mut centroid {
            *c /= pool.len() as f64;
        }
        // min distance of each candidate to the selected set
        let mut gap: Vec<f64> = rows
            .iter()
            .map(|r| crate::stats::manhattan(r, &centroid))
            .collect();
        let mut taken = vec![false; free.len()];
        for _ in 0..s {
            let mut best: Option<usize> = None;
            for i in 0..free.len() {
                if !taken[i] && best.is_none_or(|b| gap[i] > gap[b]) {
                    best = Some(i);
                }
            }
            let b = best.expect("enough candidates");
            taken[b] = true;
            ids.push(free[b]);
            if ids.len() == 1 {
                gap.iter_mut().for_each(|g| *g = f64::INFINITY);
            }
            for i in 0..free.len() {
                if !taken[i] {
                    gap[i] = gap[i].min(crate::stats::manhattan(rows[i], rows[b]));
                }
            }
        }
    }
    Ok(InstanceSet::new(Strategy::Greedy, ids, 0, dim, excluded))
}

/// Component-function set with instances `1..=instances_per_function` of
/// each of the `registry_size` functions.
pub fn select_components(
    pool: &[u64],
    registry_size: u32,
    instances_per_function: u32,
    dim: usize,
) -> Result<InstanceSet> {
    if instances_per_function == 0 || instances_per_function > MIN_COMPONENT_INSTANCES {
        return Err(Error::Config(format!(
            "instances per function must be in 1..={MIN_COMPONENT_INSTANCES}"
        )));
    }
    let available: BTreeSet<u64> = pool.iter().copied().collect();
    let mut ids = Vec::new();
    for cid in 1..=registry_size {
        for iid in 1..=MIN_COMPONENT_INSTANCES {
            let pid = component_problem_id(cid, iid);
            if !available.contains(&pid) {
                return Err(Error::Pool(format!(
                    "component function {cid} lacks instance {iid}"
                )));
            }
            if iid <= instances_per_function {
                ids.push(pid);
            }
        }
    }
    Ok(InstanceSet::new(Strategy::Components, ids, 0, dim, &BTreeSet::new()))
}

/// Mean Manhattan distance over all unordered pairs.
pub fn avg_pairwise_manhattan(ids: &[u64], features: &BTreeMap<u64, Vec<f64>>) -> Result<f64> {
    if ids.len() < 2 {
        return Err(Error::domain("pairwise distance needs at least two instances"));
    }
    let rows: Vec<&[f64]> = ids
        .iter()
        .map(|&id| lookup(features, id))
        .collect::<Result<_>>()?;
    let mut total = 0.0;
    let mut count = 0usize;
    for a in 0..rows.len() {
        for b in a + 1..rows.len() {
            total += crate::stats::manhattan(rows[a], rows[b]);
            count += 1;
        }
    }
    Ok(total / count as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionPlan {
    pub sizes: Vec<usize>,
    pub repetitions: Vec<usize>,
    pub strategies: Vec<Strategy>,
    /// Instances per function for component sets; empty disables them.
    pub component_instances: Vec<u32>,
}

impl SelectionPlan {
    pub fn full_scale() -> Self {
        SelectionPlan {
            sizes: vec![24, 120, 600, 1200, 1800, 3600],
            repetitions: vec![10, 10, 5, 3, 3, 2],
            strategies: vec![Strategy::Random, Strategy::Greedy, Strategy::Components],
            component_instances: vec![1, 5],
        }
    }

    pub fn validate(&self, pool_size: usize) -> Result<()> {
        if self.sizes.len() != self.repetitions.len() {
            return Err(Error::Config("sizes and repetitions differ in length".into()));
        }
        for (&s, &r) in self.sizes.iter().zip(&self.repetitions) {
            if s * r > pool_size {
                return Err(Error::Capacity {
                    need: s * r,
                    available: pool_size,
                });
            }
        }
        Ok(())
    }
}

/// Builds every set of a plan. Repetitions of one (strategy, size) draw
/// from the pool minus the earlier repetitions, so they are disjoint.
pub fn build_plan(
    plan: &SelectionPlan,
    pool: &[u64],
    component_pool: &[u64],
    features: &BTreeMap<u64, Vec<f64>>,
    registry_size: u32,
    dim: usize,
    seed: u64,
) -> Result<Vec<InstanceSet>> {
    let uses = |s: Strategy| plan.strategies.contains(&s);
    if uses(Strategy::Random) || uses(Strategy::Greedy) {
        plan.validate(pool.len())?;
    }
    let mut out = Vec::new();
    for strategy in [Strategy::Random, Strategy::Greedy] {
        if !uses(strategy) {
            continue;
        }
        for (&s, &reps) in plan.sizes.iter().zip(&plan.repetitions) {
            let mut excluded = BTreeSet::new();
            for r in 0..reps {
                let mut set = match strategy {
                    Strategy::Random => {
                        let rs = seed::derive_seed(seed, "plan-random", &[s as u64, r as u64]);
                        select_random(pool, s, &excluded, rs, dim)?
                    }
                    _ => select_greedy(pool, features, s, &excluded, dim)?,
                };
                set.repetition = r;
                excluded.extend(set.ids.iter().copied());
                out.push(set);
            }
        }
    }
    if uses(Strategy::Components) {
        for &ipf in &plan.component_instances {
            out.push(select_components(component_pool, registry_size, ipf, dim)?);
        }
    }
    Ok(out)
}

/// Table-1 style diversity summary: mean over repetitions of the average
/// pairwise distance, per (strategy, size).
pub fn diversity_table(
    sets: &[InstanceSet],
    features: &BTreeMap<u64, Vec<f64>>,
) -> Result<BTreeMap<(Strategy, usize), f64>> {
    let mut acc: BTreeMap<(Strategy, usize), Vec<f64>> = BTreeMap::new();
    for set in sets {
        acc.entry((set.strategy, set.size))
            .or_default()
            .push(avg_pairwise_manhattan(&set.ids, features)?);
    }
    Ok(acc
        .into_iter()
        .map(|(k, v)| (k, crate::stats::mean(&v)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    fn features_1d(values: &[f64]) -> BTreeMap<u64, Vec<f64>> {
        values.iter().enumerate().map(|(i, v)| (i as u64, vec![*v])).collect()
    }

    fn ids(n: usize) -> Vec<u64> {
        (0..n as u64).collect()
    }

    #[test]
    fn random_whole_pool() {
        let pool = ids(7);
        let set = select_random(&pool, 7, &BTreeSet::new(), 1, 2).unwrap();
        assert_eq!(set.id_set(), pool.iter().copied().collect());
        assert_eq!(set.size, 7);
    }

    #[test]
    fn random_capacity_error() {
        let pool = ids(5);
        let excluded: BTreeSet<u64> = [0, 1].into();
        assert!(matches!(
            select_random(&pool, 4, &excluded, 1, 2),
            Err(Error::Capacity { need: 4, available: 3 })
        ));
        assert!(select_greedy(&pool, &features_1d(&[0.0; 5]), 6, &BTreeSet::new(), 2).is_err());
    }

    #[test]
    fn random_single_draw_frequencies() {
        let pool = ids(4);
        let mut counts = [0usize; 4];
        for t in 0..10_000u64 {
            let set = select_random(&pool, 1, &BTreeSet::new(), t, 2).unwrap();
            counts[set.ids[0] as usize] += 1;
        }
        // binomial(10000, 1/4): sd = sqrt(10000 * 0.25 * 0.75)
        let sd = (10_000.0f64 * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!((c as f64 - 2500.0).abs() <= 3.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn greedy_picks_extremes() {
        let f = features_1d(&[0.0, 0.5, 1.0]);
        let set = select_greedy(&ids(3), &f, 2, &BTreeSet::new(), 1).unwrap();
        assert_eq!(set.id_set(), [0, 2].into());
    }

    #[test]
    fn greedy_ladder_example() {
        // values 0, 1, 3, 4: centroid 2, so 0 and 4 tie and the lower id wins;
        // then 4; then 1 and 3 tie at distance 1 and id 1 wins
        let f = features_1d(&[0.0, 1.0, 3.0, 4.0]);
        let set = select_greedy(&ids(4), &f, 3, &BTreeSet::new(), 1).unwrap();
        assert_eq!(set.ids, vec![0, 3, 1]);
    }

    #[test]
    fn greedy_avoids_duplicates() {
        let f = features_1d(&[0.7, 0.7, 0.7, 0.2]);
        let set = select_greedy(&ids(4), &f, 2, &BTreeSet::new(), 1).unwrap();
        assert!(set.ids.contains(&3));
    }

    #[test]
    fn greedy_is_deterministic() {
        let mut rng = seed::rng_for(2, "features", &[]);
        let f: BTreeMap<u64, Vec<f64>> = (0..50)
            .map(|i| (i, (0..4).map(|_| rng.random::<f64>()).collect()))
            .collect();
        let pool = ids(50);
        let a = select_greedy(&pool, &f, 10, &BTreeSet::new(), 2).unwrap();
        let b = select_greedy(&pool, &f, 10, &BTreeSet::new(), 2).unwrap();
        assert_eq!(a.ids, b.ids);
    }

    fn component_pool(registry: u32, instances: u32) -> Vec<u64> {
        (1..=registry)
            .flat_map(|c| (1..=instances).map(move |i| component_problem_id(c, i)))
            .collect()
    }

    #[test]
    fn component_sets() {
        let pool = component_pool(24, 5);
        assert_eq!(select_components(&pool, 24, 5, 2).unwrap().size, 120);
        assert_eq!(select_components(&pool, 24, 1, 2).unwrap().size, 24);
        let small = component_pool(10, 5);
        assert_eq!(select_components(&small, 10, 1, 2).unwrap().size, 10);
        assert_eq!(select_components(&small, 10, 5, 2).unwrap().size, 50);
        let mut missing = small.clone();
        missing.retain(|&p| p != component_problem_id(7, 5));
        assert!(matches!(select_components(&missing, 10, 5, 2), Err(Error::Pool(_))));
    }

    #[test]
    fn pairwise_examples() {
        let f = features_1d(&[0.0, 1.0, 3.0]);
        assert!((avg_pairwise_manhattan(&ids(3), &f).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(avg_pairwise_manhattan(&[0, 2], &f).unwrap(), 3.0);
        let same = features_1d(&[0.4; 5]);
        assert_eq!(avg_pairwise_manhattan(&ids(5), &same).unwrap(), 0.0);
        assert!(avg_pairwise_manhattan(&[1], &f).is_err());
    }

    #[test]
    fn plan_repetitions_are_disjoint() {
        let mut rng = seed::rng_for(8, "features", &[]);
        let pool = ids(100);
        let f: BTreeMap<u64, Vec<f64>> = pool
            .iter()
            .map(|&i| (i, (0..3).map(|_| rng.random::<f64>()).collect()))
            .collect();
        let plan = SelectionPlan {
            sizes: vec![10, 30],
            repetitions: vec![5, 3],
            strategies: vec![Strategy::Random, Strategy::Greedy],
            component_instances: vec![],
        };
        let sets = build_plan(&plan, &pool, &[], &f, 24, 2, 4).unwrap();
        assert_eq!(sets.len(), 16);
        for a in &sets {
            assert!(a.id_set().is_disjoint(&a.excluded));
            for b in &sets {
                if a.strategy == b.strategy && a.size == b.size && a.repetition != b.repetition {
                    assert!(a.id_set().is_disjoint(&b.id_set()), "{} {}", a.label(), b.label());
                }
            }
        }
        let again = build_plan(&plan, &pool, &[], &f, 24, 2, 4).unwrap();
        assert_eq!(sets, again);
        let too_big = SelectionPlan {
            repetitions: vec![11, 3],
            ..plan
        };
        assert!(matches!(
            build_plan(&too_big, &pool, &[], &f, 24, 2, 4),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn greedy_sets_are_more_diverse() {
        let mut rng = seed::rng_for(5, "features", &[]);
        let pool = ids(400);
        let f: BTreeMap<u64, Vec<f64>> = pool
            .iter()
            .map(|&i| (i, (0..5).map(|_| rng.random::<f64>().powi(2)).collect()))
            .collect();
        let plan = SelectionPlan {
            sizes: vec![24],
            repetitions: vec![5],
            strategies: vec![Strategy::Random, Strategy::Greedy],
            component_instances: vec![],
        };
        let sets = build_plan(&plan, &pool, &[], &f, 24, 2, 1).unwrap();
        let table = diversity_table(&sets, &f).unwrap();
        assert!(table[&(Strategy::Greedy, 24)] > table[&(Strategy::Random, 24)]);
    }

    #[test]
    fn instance_set_json_round_trip() {
        let set = select_random(&ids(10), 3, &[1u64].into(), 1, 2).unwrap();
        let text = serde_json::to_string(&set).unwrap();
        let back: InstanceSet = serde_json::from_str(&text).unwrap();
        assert_eq!(back.ids, set.ids);
        assert_eq!(back.excluded_hash, set.excluded_hash);
        assert_eq!(set.label(), "random-3-r0");
    }
}
