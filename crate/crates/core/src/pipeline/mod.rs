//! End-to-end experiment pipeline: every command reads its inputs from the
//! output directory, checks their config hash and writes stamped artifacts.

mod config;
pub mod plots;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{ElaConfig, ExperimentConfig, GeneratorConfig, PortfolioConfig, SelectionConfig};

use crate::aas::{self, ModelEntry, OracleSelector, SelectorModel, SetMeta};
use crate::artifact::{self, fmt_opt};
use crate::ela::{self, FeatureVector, NormalizationBounds};
use crate::error::{Error, Result};
use crate::portfolio::{self, PerformanceTable, RunOptions, RunSettings};
use crate::problem::{
    Generator, ProblemInstance, ScaleFactorCache, ScaleFactorManifest, SuiteManifest, REGISTRY_SIZE,
};
use crate::sampling::{self, SampleDesign};
use crate::selection::{self, InstanceSet, Strategy};
use crate::seed;

pub const SUITE_FILE: &str = "suite.json";
pub const SCALE_FILE: &str = "scale_factors.json";
pub const RAW_FEATURES_FILE: &str = "features_raw.csv";
pub const FEATURES_FILE: &str = "features.csv";
pub const FEATURE_META_FILE: &str = "feature_selection.json";
pub const PERFORMANCE_FILE: &str = "performance.csv";
pub const TABLE1_FILE: &str = "diversity.csv";
pub const CROSS_FILE: &str = "cross_eval.csv";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const BASELINE_FILE: &str = "baselines.csv";
pub const POWERSET_FILE: &str = "powerset.csv";
pub const SUMMARY_FILE: &str = "summary.json";

/// Generated and component-function problems of one experiment.
pub struct Suite {
    pub generated: Vec<ProblemInstance>,
    pub components: Vec<ProblemInstance>,
}

impl Suite {
    pub fn generated_ids(&self) -> Vec<u64> {
        self.generated.iter().map(|p| p.problem_id).collect()
    }

    pub fn component_ids(&self) -> Vec<u64> {
        self.components.iter().map(|p| p.problem_id).collect()
    }

    pub fn all(&self) -> impl Iterator<Item = &ProblemInstance> {
        self.generated.iter().chain(&self.components)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSelection {
    pub catalog_version: String,
    pub retained: Vec<String>,
    pub bounds: NormalizationBounds,
}

/// Normalized, pruned features.
pub struct Features {
    pub names: Vec<String>,
    pub vectors: Vec<FeatureVector>,
}

impl Features {
    pub fn dense(&self) -> BTreeMap<u64, Vec<f64>> {
        selection::dense_features(&self.vectors)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config_hash: String,
    pub dim: usize,
    pub generated_problems: usize,
    pub component_problems: usize,
    pub retained_features: Vec<String>,
    pub algorithms: Vec<u32>,
    /// SBS and gap over the generated pool with the full portfolio.
    pub sbs_id: u32,
    pub full_gap: f64,
    /// Subsets without the overall SBS whose gap exceeds the full one.
    pub larger_gap_subsets_without_sbs: usize,
    pub best_algorithm_counts: BTreeMap<u32, usize>,
    /// `strategy-size` -> mean average pairwise Manhattan distance.
    pub diversity: BTreeMap<String, f64>,
    /// `strategy-size` -> mean gap closed on the unseen pool.
    pub unseen_gap_closed: BTreeMap<String, f64>,
    pub observations: Vec<String>,
}

pub struct Pipeline {
    pub config: ExperimentConfig,
    pub hash: String,
    pub resume: bool,
    pool: rayon::ThreadPool,
}

fn features_csv(vectors: &[FeatureVector], names: &[String]) -> String {
    let mut s = String::from("problem_id");
    for n in names {
        s.push(',');
        s.push_str(n);
    }
    s.push('\n');
    for v in vectors {
        s.push_str(&v.problem_id.to_string());
        for x in &v.values {
            s.push(',');
            s.push_str(&fmt_opt(*x));
        }
        s.push('\n');
    }
    s
}

fn parse_features_csv(path: &Path, body: &str, normalized: bool) -> Result<(Vec<String>, Vec<FeatureVector>)> {
    let mut lines = body.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Data(format!("{}: empty feature table", path.display())))?;
    let names: Vec<String> = header.split(',').skip(1).map(str::to_string).collect();
    let mut out = Vec::new();
    for line in lines {
        let mut f = line.split(',');
        let pid = f
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Data(format!("{}: bad problem id", path.display())))?;
        let values = f.map(|s| artifact::parse_opt(path, s)).collect::<Result<Vec<_>>>()?;
        if values.len() != names.len() {
            return Err(Error::Data(format!("{}: ragged row", path.display())));
        }
        out.push(FeatureVector {
            problem_id: pid,
            names: names.clone(),
            values,
            normalized,
        });
    }
    Ok((names, out))
}

fn set_meta(set: &InstanceSet) -> SetMeta {
    SetMeta {
        label: set.label(),
        strategy: set.strategy.to_string(),
        size: set.size,
        repetition: set.repetition,
    }
}

impl Pipeline {
    pub fn new(config: ExperimentConfig, jobs: usize) -> Result<Self> {
        config.validate()?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        Ok(Pipeline {
            hash: config.hash(),
            config,
            resume: false,
            pool,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.config.output_dir.join(name)
    }

    fn generator(&self, cache: Arc<ScaleFactorCache>) -> Generator {
        Generator::with_cache(self.config.master_seed, self.config.generator.instance_pool_size, cache)
    }

    fn component_problems(&self, g: &Generator) -> Result<Vec<ProblemInstance>> {
        g.component_problems(self.config.dim, self.config.generator.component_instances)
    }

    /// Writes the suite manifest and the scale-factor cache.
    pub fn generate(&self) -> Result<Suite> {
        let spec = self.config.generator_spec()?;
        let g = self.generator(Arc::default());
        let (generated, manifest) = self.pool.install(|| g.suite(&spec))?;
        let components = self.component_problems(&g)?;
        log::info!(
            "generated {} problems and {} component problems",
            generated.len(),
            components.len()
        );
        artifact::write_json(&self.path(SUITE_FILE), &self.hash, &manifest)?;
        artifact::write_json(&self.path(SCALE_FILE), &self.hash, &g.cache().to_manifest())?;
        Ok(Suite {
            generated,
            components,
        })
    }

    pub fn load_suite(&self) -> Result<Suite> {
        let manifest: SuiteManifest = artifact::read_json(&self.path(SUITE_FILE), &self.hash)?;
        let scales: ScaleFactorManifest = artifact::read_json(&self.path(SCALE_FILE), &self.hash)?;
        let g = self.generator(Arc::new(ScaleFactorCache::from_manifest(scales)));
        let generated = manifest
            .problems
            .iter()
            .map(|r| g.from_record(r))
            .collect::<Result<Vec<_>>>()?;
        let components = self.component_problems(&g)?;
        Ok(Suite {
            generated,
            components,
        })
    }

    /// Averaged raw features, pruning and min-max normalization fitted on
    /// the union of generated and component problems.
    pub fn features(&self) -> Result<Features> {
        let suite = self.load_suite()?;
        let d = self.config.dim;
        let base = SampleDesign::new(self.config.ela.sample_factor * d, d, -5.0, 5.0);
        let designs = sampling::repeat_designs(
            &base,
            self.config.ela.repetitions,
            seed::derive_seed(self.config.master_seed, "ela-designs", &[]),
        );
        let samples = designs
            .iter()
            .map(sampling::sobol_points)
            .collect::<Result<Vec<_>>>()?;
        let problems: Vec<&ProblemInstance> = suite.all().collect();
        let total = problems.len();
        let done = std::sync::atomic::AtomicUsize::new(0);
        let raw: Vec<FeatureVector> = self.pool.install(|| {
            problems
                .par_iter()
                .map(|p| {
                    let reps = samples
                        .iter()
                        .map(|x| {
                            let y: Vec<f64> = x.iter().map(|v| p.evaluate(v)).collect();
                            ela::compute_features(p.problem_id, x, &y)
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let n = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
                    if n % 100 == 0 || n == total {
                        log::info!("features: {n}/{total} problems");
                    }
                    ela::average_feature_repetitions(&reps)
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let catalog = ela::FeatureCatalog::standard();
        artifact::write_csv(&self.path(RAW_FEATURES_FILE), &self.hash, &features_csv(&raw, &catalog.names()))?;

        let retained = ela::prune_features(&raw, self.config.ela.prune_threshold)?;
        log::info!("retained {} of {} features", retained.len(), catalog.len());
        let bounds = ela::fit_minmax(&raw, &retained, d, "generated+components")?;
        let vectors = raw
            .iter()
            .map(|v| ela::apply_minmax(v, &bounds))
            .collect::<Result<Vec<_>>>()?;
        artifact::write_csv(&self.path(FEATURES_FILE), &self.hash, &features_csv(&vectors, &retained))?;
        artifact::write_json(
            &self.path(FEATURE_META_FILE),
            &self.hash,
            &FeatureSelection {
                catalog_version: catalog.version.to_string(),
                retained: retained.clone(),
                bounds,
            },
        )?;
        Ok(Features {
            names: retained,
            vectors,
        })
    }

    pub fn load_raw_features(&self) -> Result<Vec<FeatureVector>> {
        let path = self.path(RAW_FEATURES_FILE);
        let body = artifact::read_csv_checked(&path, &self.hash)?;
        Ok(parse_features_csv(&path, &body, false)?.1)
    }

    pub fn load_features(&self) -> Result<Features> {
        let path = self.path(FEATURES_FILE);
        let body = artifact::read_csv_checked(&path, &self.hash)?;
        let (names, vectors) = parse_features_csv(&path, &body, true)?;
        Ok(Features { names, vectors })
    }

    pub fn load_feature_selection(&self) -> Result<FeatureSelection> {
        artifact::read_json(&self.path(FEATURE_META_FILE), &self.hash)
    }

    fn checkpoint(&self, name: &str) -> Result<PathBuf> {
        let p = self.path(&format!("checkpoints/{name}.jsonl"));
        if !self.resume && p.exists() {
            std::fs::remove_file(&p).map_err(|e| Error::io(&p, e))?;
        }
        Ok(p)
    }

    /// Portfolio runs on generated and component problems.
    pub fn run(&self) -> Result<PerformanceTable> {
        let suite = self.load_suite()?;
        let pc = &self.config.portfolio;
        let settings = |runs: usize, tag: &str| RunSettings {
            budget_factor: pc.budget_factor,
            runs,
            master_seed: seed::derive_seed(self.config.master_seed, tag, &[]),
            aocc: self.config.aocc(),
        };
        let mut parts = Vec::new();
        for (problems, runs, tag) in [
            (&suite.generated, pc.runs, "runs-generated"),
            (&suite.components, pc.component_runs, "runs-components"),
        ] {
            let ckpt = self.checkpoint(tag)?;
            let opts = RunOptions {
                checkpoint: Some(&ckpt),
                config_hash: self.hash.clone(),
                cell_limit: None,
            };
            let table = self
                .pool
                .install(|| portfolio::run_portfolio(problems, &pc.algorithms, &settings(runs, tag), &opts))?
                .ok_or_else(|| Error::Data("portfolio run incomplete".into()))?;
            parts.push(table);
        }
        let (a, b) = (&parts[0], &parts[1]);
        let mut ids = a.problem_ids.clone();
        ids.extend(&b.problem_ids);
        let mut runs = a.runs.clone();
        runs.extend(b.runs.iter().cloned());
        let table = PerformanceTable::new(a.dim, a.budget, ids, a.algorithm_ids.clone(), runs)?;
        artifact::write_csv(&self.path(PERFORMANCE_FILE), &self.hash, &table.to_csv())?;
        Ok(table)
    }

    pub fn load_performance(&self) -> Result<PerformanceTable> {
        let path = self.path(PERFORMANCE_FILE);
        let body = artifact::read_csv_checked(&path, &self.hash)?;
        PerformanceTable::from_csv(&path, &body, self.config.dim)
    }

    /// Builds the instance sets of the selection plan and the diversity table.
    pub fn select(&self) -> Result<Vec<InstanceSet>> {
        let suite = self.load_suite()?;
        let features = self.load_features()?.dense();
        let sets = selection::build_plan(
            &self.config.selection_plan(),
            &suite.generated_ids(),
            &suite.component_ids(),
            &features,
            REGISTRY_SIZE as u32,
            self.config.dim,
            seed::derive_seed(self.config.master_seed, "selection", &[]),
        )?;
        let dir = self.path("sets");
        if dir.exists() {
            std::fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        for set in &sets {
            artifact::write_json(&dir.join(format!("{}.json", set.label())), &self.hash, set)?;
        }
        let index: Vec<String> = sets.iter().map(InstanceSet::label).collect();
        artifact::write_json(&self.path("sets/index.json"), &self.hash, &index)?;

        let table = selection::diversity_table(&sets, &features)?;
        let mut csv = String::from("strategy,size,sets,mean_avg_pairwise_manhattan,ratio_to_random\n");
        for (&(strategy, size), v) in &table {
            let n = sets.iter().filter(|s| s.strategy == strategy && s.size == size).count();
            let ratio = table.get(&(Strategy::Random, size)).map(|r| v / r);
            csv.push_str(&format!("{strategy},{size},{n},{v},{}\n", fmt_opt(ratio)));
        }
        artifact::write_csv(&self.path(TABLE1_FILE), &self.hash, &csv)?;
        Ok(sets)
    }

    pub fn load_sets(&self) -> Result<Vec<InstanceSet>> {
        let index: Vec<String> = artifact::read_json(&self.path("sets/index.json"), &self.hash)?;
        index
            .iter()
            .map(|l| artifact::read_json(&self.path(&format!("sets/{l}.json")), &self.hash))
            .collect()
    }

    fn algorithm_ids(&self) -> Vec<u32> {
        self.config.portfolio.algorithms.iter().map(|a| a.algorithm_id).collect()
    }

    /// One selector per instance set.
    pub fn train(&self) -> Result<Vec<(InstanceSet, SelectorModel)>> {
        let sets = self.load_sets()?;
        let features = self.load_features()?;
        let dense = features.dense();
        let perf = self.load_performance()?;
        let version = self.load_feature_selection()?.catalog_version;
        let subset = self.algorithm_ids();
        let models = self.pool.install(|| {
            sets.par_iter()
                .map(|set| {
                    let label = set.label();
                    let data = aas::LabeledDataset::build(&perf, &subset, &set.ids, &dense, &features.names)?;
                    let seed = seed::derive_seed(self.config.master_seed, &format!("selector/{label}"), &[]);
                    let model = aas::train_selector(&data, &self.config.selector, seed, &label, &version)?;
                    Ok((set.clone(), model))
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let dir = self.path("models");
        if dir.exists() {
            std::fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        for (set, model) in &models {
            artifact::write_json(&dir.join(format!("{}.json", set.label())), &self.hash, model)?;
        }
        log::info!("trained {} selectors", models.len());
        Ok(models)
    }

    pub fn load_models(&self) -> Result<Vec<(InstanceSet, SelectorModel)>> {
        let sets = self.load_sets()?;
        sets.into_iter()
            .map(|s| {
                let m: SelectorModel = artifact::read_json(&self.path(&format!("models/{}.json", s.label())), &self.hash)?;
                Ok((s, m))
            })
            .collect()
    }

    /// Cross-evaluation of every model on every set plus the unseen pool.
    pub fn evaluate(&self) -> Result<aas::CrossMatrix> {
        let models = self.load_models()?;
        let suite = self.load_suite()?;
        let dense = self.load_features()?.dense();
        let perf = self.load_performance()?;
        let subset = self.algorithm_ids();
        let pool = suite.generated_ids();
        let entries: Vec<ModelEntry<'_>> = models
            .iter()
            .map(|(s, m)| ModelEntry {
                meta: set_meta(s),
                selector: m,
                training_ids: s.ids.clone(),
            })
            .collect();
        let evals: Vec<(SetMeta, Vec<u64>)> = models.iter().map(|(s, _)| (set_meta(s), s.ids.clone())).collect();
        let matrix = self
            .pool
            .install(|| aas::cross_evaluate(&entries, &evals, &pool, &perf, &subset, &dense))?;

        let mut csv = String::from(
            "model,model_strategy,model_size,model_repetition,eval,eval_strategy,eval_size,eval_repetition,gap_closed_pct,diagonal\n",
        );
        for (r, row) in matrix.rows.iter().zip(&matrix.cells) {
            for (c, cell) in matrix.columns.iter().zip(row) {
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{}\n",
                    r.label,
                    r.strategy,
                    r.size,
                    r.repetition,
                    c.label,
                    c.strategy,
                    c.size,
                    c.repetition,
                    fmt_opt(cell.gap_closed_pct),
                    cell.diagonal
                ));
            }
        }
        artifact::write_csv(&self.path(CROSS_FILE), &self.hash, &csv)?;

        let mut agg = String::from("train_strategy,train_size,eval_strategy,eval_size,mean_gap_closed_pct\n");
        for (((ts, tsz), (es, esz)), v) in aas::aggregate_by_strategy_size(&matrix) {
            agg.push_str(&format!("{ts},{tsz},{es},{esz},{v}\n"));
        }
        artifact::write_csv(&self.path(AGGREGATE_FILE), &self.hash, &agg)?;

        // reference selectors on every evaluation set and the whole pool
        let oracle = OracleSelector::new(&perf, &subset)?;
        let mut base = String::from("eval,selector,sbs_id,sbs_mean,vbs_mean,selector_mean,gap_closed_pct\n");
        let mut targets = evals.clone();
        targets.push((
            SetMeta {
                label: "pool".into(),
                strategy: "pool".into(),
                size: pool.len(),
                repetition: 0,
            },
            pool.clone(),
        ));
        for (meta, ids) in &targets {
            let (sbs_id, _) = aas::sbs(&perf, ids, &subset)?;
            let constant = aas::ConstantSelector(sbs_id);
            for (name, sel) in [("oracle", &oracle as &dyn aas::Selector), ("sbs", &constant)] {
                let r = aas::gap_closed(sel, &perf, ids, &subset, &dense, None)?;
                base.push_str(&format!(
                    "{},{name},{},{},{},{},{}\n",
                    meta.label,
                    r.sbs_id,
                    r.sbs_mean,
                    r.vbs_mean,
                    r.selector_mean,
                    fmt_opt(r.gap_closed_pct)
                ));
            }
        }
        artifact::write_csv(&self.path(BASELINE_FILE), &self.hash, &base)?;
        Ok(matrix)
    }

    pub fn load_cross(&self) -> Result<Vec<CrossRow>> {
        let path = self.path(CROSS_FILE);
        let body = artifact::read_csv_checked(&path, &self.hash)?;
        body.lines()
            .skip(1)
            .map(|line| {
                let f: Vec<&str> = line.split(',').collect();
                let bad = || Error::Data(format!("{}: malformed row", path.display()));
                if f.len() != 10 {
                    return Err(bad());
                }
                Ok(CrossRow {
                    model: f[0].to_string(),
                    model_strategy: f[1].to_string(),
                    model_size: f[2].parse().map_err(|_| bad())?,
                    eval: f[4].to_string(),
                    eval_strategy: f[5].to_string(),
                    gap_closed_pct: artifact::parse_opt(&path, f[8])?,
                    diagonal: f[9] == "true",
                })
            })
            .collect()
    }

    /// Powerset table, summary and plots.
    pub fn report(&self) -> Result<Summary> {
        let suite = self.load_suite()?;
        let perf = self.load_performance()?;
        let features = self.load_features()?;
        let sets = self.load_sets()?;
        let cross = self.load_cross()?;
        let pool = suite.generated_ids();
        let subset = self.algorithm_ids();
        let pool_perf = perf.restrict_problems(&pool)?;

        let rows = aas::portfolio_powerset_gaps(&pool_perf, &pool, 3.min(subset.len()))?;
        let mut csv = String::from("subset,size,sbs_id,sbs_mean,vbs_mean,gap\n");
        for r in &rows {
            let ids: Vec<String> = r.subset.iter().map(u32::to_string).collect();
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                ids.join(" "),
                r.subset.len(),
                r.sbs_id,
                r.sbs_mean,
                r.vbs_mean,
                r.gap
            ));
        }
        artifact::write_csv(&self.path(POWERSET_FILE), &self.hash, &csv)?;
        let (sbs_id, sbs_mean) = aas::sbs(&perf, &pool, &subset)?;
        let full_gap = aas::vbs_mean(&perf, &pool, &subset)? - sbs_mean;
        let larger = rows
            .iter()
            .filter(|r| !r.subset.contains(&sbs_id) && r.gap > full_gap)
            .count();

        let mut best_counts = BTreeMap::new();
        for l in aas::label_instances(&perf, &subset, &pool)? {
            *best_counts.entry(l).or_insert(0) += 1;
        }

        let dense = features.dense();
        let div = selection::diversity_table(&sets, &dense)?;
        let diversity: BTreeMap<String, f64> = div.iter().map(|((s, z), v)| (format!("{s}-{z}"), *v)).collect();

        let mut unseen: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for c in cross.iter().filter(|c| c.eval_strategy == "unseen") {
            if let Some(v) = c.gap_closed_pct {
                unseen
                    .entry(format!("{}-{}", c.model_strategy, c.model_size))
                    .or_default()
                    .push(v);
            }
        }
        let unseen: BTreeMap<String, f64> = unseen.into_iter().map(|(k, v)| (k, crate::stats::mean(&v))).collect();

        let mut observations = Vec::new();
        if larger == 0 {
            observations.push(
                "no subset without the overall SBS has a larger VBS-SBS gap than the full portfolio".to_string(),
            );
        }
        for &ci in &self.config.selection.component_instances {
            let size = REGISTRY_SIZE * ci as usize;
            let (r, c) = (unseen.get(&format!("random-{size}")), unseen.get(&format!("components-{size}")));
            if let (Some(r), Some(c)) = (r, c) {
                observations.push(format!(
                    "size {size}: random sets close {r:.2}% of the unseen gap, component sets {c:.2}% ({})",
                    if r >= c { "random >= components" } else { "random < components" }
                ));
            }
            if let Some(g) = unseen.get(&format!("greedy-{size}")) {
                if let Some(r) = r {
                    observations.push(format!(
                        "size {size}: greedy sets close {g:.2}% of the unseen gap ({} random)",
                        if g >= r { ">=" } else { "<" }
                    ));
                }
            }
        }

        self.plots(&suite, &perf, &features, &rows, &cross, sbs_id)?;

        let summary = Summary {
            config_hash: self.hash.clone(),
            dim: self.config.dim,
            generated_problems: suite.generated.len(),
            component_problems: suite.components.len(),
            retained_features: features.names.clone(),
            algorithms: subset,
            sbs_id,
            full_gap,
            larger_gap_subsets_without_sbs: larger,
            best_algorithm_counts: best_counts,
            diversity,
            unseen_gap_closed: unseen,
            observations,
        };
        let mut text = serde_json::to_string_pretty(&summary)?;
        text.push('\n');
        artifact::write_atomic(&self.path(SUMMARY_FILE), text.as_bytes())?;
        Ok(summary)
    }

    fn plots(
        &self,
        suite: &Suite,
        perf: &PerformanceTable,
        features: &Features,
        powerset: &[aas::PowersetRow],
        cross: &[CrossRow],
        sbs_id: u32,
    ) -> Result<()> {
        let write = |name: &str, svg: String| artifact::write_atomic(&self.path(&format!("plots/{name}")), svg.as_bytes());
        let dense = features.dense();
        let get = |ids: &[u64]| -> Result<Vec<Vec<f64>>> {
            ids.iter()
                .map(|p| dense.get(p).cloned().ok_or_else(|| Error::Data(format!("no features for {p}"))))
                .collect()
        };
        let gen_ids = suite.generated_ids();
        let comp_ids = suite.component_ids();
        let reference = get(&comp_ids)?;
        let proj = aas::pca_project(&reference, &get(&gen_ids)?, 2)?;
        let proj_ref = aas::pca_project(&reference, &reference, 2)?;
        let pts = |v: Vec<Vec<f64>>| v.into_iter().map(|p| (p[0], p[1])).collect();
        write(
            "pca.svg",
            plots::scatter(
                "Feature space (PCA fitted on component functions)",
                "PC1",
                "PC2",
                &[
                    plots::Series {
                        name: "generated".into(),
                        points: pts(proj),
                    },
                    plots::Series {
                        name: "components".into(),
                        points: pts(proj_ref),
                    },
                ],
                false,
            ),
        )?;

        let sbs_col = perf.algorithm_index(sbs_id).expect("sbs in table");
        let series: Vec<plots::Series> = perf
            .algorithm_ids
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != sbs_col)
            .map(|(j, a)| plots::Series {
                name: format!("alg {a}"),
                points: gen_ids
                    .iter()
                    .filter_map(|p| perf.row(*p).ok())
                    .map(|r| (r[sbs_col], r[j]))
                    .collect(),
            })
            .collect();
        write(
            "sbs_scatter.svg",
            plots::scatter(&format!("AOCC of each algorithm vs SBS (alg {sbs_id})"), "SBS AOCC", "AOCC", &series, true),
        )?;

        let mut groups: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
        for r in powerset {
            groups.entry(r.sbs_id).or_default().push(r.gap);
        }
        let groups: Vec<(String, Vec<f64>)> = groups.into_iter().map(|(k, v)| (format!("SBS {k}"), v)).collect();
        write("powerset.svg", plots::dot_groups("VBS-SBS gap of algorithm subsets", "gap", &groups))?;

        let mut rows: Vec<String> = Vec::new();
        let mut cols: Vec<String> = Vec::new();
        for c in cross {
            if !rows.contains(&c.model) {
                rows.push(c.model.clone());
            }
            if !cols.contains(&c.eval) {
                cols.push(c.eval.clone());
            }
        }
        let mut cells = vec![vec![None; cols.len()]; rows.len()];
        for c in cross {
            let i = rows.iter().position(|r| r == &c.model).expect("row");
            let j = cols.iter().position(|x| x == &c.eval).expect("col");
            cells[i][j] = c.gap_closed_pct.map(|v| v.clamp(-100.0, 100.0));
        }
        write("cross_eval.svg", plots::heatmap("Gap closed (%)", &rows, &cols, &cells, -100.0, 100.0))?;

        let mut agg: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
        for c in cross.iter().filter(|c| !c.diagonal) {
            if let Some(v) = c.gap_closed_pct {
                let col = if c.eval_strategy == "unseen" {
                    "unseen".to_string()
                } else {
                    c.eval.rsplit_once("-r").map_or(c.eval.clone(), |(a, _)| a.to_string())
                };
                agg.entry((format!("{}-{}", c.model_strategy, c.model_size), col))
                    .or_default()
                    .push(v);
            }
        }
        let arows: Vec<String> = agg.keys().map(|k| k.0.clone()).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        let acols: Vec<String> = agg.keys().map(|k| k.1.clone()).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        let acells: Vec<Vec<Option<f64>>> = arows
            .iter()
            .map(|r| {
                acols
                    .iter()
                    .map(|c| agg.get(&(r.clone(), c.clone())).map(|v| crate::stats::mean(v).clamp(-100.0, 100.0)))
                    .collect()
            })
            .collect();
        write(
            "aggregate.svg",
            plots::heatmap("Mean gap closed by strategy and size (%)", &arows, &acols, &acells, -100.0, 100.0),
        )?;
        Ok(())
    }

    /// generate, features, run, select, train, evaluate, report.
    pub fn all(&self) -> Result<Summary> {
        self.generate()?;
        self.features()?;
        self.run()?;
        self.select()?;
        self.train()?;
        self.evaluate()?;
        self.report()
    }
}

/// One cell of the cross-evaluation CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossRow {
    pub model: String,
    pub model_strategy: String,
    pub model_size: usize,
    pub eval: String,
    pub eval_strategy: String,
    pub gap_closed_pct: Option<f64>,
    pub diagonal: bool,
}
