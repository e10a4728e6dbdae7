//! Algorithm selection: labels, single/virtual best solvers, selector
//! training, gap closure, cross-evaluation and PCA projections.

mod pca;
mod trees;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use pca::{pca_project, Projection};
pub use trees::{Boosted, Forest, Node, Tree};

use crate::error::{Error, Result};
use crate::portfolio::PerformanceTable;
use crate::seed;
use crate::stats::mean;

pub const MODEL_FORMAT: &str = "aaslab-selector/1";
/// Largest portfolio accepted by [`portfolio_powerset_gaps`].
pub const MAX_POWERSET_PORTFOLIO: usize = 12;

/// Index of the first maximum.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Column indices of `subset` in `perf`, sorted by algorithm id so that
/// first-maximum ties resolve to the lowest id.
fn subset_columns(perf: &PerformanceTable, subset: &[u32]) -> Result<Vec<(u32, usize)>> {
    if subset.is_empty() {
        return Err(Error::domain("empty algorithm subset"));
    }
    let ids: BTreeSet<u32> = subset.iter().copied().collect();
    ids.into_iter()
        .map(|a| {
            perf.algorithm_index(a)
                .map(|j| (a, j))
                .ok_or_else(|| Error::Data(format!("algorithm {a} missing from performance table")))
        })
        .collect()
}

fn rows<'a>(perf: &'a PerformanceTable, ids: &[u64]) -> Result<Vec<&'a [f64]>> {
    if ids.is_empty() {
        return Err(Error::domain("empty instance set"));
    }
    ids.iter().map(|&p| perf.row(p)).collect()
}

/// Best algorithm per instance over `subset` (ties to the lowest id).
pub fn label_instances(perf: &PerformanceTable, subset: &[u32], ids: &[u64]) -> Result<Vec<u32>> {
    let cols = subset_columns(perf, subset)?;
    Ok(rows(perf, ids)?
        .into_iter()
        .map(|row| {
            let vals: Vec<f64> = cols.iter().map(|&(_, j)| row[j]).collect();
            cols[argmax(&vals)].0
        })
        .collect())
}

/// Single best solver on `ids`: `(algorithm_id, mean AOCC)`.
pub fn sbs(perf: &PerformanceTable, ids: &[u64], subset: &[u32]) -> Result<(u32, f64)> {
    let cols = subset_columns(perf, subset)?;
    let rs = rows(perf, ids)?;
    let means: Vec<f64> = cols
        .iter()
        .map(|&(_, j)| mean(&rs.iter().map(|r| r[j]).collect::<Vec<_>>()))
        .collect();
    let b = argmax(&means);
    Ok((cols[b].0, means[b]))
}

/// Mean over instances of the per-instance best AOCC.
pub fn vbs_mean(perf: &PerformanceTable, ids: &[u64], subset: &[u32]) -> Result<f64> {
    let cols = subset_columns(perf, subset)?;
    let best: Vec<f64> = rows(perf, ids)?
        .into_iter()
        .map(|r| cols.iter().map(|&(_, j)| r[j]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    Ok(mean(&best))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowersetRow {
    pub subset: Vec<u32>,
    pub sbs_id: u32,
    pub sbs_mean: f64,
    pub vbs_mean: f64,
    pub gap: f64,
}

/// VBS-SBS gap of every algorithm subset with at least `min_size` members,
/// sorted by subset SBS, then by subset.
pub fn portfolio_powerset_gaps(perf: &PerformanceTable, ids: &[u64], min_size: usize) -> Result<Vec<PowersetRow>> {
    let mut all: Vec<u32> = perf.algorithm_ids.clone();
    all.sort_unstable();
    let n = all.len();
    if n > MAX_POWERSET_PORTFOLIO {
        return Err(Error::PortfolioTooLarge(n));
    }
    let mut out = Vec::new();
    for mask in 1u32..(1 << n) {
        if (mask.count_ones() as usize) < min_size.max(1) {
            continue;
        }
        let subset: Vec<u32> = (0..n).filter(|b| mask >> b & 1 == 1).map(|b| all[b]).collect();
        let (sbs_id, sbs_mean) = sbs(perf, ids, &subset)?;
        let vbs = vbs_mean(perf, ids, &subset)?;
        out.push(PowersetRow {
            subset,
            sbs_id,
            sbs_mean,
            vbs_mean: vbs,
            gap: vbs - sbs_mean,
        });
    }
    out.sort_by(|a, b| a.sbs_id.cmp(&b.sbs_id).then_with(|| a.subset.cmp(&b.subset)));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledRow {
    pub problem_id: u64,
    pub features: Vec<f64>,
    pub label: u32,
    /// Mean AOCC of each subset algorithm, ordered like `algorithm_ids`.
    pub aocc: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub feature_names: Vec<String>,
    pub algorithm_ids: Vec<u32>,
    pub rows: Vec<LabeledRow>,
}

impl LabeledDataset {
    /// Rows for `ids` with dense normalized features from `features`.
    pub fn build(
        perf: &PerformanceTable,
        subset: &[u32],
        ids: &[u64],
        features: &BTreeMap<u64, Vec<f64>>,
        feature_names: &[String],
    ) -> Result<Self> {
        let cols = subset_columns(perf, subset)?;
        let labels = label_instances(perf, subset, ids)?;
        let rows = ids
            .iter()
            .zip(labels)
            .map(|(&pid, label)| {
                let f = features
                    .get(&pid)
                    .ok_or_else(|| Error::Data(format!("no features for problem {pid}")))?;
                if f.len() != feature_names.len() {
                    return Err(Error::domain("feature vector does not match the catalog"));
                }
                let row = perf.row(pid)?;
                Ok(LabeledRow {
                    problem_id: pid,
                    features: f.clone(),
                    label,
                    aocc: cols.iter().map(|&(_, j)| row[j]).collect(),
                })
            })
            .collect::<Result<_>>()?;
        Ok(LabeledDataset {
            feature_names: feature_names.to_vec(),
            algorithm_ids: cols.iter().map(|&(a, _)| a).collect(),
            rows,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Boosted,
    Forest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectorParams {
    pub kind: ModelKind,
    pub rounds: usize,
    pub max_depth: usize,
    pub eta: f64,
    pub lambda: f64,
    pub min_child_weight: f64,
    pub forest_trees: usize,
    /// `None` grows forest trees until their leaves are pure.
    pub forest_max_depth: Option<usize>,
}

impl Default for SelectorParams {
    fn default() -> Self {
        SelectorParams {
            kind: ModelKind::Boosted,
            rounds: 100,
            max_depth: 6,
            eta: 0.3,
            lambda: 1.0,
            min_child_weight: 1.0,
            forest_trees: 100,
            forest_max_depth: None,
        }
    }
}

impl SelectorParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.rounds > 0
            && self.max_depth > 0
            && self.eta > 0.0
            && self.lambda >= 0.0
            && self.min_child_weight >= 0.0
            && self.forest_trees > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config("invalid selector hyperparameters".into()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub training_set: String,
    pub catalog_version: String,
    pub seed: u64,
    pub params: SelectorParams,
    pub training_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Ensemble {
    Boosted(Boosted),
    Forest(Forest),
    /// Fallback for single-label training data.
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorModel {
    pub format: String,
    pub feature_names: Vec<String>,
    /// Class ids in ascending order.
    pub classes: Vec<u32>,
    pub constant: bool,
    pub meta: ModelMeta,
    pub ensemble: Ensemble,
}

pub trait Selector: Sync {
    /// Algorithm chosen for a problem with the given dense features.
    fn select(&self, problem_id: u64, features: &[f64]) -> u32;
}

impl SelectorModel {
    pub fn scores(&self, features: &[f64]) -> Vec<f64> {
        match &self.ensemble {
            Ensemble::Boosted(b) => b.scores(features),
            Ensemble::Forest(f) => f.scores(features),
            Ensemble::Constant => vec![1.0],
        }
    }

    pub fn predict(&self, features: &[f64]) -> u32 {
        self.classes[argmax(&self.scores(features))]
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: SelectorModel = serde_json::from_str(text)?;
        if m.format != MODEL_FORMAT {
            return Err(Error::Data(format!("unsupported model format {}", m.format)));
        }
        Ok(m)
    }
}

impl Selector for SelectorModel {
    fn select(&self, _problem_id: u64, features: &[f64]) -> u32 {
        self.predict(features)
    }
}

pub fn train_selector(
    data: &LabeledDataset,
    params: &SelectorParams,
    seed: u64,
    training_set: &str,
    catalog_version: &str,
) -> Result<SelectorModel> {
    params.validate()?;
    if data.rows.is_empty() {
        return Err(Error::domain("empty training set"));
    }
    let width = data.feature_names.len();
    if width == 0 || data.rows.iter().any(|r| r.features.len() != width) {
        return Err(Error::domain("feature/catalog mismatch"));
    }
    let classes: Vec<u32> = data
        .rows
        .iter()
        .map(|r| r.label)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let meta = ModelMeta {
        training_set: training_set.to_string(),
        catalog_version: catalog_version.to_string(),
        seed,
        params: params.clone(),
        training_rows: data.rows.len(),
    };
    let x: Vec<Vec<f64>> = data.rows.iter().map(|r| r.features.clone()).collect();
    let y: Vec<usize> = data
        .rows
        .iter()
        .map(|r| classes.binary_search(&r.label).expect("label in class set"))
        .collect();
    let ensemble = if classes.len() < 2 {
        Ensemble::Constant
    } else {
        match params.kind {
            ModelKind::Boosted => Ensemble::Boosted(Boosted::fit(
                &x,
                &y,
                classes.len(),
                params.rounds,
                params.eta,
                &trees::BoostParams {
                    max_depth: params.max_depth,
                    lambda: params.lambda,
                    min_child_weight: params.min_child_weight,
                },
            )),
            ModelKind::Forest => {
                let mut rng = seed::rng_for(seed, "selector-forest", &[]);
                Ensemble::Forest(Forest::fit(
                    &x,
                    &y,
                    classes.len(),
                    params.forest_trees,
                    params.forest_max_depth,
                    &mut rng,
                ))
            }
        }
    };
    Ok(SelectorModel {
        format: MODEL_FORMAT.to_string(),
        feature_names: data.feature_names.clone(),
        constant: classes.len() < 2,
        classes,
        meta,
        ensemble,
    })
}

/// Picks the per-instance best algorithm.
pub struct OracleSelector {
    labels: BTreeMap<u64, u32>,
}

impl OracleSelector {
    pub fn new(perf: &PerformanceTable, subset: &[u32]) -> Result<Self> {
        let labels = label_instances(perf, subset, &perf.problem_ids)?;
        Ok(OracleSelector {
            labels: perf.problem_ids.iter().copied().zip(labels).collect(),
        })
    }
}

impl Selector for OracleSelector {
    fn select(&self, problem_id: u64, _features: &[f64]) -> u32 {
        self.labels[&problem_id]
    }
}

/// Always picks the same algorithm.
pub struct ConstantSelector(pub u32);

impl Selector for ConstantSelector {
    fn select(&self, _problem_id: u64, _features: &[f64]) -> u32 {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub sbs_id: u32,
    pub sbs_mean: f64,
    pub vbs_mean: f64,
    pub selector_mean: f64,
    pub gap: f64,
    /// `None` when the evaluation set has no VBS-SBS gap.
    pub gap_closed_pct: Option<f64>,
    pub zero_gap: bool,
}

/// Share of the VBS-SBS gap the selector closes on `ids`. SBS and VBS come
/// from the evaluation set unless `sbs_override` names another baseline.
pub fn gap_closed(
    selector: &dyn Selector,
    perf: &PerformanceTable,
    ids: &[u64],
    subset: &[u32],
    features: &BTreeMap<u64, Vec<f64>>,
    sbs_override: Option<u32>,
) -> Result<GapReport> {
    let (sbs_id, sbs_mean) = match sbs_override {
        None => sbs(perf, ids, subset)?,
        Some(a) => {
            let j = perf
                .algorithm_index(a)
                .ok_or_else(|| Error::Data(format!("algorithm {a} missing")))?;
            let rs = rows(perf, ids)?;
            (a, mean(&rs.iter().map(|r| r[j]).collect::<Vec<_>>()))
        }
    };
    let vbs = vbs_mean(perf, ids, subset)?;
    let picked = ids
        .iter()
        .map(|&pid| {
            let f = features
                .get(&pid)
                .ok_or_else(|| Error::Data(format!("no features for problem {pid}")))?;
            let a = selector.select(pid, f);
            let j = perf
                .algorithm_index(a)
                .ok_or_else(|| Error::Data(format!("selector chose unknown algorithm {a}")))?;
            Ok(perf.row(pid)?[j])
        })
        .collect::<Result<Vec<f64>>>()?;
    let selector_mean = mean(&picked);
    let gap = vbs - sbs_mean;
    let zero_gap = gap <= 0.0;
    Ok(GapReport {
        sbs_id,
        sbs_mean,
        vbs_mean: vbs,
        selector_mean,
        gap,
        gap_closed_pct: (!zero_gap).then(|| 100.0 * ((selector_mean - sbs_mean) / gap)),
        zero_gap,
    })
}

/// Row/column metadata of a cross-evaluation matrix.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SetMeta {
    pub label: String,
    /// `random`, `greedy`, `components` or `unseen`.
    pub strategy: String,
    pub size: usize,
    pub repetition: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub gap_closed_pct: Option<f64>,
    /// Evaluation set equals the model's training set.
    pub diagonal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossMatrix {
    pub rows: Vec<SetMeta>,
    /// Evaluation sets followed by the per-row `unseen` column.
    pub columns: Vec<SetMeta>,
    pub cells: Vec<Vec<Cell>>,
}

pub struct ModelEntry<'a> {
    pub meta: SetMeta,
    pub selector: &'a dyn Selector,
    pub training_ids: Vec<u64>,
}

/// Gap closure of every model on every evaluation set, plus an `unseen`
/// column with the pool minus the model's own training ids.
pub fn cross_evaluate(
    models: &[ModelEntry<'_>],
    eval_sets: &[(SetMeta, Vec<u64>)],
    pool: &[u64],
    perf: &PerformanceTable,
    subset: &[u32],
    features: &BTreeMap<u64, Vec<f64>>,
) -> Result<CrossMatrix> {
    use rayon::prelude::*;
    let mut columns: Vec<SetMeta> = eval_sets.iter().map(|(m, _)| m.clone()).collect();
    columns.push(SetMeta {
        label: "unseen".into(),
        strategy: "unseen".into(),
        size: 0,
        repetition: 0,
    });
    let cells = models
        .par_iter()
        .map(|m| {
            let train: BTreeSet<u64> = m.training_ids.iter().copied().collect();
            let mut row = Vec::with_capacity(columns.len());
            for (_, ids) in eval_sets {
                let set: BTreeSet<u64> = ids.iter().copied().collect();
                let r = gap_closed(m.selector, perf, ids, subset, features, None)?;
                row.push(Cell {
                    gap_closed_pct: r.gap_closed_pct,
                    diagonal: set == train,
                });
            }
            let unseen: Vec<u64> = pool.iter().copied().filter(|p| !train.contains(p)).collect();
            let pct = if unseen.is_empty() {
                None
            } else {
                gap_closed(m.selector, perf, &unseen, subset, features, None)?.gap_closed_pct
            };
            row.push(Cell {
                gap_closed_pct: pct,
                diagonal: false,
            });
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CrossMatrix {
        rows: models.iter().map(|m| m.meta.clone()).collect(),
        columns,
        cells,
    })
}

pub type AggregateKey = ((String, usize), (String, usize));

/// Mean gap closure per (train strategy, train size) x (eval strategy, eval
/// size), skipping diagonal and undefined cells.
pub fn aggregate_by_strategy_size(m: &CrossMatrix) -> BTreeMap<AggregateKey, f64> {
    let mut acc: BTreeMap<AggregateKey, Vec<f64>> = BTreeMap::new();
    for (r, row) in m.rows.iter().zip(&m.cells) {
        for (c, cell) in m.columns.iter().zip(row) {
            if cell.diagonal {
                continue;
            }
            if let Some(v) = cell.gap_closed_pct {
                acc.entry(((r.strategy.clone(), r.size), (c.strategy.clone(), c.size)))
                    .or_default()
                    .push(v);
            }
        }
    }
    acc.into_iter().map(|(k, v)| (k, mean(&v))).collect()
}

#[cfg(test)]
mod tests;
