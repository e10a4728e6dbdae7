//! Exploratory landscape features from a single space-filling sample.
//!
//! Feature groups: `ela_meta` (regression model fits), `ela_distr` (shape of
//! the value distribution), `ela_level` (level-set classifiers), `nbc`
//! (nearest-better clustering), `disp` (dispersion of the best points) and
//! `ic` (information content along a nearest-neighbour tour).
//!
//! Features that are undefined for a sample are stored as `None` rather than
//! as a sentinel number.

mod disp;
mod distr;
mod ic;
mod level;
mod meta;
mod nbc;
mod normalize;
mod prune;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

pub use disp::dispersion;
pub use normalize::{apply_minmax, fit_minmax, NormalizationBounds};
pub use prune::{prune_features, PRUNE_THRESHOLD};

use crate::error::{Error, Result};

/// Minimum points per dimension accepted by [`compute_features`].
pub const MIN_POINTS_PER_DIM: usize = 50;
/// Points per dimension used by the pipeline.
pub const SAMPLE_FACTOR: usize = 500;
pub const REPETITIONS: usize = 5;

pub const CATALOG_VERSION: &str = "aaslab-ela/1 (meta, distr, level, nbc, disp, ic; no pca, no limo)";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureGroup {
    pub name: String,
    pub features: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureCatalog {
    pub version: String,
    pub groups: Vec<FeatureGroup>,
}

impl FeatureCatalog {
    pub fn standard() -> Self {
        let groups = vec![
            ("ela_meta", meta::NAMES.iter().map(|s| s.to_string()).collect()),
            ("ela_distr", distr::NAMES.iter().map(|s| s.to_string()).collect()),
            ("ela_level", level::names()),
            ("nbc", nbc::NAMES.iter().map(|s| s.to_string()).collect()),
            ("disp", disp::names()),
            ("ic", ic::NAMES.iter().map(|s| s.to_string()).collect()),
        ];
        Self {
            version: CATALOG_VERSION.to_string(),
            groups: groups
                .into_iter()
                .map(|(name, features)| FeatureGroup {
                    name: name.to_string(),
                    features,
                })
                .collect(),
        }
    }

    /// All feature names in catalog order.
    pub fn names(&self) -> Vec<String> {
        self.groups
            .iter()
            .flat_map(|g| g.features.iter().cloned())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.groups.iter().map(|g| g.features.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub problem_id: u64,
    pub names: Vec<String>,
    /// `None` marks an infeasible (undefined or non-finite) value.
    pub values: Vec<Option<f64>>,
    pub normalized: bool,
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<Option<f64>> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.values[i])
    }

    pub fn is_feasible(&self, name: &str) -> bool {
        matches!(self.get(name), Some(Some(_)))
    }

    /// Values with infeasible entries replaced by `fill`.
    pub fn dense(&self, fill: f64) -> Vec<f64> {
        self.values.iter().map(|v| v.unwrap_or(fill)).collect()
    }

    /// Restricts the vector to `names`, in that order.
    pub fn select(&self, names: &[String]) -> Result<FeatureVector> {
        let values = names
            .iter()
            .map(|n| {
                self.get(n)
                    .ok_or_else(|| Error::Data(format!("feature {n} missing from vector")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FeatureVector {
            problem_id: self.problem_id,
            names: names.to_vec(),
            values,
            normalized: self.normalized,
        })
    }
}

pub(crate) fn feasible(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// Sample rows sorted into a canonical order so that every feature is a
/// function of the point set alone.
pub(crate) struct Sample {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

impl Sample {
    fn canonical(points: &[Vec<f64>], values: &[f64]) -> Self {
        let mut idx: Vec<usize> = (0..points.len()).collect();
        idx.sort_by(|&a, &b| {
            for (u, v) in points[a].iter().zip(&points[b]) {
                match u.total_cmp(v) {
                    Ordering::Equal => continue,
                    o => return o,
                }
            }
            values[a].total_cmp(&values[b])
        });
        Self {
            x: idx.iter().map(|&i| points[i].clone()).collect(),
            y: idx.iter().map(|&i| values[i]).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn dim(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    /// Indices sorted by value, ties by canonical position.
    pub fn rank_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.n()).collect();
        idx.sort_by(|&a, &b| self.y[a].total_cmp(&self.y[b]).then(a.cmp(&b)));
        idx
    }
}

/// Condensed pairwise Euclidean distance matrix.
pub(crate) struct Distances {
    n: usize,
    d: Vec<f64>,
}

impl Distances {
    fn new(x: &[Vec<f64>]) -> Self {
        let n = x.len();
        let mut d = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                d.push(crate::stats::euclidean(&x[i], &x[j]));
            }
        }
        Self { n, d }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        // offset of row a in the condensed upper triangle
        self.d[a * (2 * self.n - a - 1) / 2 + (b - a - 1)]
    }

    pub fn all(&self) -> &[f64] {
        &self.d
    }
}

/// Computes every catalog feature from one sample.
pub fn compute_features(problem_id: u64, points: &[Vec<f64>], values: &[f64]) -> Result<FeatureVector> {
    if points.len() != values.len() {
        return Err(Error::domain("points and values differ in length"));
    }
    let dim = points.first().map_or(0, Vec::len);
    if dim == 0 || points.iter().any(|p| p.len() != dim) {
        return Err(Error::domain("sample points must share a positive dimension"));
    }
    let need = MIN_POINTS_PER_DIM * dim;
    if points.len() < need {
        return Err(Error::SampleSize {
            got: points.len(),
            need,
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("sample values must be finite"));
    }
    let sample = Sample::canonical(points, values);
    let dists = Distances::new(&sample.x);
    let mut out = Vec::new();
    out.extend(meta::features(&sample));
    out.extend(distr::features(&sample));
    out.extend(level::features(&sample));
    out.extend(nbc::features(&sample, &dists));
    out.extend(disp::features(&sample, &dists));
    out.extend(ic::features(&sample, &dists));
    let names = FeatureCatalog::standard().names();
    debug_assert_eq!(names.len(), out.len());
    Ok(FeatureVector {
        problem_id,
        names,
        values: out.into_iter().map(|v| v.and_then(feasible)).collect(),
        normalized: false,
    })
}

/// Per-feature mean over repetitions; infeasible anywhere means infeasible.
pub fn average_feature_repetitions(reps: &[FeatureVector]) -> Result<FeatureVector> {
    let first = reps
        .first()
        .ok_or_else(|| Error::domain("no repetitions to average"))?;
    for r in reps {
        if r.names != first.names {
            return Err(Error::domain("repetitions use different feature catalogs"));
        }
        if r.problem_id != first.problem_id {
            return Err(Error::domain("repetitions belong to different problems"));
        }
    }
    let values = (0..first.names.len())
        .map(|j| {
            reps.iter()
                .map(|r| r.values[j])
                .sum::<Option<f64>>()
                .map(|s| s / reps.len() as f64)
        })
        .collect();
    Ok(FeatureVector {
        problem_id: first.problem_id,
        names: first.names.clone(),
        values,
        normalized: first.normalized,
    })
}
