use serde::{Deserialize, Serialize};

use super::FeatureVector;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationBounds {
    pub names: Vec<String>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    #[serde(rename = "d")]
    pub dim: usize,
    /// Identifies the population the bounds were fitted on.
    pub population: String,
}

/// Per-feature min and max over the feasible values of `rows`, restricted
/// to `names`.
pub fn fit_minmax(
    rows: &[FeatureVector],
    names: &[String],
    dim: usize,
    population: &str,
) -> Result<NormalizationBounds> {
    let mut min = Vec::with_capacity(names.len());
    let mut max = Vec::with_capacity(names.len());
    for name in names {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for r in rows {
            let v = r
                .get(name)
                .ok_or_else(|| Error::Data(format!("feature {name} missing from population")))?;
            if let Some(v) = v {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if lo > hi {
            return Err(Error::Data(format!("feature {name} has no feasible values")));
        }
        min.push(lo);
        max.push(hi);
    }
    Ok(NormalizationBounds {
        names: names.to_vec(),
        min,
        max,
        dim,
        population: population.to_string(),
    })
}

/// `(v - min) / (max - min)` clipped to `[0, 1]`; constant features map to 0.5.
pub fn apply_minmax(v: &FeatureVector, bounds: &NormalizationBounds) -> Result<FeatureVector> {
    let selected = v.select(&bounds.names)?;
    let values = selected
        .values
        .iter()
        .zip(bounds.min.iter().zip(&bounds.max))
        .map(|(x, (&lo, &hi))| {
            x.map(|x| {
                if hi > lo {
                    ((x - lo) / (hi - lo)).clamp(0.0, 1.0)
                } else {
                    0.5
                }
            })
        })
        .collect();
    Ok(FeatureVector {
        problem_id: v.problem_id,
        names: bounds.names.clone(),
        values,
        normalized: true,
    })
}
