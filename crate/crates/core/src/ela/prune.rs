//! Correlation-based feature subset selection.

use super::FeatureVector;
use crate::error::{Error, Result};
use crate::stats;

pub const PRUNE_THRESHOLD: f64 = 0.9;

/// Drops features infeasible anywhere in the population, then repeatedly
/// removes the feature with the most partners at `|r| > threshold` (ties:
/// the one latest in catalog order) until no such pair remains. The result
/// keeps catalog order.
pub fn prune_features(rows: &[FeatureVector], threshold: f64) -> Result<Vec<String>> {
    if rows.len() < 3 {
        return Err(Error::domain("feature pruning needs at least 3 population rows"));
    }
    let names = &rows[0].names;
    if rows.iter().any(|r| &r.names != names) {
        return Err(Error::domain("population rows use different feature catalogs"));
    }
    let mut survivors: Vec<usize> = (0..names.len())
        .filter(|&j| rows.iter().all(|r| r.values[j].is_some()))
        .collect();
    let columns: Vec<Vec<f64>> = (0..names.len())
        .map(|j| rows.iter().map(|r| r.values[j].unwrap_or(f64::NAN)).collect())
        .collect();

    let m = survivors.len();
    let mut high = vec![vec![false; names.len()]; names.len()];
    for a in 0..m {
        for b in a + 1..m {
            let (ja, jb) = (survivors[a], survivors[b]);
            let r = stats::pearson(&columns[ja], &columns[jb]).unwrap_or(0.0);
            let flag = r.abs() > threshold;
            high[ja][jb] = flag;
            high[jb][ja] = flag;
        }
    }

    loop {
        let counts: Vec<usize> = survivors
            .iter()
            .map(|&a| survivors.iter().filter(|&&b| high[a][b]).count())
            .collect();
        let max = counts.iter().copied().max().unwrap_or(0);
        if max == 0 {
            break;
        }
        // last position with the maximal count = latest in catalog order
        let pos = counts.iter().rposition(|&c| c == max).unwrap();
        survivors.remove(pos);
    }
    if survivors.is_empty() {
        return Err(Error::EmptyPruning);
    }
    Ok(survivors.into_iter().map(|j| names[j].clone()).collect())
}
