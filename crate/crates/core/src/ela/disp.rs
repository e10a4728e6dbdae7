//! Dispersion of the best points relative to the whole sample.

use super::{Distances, Sample};
use crate::stats;

pub const FRACTIONS: [f64; 4] = [0.02, 0.05, 0.10, 0.25];

fn tag(q: f64) -> String {
    format!("{:02}", (q * 100.0).round() as u32)
}

pub fn names() -> Vec<String> {
    let mut out = Vec::new();
    for kind in ["ratio_mean", "ratio_median", "diff_mean", "diff_median"] {
        for q in FRACTIONS {
            out.push(format!("disp.{kind}_{}", tag(q)));
        }
    }
    out
}

/// Mean and median pairwise distance among the best `fraction` of points.
fn best_spread(s: &Sample, dist: &Distances, order: &[usize], fraction: f64) -> (f64, f64) {
    let m = ((fraction * s.n() as f64).round() as usize).clamp(2, s.n());
    let best = &order[..m];
    let mut d = Vec::with_capacity(m * (m - 1) / 2);
    for a in 0..m {
        for b in a + 1..m {
            d.push(dist.get(best[a], best[b]));
        }
    }
    (stats::mean(&d), stats::median(&d))
}

/// `(ratio_mean, ratio_median, diff_mean, diff_median)` for one fraction.
pub fn dispersion(points: &[Vec<f64>], values: &[f64], fraction: f64) -> (f64, f64, f64, f64) {
    let s = Sample::canonical(points, values);
    let dist = Distances::new(&s.x);
    let all = (stats::mean(dist.all()), stats::median(dist.all()));
    let best = best_spread(&s, &dist, &s.rank_order(), fraction);
    (best.0 / all.0, best.1 / all.1, best.0 - all.0, best.1 - all.1)
}

pub(super) fn features(s: &Sample, dist: &Distances) -> Vec<Option<f64>> {
    let order = s.rank_order();
    let (all_mean, all_median) = (stats::mean(dist.all()), stats::median(dist.all()));
    let spreads: Vec<(f64, f64)> = FRACTIONS
        .iter()
        .map(|&q| best_spread(s, dist, &order, q))
        .collect();
    let ratio = |a: f64, b: f64| (b > 0.0).then(|| a / b);
    let mut out = Vec::new();
    out.extend(spreads.iter().map(|b| ratio(b.0, all_mean)));
    out.extend(spreads.iter().map(|b| ratio(b.1, all_median)));
    out.extend(spreads.iter().map(|b| Some(b.0 - all_mean)));
    out.extend(spreads.iter().map(|b| Some(b.1 - all_median)));
    out
}
