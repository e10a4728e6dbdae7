//! Shape of the objective value distribution.

use super::Sample;
use crate::stats;

pub const NAMES: [&str; 3] = [
    "ela_distr.skewness",
    "ela_distr.kurtosis",
    "ela_distr.number_of_peaks",
];

const GRID: usize = 512;
const PROMINENCE: f64 = 1e-3;

pub(super) fn features(s: &Sample) -> Vec<Option<f64>> {
    let y = &s.y;
    let n = y.len() as f64;
    let m = stats::mean(y);
    let m2 = y.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
    if !(m2 > 0.0) {
        return vec![None; 3];
    }
    let m3 = y.iter().map(|v| (v - m).powi(3)).sum::<f64>() / n;
    let m4 = y.iter().map(|v| (v - m).powi(4)).sum::<f64>() / n;
    let skew = m3 / m2.powf(1.5);
    let kurt = m4 / (m2 * m2) - 3.0;
    vec![Some(skew), Some(kurt), number_of_peaks(y)]
}

/// Local maxima of a Gaussian kernel density estimate of the standardized
/// values (Silverman bandwidth), counting only peaks whose prominence is at
/// least 0.1% of the highest density.
pub(crate) fn number_of_peaks(y: &[f64]) -> Option<f64> {
    let sd = stats::sd(y);
    if !(sd > 0.0) {
        return None;
    }
    let m = stats::mean(y);
    let z: Vec<f64> = y.iter().map(|v| (v - m) / sd).collect();
    let iqr = stats::quantile(&z, 0.75) - stats::quantile(&z, 0.25);
    let spread = if iqr > 0.0 { (1.0f64).min(iqr / 1.34) } else { 1.0 };
    let h = 0.9 * spread * (z.len() as f64).powf(-0.2);
    let lo = z.iter().copied().fold(f64::INFINITY, f64::min) - 3.0 * h;
    let hi = z.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 3.0 * h;
    let step = (hi - lo) / (GRID - 1) as f64;
    let density: Vec<f64> = (0..GRID)
        .map(|g| {
            let t = lo + g as f64 * step;
            z.iter()
                .map(|v| {
                    let u = (t - v) / h;
                    (-0.5 * u * u).exp()
                })
                .sum::<f64>()
        })
        .collect();
    let top = density.iter().copied().fold(0.0, f64::max);
    let peaks = (0..GRID)
        .filter(|&i| {
            let left_ok = i == 0 || density[i] > density[i - 1];
            let right_ok = i == GRID - 1 || density[i] >= density[i + 1];
            left_ok && right_ok && prominence(&density, i) >= PROMINENCE * top
        })
        .count();
    Some(peaks as f64)
}

fn prominence(d: &[f64], i: usize) -> f64 {
    let h = d[i];
    let mut left_min = h;
    let mut j = i;
    while j > 0 {
        j -= 1;
        if d[j] > h {
            break;
        }
        left_min = left_min.min(d[j]);
    }
    let mut right_min = h;
    let mut j = i;
    while j + 1 < d.len() {
        j += 1;
        if d[j] > h {
            break;
        }
        right_min = right_min.min(d[j]);
    }
    h - left_min.max(right_min)
}
