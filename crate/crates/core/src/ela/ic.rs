//! Information content of the value sequence along a nearest-neighbour tour.

use super::{Distances, Sample};

pub const NAMES: [&str; 5] = [
    "ic.h_max",
    "ic.eps_s",
    "ic.eps_max",
    "ic.eps_ratio",
    "ic.m0",
];

const GRID: usize = 100;
const SETTLING: f64 = 0.05;
const PARTIAL_RATIO: f64 = 0.5;

/// Greedy nearest-neighbour tour starting at the first canonical point.
fn tour(n: usize, dist: &Distances) -> Vec<usize> {
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut cur = 0;
    visited[0] = true;
    order.push(0);
    for _ in 1..n {
        let mut best = (f64::INFINITY, usize::MAX);
        for j in 0..n {
            if !visited[j] {
                let d = dist.get(cur, j);
                if d < best.0 {
                    best = (d, j);
                }
            }
        }
        cur = best.1;
        visited[cur] = true;
        order.push(cur);
    }
    order
}

fn symbols(slopes: &[f64], eps: f64) -> Vec<i8> {
    slopes
        .iter()
        .map(|&v| {
            if v < -eps {
                -1
            } else if v > eps {
                1
            } else {
                0
            }
        })
        .collect()
}

/// Entropy (base 6) of consecutive unequal symbol pairs.
pub(crate) fn entropy(sym: &[i8]) -> f64 {
    if sym.len() < 2 {
        return 0.0;
    }
    let mut counts = [[0usize; 3]; 3];
    for w in sym.windows(2) {
        counts[(w[0] + 1) as usize][(w[1] + 1) as usize] += 1;
    }
    let total = (sym.len() - 1) as f64;
    let mut h = 0.0;
    for (p, row) in counts.iter().enumerate() {
        for (q, &c) in row.iter().enumerate() {
            if p != q && c > 0 {
                let pr = c as f64 / total;
                h -= pr * pr.log(6.0);
            }
        }
    }
    h
}

/// Partial information: length of the sequence left after dropping neutral
/// symbols and merging repeats, relative to the number of steps.
pub(crate) fn partial_information(sym: &[i8]) -> f64 {
    if sym.len() < 2 {
        return 0.0;
    }
    let mut mu = 0usize;
    let mut last = 0i8;
    for &s in sym {
        if s != 0 && s != last {
            mu += 1;
            last = s;
        }
    }
    mu as f64 / (sym.len() - 1) as f64
}

pub(crate) fn eps_grid(slopes: &[f64]) -> Vec<f64> {
    let abs: Vec<f64> = slopes.iter().map(|v| v.abs()).filter(|v| *v > 0.0).collect();
    if abs.is_empty() {
        return Vec::new();
    }
    let lo = abs.iter().copied().fold(f64::INFINITY, f64::min).log10();
    let hi = abs.iter().copied().fold(0.0, f64::max).log10();
    (0..GRID)
        .map(|i| {
            if i + 1 == GRID {
                10f64.powf(hi)
            } else {
                10f64.powf(lo + (hi - lo) * i as f64 / (GRID - 1) as f64)
            }
        })
        .collect()
}

pub(super) fn features(s: &Sample, dist: &Distances) -> Vec<Option<f64>> {
    let order = tour(s.n(), dist);
    let slopes: Vec<f64> = order
        .windows(2)
        .filter_map(|w| {
            let d = dist.get(w[0], w[1]);
            (d > 0.0).then(|| (s.y[w[1]] - s.y[w[0]]) / d)
        })
        .collect();
    let sym0 = symbols(&slopes, 0.0);
    let h0 = entropy(&sym0);
    let m0 = partial_information(&sym0);
    let grid = eps_grid(&slopes);
    if grid.is_empty() {
        return vec![Some(h0), None, None, None, Some(m0)];
    }
    let mut h_max = h0;
    let mut eps_max = None;
    let mut best_positive = f64::NEG_INFINITY;
    let mut eps_s = None;
    let mut eps_ratio = None;
    for &e in &grid {
        let sym = symbols(&slopes, e);
        let h = entropy(&sym);
        if h > best_positive {
            best_positive = h;
            eps_max = Some(e.log10());
        }
        h_max = h_max.max(h);
        if eps_s.is_none() && h < SETTLING {
            eps_s = Some(e.log10());
        }
        if m0 > 0.0 && partial_information(&sym) > PARTIAL_RATIO * m0 {
            eps_ratio = Some(e.log10());
        }
    }
    vec![Some(h_max), eps_s, eps_max, eps_ratio, Some(m0)]
}
