//! Nearest-better clustering statistics.

use super::{Distances, Sample};
use crate::stats;

pub const NAMES: [&str; 5] = [
    "nbc.nb_nn.sd_ratio",
    "nbc.nb_nn.mean_ratio",
    "nbc.nb_dist.value_cor",
    "nbc.nb_dist.coeff_var",
    "nbc.nb_fitness.cor",
];

fn ratio(a: f64, b: f64) -> Option<f64> {
    (b > 0.0).then(|| a / b)
}

pub(super) fn features(s: &Sample, dist: &Distances) -> Vec<Option<f64>> {
    let n = s.n();
    let mut nn = vec![f64::INFINITY; n];
    // (distance, index) of the nearest strictly better point
    let mut nb: Vec<Option<(f64, usize)>> = vec![None; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let dij = dist.get(i, j);
            if dij < nn[i] {
                nn[i] = dij;
            }
            if s.y[j] < s.y[i] && nb[i].is_none_or(|(best, _)| dij < best) {
                nb[i] = Some((dij, j));
            }
        }
    }
    let mut indegree = vec![0.0; n];
    let mut nb_d = Vec::new();
    let mut nb_y = Vec::new();
    for i in 0..n {
        if let Some((d, j)) = nb[i] {
            indegree[j] += 1.0;
            nb_d.push(d);
            nb_y.push(s.y[i]);
        }
    }
    let fitness_cor = stats::pearson(&indegree, &s.y);
    if nb_d.len() < 2 {
        return vec![None, None, None, None, fitness_cor];
    }
    let (nb_mean, nb_sd) = (stats::mean(&nb_d), stats::sd(&nb_d));
    vec![
        ratio(nb_sd, stats::sd(&nn)),
        ratio(nb_mean, stats::mean(&nn)),
        stats::pearson(&nb_d, &nb_y),
        ratio(nb_sd, nb_mean),
        fitness_cor,
    ]
}
