//! Level-set features: how well linear and quadratic discriminant analysis
//! separate the points below a value quantile from the rest.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::seq::SliceRandom;

use super::Sample;
use crate::seed;

pub const QUANTILES: [f64; 3] = [0.10, 0.25, 0.50];
const FOLDS: usize = 5;
const FOLD_SEED: u64 = 0x1e7e_15e7;

fn tag(q: f64) -> String {
    format!("{:02}", (q * 100.0).round() as u32)
}

pub fn names() -> Vec<String> {
    let mut out = Vec::new();
    for q in QUANTILES {
        out.push(format!("ela_level.mmce_lda_{}", tag(q)));
        out.push(format!("ela_level.mmce_qda_{}", tag(q)));
        out.push(format!("ela_level.qda_lda_{}", tag(q)));
    }
    out
}

pub(super) fn features(s: &Sample) -> Vec<Option<f64>> {
    let mut out = Vec::new();
    for q in QUANTILES {
        let threshold = crate::stats::quantile(&s.y, q);
        let labels: Vec<usize> = s.y.iter().map(|&v| usize::from(v >= threshold)).collect();
        let (lda, qda) = match cross_validate(&s.x, &labels) {
            Some(r) => r,
            None => (None, None),
        };
        let ratio = match (lda, qda) {
            (Some(l), Some(q)) if l > 0.0 => Some(q / l),
            _ => None,
        };
        out.extend([lda, qda, ratio]);
    }
    out
}

/// Stratified fold assignment from the canonical row order.
fn folds(labels: &[usize]) -> Vec<usize> {
    let mut rng = seed::rng_for(FOLD_SEED, "level-folds", &[]);
    let mut fold = vec![0; labels.len()];
    for class in 0..2 {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        for (pos, i) in members.into_iter().enumerate() {
            fold[i] = pos % FOLDS;
        }
    }
    fold
}

struct ClassStats {
    mean: DVector<f64>,
    scatter: DMatrix<f64>,
    count: usize,
}

fn class_stats(x: &[Vec<f64>], idx: &[usize]) -> ClassStats {
    let d = x[0].len();
    let mut mean = DVector::zeros(d);
    for &i in idx {
        mean += DVector::from_column_slice(&x[i]);
    }
    mean /= idx.len() as f64;
    let mut scatter = DMatrix::zeros(d, d);
    for &i in idx {
        let c = DVector::from_column_slice(&x[i]) - &mean;
        scatter += &c * c.transpose();
    }
    ClassStats {
        mean,
        scatter,
        count: idx.len(),
    }
}

/// Quadratic form and log-determinant helper for a covariance matrix.
struct Gaussian {
    chol: Cholesky<f64, Dyn>,
    log_det: f64,
}

impl Gaussian {
    fn new(cov: DMatrix<f64>) -> Option<Self> {
        let chol = Cholesky::new(cov)?;
        let log_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        log_det.is_finite().then_some(Self { chol, log_det })
    }

    fn mahalanobis(&self, v: &DVector<f64>) -> f64 {
        let sol = self.chol.solve(v);
        v.dot(&sol)
    }
}

/// Misclassification rates of LDA and QDA under stratified 5-fold CV.
fn cross_validate(x: &[Vec<f64>], labels: &[usize]) -> Option<(Option<f64>, Option<f64>)> {
    let d = x[0].len();
    let counts = [0, 1].map(|c| labels.iter().filter(|&&l| l == c).count());
    if counts.iter().any(|&c| c < FOLDS) {
        return None;
    }
    let fold = folds(labels);
    let mut lda_err = Some(0usize);
    let mut qda_err = Some(0usize);
    for f in 0..FOLDS {
        let train: [Vec<usize>; 2] = [0, 1].map(|c| {
            (0..x.len())
                .filter(|&i| fold[i] != f && labels[i] == c)
                .collect()
        });
        let stats = [0, 1].map(|c| class_stats(x, &train[c]));
        let n_train = stats[0].count + stats[1].count;
        let log_prior = [0, 1].map(|c| (stats[c].count as f64 / n_train as f64).ln());
        let test: Vec<usize> = (0..x.len()).filter(|&i| fold[i] == f).collect();

        let pooled = (&stats[0].scatter + &stats[1].scatter) / (n_train as f64 - 2.0);
        match Gaussian::new(pooled) {
            Some(g) if lda_err.is_some() => {
                let mut errs = 0;
                for &i in &test {
                    let v = DVector::from_column_slice(&x[i]);
                    let score = |c: usize| -0.5 * g.mahalanobis(&(&v - &stats[c].mean)) + log_prior[c];
                    let pred = usize::from(score(1) > score(0));
                    errs += usize::from(pred != labels[i]);
                }
                lda_err = lda_err.map(|e| e + errs);
            }
            _ => lda_err = None,
        }

        let per_class: Option<Vec<Gaussian>> = (0..2)
            .map(|c| {
                if stats[c].count <= d {
                    None
                } else {
                    Gaussian::new(&stats[c].scatter / (stats[c].count as f64 - 1.0))
                }
            })
            .collect();
        match per_class {
            Some(gs) if qda_err.is_some() => {
                let mut errs = 0;
                for &i in &test {
                    let v = DVector::from_column_slice(&x[i]);
                    let score = |c: usize| {
                        -0.5 * gs[c].log_det - 0.5 * gs[c].mahalanobis(&(&v - &stats[c].mean))
                            + log_prior[c]
                    };
                    let pred = usize::from(score(1) > score(0));
                    errs += usize::from(pred != labels[i]);
                }
                qda_err = qda_err.map(|e| e + errs);
            }
            _ => qda_err = None,
        }
    }
    let n = x.len() as f64;
    Some((
        lda_err.map(|e| e as f64 / n),
        qda_err.map(|e| e as f64 / n),
    ))
}
