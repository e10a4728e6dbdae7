use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Principal axes fitted on a reference set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub center: Vec<f64>,
    /// Unit axes, strongest first; fewer than requested when the reference
    /// set is rank deficient.
    pub axes: Vec<Vec<f64>>,
    pub variances: Vec<f64>,
}

impl Projection {
    pub fn fit(reference: &[Vec<f64>], components: usize) -> Result<Self> {
        if reference.len() < 3 {
            return Err(Error::domain("PCA needs at least three reference vectors"));
        }
        let p = reference[0].len();
        if p == 0 || reference.iter().any(|r| r.len() != p) {
            return Err(Error::domain("reference vectors differ in length"));
        }
        let n = reference.len() as f64;
        let center: Vec<f64> = (0..p)
            .map(|j| reference.iter().map(|r| r[j]).sum::<f64>() / n)
            .collect();
        let x = DMatrix::from_fn(reference.len(), p, |i, j| reference[i][j] - center[j]);
        let cov = (x.transpose() * &x) / (n - 1.0);
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
        let top = eig.eigenvalues[order[0]].max(0.0);
        let mut axes = Vec::new();
        let mut variances = Vec::new();
        for &k in order.iter().take(components) {
            let lambda = eig.eigenvalues[k];
            if top == 0.0 || lambda <= 1e-12 * top {
                break;
            }
            let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
            // orient so the largest-magnitude loading is positive
            let lead = (0..p).fold(0, |b, j| if v[j].abs() > v[b].abs() { j } else { b });
            if v[lead] < 0.0 {
                v.iter_mut().for_each(|c| *c = -*c);
            }
            axes.push(v);
            variances.push(lambda);
        }
        Ok(Projection {
            center,
            axes,
            variances,
        })
    }

    /// Coordinates on the fitted axes, zero-padded to `components`.
    pub fn project(&self, v: &[f64], components: usize) -> Vec<f64> {
        let mut out = vec![0.0; components];
        for (o, axis) in out.iter_mut().zip(&self.axes) {
            *o = axis
                .iter()
                .zip(v.iter().zip(&self.center))
                .map(|(a, (x, c))| a * (x - c))
                .sum();
        }
        out
    }
}

/// Fits on `reference` and projects `all` onto the top `components` axes.
pub fn pca_project(reference: &[Vec<f64>], all: &[Vec<f64>], components: usize) -> Result<Vec<Vec<f64>>> {
    let proj = Projection::fit(reference, components)?;
    if all.iter().any(|v| v.len() != proj.center.len()) {
        return Err(Error::domain("vector length differs from the reference"));
    }
    Ok(all.iter().map(|v| proj.project(v, components)).collect())
}
