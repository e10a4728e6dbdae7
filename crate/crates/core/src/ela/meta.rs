//! Linear and quadratic regression model fits.

use nalgebra::{DMatrix, DVector};

use super::Sample;

pub const NAMES: [&str; 9] = [
    "ela_meta.lin_simple.adj_r2",
    "ela_meta.lin_simple.intercept",
    "ela_meta.lin_simple.coef.min",
    "ela_meta.lin_simple.coef.max",
    "ela_meta.lin_simple.coef.max_by_min",
    "ela_meta.lin_w_interact.adj_r2",
    "ela_meta.quad_simple.adj_r2",
    "ela_meta.quad_simple.cond",
    "ela_meta.quad_w_interact.adj_r2",
];

struct Fit {
    coef: DVector<f64>,
    adj_r2: Option<f64>,
}

fn fit(columns: &[Vec<f64>], y: &[f64]) -> Fit {
    let n = y.len();
    let p = columns.len();
    let x = DMatrix::from_fn(n, p, |i, j| columns[j][i]);
    let yv = DVector::from_column_slice(y);
    let coef = least_squares(&x, &yv);
    let resid = &yv - &x * &coef;
    let ss_res = resid.norm_squared();
    let mean = y.iter().sum::<f64>() / n as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let adj_r2 = if ss_tot > 0.0 && n > p {
        let r2 = 1.0 - ss_res / ss_tot;
        Some(1.0 - (1.0 - r2) * (n as f64 - 1.0) / (n - p) as f64)
    } else {
        None
    };
    Fit { coef, adj_r2 }
}

// Householder QR when the design has full column rank, SVD otherwise.
fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let p = x.ncols();
    if x.nrows() >= p {
        let qr = x.clone().qr();
        let r = qr.r();
        let scale = r.diagonal().amax();
        if scale > 0.0 && r.diagonal().iter().all(|v| v.abs() > 1e-10 * scale) {
            let qty = qr.q().transpose() * y;
            if let Some(c) = r.solve_upper_triangular(&qty) {
                return c;
            }
        }
    }
    x.clone()
        .svd(true, true)
        .solve(y, 1e-12)
        .unwrap_or_else(|_| DVector::from_element(p, f64::NAN))
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

pub(super) fn features(s: &Sample) -> Vec<Option<f64>> {
    let (n, d) = (s.n(), s.dim());
    let col = |j: usize| -> Vec<f64> { s.x.iter().map(|p| p[j]).collect() };
    let ones = vec![1.0; n];
    let linear: Vec<Vec<f64>> = (0..d).map(col).collect();
    let squares: Vec<Vec<f64>> = linear
        .iter()
        .map(|c| c.iter().map(|v| v * v).collect())
        .collect();
    let mut interactions = Vec::new();
    for a in 0..d {
        for b in a + 1..d {
            interactions.push(
                linear[a]
                    .iter()
                    .zip(&linear[b])
                    .map(|(u, v)| u * v)
                    .collect::<Vec<f64>>(),
            );
        }
    }

    let cols = |parts: &[&[Vec<f64>]]| -> Vec<Vec<f64>> {
        let mut c = vec![ones.clone()];
        for part in parts {
            c.extend(part.iter().cloned());
        }
        c
    };

    let lin = fit(&cols(&[&linear]), &s.y);
    let lin_int = fit(&cols(&[&linear, &interactions]), &s.y);
    let quad = fit(&cols(&[&linear, &squares]), &s.y);
    let quad_int = fit(&cols(&[&linear, &squares, &interactions]), &s.y);

    let lin_abs: Vec<f64> = lin.coef.iter().skip(1).map(|c| c.abs()).collect();
    let lin_min = lin_abs.iter().copied().fold(f64::INFINITY, f64::min);
    let lin_max = lin_abs.iter().copied().fold(0.0, f64::max);
    let quad_abs: Vec<f64> = quad.coef.iter().skip(1 + d).map(|c| c.abs()).collect();
    let quad_min = quad_abs.iter().copied().fold(f64::INFINITY, f64::min);
    let quad_max = quad_abs.iter().copied().fold(0.0, f64::max);

    vec![
        lin.adj_r2,
        Some(lin.coef[0]),
        Some(lin_min),
        Some(lin_max),
        ratio(lin_max, lin_min),
        lin_int.adj_r2,
        quad.adj_r2,
        ratio(quad_max, quad_min),
        quad_int.adj_r2,
    ]
}
