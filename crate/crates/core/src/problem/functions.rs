//! Component function registry.
//!
//! Every function is written in a canonical frame whose global optimum sits
//! at the origin. Instance transformations (rotation) and relocation of the
//! optimum are applied by the caller.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock, RwLock};

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FunctionGroup {
    Separable,
    LowConditioning,
    HighConditioning,
    MultimodalAdequate,
    MultimodalWeak,
}

/// Extra per-dimension data for functions that need it (Gallagher peaks).
#[derive(Debug)]
pub struct Peaks {
    centers: Vec<Vec<f64>>,
    diag: Vec<Vec<f64>>,
    heights: Vec<f64>,
}

type EvalFn = fn(&[f64], Option<&Peaks>) -> f64;

pub struct ComponentFunction {
    pub id: u32,
    pub name: &'static str,
    pub group: FunctionGroup,
    /// Whether instances apply a random rotation (the separable functions and
    /// plain Rosenbrock are evaluated in axis-aligned coordinates).
    pub rotated: bool,
    eval: EvalFn,
    peaks: Option<(usize, f64)>,
}

impl std::fmt::Debug for ComponentFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ComponentFunction")
            .field("id", &self.id)
            .field("name", &self.name)
            .finish()
    }
}

impl ComponentFunction {
    /// Raw value at a canonical-frame point.
    pub fn eval(&self, z: &[f64]) -> f64 {
        let peaks = self.peaks(z.len());
        (self.eval)(z, peaks.as_deref())
    }

    pub(crate) fn eval_with(&self, z: &[f64], peaks: Option<&Peaks>) -> f64 {
        (self.eval)(z, peaks)
    }

    /// Value at the canonical optimum (the origin).
    pub fn raw_optimum_value(&self, dim: usize) -> f64 {
        self.eval(&vec![0.0; dim])
    }

    pub(crate) fn peaks(&self, dim: usize) -> Option<Arc<Peaks>> {
        let (count, top_condition) = self.peaks?;
        static CACHE: OnceLock<RwLock<HashMap<(u32, usize), Arc<Peaks>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(p) = cache.read().unwrap().get(&(self.id, dim)) {
            return Some(p.clone());
        }
        let p = Arc::new(gallagher_peaks(self.id, dim, count, top_condition));
        cache
            .write()
            .unwrap()
            .entry((self.id, dim))
            .or_insert(p)
            .clone()
            .into()
    }
}

pub const REGISTRY_SIZE: usize = 24;

macro_rules! entry {
    ($id:expr, $name:expr, $group:ident, $rot:expr, $f:expr) => {
        ComponentFunction {
            id: $id,
            name: $name,
            group: FunctionGroup::$group,
            rotated: $rot,
            eval: $f,
            peaks: None,
        }
    };
}

static REGISTRY: [ComponentFunction; REGISTRY_SIZE] = [
    entry!(1, "sphere", Separable, false, |z, _| sphere(z)),
    entry!(2, "ellipsoid-separable", Separable, false, |z, _| ellipsoid(z)),
    entry!(3, "rastrigin-separable", Separable, false, |z, _| rastrigin(z)),
    entry!(4, "bueche-rastrigin", Separable, false, |z, _| bueche_rastrigin(z)),
    entry!(5, "linear-slope", Separable, false, |z, _| linear_slope(z)),
    entry!(6, "attractive-sector", LowConditioning, true, |z, _| attractive_sector(z)),
    entry!(7, "step-ellipsoid", LowConditioning, true, |z, _| step_ellipsoid(z)),
    entry!(8, "rosenbrock", LowConditioning, false, |z, _| rosenbrock(z)),
    entry!(9, "rosenbrock-rotated", LowConditioning, true, |z, _| rosenbrock(z)),
    entry!(10, "ellipsoid", HighConditioning, true, |z, _| ellipsoid(z)),
    entry!(11, "discus", HighConditioning, true, |z, _| discus(z)),
    entry!(12, "bent-cigar", HighConditioning, true, |z, _| bent_cigar(z)),
    entry!(13, "sharp-ridge", HighConditioning, true, |z, _| sharp_ridge(z)),
    entry!(14, "different-powers", HighConditioning, true, |z, _| different_powers(z)),
    entry!(15, "rastrigin", MultimodalAdequate, true, |z, _| rastrigin(z)),
    entry!(16, "weierstrass", MultimodalAdequate, true, |z, _| weierstrass(z)),
    entry!(17, "schaffers-f7", MultimodalAdequate, true, |z, _| schaffers(z, 10.0)),
    entry!(18, "schaffers-f7-ill-conditioned", MultimodalAdequate, true, |z, _| schaffers(z, 1000.0)),
    entry!(19, "griewank-rosenbrock", MultimodalAdequate, true, |z, _| griewank_rosenbrock(z)),
    entry!(20, "schwefel", MultimodalWeak, false, |z, _| schwefel(z)),
    ComponentFunction {
        id: 21,
        name: "gallagher-101-peaks",
        group: FunctionGroup::MultimodalWeak,
        rotated: true,
        eval: gallagher,
        peaks: Some((101, 1000.0)),
    },
    ComponentFunction {
        id: 22,
        name: "gallagher-21-peaks",
        group: FunctionGroup::MultimodalWeak,
        rotated: true,
        eval: gallagher,
        peaks: Some((21, 1_000_000.0)),
    },
    entry!(23, "katsuura", MultimodalWeak, true, |z, _| katsuura(z)),
    entry!(24, "lunacek-bi-rastrigin", MultimodalWeak, true, |z, _| lunacek(z)),
];

pub fn registry() -> &'static [ComponentFunction] {
    &REGISTRY
}

pub fn component(id: u32) -> Result<&'static ComponentFunction> {
    REGISTRY
        .get((id as usize).wrapping_sub(1))
        .ok_or(Error::UnknownComponent(id))
}

/// `i`-th entry of the diagonal of the conditioning matrix with ratio `alpha`.
fn lambda(alpha: f64, i: usize, d: usize) -> f64 {
    if d == 1 {
        1.0
    } else {
        alpha.powf(0.5 * i as f64 / (d - 1) as f64)
    }
}

fn ratio(i: usize, d: usize) -> f64 {
    if d == 1 {
        0.0
    } else {
        i as f64 / (d - 1) as f64
    }
}

fn sphere(z: &[f64]) -> f64 {
    z.iter().map(|v| v * v).sum()
}

fn ellipsoid(z: &[f64]) -> f64 {
    let d = z.len();
    z.iter()
        .enumerate()
        .map(|(i, v)| 10f64.powf(6.0 * ratio(i, d)) * v * v)
        .sum()
}

fn rastrigin_core(y: impl Iterator<Item = f64>, d: usize) -> f64 {
    let (mut cos_sum, mut sq) = (0.0, 0.0);
    for v in y {
        cos_sum += (2.0 * PI * v).cos();
        sq += v * v;
    }
    10.0 * (d as f64 - cos_sum) + sq
}

fn rastrigin(z: &[f64]) -> f64 {
    let d = z.len();
    rastrigin_core(z.iter().enumerate().map(|(i, v)| lambda(10.0, i, d) * v), d)
}

fn bueche_rastrigin(z: &[f64]) -> f64 {
    let d = z.len();
    rastrigin_core(
        z.iter().enumerate().map(|(i, &v)| {
            let mut s = 10f64.powf(0.5 * ratio(i, d));
            if v > 0.0 && i % 2 == 0 {
                s *= 10.0;
            }
            s * v
        }),
        d,
    )
}

fn linear_slope(z: &[f64]) -> f64 {
    let d = z.len();
    z.iter()
        .enumerate()
        .map(|(i, &v)| 10f64.powf(ratio(i, d)) * (-v).max(0.0))
        .sum()
}

fn attractive_sector(z: &[f64]) -> f64 {
    let d = z.len();
    let s: f64 = z
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let y = lambda(10.0, i, d) * v;
            let s = if y > 0.0 { 100.0 } else { 1.0 };
            (s * y).powi(2)
        })
        .sum();
    s.powf(0.9)
}

fn step_ellipsoid(z: &[f64]) -> f64 {
    let d = z.len();
    let mut first = 0.0;
    let mut sum = 0.0;
    for (i, &v) in z.iter().enumerate() {
        let y = lambda(10.0, i, d) * v;
        if i == 0 {
            first = y.abs() / 1e4;
        }
        let r = if y.abs() > 0.5 {
            y.round()
        } else {
            (10.0 * y).round() / 10.0
        };
        sum += 10f64.powf(2.0 * ratio(i, d)) * r * r;
    }
    0.1 * first.max(sum)
}

fn rosenbrock_terms(z: &[f64], term: impl Fn(f64) -> f64) -> f64 {
    let d = z.len();
    let c = (d as f64).sqrt() / 8.0;
    let c = c.max(1.0);
    let y = |i: usize| c * z[i] + 1.0;
    if d == 1 {
        return term((y(0) - 1.0).powi(2));
    }
    (0..d - 1)
        .map(|i| {
            let (a, b) = (y(i), y(i + 1));
            term(100.0 * (a * a - b).powi(2) + (a - 1.0).powi(2))
        })
        .sum()
}

fn rosenbrock(z: &[f64]) -> f64 {
    rosenbrock_terms(z, |s| s)
}

fn discus(z: &[f64]) -> f64 {
    1e6 * z[0] * z[0] + z[1..].iter().map(|v| v * v).sum::<f64>()
}

fn bent_cigar(z: &[f64]) -> f64 {
    z[0] * z[0] + 1e6 * z[1..].iter().map(|v| v * v).sum::<f64>()
}

fn sharp_ridge(z: &[f64]) -> f64 {
    z[0] * z[0] + 100.0 * z[1..].iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn different_powers(z: &[f64]) -> f64 {
    let d = z.len();
    z.iter()
        .enumerate()
        .map(|(i, v)| v.abs().powf(2.0 + 4.0 * ratio(i, d)))
        .sum::<f64>()
        .sqrt()
}

const WEIERSTRASS_TERMS: i32 = 12;

fn weierstrass(z: &[f64]) -> f64 {
    let d = z.len();
    let f0: f64 = (0..WEIERSTRASS_TERMS)
        .map(|k| 0.5f64.powi(k) * (PI * 3f64.powi(k)).cos())
        .sum();
    let mut total = 0.0;
    for (i, &v) in z.iter().enumerate() {
        let y = lambda(0.01, i, d) * v;
        for k in 0..WEIERSTRASS_TERMS {
            total += 0.5f64.powi(k) * (2.0 * PI * 3f64.powi(k) * (y + 0.5)).cos();
        }
    }
    let inner = (total / d as f64 - f0).max(0.0);
    10.0 * inner.powi(3)
}

fn schaffers(z: &[f64], alpha: f64) -> f64 {
    let d = z.len();
    let y: Vec<f64> = z
        .iter()
        .enumerate()
        .map(|(i, v)| lambda(alpha, i, d) * v)
        .collect();
    let term = |s: f64| {
        let r = s.sqrt();
        r + r * (50.0 * s.powf(0.2)).sin().powi(2)
    };
    if d == 1 {
        return term(y[0].abs()).powi(2);
    }
    let sum: f64 = y
        .windows(2)
        .map(|w| term((w[0] * w[0] + w[1] * w[1]).sqrt()))
        .sum();
    (sum / (d - 1) as f64).powi(2)
}

fn griewank_rosenbrock(z: &[f64]) -> f64 {
    let pairs = z.len().saturating_sub(1).max(1) as f64;
    10.0 / pairs * rosenbrock_terms(z, |s| s / 4000.0 - s.cos()) + 10.0
}

const SCHWEFEL_OPT: f64 = 4.209_687_462_275_036;

fn schwefel(z: &[f64]) -> f64 {
    let d = z.len() as f64;
    let mut s = 0.0;
    let mut pen = 0.0;
    for &v in z {
        let t = v + SCHWEFEL_OPT;
        let w = 100.0 * t;
        s += w * w.abs().sqrt().sin();
        let excess = t.abs() - 5.0;
        if excess > 0.0 {
            pen += excess * excess;
        }
    }
    -s / (100.0 * d) + 4.189_828_872_724_339 + 100.0 * pen
}

fn gallagher_peaks(id: u32, dim: usize, count: usize, top_condition: f64) -> Peaks {
    let mut rng = seed::rng_for(0x6a11a6e5, "gallagher-peaks", &[id as u64, dim as u64]);
    let mut centers = vec![vec![0.0; dim]];
    for _ in 1..count {
        centers.push((0..dim).map(|_| rng.random_range(-5.0..5.0)).collect());
    }
    let mut exponents: Vec<usize> = (0..count - 1).collect();
    exponents.shuffle(&mut rng);
    let mut conditions = vec![top_condition];
    conditions.extend(
        exponents
            .iter()
            .map(|&j| 1000f64.powf(2.0 * j as f64 / (count - 2) as f64)),
    );
    let diag = conditions
        .iter()
        .map(|&alpha| {
            let mut d: Vec<f64> = (0..dim)
                .map(|i| lambda(alpha, i, dim).powi(2) / alpha.powf(0.25))
                .collect();
            d.shuffle(&mut rng);
            d
        })
        .collect();
    let mut heights = vec![10.0];
    heights.extend((2..=count).map(|i| 1.1 + 8.0 * (i - 2) as f64 / (count - 2) as f64));
    Peaks {
        centers,
        diag,
        heights,
    }
}

fn gallagher(z: &[f64], peaks: Option<&Peaks>) -> f64 {
    let p = peaks.expect("gallagher evaluation needs peak data");
    let d = z.len() as f64;
    let mut best: f64 = 0.0;
    for ((c, diag), h) in p.centers.iter().zip(&p.diag).zip(&p.heights) {
        let q: f64 = z
            .iter()
            .zip(c)
            .zip(diag)
            .map(|((zi, ci), di)| di * (zi - ci) * (zi - ci))
            .sum();
        best = best.max(h * (-q / (2.0 * d)).exp());
    }
    (10.0 - best).powi(2)
}

fn katsuura(z: &[f64]) -> f64 {
    let d = z.len();
    let df = d as f64;
    let exponent = 10.0 / df.powf(1.2);
    let mut prod = 1.0;
    for (i, &v) in z.iter().enumerate() {
        let y = lambda(100.0, i, d) * v;
        let mut s = 0.0;
        for j in 1..=32 {
            let p = 2f64.powi(j);
            s += (p * y - (p * y).round()).abs() / p;
        }
        prod *= (1.0 + (i + 1) as f64 * s).powf(exponent);
    }
    10.0 / (df * df) * (prod - 1.0)
}

fn lunacek(z: &[f64]) -> f64 {
    let d = z.len();
    let df = d as f64;
    let mu0 = 2.5;
    let s = 1.0 - 1.0 / (2.0 * (df + 20.0).sqrt() - 8.2);
    let mu1 = -((mu0 * mu0 - 1.0) / s).sqrt();
    let first: f64 = z.iter().map(|v| v * v).sum();
    let second: f64 = df + s * z.iter().map(|v| (v + mu0 - mu1).powi(2)).sum::<f64>();
    let cos_sum: f64 = z
        .iter()
        .enumerate()
        .map(|(i, v)| (2.0 * PI * lambda(100.0, i, d) * v).cos())
        .sum();
    first.min(second) + 10.0 * (df - cos_sum)
}
