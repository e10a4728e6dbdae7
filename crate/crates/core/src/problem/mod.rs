//! Multi-affine problem generator.
//!
//! A problem is a weighted combination of component functions in
//! log-precision space. Each component is instantiated (seeded shift and
//! rotation), relocated so that its optimum sits at the problem optimum,
//! and rescaled so that the largest precision it reaches on the domain maps
//! to 10^2. The combined function has optimum value exactly 0.

mod functions;
mod manifest;

use std::collections::BTreeMap;
use std::sync::{Arc, RwLock};

use nalgebra::DMatrix;
use rand::seq::index;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub use functions::{component, registry, ComponentFunction, FunctionGroup, REGISTRY_SIZE};
pub use manifest::{ProblemRecord, ScaleFactorManifest, SuiteManifest};

use crate::error::{Error, Result};
use crate::sampling::{sobol_points, SampleDesign};
use crate::seed;
use functions::Peaks;

pub const DOMAIN_LO: f64 = -5.0;
pub const DOMAIN_HI: f64 = 5.0;
pub const SHIFT_BOUND: f64 = 4.0;
pub const DEFAULT_INSTANCE_POOL: u32 = 100;
/// Precision floor (and the value `F` reaches at the optimum before the offset).
pub const PRECISION_FLOOR: f64 = 1e-8;
pub const LOG_FLOOR: f64 = -8.0;
/// Every rescaled component reaches log-precision 2 at its sample maximum.
pub const LOG_TARGET: f64 = 2.0;
const LOG_EPS: f64 = 1e-12;
/// Points per dimension used to estimate scale factors.
pub const SCALE_SAMPLE_FACTOR: usize = 500;
const SCALE_SAMPLE_SEED: u64 = 0x5ca1_e5ee_d000_0001;

/// Problem ids at or above this value denote single-component problems.
pub const COMPONENT_PROBLEM_BASE: u64 = 1_000_000;

pub fn component_problem_id(component_id: u32, instance_id: u32) -> u64 {
    COMPONENT_PROBLEM_BASE + 1000 * component_id as u64 + instance_id as u64
}

/// `(component_id, instance_id)` for ids produced by [`component_problem_id`].
pub fn parse_component_problem_id(problem_id: u64) -> Option<(u32, u32)> {
    let rest = problem_id.checked_sub(COMPONENT_PROBLEM_BASE)?;
    Some(((rest / 1000) as u32, (rest % 1000) as u32))
}

#[derive(Clone, Serialize, Deserialize)]
pub struct ComponentInstance {
    pub component_id: u32,
    pub instance_id: u32,
    pub dim: usize,
    pub shift: Vec<f64>,
    /// Row-major `dim x dim` orthogonal matrix.
    pub rotation: Vec<f64>,
    /// log10 of the largest precision observed on the domain.
    pub scale_factor: f64,
    raw_optimum: f64,
    #[serde(skip)]
    peaks: Option<Arc<Peaks>>,
}

impl std::fmt::Debug for ComponentInstance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ComponentInstance")
            .field("component_id", &self.component_id)
            .field("instance_id", &self.instance_id)
            .field("dim", &self.dim)
            .field("shift", &self.shift)
            .field("scale_factor", &self.scale_factor)
            .finish()
    }
}

impl PartialEq for ComponentInstance {
    fn eq(&self, other: &Self) -> bool {
        self.component_id == other.component_id
            && self.instance_id == other.instance_id
            && self.dim == other.dim
            && self.shift == other.shift
            && self.rotation == other.rotation
            && self.scale_factor.to_bits() == other.scale_factor.to_bits()
    }
}

impl ComponentInstance {
    pub fn function(&self) -> &'static ComponentFunction {
        component(self.component_id).expect("instance built from a registry id")
    }

    pub fn rotation_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.rotation)
    }

    /// Precision with the component optimum relocated to `optimum`; no
    /// dimension checks.
    fn precision_unchecked(&self, optimum: &[f64], x: &[f64]) -> f64 {
        let d = self.dim;
        let mut stack = [0.0f64; 32];
        let mut heap;
        let z: &mut [f64] = if d <= stack.len() {
            &mut stack[..d]
        } else {
            heap = vec![0.0; d];
            &mut heap
        };
        for (i, zi) in z.iter_mut().enumerate() {
            let row = &self.rotation[i * d..(i + 1) * d];
            *zi = row
                .iter()
                .zip(x.iter().zip(optimum))
                .map(|(r, (xi, oi))| r * (xi - oi))
                .sum();
        }
        let v = self.function().eval_with(z, self.peaks.as_deref()) - self.raw_optimum;
        if v.is_nan() {
            f64::INFINITY
        } else {
            v.max(0.0)
        }
    }
}

fn check_dim(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::domain(format!(
            "{what} has dimension {got}, expected {want}"
        )));
    }
    Ok(())
}

/// Instance rotation: QR of a Gaussian matrix with the signs of `R`'s
/// diagonal folded into `Q` so the result does not depend on the QR routine.
fn random_rotation(rng: &mut seed::Rng, dim: usize) -> Vec<f64> {
    let g = DMatrix::<f64>::from_fn(dim, dim, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    let mut out = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            out.push(q[(i, j)]);
        }
    }
    out
}

fn identity(dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim * dim];
    for i in 0..dim {
        out[i * dim + i] = 1.0;
    }
    out
}

fn build_instance(
    component_id: u32,
    instance_id: u32,
    dim: usize,
    master_seed: u64,
    pool_size: u32,
) -> Result<ComponentInstance> {
    let f = component(component_id)?;
    if instance_id < 1 || instance_id > pool_size {
        return Err(Error::domain(format!(
            "instance id {instance_id} outside 1..={pool_size}"
        )));
    }
    if dim == 0 {
        return Err(Error::domain("dimension must be at least 1"));
    }
    let mut rng = seed::rng_for(
        master_seed,
        "component-instance",
        &[component_id as u64, instance_id as u64, dim as u64],
    );
    let shift = (0..dim)
        .map(|_| rng.random_range(-SHIFT_BOUND..=SHIFT_BOUND))
        .collect();
    let rotation = if f.rotated {
        random_rotation(&mut rng, dim)
    } else {
        identity(dim)
    };
    Ok(ComponentInstance {
        component_id,
        instance_id,
        dim,
        shift,
        rotation,
        scale_factor: f64::NAN,
        raw_optimum: f.raw_optimum_value(dim),
        peaks: f.peaks(dim),
    })
}

/// Seeded instance of a registry function, scale factor included.
pub fn instantiate_component(
    component_id: u32,
    instance_id: u32,
    dim: usize,
    master_seed: u64,
) -> Result<ComponentInstance> {
    let mut ci = build_instance(
        component_id,
        instance_id,
        dim,
        master_seed,
        DEFAULT_INSTANCE_POOL,
    )?;
    ci.scale_factor = estimate_scale_factor(&ci, SCALE_SAMPLE_FACTOR * dim)?;
    Ok(ci)
}

/// `p_i(x) = f_i(R_i (x - x*)) - f_i(0)`, clamped at 0.
pub fn component_precision(ci: &ComponentInstance, optimum: &[f64], x: &[f64]) -> Result<f64> {
    check_dim("optimum", optimum.len(), ci.dim)?;
    check_dim("point", x.len(), ci.dim)?;
    Ok(ci.precision_unchecked(optimum, x))
}

/// log10 of the maximal precision over a Sobol sample of the domain, with
/// the component optimum at the instance shift.
pub fn estimate_scale_factor(ci: &ComponentInstance, sample_size: usize) -> Result<f64> {
    estimate_scale_factor_at(ci, &ci.shift, sample_size)
}

pub fn estimate_scale_factor_at(
    ci: &ComponentInstance,
    optimum: &[f64],
    sample_size: usize,
) -> Result<f64> {
    if sample_size < 2 {
        return Err(Error::domain("scale-factor sample needs at least 2 points"));
    }
    check_dim("optimum", optimum.len(), ci.dim)?;
    let design = SampleDesign::new(sample_size, ci.dim, DOMAIN_LO, DOMAIN_HI)
        .with_scramble(SCALE_SAMPLE_SEED);
    let max = sobol_points(&design)?
        .iter()
        .map(|x| ci.precision_unchecked(optimum, x))
        .fold(0.0f64, f64::max);
    if !(max >= PRECISION_FLOOR) {
        return Err(Error::DegenerateComponent {
            component_id: ci.component_id,
            instance_id: ci.instance_id,
            dim: ci.dim,
        });
    }
    Ok(max.log10().max(LOG_FLOOR + 1e-9))
}

/// Scale factors keyed `"fid.iid.d"`; concurrent readers, serialized writers.
#[derive(Debug, Default)]
pub struct ScaleFactorCache {
    map: RwLock<BTreeMap<String, f64>>,
}

impl ScaleFactorCache {
    pub fn key(component_id: u32, instance_id: u32, dim: usize) -> String {
        format!("{component_id}.{instance_id}.{dim}")
    }

    pub fn get(&self, component_id: u32, instance_id: u32, dim: usize) -> Option<f64> {
        self.map
            .read()
            .unwrap()
            .get(&Self::key(component_id, instance_id, dim))
            .copied()
    }

    fn get_or_try_insert(
        &self,
        key: String,
        compute: impl FnOnce() -> Result<f64>,
    ) -> Result<f64> {
        if let Some(&v) = self.map.read().unwrap().get(&key) {
            return Ok(v);
        }
        let v = compute()?;
        Ok(*self.map.write().unwrap().entry(key).or_insert(v))
    }

    pub fn clear(&self) {
        self.map.write().unwrap().clear();
    }

    pub fn len(&self) -> usize {
        self.map.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_manifest(&self) -> ScaleFactorManifest {
        ScaleFactorManifest(self.map.read().unwrap().clone())
    }

    pub fn from_manifest(m: ScaleFactorManifest) -> Self {
        Self {
            map: RwLock::new(m.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedLineage {
    pub master_seed: u64,
    /// `"generated"` or `"component"`.
    pub origin: String,
    pub problem_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub problem_id: u64,
    pub dim: usize,
    pub components: Vec<ComponentInstance>,
    pub weights: Vec<f64>,
    pub optimum: Vec<f64>,
    pub lineage: SeedLineage,
}

impl ProblemInstance {
    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn active(&self) -> Vec<(u32, u32)> {
        self.components
            .iter()
            .map(|c| (c.component_id, c.instance_id))
            .collect()
    }

    pub fn is_component_problem(&self) -> bool {
        self.lineage.origin == "component"
    }

    /// Objective value; `x` must have length `dim`.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let mut exponent = 0.0;
        for (ci, w) in self.components.iter().zip(&self.weights) {
            let p = ci.precision_unchecked(&self.optimum, x);
            let l = (p + LOG_EPS).log10().max(LOG_FLOOR);
            // rescaled log precision minus the floor: 0 at the optimum,
            // LOG_TARGET - LOG_FLOOR at the sample maximum
            let shifted = (LOG_TARGET - LOG_FLOOR) * (l - LOG_FLOOR) / (ci.scale_factor - LOG_FLOOR);
            exponent += w * shifted;
        }
        // 10^(exponent - 8) - 10^-8, written so the optimum gives exactly 0
        PRECISION_FLOOR * (exponent * std::f64::consts::LN_10).exp_m1()
    }

    pub fn to_record(&self) -> ProblemRecord {
        ProblemRecord {
            problem_id: self.problem_id,
            dim: self.dim,
            active: self.active(),
            weights: self.weights.clone(),
            optimum: self.optimum.clone(),
            lineage: self.lineage.clone(),
        }
    }
}

pub fn evaluate_problem(pi: &ProblemInstance, x: &[f64]) -> Result<f64> {
    check_dim("point", x.len(), pi.dim)?;
    Ok(pi.evaluate(x))
}

pub fn normalize_weights(raw: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = raw.iter().sum();
    if raw.is_empty() || raw.iter().any(|w| !(*w > 0.0)) || !total.is_finite() {
        return Err(Error::domain("weights must be positive and finite"));
    }
    Ok(raw.iter().map(|w| w / total).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub dim: usize,
    /// Active-component count -> number of problems.
    pub counts_per_k: BTreeMap<usize, usize>,
    pub instance_pool_size: u32,
    pub master_seed: u64,
}

impl GeneratorSpec {
    /// 2000 problems for each k in 2..=5 and 200 for each k in 6..=24.
    pub fn full_scale(dim: usize, master_seed: u64) -> Self {
        let mut counts = BTreeMap::new();
        for k in 2..=5 {
            counts.insert(k, 2000);
        }
        for k in 6..=24 {
            counts.insert(k, 200);
        }
        Self {
            dim,
            counts_per_k: counts,
            instance_pool_size: DEFAULT_INSTANCE_POOL,
            master_seed,
        }
    }

    pub fn total(&self) -> usize {
        self.counts_per_k.values().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::domain("dimension must be at least 1"));
        }
        if self.instance_pool_size == 0 || self.instance_pool_size > 999 {
            return Err(Error::domain("instance pool size must lie in 1..=999"));
        }
        for &k in self.counts_per_k.keys() {
            if k == 0 || k > REGISTRY_SIZE {
                return Err(Error::domain(format!(
                    "active-component count {k} outside 1..={REGISTRY_SIZE}"
                )));
            }
        }
        Ok(())
    }
}

/// Generator with a shared scale-factor cache.
#[derive(Debug, Clone)]
pub struct Generator {
    pub master_seed: u64,
    pub instance_pool_size: u32,
    cache: Arc<ScaleFactorCache>,
}

impl Generator {
    pub fn new(master_seed: u64, instance_pool_size: u32) -> Self {
        Self::with_cache(master_seed, instance_pool_size, Arc::default())
    }

    pub fn with_cache(master_seed: u64, instance_pool_size: u32, cache: Arc<ScaleFactorCache>) -> Self {
        Self {
            master_seed,
            instance_pool_size,
            cache,
        }
    }

    pub fn cache(&self) -> &Arc<ScaleFactorCache> {
        &self.cache
    }

    pub fn instance(&self, component_id: u32, instance_id: u32, dim: usize) -> Result<ComponentInstance> {
        let mut ci = build_instance(
            component_id,
            instance_id,
            dim,
            self.master_seed,
            self.instance_pool_size,
        )?;
        ci.scale_factor = self.cache.get_or_try_insert(
            ScaleFactorCache::key(component_id, instance_id, dim),
            || estimate_scale_factor(&ci, SCALE_SAMPLE_FACTOR * dim),
        )?;
        Ok(ci)
    }

    fn assemble(
        &self,
        problem_id: u64,
        dim: usize,
        mut active: Vec<(u32, u32, f64)>,
        optimum: Vec<f64>,
        lineage: SeedLineage,
    ) -> Result<ProblemInstance> {
        active.sort_by_key(|a| a.0);
        let components = active
            .iter()
            .map(|&(c, i, _)| self.instance(c, i, dim))
            .collect::<Result<Vec<_>>>()?;
        Ok(ProblemInstance {
            problem_id,
            dim,
            components,
            weights: active.iter().map(|a| a.2).collect(),
            optimum,
            lineage,
        })
    }

    /// Random problem with `k` distinct components.
    pub fn problem(&self, dim: usize, k: usize, problem_id: u64) -> Result<ProblemInstance> {
        if k == 0 || k > REGISTRY_SIZE {
            return Err(Error::domain(format!(
                "active-component count {k} outside 1..={REGISTRY_SIZE}"
            )));
        }
        if dim == 0 {
            return Err(Error::domain("dimension must be at least 1"));
        }
        let problem_seed =
            seed::derive_seed(self.master_seed, "problem", &[problem_id, dim as u64, k as u64]);
        let mut rng = seed::rng_for(problem_seed, "draw", &[]);
        let ids: Vec<u32> = index::sample(&mut rng, REGISTRY_SIZE, k)
            .into_iter()
            .map(|i| i as u32 + 1)
            .collect();
        let instances: Vec<u32> = (0..k)
            .map(|_| rng.random_range(1..=self.instance_pool_size))
            .collect();
        // open interval (0, 1) so every weight is strictly positive
        let raw: Vec<f64> = (0..k).map(|_| 1.0 - rng.random::<f64>()).collect();
        let weights = normalize_weights(&raw)?;
        let optimum = (0..dim)
            .map(|_| rng.random_range(DOMAIN_LO..=DOMAIN_HI))
            .collect();
        let active = ids
            .into_iter()
            .zip(instances)
            .zip(weights)
            .map(|((c, i), w)| (c, i, w))
            .collect();
        self.assemble(
            problem_id,
            dim,
            active,
            optimum,
            SeedLineage {
                master_seed: self.master_seed,
                origin: "generated".into(),
                problem_seed,
            },
        )
    }

    /// Single rescaled component with its optimum at the instance shift.
    pub fn component_problem(&self, component_id: u32, instance_id: u32, dim: usize) -> Result<ProblemInstance> {
        let ci = self.instance(component_id, instance_id, dim)?;
        let optimum = ci.shift.clone();
        Ok(ProblemInstance {
            problem_id: component_problem_id(component_id, instance_id),
            dim,
            components: vec![ci],
            weights: vec![1.0],
            optimum,
            lineage: SeedLineage {
                master_seed: self.master_seed,
                origin: "component".into(),
                problem_seed: 0,
            },
        })
    }

    /// All registry functions with instances `1..=instances`.
    pub fn component_problems(&self, dim: usize, instances: u32) -> Result<Vec<ProblemInstance>> {
        let mut out = Vec::new();
        for f in registry() {
            for iid in 1..=instances {
                out.push(self.component_problem(f.id, iid, dim)?);
            }
        }
        Ok(out)
    }

    /// Rebuilds a problem from its manifest record.
    pub fn from_record(&self, rec: &ProblemRecord) -> Result<ProblemInstance> {
        if rec.active.len() != rec.weights.len() || rec.optimum.len() != rec.dim {
            return Err(Error::Data(format!(
                "malformed record for problem {}",
                rec.problem_id
            )));
        }
        let active = rec
            .active
            .iter()
            .zip(&rec.weights)
            .map(|(&(c, i), &w)| (c, i, w))
            .collect();
        self.assemble(
            rec.problem_id,
            rec.dim,
            active,
            rec.optimum.clone(),
            rec.lineage.clone(),
        )
    }

    pub fn suite(&self, spec: &GeneratorSpec) -> Result<(Vec<ProblemInstance>, SuiteManifest)> {
        spec.validate()?;
        let generator = Generator {
            instance_pool_size: spec.instance_pool_size,
            master_seed: spec.master_seed,
            cache: self.cache.clone(),
        };
        let mut problems = Vec::with_capacity(spec.total());
        let mut next_id = 0u64;
        for (&k, &count) in &spec.counts_per_k {
            for _ in 0..count {
                problems.push(generator.problem(spec.dim, k, next_id)?);
                next_id += 1;
            }
        }
        let manifest = SuiteManifest::new(spec, &problems);
        Ok((problems, manifest))
    }
}

pub fn generate_problem(dim: usize, k: usize, master_seed: u64, problem_id: u64) -> Result<ProblemInstance> {
    Generator::new(master_seed, DEFAULT_INSTANCE_POOL).problem(dim, k, problem_id)
}

pub fn generate_suite(spec: &GeneratorSpec) -> Result<(Vec<ProblemInstance>, SuiteManifest)> {
    Generator::new(spec.master_seed, spec.instance_pool_size).suite(spec)
}

#[cfg(test)]
mod tests;
