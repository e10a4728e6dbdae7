//! Optimizer portfolio, budgeted run harness and AOCC.

mod optimizers;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write as _};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifact;
use crate::error::{Error, Result};
use crate::problem::ProblemInstance;
use crate::seed;

pub const DEFAULT_BUDGET_FACTOR: usize = 2000;
pub const DEFAULT_RUNS: usize = 15;
pub const COMPONENT_RUNS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    RandomSearch,
    OnePlusOneEs,
    DifferentialEvolution,
    ParticleSwarm,
    NelderMead,
    QuasiNewton,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::RandomSearch,
        Algorithm::OnePlusOneEs,
        Algorithm::DifferentialEvolution,
        Algorithm::ParticleSwarm,
        Algorithm::NelderMead,
        Algorithm::QuasiNewton,
    ];

    pub fn default_name(self) -> &'static str {
        match self {
            Algorithm::RandomSearch => "random-search",
            Algorithm::OnePlusOneEs => "one-plus-one-es",
            Algorithm::DifferentialEvolution => "de-rand-1-bin",
            Algorithm::ParticleSwarm => "pso-gbest",
            Algorithm::NelderMead => "nelder-mead",
            Algorithm::QuasiNewton => "bfgs-fd",
        }
    }

    pub fn population_based(self) -> bool {
        matches!(
            self,
            Algorithm::DifferentialEvolution | Algorithm::ParticleSwarm
        )
    }

    pub fn default_hyperparameters(self) -> BTreeMap<String, f64> {
        let pairs: &[(&str, f64)] = match self {
            Algorithm::RandomSearch => &[],
            Algorithm::OnePlusOneEs => &[("sigma0", 0.2), ("min_sigma", 1e-12)],
            Algorithm::DifferentialEvolution => &[("pop_factor", 10.0), ("f", 0.5), ("cr", 0.9)],
            Algorithm::ParticleSwarm => &[
                ("pop_factor", 10.0),
                ("inertia", 0.72),
                ("c1", 1.49),
                ("c2", 1.49),
            ],
            Algorithm::NelderMead => &[("initial_step", 0.05), ("collapse_tol", 1e-10)],
            Algorithm::QuasiNewton => &[("fd_step", 1e-7), ("grad_tol", 1e-12)],
        };
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSpec {
    pub algorithm_id: u32,
    pub name: String,
    pub algorithm: Algorithm,
    /// Missing keys fall back to the algorithm defaults.
    #[serde(default)]
    pub hyperparameters: BTreeMap<String, f64>,
}

impl OptimizerSpec {
    pub fn new(algorithm_id: u32, algorithm: Algorithm) -> Self {
        OptimizerSpec {
            algorithm_id,
            name: algorithm.default_name().to_string(),
            algorithm,
            hyperparameters: algorithm.default_hyperparameters(),
        }
    }

    pub fn population_based(&self) -> bool {
        self.algorithm.population_based()
    }

    fn param(&self, key: &str) -> f64 {
        self.hyperparameters
            .get(key)
            .copied()
            .or_else(|| self.algorithm.default_hyperparameters().get(key).copied())
            .unwrap_or_else(|| panic!("no hyperparameter {key} for {:?}", self.algorithm))
    }

    /// Seed key from the algorithm and its effective hyperparameters, not
    /// from the id, so a relabeled copy behaves identically.
    pub fn behavior_key(&self) -> u64 {
        let mut params = self.algorithm.default_hyperparameters();
        params.extend(self.hyperparameters.clone());
        let text: Vec<String> = params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let tag = format!("{:?}|{}", self.algorithm, text.join(";"));
        seed::derive_seed(0, &tag, &[])
    }

    pub fn validate(&self) -> Result<()> {
        for key in self.hyperparameters.keys() {
            if !self.algorithm.default_hyperparameters().contains_key(key) {
                return Err(Error::Config(format!(
                    "unknown hyperparameter {key} for {}",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

/// All six optimizers with ids 1..=6.
pub fn standard_portfolio() -> Vec<OptimizerSpec> {
    Algorithm::ALL
        .iter()
        .enumerate()
        .map(|(i, a)| OptimizerSpec::new(i as u32 + 1, *a))
        .collect()
}

pub fn validate_portfolio(portfolio: &[OptimizerSpec]) -> Result<()> {
    if portfolio.is_empty() {
        return Err(Error::Config("empty portfolio".into()));
    }
    let mut seen = BTreeSet::new();
    for spec in portfolio {
        if !seen.insert(spec.algorithm_id) {
            return Err(Error::Config(format!(
                "duplicate algorithm id {}",
                spec.algorithm_id
            )));
        }
        spec.validate()?;
    }
    Ok(())
}

/// Budget-accounting wrapper handed to the optimizers.
pub struct Objective<'a> {
    f: &'a dyn Fn(&[f64]) -> f64,
    dim: usize,
    budget: usize,
    best: f64,
    log: Vec<f64>,
    aborted: Option<String>,
}

impl<'a> Objective<'a> {
    pub fn new(f: &'a dyn Fn(&[f64]) -> f64, dim: usize, budget: usize) -> Self {
        Objective {
            f,
            dim,
            budget,
            best: f64::INFINITY,
            log: Vec::with_capacity(budget),
            aborted: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn used(&self) -> usize {
        self.log.len()
    }

    /// Evaluates `x`, or returns `None` once the budget is spent or the run
    /// was aborted. Non-finite coordinates abort the run.
    pub fn eval(&mut self, x: &[f64]) -> Option<f64> {
        if self.aborted.is_some() || self.log.len() >= self.budget {
            return None;
        }
        if let Some(v) = x.iter().find(|v| !v.is_finite()) {
            self.aborted = Some(format!(
                "non-finite coordinate {v} after {} evaluations",
                self.log.len()
            ));
            return None;
        }
        let mut y = (self.f)(x);
        if y.is_nan() {
            y = f64::INFINITY;
        }
        if y < self.best {
            self.best = y;
        }
        self.log.push(self.best);
        Some(y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub problem_id: u64,
    pub algorithm_id: u32,
    pub run_index: usize,
    /// Best-so-far precision per evaluation, padded to the budget.
    pub best_so_far: Vec<f64>,
    pub budget: usize,
    /// Evaluations actually performed before padding.
    pub evaluations: usize,
    pub aborted: Option<String>,
}

impl Trajectory {
    pub fn final_precision(&self) -> f64 {
        self.best_so_far.last().copied().unwrap_or(f64::INFINITY)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("evaluation,best_so_far\n");
        for (t, v) in self.best_so_far.iter().enumerate() {
            s.push_str(&format!("{},{}\n", t + 1, v));
        }
        s
    }
}

pub fn run_seed(master_seed: u64, problem_id: u64, spec: &OptimizerSpec, run_index: usize) -> u64 {
    seed::derive_seed(
        master_seed,
        "portfolio-run",
        &[problem_id, spec.behavior_key(), run_index as u64],
    )
}

/// Runs one optimizer on a black-box function until the budget is spent.
pub fn run_on_function(
    spec: &OptimizerSpec,
    f: &dyn Fn(&[f64]) -> f64,
    dim: usize,
    budget: usize,
    seed: u64,
) -> Result<(Vec<f64>, usize, Option<String>)> {
    if budget == 0 {
        return Err(Error::domain("budget must be at least 1"));
    }
    let mut obj = Objective::new(f, dim, budget);
    let mut rng = seed::rng_for(seed, "optimizer", &[]);
    optimizers::run(spec, &mut obj, &mut rng);
    let evaluations = obj.used();
    if let Some(msg) = &obj.aborted {
        log::warn!("{} aborted: {msg}", spec.name);
    }
    let mut log = obj.log;
    let last = log.last().copied().unwrap_or(f64::INFINITY);
    log.resize(budget, last);
    Ok((log, evaluations, obj.aborted))
}

pub fn run_algorithm(
    spec: &OptimizerSpec,
    problem: &ProblemInstance,
    budget: usize,
    seed: u64,
    run_index: usize,
) -> Result<Trajectory> {
    let f = |x: &[f64]| problem.evaluate(x);
    let (best_so_far, evaluations, aborted) = run_on_function(spec, &f, problem.dim, budget, seed)?;
    Ok(Trajectory {
        problem_id: problem.problem_id,
        algorithm_id: spec.algorithm_id,
        run_index,
        best_so_far,
        budget,
        evaluations,
        aborted,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AoccConfig {
    pub lower: f64,
    pub upper: f64,
}

impl Default for AoccConfig {
    fn default() -> Self {
        AoccConfig {
            lower: 1e-8,
            upper: 1e2,
        }
    }
}

impl AoccConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lower > 0.0 && self.lower < self.upper && self.upper.is_finite() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "AOCC bounds must satisfy 0 < lb < ub, got ({}, {})",
                self.lower, self.upper
            )))
        }
    }
}

/// AOCC of a best-so-far sequence over `budget` evaluations; a shorter
/// sequence is padded with its last value.
pub fn aocc_values(best_so_far: &[f64], budget: usize, cfg: &AoccConfig) -> Result<f64> {
    let Some(&last) = best_so_far.last() else {
        return Err(Error::domain("empty trajectory"));
    };
    if budget < best_so_far.len() {
        return Err(Error::domain("trajectory longer than budget"));
    }
    let (llo, lhi) = (cfg.lower.log10(), cfg.upper.log10());
    let v = |p: f64| {
        let p = if p.is_nan() { f64::INFINITY } else { p };
        ((p.max(cfg.lower).log10() - llo) / (lhi - llo)).clamp(0.0, 1.0)
    };
    let mut total: f64 = best_so_far.iter().map(|&p| 1.0 - v(p)).sum();
    total += (budget - best_so_far.len()) as f64 * (1.0 - v(last));
    Ok(total / budget as f64)
}

pub fn aocc(trajectory: &Trajectory, cfg: &AoccConfig) -> Result<f64> {
    aocc_values(&trajectory.best_so_far, trajectory.budget, cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceTable {
    pub dim: usize,
    pub budget: usize,
    pub problem_ids: Vec<u64>,
    pub algorithm_ids: Vec<u32>,
    /// `[problem][algorithm]` mean AOCC.
    pub mean: Vec<Vec<f64>>,
    /// `[problem][algorithm]` per-run AOCC.
    pub runs: Vec<Vec<Vec<f64>>>,
    index: HashMap<u64, usize>,
}

impl PerformanceTable {
    pub fn new(
        dim: usize,
        budget: usize,
        problem_ids: Vec<u64>,
        algorithm_ids: Vec<u32>,
        runs: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        if runs.len() != problem_ids.len() || runs.iter().any(|r| r.len() != algorithm_ids.len()) {
            return Err(Error::Data("performance table shape mismatch".into()));
        }
        let mean = runs
            .iter()
            .map(|row| {
                row.iter()
                    .map(|cell| {
                        if cell.is_empty() {
                            return Err(Error::Data("performance cell without runs".into()));
                        }
                        if cell.iter().any(|v| !(0.0..=1.0).contains(v)) {
                            return Err(Error::Data("AOCC outside [0, 1]".into()));
                        }
                        Ok(crate::stats::mean(cell))
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let mut t = PerformanceTable {
            dim,
            budget,
            problem_ids,
            algorithm_ids,
            mean,
            runs,
            index: HashMap::new(),
        };
        t.rebuild_index()?;
        Ok(t)
    }

    fn rebuild_index(&mut self) -> Result<()> {
        self.index = self
            .problem_ids
            .iter()
            .enumerate()
            .map(|(i, &p)| (p, i))
            .collect();
        if self.index.len() != self.problem_ids.len() {
            return Err(Error::Data("duplicate problem id in performance table".into()));
        }
        Ok(())
    }

    pub fn problem_index(&self, problem_id: u64) -> Option<usize> {
        self.index.get(&problem_id).copied()
    }

    pub fn algorithm_index(&self, algorithm_id: u32) -> Option<usize> {
        self.algorithm_ids.iter().position(|&a| a == algorithm_id)
    }

    pub fn get(&self, problem_id: u64, algorithm_id: u32) -> Option<f64> {
        Some(self.mean[self.problem_index(problem_id)?][self.algorithm_index(algorithm_id)?])
    }

    /// Mean AOCC row of a problem, ordered like `algorithm_ids`.
    pub fn row(&self, problem_id: u64) -> Result<&[f64]> {
        self.problem_index(problem_id)
            .map(|i| self.mean[i].as_slice())
            .ok_or_else(|| Error::Data(format!("problem {problem_id} missing from performance table")))
    }

    pub fn to_csv(&self) -> String {
        let max_runs = self.runs.iter().flatten().map(Vec::len).max().unwrap_or(0);
        let mut s = String::from("problem_id,algorithm_id,runs,budget,mean_aocc");
        for r in 0..max_runs {
            s.push_str(&format!(",run_{r}"));
        }
        s.push('\n');
        for (i, pid) in self.problem_ids.iter().enumerate() {
            for (j, aid) in self.algorithm_ids.iter().enumerate() {
                let cell = &self.runs[i][j];
                s.push_str(&format!("{pid},{aid},{},{},{}", cell.len(), self.budget, self.mean[i][j]));
                for v in cell {
                    s.push_str(&format!(",{v}"));
                }
                for _ in cell.len()..max_runs {
                    s.push(',');
                }
                s.push('\n');
            }
        }
        s
    }

    pub fn from_csv(path: &Path, body: &str, dim: usize) -> Result<Self> {
        let bad = |msg: &str| Error::Data(format!("{}: {msg}", path.display()));
        let mut lines = body.lines();
        let header = lines.next().ok_or_else(|| bad("empty performance table"))?;
        if !header.starts_with("problem_id,algorithm_id,runs,budget,mean_aocc") {
            return Err(bad("unexpected header"));
        }
        let mut cells: BTreeMap<(u64, u32), Vec<f64>> = BTreeMap::new();
        let mut problems = Vec::new();
        let mut algorithms = Vec::new();
        let mut budget = None;
        for line in lines {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() < 5 {
                return Err(bad("short row"));
            }
            let pid: u64 = f[0].parse().map_err(|_| bad("bad problem id"))?;
            let aid: u32 = f[1].parse().map_err(|_| bad("bad algorithm id"))?;
            let n: usize = f[2].parse().map_err(|_| bad("bad run count"))?;
            budget = Some(f[3].parse().map_err(|_| bad("bad budget"))?);
            if f.len() < 5 + n {
                return Err(bad("fewer run values than the run count"));
            }
            let runs: Vec<f64> = f[5..5 + n]
                .iter()
                .map(|v| v.parse().map_err(|_| bad("bad AOCC value")))
                .collect::<Result<_>>()?;
            if problems.last() != Some(&pid) && !problems.contains(&pid) {
                problems.push(pid);
            }
            if !algorithms.contains(&aid) {
                algorithms.push(aid);
            }
            cells.insert((pid, aid), runs);
        }
        let runs = problems
            .iter()
            .map(|p| {
                algorithms
                    .iter()
                    .map(|a| cells.remove(&(*p, *a)).ok_or_else(|| bad("incomplete table")))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        PerformanceTable::new(dim, budget.unwrap_or(0), problems, algorithms, runs)
    }

    /// Restriction to the given problems (in the given order).
    pub fn restrict_problems(&self, problem_ids: &[u64]) -> Result<Self> {
        let rows = problem_ids
            .iter()
            .map(|p| {
                self.problem_index(*p)
                    .map(|i| self.runs[i].clone())
                    .ok_or_else(|| Error::Data(format!("problem {p} missing from performance table")))
            })
            .collect::<Result<Vec<_>>>()?;
        PerformanceTable::new(self.dim, self.budget, problem_ids.to_vec(), self.algorithm_ids.clone(), rows)
    }
}

/// Settings of one portfolio experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub budget_factor: usize,
    pub runs: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub aocc: AoccConfig,
}

impl RunSettings {
    pub fn budget(&self, dim: usize) -> usize {
        self.budget_factor * dim
    }
}

/// Incremental persistence of finished cells as JSON lines.
#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    config_hash: String,
}

#[derive(Serialize, Deserialize)]
struct CheckpointCell {
    problem_id: u64,
    algorithm_id: u32,
    aocc: Vec<f64>,
}

fn load_checkpoint(path: &Path, config_hash: &str) -> Result<BTreeMap<(u64, u32), Vec<f64>>> {
    let mut done = BTreeMap::new();
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(done),
        Err(e) => return Err(Error::io(path, e)),
    };
    let mut lines = BufReader::new(file).lines();
    let Some(first) = lines.next() else {
        return Ok(done);
    };
    let first = first.map_err(|e| Error::io(path, e))?;
    let header: CheckpointHeader = serde_json::from_str(&first)
        .map_err(|e| Error::Data(format!("{}: bad checkpoint header: {e}", path.display())))?;
    artifact::check_hash(path, config_hash, &header.config_hash)?;
    for line in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        // a torn final line from an interrupted write is dropped
        match serde_json::from_str::<CheckpointCell>(&line) {
            Ok(c) => {
                done.insert((c.problem_id, c.algorithm_id), c.aocc);
            }
            Err(_) => log::warn!("{}: ignoring unreadable checkpoint line", path.display()),
        }
    }
    Ok(done)
}

/// Options for [`run_portfolio`].
#[derive(Default)]
pub struct RunOptions<'a> {
    /// JSON-lines checkpoint; finished cells found there are skipped.
    pub checkpoint: Option<&'a Path>,
    pub config_hash: String,
    /// Stop after this many newly computed cells (the table is then
    /// incomplete and `Ok(None)` is returned).
    pub cell_limit: Option<usize>,
}

/// Mean AOCC over `runs` seeds for every (problem, algorithm) pair. Runs in
/// the current rayon pool; the result does not depend on scheduling.
pub fn run_portfolio(
    suite: &[ProblemInstance],
    portfolio: &[OptimizerSpec],
    settings: &RunSettings,
    options: &RunOptions<'_>,
) -> Result<Option<PerformanceTable>> {
    if suite.is_empty() {
        return Err(Error::domain("empty suite"));
    }
    validate_portfolio(portfolio)?;
    settings.aocc.validate()?;
    if settings.runs == 0 || settings.budget_factor == 0 {
        return Err(Error::Config("runs and budget factor must be positive".into()));
    }
    let dim = suite[0].dim;
    if suite.iter().any(|p| p.dim != dim) {
        return Err(Error::domain("suite mixes dimensions"));
    }
    let budget = settings.budget(dim);

    let mut done = match options.checkpoint {
        Some(p) => load_checkpoint(p, &options.config_hash)?,
        None => BTreeMap::new(),
    };
    done.retain(|_, v| v.len() == settings.runs);
    let writer = match options.checkpoint {
        Some(p) => {
            let fresh = !p.exists() || std::fs::metadata(p).map(|m| m.len() == 0).unwrap_or(true);
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            let mut f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(p)
                .map_err(|e| Error::io(p, e))?;
            if fresh {
                let header = serde_json::to_string(&CheckpointHeader {
                    config_hash: options.config_hash.clone(),
                })?;
                writeln!(f, "{header}").map_err(|e| Error::io(p, e))?;
            }
            Some(Mutex::new(f))
        }
        None => None,
    };

    let mut pending: Vec<(usize, usize)> = Vec::new();
    for (i, p) in suite.iter().enumerate() {
        for (j, a) in portfolio.iter().enumerate() {
            if !done.contains_key(&(p.problem_id, a.algorithm_id)) {
                pending.push((i, j));
            }
        }
    }
    let complete = match options.cell_limit {
        Some(limit) if limit < pending.len() => {
            pending.truncate(limit);
            false
        }
        _ => true,
    };
    let total = pending.len();
    log::info!("portfolio: {} cells to run, {} reused", total, done.len());
    let counter = AtomicUsize::new(0);

    let results: Vec<((u64, u32), Vec<f64>)> = pending
        .par_iter()
        .map(|&(i, j)| -> Result<((u64, u32), Vec<f64>)> {
            let problem = &suite[i];
            let spec = &portfolio[j];
            let mut values = Vec::with_capacity(settings.runs);
            for r in 0..settings.runs {
                let seed = run_seed(settings.master_seed, problem.problem_id, spec, r);
                let t = run_algorithm(spec, problem, budget, seed, r)?;
                values.push(aocc(&t, &settings.aocc)?);
            }
            if let (Some(w), Some(path)) = (&writer, options.checkpoint) {
                let line = serde_json::to_string(&CheckpointCell {
                    problem_id: problem.problem_id,
                    algorithm_id: spec.algorithm_id,
                    aocc: values.clone(),
                })?;
                let mut f = w.lock().expect("checkpoint writer poisoned");
                writeln!(f, "{line}").map_err(|e| Error::io(path, e))?;
                f.flush().map_err(|e| Error::io(path, e))?;
            }
            let n = counter.fetch_add(1, Ordering::Relaxed) + 1;
            if n % 100 == 0 || n == total {
                log::info!("portfolio: {n}/{total} cells");
            }
            Ok(((problem.problem_id, spec.algorithm_id), values))
        })
        .collect::<Result<_>>()?;
    done.extend(results);

    if !complete {
        return Ok(None);
    }
    let runs = suite
        .iter()
        .map(|p| {
            portfolio
                .iter()
                .map(|a| {
                    done.get(&(p.problem_id, a.algorithm_id))
                        .cloned()
                        .ok_or_else(|| Error::Data("missing cell after run".into()))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    PerformanceTable::new(
        dim,
        budget,
        suite.iter().map(|p| p.problem_id).collect(),
        portfolio.iter().map(|a| a.algorithm_id).collect(),
        runs,
    )
    .map(Some)
}
