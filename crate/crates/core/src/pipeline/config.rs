//! Experiment configuration (TOML).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::aas::SelectorParams;
use crate::artifact::sha256_hex;
use crate::ela;
use crate::error::{Error, Result};
use crate::portfolio::{self, Algorithm, AoccConfig, OptimizerSpec};
use crate::problem::{GeneratorSpec, DEFAULT_INSTANCE_POOL};
use crate::selection::{SelectionPlan, Strategy, MIN_COMPONENT_INSTANCES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    /// Active-component count -> number of generated problems. Keys are
    /// written as strings in TOML.
    pub counts_per_k: BTreeMap<String, usize>,
    pub instance_pool_size: u32,
    /// Instances per registry function in the component-function pool.
    pub component_instances: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElaConfig {
    pub sample_factor: usize,
    pub repetitions: usize,
    pub prune_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortfolioConfig {
    pub budget_factor: usize,
    pub runs: usize,
    /// Runs on the component-function problems.
    pub component_runs: usize,
    pub aocc_lower: f64,
    pub aocc_upper: f64,
    pub algorithms: Vec<OptimizerSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionConfig {
    pub sizes: Vec<usize>,
    pub repetitions: Vec<usize>,
    pub strategies: Vec<Strategy>,
    pub component_instances: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dim: usize,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    pub generator: GeneratorConfig,
    pub ela: ElaConfig,
    pub portfolio: PortfolioConfig,
    pub selection: SelectionConfig,
    pub selector: SelectorParams,
}

fn counts(pairs: impl IntoIterator<Item = (usize, usize)>) -> BTreeMap<String, usize> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

impl ExperimentConfig {
    /// Full-scale defaults.
    pub fn full_scale() -> Self {
        let spec = GeneratorSpec::full_scale(2, 0);
        ExperimentConfig {
            dim: 2,
            master_seed: 2024,
            output_dir: PathBuf::from("aaslab-out"),
            generator: GeneratorConfig {
                counts_per_k: counts(spec.counts_per_k),
                instance_pool_size: DEFAULT_INSTANCE_POOL,
                component_instances: MIN_COMPONENT_INSTANCES,
            },
            ela: ElaConfig {
                sample_factor: ela::SAMPLE_FACTOR,
                repetitions: ela::REPETITIONS,
                prune_threshold: ela::PRUNE_THRESHOLD,
            },
            portfolio: PortfolioConfig {
                budget_factor: portfolio::DEFAULT_BUDGET_FACTOR,
                runs: portfolio::DEFAULT_RUNS,
                component_runs: portfolio::COMPONENT_RUNS,
                aocc_lower: AoccConfig::default().lower,
                aocc_upper: AoccConfig::default().upper,
                algorithms: portfolio::standard_portfolio(),
            },
            selection: {
                let p = SelectionPlan::full_scale();
                SelectionConfig {
                    sizes: p.sizes,
                    repetitions: p.repetitions,
                    strategies: p.strategies,
                    component_instances: p.component_instances,
                }
            },
            selector: SelectorParams::default(),
        }
    }

    /// The small end-to-end experiment: 600 generated problems in d=2,
    /// five optimizers, five runs, training sizes 24 and 120.
    pub fn desk_scale() -> Self {
        let mut c = Self::full_scale();
        c.output_dir = PathBuf::from("aaslab-desk");
        let mut pairs = vec![(2, 110), (3, 100), (4, 100), (5, 100)];
        pairs.extend((6..=24).map(|k| (k, 10)));
        c.generator.counts_per_k = counts(pairs);
        c.portfolio.runs = 5;
        c.portfolio.component_runs = 5;
        c.portfolio.algorithms = [
            Algorithm::OnePlusOneEs,
            Algorithm::DifferentialEvolution,
            Algorithm::ParticleSwarm,
            Algorithm::NelderMead,
            Algorithm::QuasiNewton,
        ]
        .iter()
        .enumerate()
        .map(|(i, a)| OptimizerSpec::new(i as u32 + 1, *a))
        .collect();
        c.selection.sizes = vec![24, 120];
        c.selection.repetitions = vec![5, 5];
        c.selection.component_instances = vec![1, 5];
        c
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let c: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn generator_spec(&self) -> Result<GeneratorSpec> {
        let counts_per_k = self
            .generator
            .counts_per_k
            .iter()
            .map(|(k, v)| {
                k.parse::<usize>()
                    .map(|k| (k, *v))
                    .map_err(|_| Error::Config(format!("counts_per_k key {k:?} is not an integer")))
            })
            .collect::<Result<_>>()?;
        Ok(GeneratorSpec {
            dim: self.dim,
            counts_per_k,
            instance_pool_size: self.generator.instance_pool_size,
            master_seed: self.master_seed,
        })
    }

    pub fn selection_plan(&self) -> SelectionPlan {
        SelectionPlan {
            sizes: self.selection.sizes.clone(),
            repetitions: self.selection.repetitions.clone(),
            strategies: self.selection.strategies.clone(),
            component_instances: self.selection.component_instances.clone(),
        }
    }

    pub fn aocc(&self) -> AoccConfig {
        AoccConfig {
            lower: self.portfolio.aocc_lower,
            upper: self.portfolio.aocc_upper,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.dim == 0 || self.dim > crate::sampling::MAX_SOBOL_DIM {
            return bad("dim must lie in 1..=16");
        }
        self.generator_spec()?
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.generator.component_instances < MIN_COMPONENT_INSTANCES
            || self.generator.component_instances > 999
        {
            return bad("generator.component_instances must lie in 5..=999");
        }
        if self.ela.repetitions == 0 || self.ela.sample_factor < ela::MIN_POINTS_PER_DIM {
            return bad("ela needs at least one repetition and sample_factor >= 50");
        }
        if !(self.ela.prune_threshold > 0.0 && self.ela.prune_threshold <= 1.0) {
            return bad("ela.prune_threshold must lie in (0, 1]");
        }
        if self.portfolio.runs == 0 || self.portfolio.component_runs == 0 || self.portfolio.budget_factor == 0 {
            return bad("portfolio runs and budget_factor must be positive");
        }
        self.aocc().validate()?;
        portfolio::validate_portfolio(&self.portfolio.algorithms)?;
        if self.selection.sizes.len() != self.selection.repetitions.len() {
            return bad("selection.sizes and selection.repetitions differ in length");
        }
        if self.selection.sizes.iter().any(|&s| s < 2) {
            return bad("selection sizes must be at least 2");
        }
        if self
            .selection
            .component_instances
            .iter()
            .any(|&i| i == 0 || i > self.generator.component_instances.min(MIN_COMPONENT_INSTANCES))
        {
            return bad("selection.component_instances must lie in 1..=5");
        }
        self.selector.validate()?;
        Ok(())
    }

    /// Hash of everything that influences results (the output directory is
    /// excluded).
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        let json = serde_json::to_vec(&c).expect("config serializes");
        sha256_hex(&json)
    }
}
