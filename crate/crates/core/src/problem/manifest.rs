use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{GeneratorSpec, ProblemInstance, SeedLineage, REGISTRY_SIZE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemRecord {
    pub problem_id: u64,
    #[serde(rename = "d")]
    pub dim: usize,
    /// `(component_id, instance_id)` pairs.
    pub active: Vec<(u32, u32)>,
    pub weights: Vec<f64>,
    pub optimum: Vec<f64>,
    pub lineage: SeedLineage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteManifest {
    pub format: String,
    #[serde(rename = "d")]
    pub dim: usize,
    pub master_seed: u64,
    pub instance_pool_size: u32,
    pub registry_size: usize,
    pub counts_per_k: BTreeMap<usize, usize>,
    pub problems: Vec<ProblemRecord>,
}

impl SuiteManifest {
    pub const FORMAT: &'static str = "aaslab-suite/1";

    pub fn new(spec: &GeneratorSpec, problems: &[ProblemInstance]) -> Self {
        Self {
            format: Self::FORMAT.into(),
            dim: spec.dim,
            master_seed: spec.master_seed,
            instance_pool_size: spec.instance_pool_size,
            registry_size: REGISTRY_SIZE,
            counts_per_k: spec.counts_per_k.clone(),
            problems: problems.iter().map(ProblemInstance::to_record).collect(),
        }
    }

    /// SHA-256 of the canonical JSON encoding, hex encoded.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("manifest serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// `"fid.iid.d"` -> scale factor.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScaleFactorManifest(pub BTreeMap<String, f64>);
