//! Experiment configuration (JSON), sweep expansion and config hashing.

use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::analysts::{random_linear_b, random_linear_progressive, Analyst, AnalystSpec, Space};
use crate::data::Distribution;
use crate::error::{Error, Result};
use crate::grid::Norm;
use crate::mechanisms::MechanismKind;
use crate::seeds::{derive_seed, Stream};

pub const CONFIG_VERSION: u32 = 1;

/// Analysts drawn at random per seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum AnalystGenerator {
    /// `‖A‖ = lambda`, `‖B‖ = l`, threshold queries.
    RandomLinear {
        d: usize,
        d_q: usize,
        lambda: f64,
        l: f64,
        space: Space,
        #[serde(default)]
        norm: Norm,
    },
    /// Diagonal type B analyst with contraction `lambda` and radius `radius`.
    RandomLinearB {
        d: usize,
        lambda: f64,
        radius: f64,
        space: Space,
        #[serde(default)]
        norm: Norm,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AnalystSource {
    Generated(AnalystGenerator),
    Fixed(AnalystSpec),
}

fn default_version() -> u32 {
    CONFIG_VERSION
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_accuracy_eps() -> f64 {
    0.05
}

fn default_multiplier() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "default_version")]
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub distribution: Distribution,
    pub n: usize,
    pub t: usize,
    pub analyst: AnalystSource,
    pub mechanism: MechanismKind,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Dotted field path → values; the sweep is the cross product.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub sweep: BTreeMap<String, Vec<Value>>,
    /// Monte-Carlo sample count for true means without a closed form.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_budget: Option<usize>,
    /// `ε` at which the sample-accuracy rate is reported.
    #[serde(default = "default_accuracy_eps")]
    pub accuracy_eps: f64,
    /// Multiplier on the theoretical error envelope in sweep output.
    #[serde(default = "default_multiplier")]
    pub envelope_multiplier: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

/// One point of a sweep: the values assigned and the resulting config.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub assignments: Vec<(String, Value)>,
    pub config: ExperimentConfig,
}

impl SweepPoint {
    pub fn label(&self) -> String {
        self.assignments.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
    }
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Config(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.version != CONFIG_VERSION {
            return bad(format!("unsupported config version {}", self.version));
        }
        if self.n == 0 {
            return bad("n must be >= 1".into());
        }
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        if !(self.accuracy_eps > 0.0) || !(self.envelope_multiplier > 0.0) {
            return bad("accuracy_eps and envelope_multiplier must be > 0".into());
        }
        self.distribution.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.mechanism.validate().map_err(|e| Error::Config(e.to_string()))?;
        if let Some(ts) = self.sweep.get("t") {
            let ts: Vec<u64> = ts.iter().map(|v| v.as_u64().unwrap_or(0)).collect();
            if ts.windows(2).any(|w| w[0] > w[1]) {
                return bad("sweep axis t must be sorted ascending".into());
            }
        }
        for (k, vals) in &self.sweep {
            if vals.is_empty() {
                return bad(format!("sweep axis {k} is empty"));
            }
        }
        Ok(())
    }

    /// Stable hash of the canonical JSON form (first 16 hex digits of SHA-256).
    pub fn hash(&self) -> String {
        // serde_json::Value objects are ordered maps, so this is canonical
        let v = serde_json::to_value(self).expect("config serializes");
        let digest = Sha256::digest(v.to_string().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Number of points in the sweep cross product (1 without a sweep).
    pub fn sweep_size(&self) -> usize {
        self.sweep.values().map(Vec::len).product()
    }

    /// Expands the sweep axes in lexicographic order of axis names, the last
    /// axis varying fastest.
    pub fn expand(&self) -> Result<Vec<SweepPoint>> {
        let mut base = self.clone();
        base.sweep.clear();
        let base_value = serde_json::to_value(&base)?;
        let axes: Vec<(&String, &Vec<Value>)> = self.sweep.iter().collect();
        let total = self.sweep_size();
        let mut out = Vec::with_capacity(total);
        for idx in 0..total {
            let mut rem = idx;
            let mut assignments = Vec::with_capacity(axes.len());
            for (name, vals) in axes.iter().rev() {
                assignments.push(((*name).clone(), vals[rem % vals.len()].clone()));
                rem /= vals.len();
            }
            assignments.reverse();
            let mut v = base_value.clone();
            for (path, val) in &assignments {
                set_path(&mut v, path, val.clone())?;
            }
            let config: ExperimentConfig =
                serde_json::from_value(v).map_err(|e| Error::Config(format!("sweep point {idx}: {e}")))?;
            config.validate()?;
            out.push(SweepPoint { assignments, config });
        }
        Ok(out)
    }

    /// The analyst for one seed; generated analysts draw from the seed's
    /// instance stream.
    pub fn analyst_for(&self, seed: u64) -> Result<Analyst> {
        match &self.analyst {
            AnalystSource::Fixed(spec) => Analyst::new(spec.clone()),
            AnalystSource::Generated(g) => {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, Stream::Instance));
                let width = self.distribution.width();
                match g {
                    AnalystGenerator::RandomLinear { d, d_q, lambda, l, space, norm } => {
                        random_linear_progressive(*d, *d_q, *lambda, *l, width, *space, *norm, &mut rng)
                    }
                    AnalystGenerator::RandomLinearB { d, lambda, radius, space, norm } => {
                        random_linear_b(*d, *lambda, *radius, width, *space, *norm, &mut rng)
                    }
                }
            }
        }
    }
}

fn set_path(root: &mut Value, path: &str, val: Value) -> Result<()> {
    let mut cur = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("sweep path {path}: {part} is not inside an object")))?;
        if i + 1 == parts.len() {
            if !obj.contains_key(*part) {
                return Err(Error::Config(format!("sweep path {path}: no field {part}")));
            }
            obj.insert((*part).to_string(), val);
            return Ok(());
        }
        cur = obj.get_mut(*part).ok_or_else(|| Error::Config(format!("sweep path {path}: no field {part}")))?;
    }
    Ok(())
}
