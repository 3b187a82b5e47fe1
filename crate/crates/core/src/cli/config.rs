use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::CliError;
use crate::air::DEFAULT_COLS;
use crate::commit::HashKind;
use crate::fxp::FxpSpec;
use crate::nn::{ratings_to_examples, read_ratings_csv, synthetic_ratings, Example, ModelGraph, Rating, TrainConfig};

/// One declarative description of a training run. Relative paths resolve
/// against the directory holding the config file.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub fixed_point: FixedPointConfig,
    pub train: TrainConfig,
    pub data: DataConfig,
    pub proof: ProofConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(skip)]
    pub base: PathBuf,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub users: usize,
    pub items: usize,
    pub dim: usize,
    pub hidden: usize,
    #[serde(default)]
    pub frozen: Vec<bool>,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedPointConfig {
    pub sf_log2: u32,
    pub range_bits: u32,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        Self { sf_log2: 13, range_bits: 20 }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// CSV with header `user_id,item_id,rating`.
    pub ratings: Option<PathBuf>,
    pub synthetic: Option<SyntheticConfig>,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub ratings: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProofConfig {
    #[serde(default)]
    pub hash: HashKind,
    #[serde(default = "default_cols")]
    pub columns: usize,
    /// Hex-encoded secret from which every salt is expanded.
    pub salt_seed: String,
}

fn default_cols() -> usize {
    DEFAULT_COLS
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("zkaudit-out") }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        cfg.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Validation(m));
        match (&self.data.ratings, &self.data.synthetic) {
            (Some(_), None) | (None, Some(_)) => {}
            _ => return bad("[data] needs exactly one of `ratings` or `synthetic`".into()),
        }
        let spec = self.spec()?;
        self.model()?;
        self.train.eta_raw(&spec).map_err(|e| CliError::Validation(e.to_string()))?;
        if self.train.epochs == 0 {
            return bad("train.epochs must be at least 1".into());
        }
        if self.proof.columns < 4 {
            return bad("proof.columns must be at least 4".into());
        }
        self.salt_seed()?;
        Ok(())
    }

    pub fn spec(&self) -> Result<FxpSpec, CliError> {
        FxpSpec::pow2(self.fixed_point.sf_log2, self.fixed_point.range_bits)
            .map_err(|e| CliError::Validation(e.to_string()))
    }

    pub fn model(&self) -> Result<ModelGraph, CliError> {
        let m = &self.model;
        if m.users == 0 || m.items == 0 || m.dim == 0 || m.hidden == 0 {
            return Err(CliError::Validation("model sizes must be positive".into()));
        }
        let g = ModelGraph::recommender(m.users, m.items, m.dim, m.hidden);
        if m.frozen.is_empty() {
            return Ok(g);
        }
        g.with_frozen(m.frozen.clone()).map_err(|e| CliError::Validation(e.to_string()))
    }

    pub fn salt_seed(&self) -> Result<Vec<u8>, CliError> {
        let seed = hex::decode(&self.proof.salt_seed)
            .map_err(|e| CliError::Validation(format!("proof.salt_seed is not hex: {e}")))?;
        if seed.len() < 16 {
            return Err(CliError::Validation("proof.salt_seed must be at least 16 bytes".into()));
        }
        Ok(seed)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.resolve(&self.output.dir)
    }

    pub fn ratings(&self) -> Result<Vec<Rating>, CliError> {
        let ratings = match (&self.data.ratings, &self.data.synthetic) {
            (Some(p), _) => {
                let p = self.resolve(p);
                if !p.exists() {
                    return Err(CliError::Io(format!("{}: no such file", p.display())));
                }
                read_ratings_csv(&p).map_err(|e| match e {
                    crate::nn::NnError::Io(m) => CliError::Io(m),
                    e => CliError::Malformed(e.to_string()),
                })?
            }
            (None, Some(s)) => synthetic_ratings(self.model.users, self.model.items, s.ratings, s.seed),
            (None, None) => unreachable!("validated"),
        };
        if let Some(r) = ratings.iter().find(|r| r.user_id as usize >= self.model.users || r.item_id as usize >= self.model.items) {
            return Err(CliError::Validation(format!(
                "rating ({}, {}) outside the model's {} users and {} items",
                r.user_id, r.item_id, self.model.users, self.model.items
            )));
        }
        Ok(ratings)
    }

    /// Range overflows surface as the underlying error so they classify as
    /// capacity aborts.
    pub fn examples(&self, ratings: &[Rating]) -> anyhow::Result<Vec<Example>> {
        Ok(ratings_to_examples(ratings, &self.spec()?)?)
    }
}
