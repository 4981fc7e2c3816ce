use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::encoder::{Activation, TrainConfig};
use crate::error::{Error, Result};
use crate::schema::SchemaConfig;

/// Everything one run needs. Relative paths are resolved against the
/// directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: Paths,
    #[serde(default)]
    pub backend: Backend,
    #[serde(default)]
    pub embeddings: EmbeddingConfig,
    #[serde(default)]
    pub encoder: EncoderConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub clustering: ClusteringConfig,
    #[serde(default)]
    pub schema: SchemaConfig,
    #[serde(default)]
    pub scope: Scope,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub corpus: PathBuf,
    /// Word-vector text file; without one every word gets a hashed vector.
    #[serde(default)]
    pub embeddings: Option<PathBuf>,
    #[serde(default)]
    pub lexicon: Option<LexiconPaths>,
    /// Pre-computed candidates; `induce` and `eval` extract inline otherwise.
    #[serde(default)]
    pub candidates: Option<PathBuf>,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LexiconPaths {
    pub verbs: PathBuf,
    pub nouns: PathBuf,
    pub gazetteer: PathBuf,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Backend {
    #[default]
    Rule,
    External {
        url: String,
        #[serde(default = "default_timeout")]
        timeout_secs: f64,
        /// Use the rule backend for sentences the service fails on.
        #[serde(default)]
        fallback: bool,
    },
}

fn default_timeout() -> f64 {
    30.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingConfig {
    /// Vector size when no embedding file is given.
    pub dimension: usize,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig { dimension: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    pub heads: usize,
    /// Defaults to the embedding dimension.
    pub output_dim: Option<usize>,
    pub leaky_slope: f64,
    pub activation: Activation,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            heads: 4,
            output_dim: None,
            leaky_slope: 0.2,
            activation: Activation::Elu,
        }
    }
}

/// A fixed cluster count or `"sweep"` to pick one by silhouette.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KChoice {
    Fixed(usize),
    Sweep(SweepTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepTag {
    Sweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringConfig {
    pub k_trig: KChoice,
    pub k_arg: KChoice,
    pub sweep_min: usize,
    pub sweep_max: usize,
    pub iterations: usize,
    pub batch: usize,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        ClusteringConfig {
            k_trig: KChoice::Fixed(38),
            k_arg: KChoice::Fixed(24),
            sweep_min: 2,
            sweep_max: 50,
            iterations: 10,
            batch: 256,
        }
    }
}

impl ClusteringConfig {
    pub fn validate_sweep_range(&self) -> Result<()> {
        if self.sweep_min < 2 || self.sweep_min > self.sweep_max {
            return Err(Error::Config(format!(
                "sweep range {}..={} must satisfy 2 <= min <= max",
                self.sweep_min, self.sweep_max
            )));
        }
        Ok(())
    }
}

/// Which events share a graph (and trigger–trigger edges).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    #[default]
    Sentence,
    Document,
}

impl PipelineConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config: PipelineConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let Some(base) = path.parent() {
            config.paths.resolve(base);
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |msg: String| Err(Error::Config(msg));
        if let Backend::External { url, timeout_secs, .. } = &self.backend {
            if url.trim().is_empty() {
                return cfg("external backend needs a url".into());
            }
            if !(*timeout_secs > 0.0 && timeout_secs.is_finite()) {
                return cfg(format!("timeout {timeout_secs} must be positive"));
            }
        }
        if self.embeddings.dimension == 0 {
            return cfg("embedding dimension must be positive".into());
        }
        let e = &self.encoder;
        if e.heads == 0 || e.output_dim == Some(0) {
            return cfg("encoder heads and output_dim must be positive".into());
        }
        if !(e.leaky_slope > 0.0 && e.leaky_slope < 1.0) {
            return cfg(format!("leaky_slope {} outside (0, 1)", e.leaky_slope));
        }
        self.train.validate()?;
        self.schema.validate()?;
        let c = &self.clustering;
        if c.iterations == 0 || c.batch == 0 {
            return cfg("clustering iterations and batch must be positive".into());
        }
        for k in [c.k_trig, c.k_arg] {
            match k {
                KChoice::Fixed(0) => return cfg("cluster counts must be positive".into()),
                KChoice::Sweep(_) => c.validate_sweep_range()?,
                KChoice::Fixed(_) => {}
            }
        }
        Ok(())
    }
}

impl Paths {
    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.corpus);
        fix(&mut self.output_dir);
        if let Some(p) = self.embeddings.as_mut() {
            fix(p);
        }
        if let Some(p) = self.candidates.as_mut() {
            fix(p);
        }
        if let Some(l) = self.lexicon.as_mut() {
            fix(&mut l.verbs);
            fix(&mut l.nouns);
            fix(&mut l.gazetteer);
        }
    }
}
