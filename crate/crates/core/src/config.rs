//! Engine configuration, loadable from TOML or JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::insight::ExtractionConfig;
use crate::retrieval::MergeConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReasonerConfig {
    /// Self-consistency sample count.
    pub samples: usize,
    /// History turns quoted in the prompt.
    pub history_window: usize,
    /// Default structural step for queries.
    pub step: usize,
    /// Structural candidates kept before retrieval.
    pub candidate_cap: usize,
    /// Insights placed in the first story layer.
    pub seed_count: usize,
}

impl Default for ReasonerConfig {
    fn default() -> Self {
        ReasonerConfig {
            samples: 3,
            history_window: 5,
            step: 1,
            candidate_cap: 500,
            seed_count: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingSpec {
    /// Registered provider name.
    pub provider: String,
    pub endpoint: Option<String>,
    /// Environment variable holding the API key.
    pub api_key_env: Option<String>,
    pub dimension: usize,
    pub timeout_secs: u64,
}

impl Default for EmbeddingSpec {
    fn default() -> Self {
        EmbeddingSpec {
            provider: "stub".into(),
            endpoint: None,
            api_key_env: Some("IW_EMBEDDING_API_KEY".into()),
            dimension: 256,
            timeout_secs: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LmSpec {
    pub provider: String,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub api_key_env: Option<String>,
    pub temperature: f64,
    pub timeout_secs: u64,
}

impl Default for LmSpec {
    fn default() -> Self {
        LmSpec {
            provider: "stub".into(),
            endpoint: None,
            model: None,
            api_key_env: Some("IW_LM_API_KEY".into()),
            temperature: 0.7,
            timeout_secs: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProvidersConfig {
    pub embedding: EmbeddingSpec,
    pub lm: LmSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceSettings {
    pub bind: String,
    /// How long an upload waits for extraction before answering with a
    /// pending status.
    pub build_budget_ms: u64,
}

impl Default for ServiceSettings {
    fn default() -> Self {
        ServiceSettings {
            bind: "127.0.0.1:8080".into(),
            build_budget_ms: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub extraction: ExtractionConfig,
    pub merge: MergeConfig,
    pub reasoner: ReasonerConfig,
    pub providers: ProvidersConfig,
    /// Use the deterministic stub providers regardless of `providers`.
    pub offline: bool,
    pub persistence_dir: Option<PathBuf>,
    pub service: ServiceSettings,
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        self.extraction.validate()?;
        self.merge.validate()?;
        let r = &self.reasoner;
        if r.samples == 0 || r.step == 0 || r.candidate_cap == 0 {
            return Err(Error::Config("samples, step and candidate_cap must be positive".into()));
        }
        if self.providers.embedding.dimension == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        Ok(())
    }

    /// Parses TOML, or JSON when the text starts with `{`.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: EngineConfig = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}
