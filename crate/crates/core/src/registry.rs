//! Name-keyed factories for embedding and language-model providers.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use crate::config::{EmbeddingSpec, EngineConfig, LmSpec};
use crate::error::{Error, Result};
use crate::reasoner::{HttpLm, LmProvider, StubLm};
use crate::retrieval::{EmbeddingProvider, HttpEmbedder, StubEmbedder};

pub type EmbeddingFactory = Box<dyn Fn(&EmbeddingSpec) -> Result<Arc<dyn EmbeddingProvider>> + Send + Sync>;
pub type LmFactory = Box<dyn Fn(&LmSpec) -> Result<Arc<dyn LmProvider>> + Send + Sync>;

/// Providers resolved for one engine.
#[derive(Clone)]
pub struct Providers {
    pub embedding: Arc<dyn EmbeddingProvider>,
    pub lm: Arc<dyn LmProvider>,
}

impl Providers {
    pub fn stub(dimension: usize) -> Self {
        Providers {
            embedding: Arc::new(StubEmbedder::new(dimension)),
            lm: Arc::new(StubLm),
        }
    }
}

pub struct ProviderRegistry {
    embedding: BTreeMap<String, EmbeddingFactory>,
    lm: BTreeMap<String, LmFactory>,
}

fn key_from_env(var: &Option<String>) -> Option<String> {
    var.as_deref().and_then(|v| std::env::var(v).ok()).filter(|k| !k.is_empty())
}

fn endpoint(spec_endpoint: &Option<String>, kind: &str) -> Result<String> {
    spec_endpoint
        .clone()
        .ok_or_else(|| Error::Config(format!("{kind} provider `http` needs an endpoint")))
}

impl Default for ProviderRegistry {
    fn default() -> Self {
        let mut r = ProviderRegistry::empty();
        r.register_embedding("stub", Box::new(|s| Ok(Arc::new(StubEmbedder::new(s.dimension)))));
        r.register_embedding(
            "http",
            Box::new(|s| {
                Ok(Arc::new(HttpEmbedder::new(
                    endpoint(&s.endpoint, "embedding")?,
                    key_from_env(&s.api_key_env),
                    s.dimension,
                    Duration::from_secs(s.timeout_secs),
                )?))
            }),
        );
        r.register_lm("stub", Box::new(|_| Ok(Arc::new(StubLm))));
        r.register_lm(
            "http",
            Box::new(|s| {
                Ok(Arc::new(HttpLm::new(
                    endpoint(&s.endpoint, "language model")?,
                    s.model.clone().unwrap_or_default(),
                    key_from_env(&s.api_key_env),
                    s.temperature,
                    Duration::from_secs(s.timeout_secs),
                )?))
            }),
        );
        r
    }
}

impl ProviderRegistry {
    pub fn empty() -> Self {
        ProviderRegistry {
            embedding: BTreeMap::new(),
            lm: BTreeMap::new(),
        }
    }

    pub fn register_embedding(&mut self, name: impl Into<String>, factory: EmbeddingFactory) {
        self.embedding.insert(name.into(), factory);
    }

    pub fn register_lm(&mut self, name: impl Into<String>, factory: LmFactory) {
        self.lm.insert(name.into(), factory);
    }

    pub fn embedding_names(&self) -> Vec<&str> {
        self.embedding.keys().map(String::as_str).collect()
    }

    pub fn lm_names(&self) -> Vec<&str> {
        self.lm.keys().map(String::as_str).collect()
    }

    /// Resolves the configured providers; offline mode always yields stubs.
    pub fn resolve(&self, cfg: &EngineConfig) -> Result<Providers> {
        if cfg.offline {
            return Ok(Providers::stub(cfg.providers.embedding.dimension));
        }
        let e = &cfg.providers.embedding;
        let l = &cfg.providers.lm;
        let ef = self
            .embedding
            .get(&e.provider)
            .ok_or_else(|| Error::Config(format!("unknown embedding provider `{}`", e.provider)))?;
        let lf = self
            .lm
            .get(&l.provider)
            .ok_or_else(|| Error::Config(format!("unknown language model provider `{}`", l.provider)))?;
        Ok(Providers {
            embedding: ef(e)?,
            lm: lf(l)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::retrieval::ProviderMode;

    #[test]
    fn offline_forces_stub() {
        let mut cfg = EngineConfig::default();
        cfg.providers.embedding.provider = "http".into();
        cfg.offline = true;
        let p = ProviderRegistry::default().resolve(&cfg).unwrap();
        assert_eq!(p.embedding.mode(), ProviderMode::DeterministicStub);
        assert_eq!(p.lm.mode(), ProviderMode::DeterministicStub);
    }

    #[test]
    fn unknown_and_incomplete() {
        let mut cfg = EngineConfig::default();
        cfg.providers.lm.provider = "nope".into();
        assert!(ProviderRegistry::default().resolve(&cfg).is_err());
        cfg.providers.lm.provider = "http".into();
        assert!(ProviderRegistry::default().resolve(&cfg).is_err());
    }

    #[test]
    fn names() {
        let r = ProviderRegistry::default();
        assert_eq!(r.embedding_names(), ["http", "stub"]);
        assert_eq!(r.lm_names(), ["http", "stub"]);
    }
}
