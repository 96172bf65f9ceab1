use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProviderMode {
    Remote,
    DeterministicStub,
}

pub trait EmbeddingProvider: Send + Sync {
    fn name(&self) -> &str;
    fn dimension(&self) -> usize;
    fn mode(&self) -> ProviderMode;
    /// Raw vectors, one per text, each of length [`Self::dimension`].
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>>;
}

/// Embeds one non-empty text and normalizes the result to unit length.
pub fn embed(provider: &dyn EmbeddingProvider, text: &str) -> Result<Vec<f64>> {
    if text.trim().is_empty() {
        return Err(Error::Provider {
            provider: provider.name().to_owned(),
            message: "cannot embed empty text".into(),
            retryable: false,
        });
    }
    let mut v = provider
        .embed_batch(&[text])?
        .pop()
        .ok_or_else(|| Error::Provider {
            provider: provider.name().to_owned(),
            message: "no vector returned".into(),
            retryable: false,
        })?;
    normalize(&mut v);
    Ok(v)
}

/// Scales to unit length; a zero vector becomes the first basis vector.
pub fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    } else if let Some(first) = v.first_mut() {
        *first = 1.0;
    }
}

/// Offline embedder: signed hashing of character trigrams into a fixed
/// number of buckets.
#[derive(Debug, Clone)]
pub struct StubEmbedder {
    dimension: usize,
}

impl StubEmbedder {
    pub const DEFAULT_DIMENSION: usize = 256;

    pub fn new(dimension: usize) -> Self {
        StubEmbedder {
            dimension: dimension.max(1),
        }
    }

    fn vector(&self, text: &str) -> Vec<f64> {
        let mut chars: Vec<char> = Vec::with_capacity(text.len() + 2);
        chars.push('\u{2}');
        chars.extend(text.to_lowercase().chars());
        chars.push('\u{3}');
        let mut v = vec![0.0; self.dimension];
        let mut buf = [0u8; 12];
        for w in chars.windows(3) {
            let mut len = 0;
            for c in w {
                len += c.encode_utf8(&mut buf[len..]).len();
            }
            let h = fnv1a(&buf[..len]);
            let bucket = (h % self.dimension as u64) as usize;
            v[bucket] += if h >> 63 == 0 { 1.0 } else { -1.0 };
        }
        normalize(&mut v);
        v
    }
}

impl Default for StubEmbedder {
    fn default() -> Self {
        Self::new(Self::DEFAULT_DIMENSION)
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

impl EmbeddingProvider for StubEmbedder {
    fn name(&self) -> &str {
        "stub"
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn mode(&self) -> ProviderMode {
        ProviderMode::DeterministicStub
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>> {
        Ok(texts.iter().map(|t| self.vector(t)).collect())
    }
}

/// Remote embedder speaking `POST {"texts": [...]}` → `{"vectors": [[...]]}`.
pub struct HttpEmbedder {
    endpoint: String,
    api_key: Option<String>,
    dimension: usize,
    client: reqwest::blocking::Client,
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

impl HttpEmbedder {
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>, dimension: usize, timeout: Duration) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| Error::Provider {
                provider: "http".into(),
                message: e.to_string(),
                retryable: false,
            })?;
        Ok(HttpEmbedder {
            endpoint: endpoint.into(),
            api_key,
            dimension,
            client,
        })
    }

    fn fail(&self, message: impl Into<String>, retryable: bool) -> Error {
        Error::Provider {
            provider: format!("http:{}", self.endpoint),
            message: message.into(),
            retryable,
        }
    }
}

impl EmbeddingProvider for HttpEmbedder {
    fn name(&self) -> &str {
        "http"
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn mode(&self) -> ProviderMode {
        ProviderMode::Remote
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>> {
        let mut req = self.client.post(&self.endpoint).json(&EmbedRequest { texts });
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| self.fail(e.to_string(), true))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(self.fail(format!("status {status}"), status.is_server_error()));
        }
        let body: EmbedResponse = resp.json().map_err(|e| self.fail(e.to_string(), false))?;
        if body.vectors.len() != texts.len() {
            return Err(self.fail(
                format!("{} vectors for {} texts", body.vectors.len(), texts.len()),
                false,
            ));
        }
        if let Some(v) = body.vectors.iter().find(|v| v.len() != self.dimension) {
            return Err(self.fail(
                format!("vector of length {}, expected {}", v.len(), self.dimension),
                false,
            ));
        }
        Ok(body.vectors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cos(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn stub_is_deterministic_and_unit() {
        let e = StubEmbedder::default();
        let a = embed(&e, "In JPN, the sales dominate").unwrap();
        let b = embed(&e, "In JPN, the sales dominate").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 256);
        let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-9);
    }

    #[test]
    fn near_strings_differ() {
        let e = StubEmbedder::default();
        let a = embed(&e, "abc").unwrap();
        let b = embed(&e, "abd").unwrap();
        assert!(cos(&a, &b) < 1.0);
    }

    #[test]
    fn empty_text_rejected() {
        assert!(embed(&StubEmbedder::default(), "  ").is_err());
    }

    #[test]
    fn http_transport_error_is_retryable() {
        let e = HttpEmbedder::new("http://127.0.0.1:9/embed", None, 4, Duration::from_millis(200)).unwrap();
        match embed(&e, "x") {
            Err(Error::Provider { retryable, provider, .. }) => {
                assert!(retryable);
                assert!(provider.starts_with("http"));
            }
            other => panic!("{other:?}"),
        }
    }
}
