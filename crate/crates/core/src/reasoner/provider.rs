use std::time::Duration;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::retrieval::ProviderMode;

pub trait LmProvider: Send + Sync {
    fn name(&self) -> &str;
    fn mode(&self) -> ProviderMode;
    /// Sampling temperature.
    fn diversity(&self) -> f64;
    /// Raw completion for sample number `sample` of `prompt`.
    fn complete(&self, prompt: &str, sample: usize) -> Result<String>;
}

/// Offline model. Always chooses candidate 1 and, depending on a hash of the
/// prompt and sample number, one more candidate.
#[derive(Debug, Clone, Default)]
pub struct StubLm;

fn candidate_count(prompt: &str) -> usize {
    let Some(start) = prompt.rfind("\nCANDIDATES:\n") else {
        return 0;
    };
    let section = &prompt[start + 13..];
    let section = section.split("\nOUTPUT FORMAT:").next().unwrap_or("");
    section
        .lines()
        .filter(|l| {
            let digits = l.bytes().take_while(u8::is_ascii_digit).count();
            digits > 0 && l[digits..].starts_with(". <Header=")
        })
        .count()
}

impl LmProvider for StubLm {
    fn name(&self) -> &str {
        "stub"
    }

    fn mode(&self) -> ProviderMode {
        ProviderMode::DeterministicStub
    }

    fn diversity(&self) -> f64 {
        0.0
    }

    fn complete(&self, prompt: &str, sample: usize) -> Result<String> {
        let n = candidate_count(prompt);
        if n == 0 {
            return Ok("No candidates were listed, so nothing can be chosen.".into());
        }
        let mut hasher = Sha256::new();
        hasher.update(prompt.as_bytes());
        hasher.update(sample.to_le_bytes());
        let digest = hasher.finalize();
        let h = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));
        let extra = (h % n as u64) as usize + 1;
        let mut out = String::from(
            "Reasoning: candidate 1 is ranked highest for the query and the focused insight.\n",
        );
        out.push_str("ANSWER: 1 - it is the closest match to the question in the context of the focused insight\n");
        if extra != 1 {
            out.push_str(&format!(
                "ANSWER: {extra} - it extends the focused insight with a neighbouring view of the data\n"
            ));
        }
        Ok(out)
    }
}

/// Replays fixed outputs: sample `i` receives `outputs[i % len]`.
#[derive(Debug, Clone)]
pub struct ScriptedLm {
    outputs: Vec<String>,
}

impl ScriptedLm {
    pub fn new<I, S>(outputs: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ScriptedLm {
            outputs: outputs.into_iter().map(Into::into).collect(),
        }
    }
}

impl LmProvider for ScriptedLm {
    fn name(&self) -> &str {
        "scripted"
    }

    fn mode(&self) -> ProviderMode {
        ProviderMode::DeterministicStub
    }

    fn diversity(&self) -> f64 {
        0.0
    }

    fn complete(&self, _prompt: &str, sample: usize) -> Result<String> {
        if self.outputs.is_empty() {
            return Err(Error::Provider {
                provider: "scripted".into(),
                message: "script is empty".into(),
                retryable: false,
            });
        }
        Ok(self.outputs[sample % self.outputs.len()].clone())
    }
}

/// Chat-completion style remote model.
pub struct HttpLm {
    endpoint: String,
    model: String,
    api_key: Option<String>,
    temperature: f64,
    client: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: String,
}

impl HttpLm {
    pub fn new(
        endpoint: impl Into<String>,
        model: impl Into<String>,
        api_key: Option<String>,
        temperature: f64,
        timeout: Duration,
    ) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| Error::Provider {
                provider: "http".into(),
                message: e.to_string(),
                retryable: false,
            })?;
        Ok(HttpLm {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key,
            temperature,
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

impl LmProvider for HttpLm {
    fn name(&self) -> &str {
        "http"
    }

    fn mode(&self) -> ProviderMode {
        ProviderMode::Remote
    }

    fn diversity(&self) -> f64 {
        self.temperature
    }

    fn complete(&self, prompt: &str, sample: usize) -> Result<String> {
        let body = serde_json::json!({
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.temperature,
            "seed": sample,
        });
        let mut req = self.client.post(&self.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| self.fail(e.to_string(), true))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(self.fail(format!("status {status}"), status.is_server_error()));
        }
        let parsed: ChatResponse = resp.json().map_err(|e| self.fail(e.to_string(), false))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| self.fail("response has no choices", false))
    }
}
