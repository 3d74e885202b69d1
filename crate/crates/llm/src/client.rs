use std::env;
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use crate::LlmError;

/// Environment variable holding the bearer token by default.
pub const DEFAULT_KEY_VAR: &str = "LAYOUT_CRITIC_API_KEY";

#[derive(Debug, Clone, PartialEq)]
pub struct EndpointConfig {
    /// Base URL; requests go to `{base_url}/chat/completions`.
    pub base_url: String,
    pub api_key: Option<String>,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout: Duration,
    pub retries: u32,
    /// Most requests in flight at once.
    pub concurrency: usize,
    /// Sampling seed forwarded to endpoints that honor one.
    pub seed: Option<u64>,
}

impl EndpointConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            api_key: None,
            model: model.into(),
            temperature: 0.9,
            max_tokens: 1024,
            timeout: Duration::from_secs(60),
            retries: 2,
            concurrency: 4,
            seed: None,
        }
    }

    /// Like [`EndpointConfig::new`] with the key read from `key_var`, if set.
    pub fn from_env(base_url: impl Into<String>, model: impl Into<String>, key_var: &str) -> Self {
        Self {
            api_key: env::var(key_var).ok().filter(|k| !k.is_empty()),
            ..Self::new(base_url, model)
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(LlmError::Config("temperature must be non-negative".into()));
        }
        if self.base_url.trim().is_empty() {
            return Err(LlmError::Config("base_url is empty".into()));
        }
        if self.concurrency == 0 {
            return Err(LlmError::Config("concurrency must be at least 1".into()));
        }
        Ok(())
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }
}

/// Outcome of one candidate request.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Message content, empty when every attempt failed.
    pub text: String,
    pub latency: Duration,
    pub error: Option<String>,
}

fn request_once(agent: &ureq::Agent, cfg: &EndpointConfig, prompt: &str) -> Result<String, String> {
    let mut body = json!({
        "model": cfg.model,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": cfg.temperature,
        "max_tokens": cfg.max_tokens,
    });
    if let Some(seed) = cfg.seed {
        body["seed"] = json!(seed);
    }
    let mut req = agent.post(cfg.endpoint()).header("Content-Type", "application/json");
    if let Some(key) = &cfg.api_key {
        req = req.header("Authorization", format!("Bearer {key}"));
    }
    let mut resp = req.send_json(&body).map_err(|e| e.to_string())?;
    let value: Value = resp.body_mut().read_json().map_err(|e| e.to_string())?;
    value["choices"][0]["message"]["content"]
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| "response has no choices[0].message.content".to_string())
}

fn request(agent: &ureq::Agent, cfg: &EndpointConfig, prompt: &str) -> Sample {
    let start = Instant::now();
    let mut last = String::new();
    for _ in 0..=cfg.retries {
        match request_once(agent, cfg, prompt) {
            Ok(text) => {
                return Sample {
                    text,
                    latency: start.elapsed(),
                    error: None,
                }
            }
            Err(e) => last = e,
        }
    }
    Sample {
        text: String::new(),
        latency: start.elapsed(),
        error: Some(last),
    }
}

/// Issues `n` independent requests, at most `cfg.concurrency` at a time.
/// Results keep request order. A request that fails after its retries gives
/// an empty sample; only a batch where every request fails is an error.
pub fn sample_with_latency(cfg: &EndpointConfig, prompt: &str, n: usize) -> Result<Vec<Sample>, LlmError> {
    cfg.validate()?;
    if n == 0 {
        return Err(LlmError::Config("n must be at least 1".into()));
    }
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(cfg.timeout))
        .build()
        .into();
    let mut samples = Vec::with_capacity(n);
    for start in (0..n).step_by(cfg.concurrency) {
        let end = (start + cfg.concurrency).min(n);
        let batch: Vec<Sample> = std::thread::scope(|s| {
            let handles: Vec<_> = (start..end)
                .map(|_| s.spawn(|| request(&agent, cfg, prompt)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("request threads do not panic"))
                .collect()
        });
        samples.extend(batch);
    }
    if samples.iter().all(|s| s.error.is_some()) {
        let last = samples.last().and_then(|s| s.error.clone()).unwrap_or_default();
        return Err(LlmError::Unreachable(last));
    }
    Ok(samples)
}

/// Raw texts of [`sample_with_latency`].
pub fn sample_candidates(cfg: &EndpointConfig, prompt: &str, n: usize) -> Result<Vec<String>, LlmError> {
    Ok(sample_with_latency(cfg, prompt, n)?
        .into_iter()
        .map(|s| s.text)
        .collect())
}
