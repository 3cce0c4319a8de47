//! HTTP client for a text-completion endpoint that accepts
//! `{"model", "prompt", "max_tokens", "temperature", "stop"}` and answers
//! with `{"choices": [{"text": ...}]}`.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use crate::cache::LiveCompletion;

pub const API_KEY_ENV: &str = "HOI_API_KEY";
pub const ENDPOINT_ENV: &str = "HOI_COMPLETION_URL";
pub const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1/completions";

#[derive(Debug, Clone, PartialEq)]
pub struct LiveConfig {
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    pub max_tokens: u32,
    pub temperature: f64,
    pub stop: Vec<String>,
    /// Minimum time between two requests.
    pub min_interval: Duration,
    pub timeout: Duration,
}

impl LiveConfig {
    /// Endpoint and key from the environment, greedy decoding, stopping at
    /// a blank line.
    pub fn from_env(model: &str) -> Self {
        LiveConfig {
            endpoint: std::env::var(ENDPOINT_ENV).unwrap_or_else(|_| DEFAULT_ENDPOINT.into()),
            model: model.into(),
            api_key: std::env::var(API_KEY_ENV).ok(),
            max_tokens: 64,
            temperature: 0.0,
            stop: vec!["\n\n".into()],
            min_interval: Duration::from_millis(500),
            timeout: Duration::from_secs(60),
        }
    }
}

pub struct LiveClient {
    config: LiveConfig,
    agent: ureq::Agent,
    last_call: Mutex<Option<Instant>>,
}

impl LiveClient {
    pub fn new(config: LiveConfig) -> Self {
        let agent = ureq::Agent::config_builder().timeout_global(Some(config.timeout)).build().into();
        LiveClient { config, agent, last_call: Mutex::new(None) }
    }

    fn wait_turn(&self) {
        let mut last = self.last_call.lock().expect("rate limiter");
        if let Some(t) = *last {
            let elapsed = t.elapsed();
            if elapsed < self.config.min_interval {
                std::thread::sleep(self.config.min_interval - elapsed);
            }
        }
        *last = Some(Instant::now());
    }
}

impl LiveCompletion for LiveClient {
    fn complete(&self, prompt: &str) -> Result<String, String> {
        self.wait_turn();
        let c = &self.config;
        let body = json!({
            "model": c.model,
            "prompt": prompt,
            "max_tokens": c.max_tokens,
            "temperature": c.temperature,
            "stop": c.stop,
        });
        let mut req = self.agent.post(&c.endpoint);
        if let Some(key) = &c.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(&body).map_err(|e| format!("request to {} failed: {e}", c.endpoint))?;
        let v: Value = resp.body_mut().read_json().map_err(|e| format!("unreadable response: {e}"))?;
        v.pointer("/choices/0/text")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| format!("response lacks choices[0].text: {v}"))
    }
}
