//! HTTP model backends.
//!
//! Each role posts one JSON document to its endpoint:
//!
//! ```json
//! {"role": "narrator", "prompt": "...", "temperature": 0.3, "input": {...}}
//! ```
//!
//! and expects `{"text": "..."}` back, or `{"embedding": [...]}` for the
//! embedder. The extractor may answer with the extraction document itself
//! (`mentions`, `relations`, `coref`) or with `text` holding that document.
//! Transport failures and 5xx responses are retried with exponential
//! backoff; 4xx responses fail immediately.

use std::time::Duration;

use atlas_core::gateway::{
    render_conversation, BackendConfig, Captioner, DomainContext, Embedder, Enricher, Extractor, NarrationRequest, Narrator,
    PromptTemplate, RawExtraction,
};
use atlas_core::{ClipWindow, Embedding, GatewayError, Role};
use serde::Deserialize;
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
    pub timeout: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { attempts: 3, base_delay: Duration::from_millis(250), timeout: Duration::from_secs(30) }
    }
}

#[derive(Debug)]
pub struct RemoteBackend {
    role: Role,
    endpoint: String,
    credential: Option<String>,
    temperature: f64,
    policy: RetryPolicy,
    client: reqwest::blocking::Client,
}

impl RemoteBackend {
    /// Builds a backend from its config; the credential is read from the
    /// environment variable named by `credentials_ref`.
    pub fn new(cfg: &BackendConfig, policy: RetryPolicy) -> Result<Self, GatewayError> {
        cfg.validate()?;
        let endpoint = cfg.endpoint.clone().ok_or_else(|| GatewayError::Config(format!("{} has no endpoint", cfg.role)))?;
        let credential = match &cfg.credentials_ref {
            Some(var) => Some(std::env::var(var).map_err(|_| GatewayError::Config(format!("environment variable {var} is not set")))?),
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(policy.timeout)
            .build()
            .map_err(|e| GatewayError::Config(e.to_string()))?;
        Ok(RemoteBackend { role: cfg.role, endpoint, credential, temperature: cfg.temperature, policy, client })
    }

    pub fn role(&self) -> Role {
        self.role
    }

    fn call(&self, prompt: &str, input: Value) -> Result<Value, GatewayError> {
        let body = json!({ "role": self.role.as_str(), "prompt": prompt, "temperature": self.temperature, "input": input });
        let mut last = String::new();
        for attempt in 1..=self.policy.attempts {
            if attempt > 1 {
                std::thread::sleep(self.policy.base_delay * 2u32.pow(attempt - 2));
            }
            let mut req = self.client.post(&self.endpoint).json(&body);
            if let Some(c) = &self.credential {
                req = req.bearer_auth(c);
            }
            match req.send() {
                Ok(resp) if resp.status().is_success() => {
                    return resp.json::<Value>().map_err(|e| GatewayError::Malformed { role: self.role, message: e.to_string() });
                }
                Ok(resp) if resp.status().is_client_error() => {
                    let status = resp.status().as_u16();
                    let message = resp.text().unwrap_or_default();
                    return Err(GatewayError::Rejected { role: self.role, status, message });
                }
                Ok(resp) => last = format!("status {}", resp.status()),
                Err(e) => last = e.to_string(),
            }
            tracing::warn!(role = %self.role, attempt, error = %last, "backend call failed");
        }
        Err(GatewayError::Transport { role: self.role, attempts: self.policy.attempts, message: last })
    }

    fn text(&self, prompt: &str, input: Value) -> Result<String, GatewayError> {
        let v = self.call(prompt, input)?;
        match v.get("text").and_then(Value::as_str) {
            Some(t) => Ok(t.to_string()),
            None => Err(GatewayError::Malformed { role: self.role, message: "response has no `text` field".into() }),
        }
    }
}

impl Captioner for RemoteBackend {
    fn caption(&self, clip: &ClipWindow, source_uri: &str, prompt: &PromptTemplate) -> Result<String, GatewayError> {
        let input = json!({
            "video_id": clip.video_id,
            "clip_index": clip.index,
            "start_s": clip.start.as_secs_f64(),
            "length_s": clip.length.as_secs_f64(),
            "source_uri": source_uri,
        });
        self.text(&prompt.body, input)
    }
}

impl Embedder for RemoteBackend {
    fn embed(&self, text: &str) -> Result<Embedding, GatewayError> {
        #[derive(Deserialize)]
        struct Reply {
            embedding: Vec<f64>,
        }
        let v = self.call("", json!({ "text": text }))?;
        let r: Reply = serde_json::from_value(v).map_err(|e| GatewayError::Malformed { role: self.role, message: e.to_string() })?;
        Embedding::normalize(&r.embedding).map_err(|e| GatewayError::Malformed { role: self.role, message: e.to_string() })
    }
}

impl Enricher for RemoteBackend {
    fn enrich(&self, query: &str, ctx: &DomainContext, context_type: &str, prompt: &PromptTemplate) -> Result<String, GatewayError> {
        let rendered = prompt.render(&[("context_type", context_type), ("query", query)]);
        self.text(&rendered, json!({ "query": query, "terminology": ctx.terminology, "event_hints": ctx.event_hints }))
    }
}

/// Narrator `{context}` block: the clip's identity, window and description.
pub fn narration_context(req: &NarrationRequest<'_>) -> String {
    let d = &req.hit.descriptor;
    format!(
        "Clip: {}#{} ({} to {}, similarity {:.3})\nDescription: {}",
        d.video_id,
        d.clip_index,
        d.start.clock(),
        d.end.clock(),
        req.hit.score,
        d.description
    )
}

impl Narrator for RemoteBackend {
    fn narrate(&self, req: &NarrationRequest<'_>) -> Result<String, GatewayError> {
        let context = narration_context(req);
        let conversation = render_conversation(req.conversation);
        let rendered = req.prompt.render(&[("user_question", req.query), ("context", &context), ("conversation_context", &conversation)]);
        self.text(&rendered, json!({ "question": req.query }))
    }
}

/// Pulls the JSON object out of model text that may be fenced or prefixed.
fn json_object(text: &str) -> Option<&str> {
    let start = text.find('{')?;
    let end = text.rfind('}')?;
    (end > start).then(|| &text[start..=end])
}

impl Extractor for RemoteBackend {
    fn extract(&self, answer: &str, question: &str, prompt: &PromptTemplate) -> Result<RawExtraction, GatewayError> {
        let rendered = prompt.render(&[("question", question)]);
        let v = self.call(&rendered, json!({ "text": answer, "question": question }))?;
        let malformed = |m: String| GatewayError::Malformed { role: self.role, message: m };
        let doc = match v.get("text").and_then(Value::as_str) {
            Some(t) => serde_json::from_str(json_object(t).ok_or_else(|| malformed("no JSON object in text".into()))?)
                .map_err(|e| malformed(e.to_string()))?,
            None => v,
        };
        serde_json::from_value(doc).map_err(|e| malformed(e.to_string()))
    }
}
