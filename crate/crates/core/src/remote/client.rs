use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{RemoteEndpoint, RemoteError, Result};

/// Blocking JSON-over-HTTP client bound to one endpoint.
///
/// Transport errors and 5xx answers are retried with exponential backoff;
/// other non-2xx answers fail at once.
pub struct HttpClient {
    endpoint: RemoteEndpoint,
    agent: ureq::Agent,
    token: Option<String>,
}

enum Attempt<T> {
    Done(T),
    Retry(RemoteError),
    Fail(RemoteError),
}

impl HttpClient {
    pub fn new(endpoint: RemoteEndpoint) -> Result<Self> {
        endpoint.validate()?;
        let token = match &endpoint.auth_token_env {
            Some(var) => Some(std::env::var(var).map_err(|_| RemoteError::MissingToken(var.clone()))?),
            None => None,
        };
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(endpoint.timeout()))
            .http_status_as_error(false)
            .proxy(None)
            .build()
            .into();
        Ok(HttpClient { endpoint, agent, token })
    }

    pub fn endpoint(&self) -> &RemoteEndpoint {
        &self.endpoint
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.endpoint.base_url.trim_end_matches('/'), path)
    }

    /// `GET path`, true on a 2xx answer.
    pub fn healthy(&self, path: &str) -> bool {
        self.agent
            .get(&self.url(path))
            .call()
            .is_ok_and(|r| r.status().is_success())
    }

    /// POSTs `body` as JSON and decodes a JSON answer. `id` tags errors.
    pub fn post_json<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B, id: &str) -> Result<T> {
        let url = self.url(path);
        let attempts = self.endpoint.retries + 1;
        let mut last = None;
        for attempt in 1..=attempts {
            if attempt > 1 {
                let factor = 1u64 << (attempt - 2).min(16);
                std::thread::sleep(Duration::from_millis(self.endpoint.backoff_ms.saturating_mul(factor)));
            }
            match self.attempt(&url, body, id, attempt) {
                Attempt::Done(v) => return Ok(v),
                Attempt::Fail(e) => return Err(e),
                Attempt::Retry(e) => last = Some(e),
            }
        }
        Err(last.expect("at least one attempt"))
    }

    fn attempt<B: Serialize, T: DeserializeOwned>(&self, url: &str, body: &B, id: &str, attempt: usize) -> Attempt<T> {
        let transport = |message: String| RemoteError::Transport {
            id: id.to_owned(),
            url: url.to_owned(),
            attempts: attempt,
            message,
        };
        let mut req = self.agent.post(url);
        if let Some(token) = &self.token {
            req = req.header("Authorization", &format!("Bearer {token}"));
        }
        let resp = match req.send_json(body) {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(transport(e.to_string())),
        };
        let status = resp.status().as_u16();
        if !resp.status().is_success() {
            let err = RemoteError::Status {
                id: id.to_owned(),
                url: url.to_owned(),
                status,
                attempts: attempt,
            };
            return if status >= 500 { Attempt::Retry(err) } else { Attempt::Fail(err) };
        }
        let text = match resp.into_body().read_to_string() {
            Ok(t) => t,
            Err(e) => return Attempt::Retry(transport(e.to_string())),
        };
        match serde_json::from_str(&text) {
            Ok(v) => Attempt::Done(v),
            Err(e) => Attempt::Fail(RemoteError::ProtocolViolation {
                id: id.to_owned(),
                message: format!("{url}: unexpected response body: {e}"),
            }),
        }
    }
}
