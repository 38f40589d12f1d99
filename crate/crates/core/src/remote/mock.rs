//! In-process HTTP servers speaking the LLM and transformer wire protocols,
//! for tests and offline runs. Every request is logged.

use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use serde::Deserialize;
use tiny_http::{Header, Response, Server};

use super::whitespace_tokens;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoggedRequest {
    pub method: String,
    pub path: String,
    pub body: String,
    pub authorization: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MockReply {
    pub status: u16,
    pub body: String,
    pub delay: Duration,
}

impl MockReply {
    pub fn json(body: impl Into<String>) -> Self {
        MockReply {
            status: 200,
            body: body.into(),
            delay: Duration::ZERO,
        }
    }

    /// A `/generate` answer carrying `text`.
    pub fn text(text: &str) -> Self {
        MockReply::json(serde_json::json!({ "text": text }).to_string())
    }

    pub fn status(status: u16) -> Self {
        MockReply {
            status,
            body: r#"{"error":"mock failure"}"#.into(),
            delay: Duration::ZERO,
        }
    }

    /// Sends the reply only after `delay`.
    pub fn after(self, delay: Duration) -> Self {
        MockReply { delay, ..self }
    }
}

/// A `/generate` call as seen by an LLM responder.
#[derive(Debug, Clone)]
pub struct LlmCall {
    /// Number of earlier `/generate` calls.
    pub index: usize,
    pub prompt: String,
    pub max_tokens: Option<usize>,
}

type Handler = dyn Fn(&LoggedRequest, usize) -> MockReply + Send + Sync;

pub struct MockServer {
    url: String,
    server: Arc<Server>,
    log: Arc<Mutex<Vec<LoggedRequest>>>,
    accept: Option<JoinHandle<()>>,
}

impl MockServer {
    /// Serves every request with `handler`; `GET /healthz` always answers 200.
    pub fn start(handler: impl Fn(&LoggedRequest) -> MockReply + Send + Sync + 'static) -> Self {
        Self::start_indexed(move |req, _| handler(req))
    }

    fn start_indexed(handler: impl Fn(&LoggedRequest, usize) -> MockReply + Send + Sync + 'static) -> Self {
        let server = Arc::new(Server::http("127.0.0.1:0").expect("bind mock server"));
        let port = server.server_addr().to_ip().expect("tcp listener").port();
        let log: Arc<Mutex<Vec<LoggedRequest>>> = Arc::default();
        let handler: Arc<Handler> = Arc::new(handler);
        let accept = {
            let server = Arc::clone(&server);
            let log = Arc::clone(&log);
            std::thread::spawn(move || {
                while let Ok(mut request) = server.recv() {
                    let mut body = String::new();
                    let _ = request.as_reader().read_to_string(&mut body);
                    let logged = LoggedRequest {
                        method: request.method().to_string(),
                        path: request.url().split('?').next().unwrap_or("").to_owned(),
                        body,
                        authorization: request
                            .headers()
                            .iter()
                            .find(|h| h.field.equiv("Authorization"))
                            .map(|h| h.value.to_string()),
                    };
                    if logged.method == "GET" && logged.path == "/healthz" {
                        let _ = request.respond(Response::from_string("ok"));
                        continue;
                    }
                    let index = {
                        let mut log = log.lock().expect("request log");
                        let index = log.iter().filter(|r| r.path == logged.path).count();
                        log.push(logged.clone());
                        index
                    };
                    let handler = Arc::clone(&handler);
                    std::thread::spawn(move || {
                        let reply = handler(&logged, index);
                        if !reply.delay.is_zero() {
                            std::thread::sleep(reply.delay);
                        }
                        let header = Header::from_bytes("Content-Type", "application/json").expect("static header");
                        let _ = request.respond(
                            Response::from_string(reply.body)
                                .with_status_code(reply.status)
                                .with_header(header),
                        );
                    });
                }
            })
        };
        MockServer {
            url: format!("http://127.0.0.1:{port}"),
            server,
            log,
            accept: Some(accept),
        }
    }

    /// LLM server: `responder` sees each `/generate` call in arrival order.
    pub fn llm(responder: impl Fn(&LlmCall) -> MockReply + Send + Sync + 'static) -> Self {
        #[derive(Deserialize)]
        struct Body {
            prompt: String,
            max_tokens: Option<usize>,
        }
        Self::start_indexed(move |req, index| {
            if req.method != "POST" || req.path != "/generate" {
                return MockReply::status(404);
            }
            match serde_json::from_str::<Body>(&req.body) {
                Ok(b) => responder(&LlmCall {
                    index,
                    prompt: b.prompt,
                    max_tokens: b.max_tokens,
                }),
                Err(_) => MockReply::status(400),
            }
        })
    }

    /// Transformer server: `/tokenize` splits on whitespace and `/predict`
    /// answers `(label, p_positive)` from `predictor`.
    pub fn transformer(predictor: impl Fn(&str) -> (u8, f64) + Send + Sync + 'static) -> Self {
        #[derive(Deserialize)]
        struct Body {
            text: String,
        }
        Self::start(move |req| {
            let Ok(body) = serde_json::from_str::<Body>(&req.body) else {
                return MockReply::status(400);
            };
            match (req.method.as_str(), req.path.as_str()) {
                ("POST", "/tokenize") => {
                    let tokens: Vec<_> = whitespace_tokens(&body.text)
                        .into_iter()
                        .map(|(start, end)| serde_json::json!({ "start": start, "end": end }))
                        .collect();
                    MockReply::json(serde_json::json!({ "tokens": tokens }).to_string())
                }
                ("POST", "/predict") => {
                    let (label, p) = predictor(&body.text);
                    MockReply::json(serde_json::json!({ "label": label, "p_positive": p }).to_string())
                }
                _ => MockReply::status(404),
            }
        })
    }

    pub fn url(&self) -> String {
        self.url.clone()
    }

    pub fn requests(&self) -> Vec<LoggedRequest> {
        self.log.lock().expect("request log").clone()
    }

    /// Number of logged requests to `path`.
    pub fn count(&self, path: &str) -> usize {
        self.log.lock().expect("request log").iter().filter(|r| r.path == path).count()
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }
}
