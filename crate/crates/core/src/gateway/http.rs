//! Generic JSON chat-completion client.

use std::sync::{Arc, Condvar, Mutex};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::sql::{HeuristicCounter, TokenCounter};

use super::{BackendKind, GatewayError, GenerationRequest, GenerationResult, Generator};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpConfig {
    /// Full URL of the chat-completion endpoint.
    pub endpoint: String,
    /// Environment variable holding the bearer token.
    pub api_key_env: String,
    pub timeout_secs: u64,
    pub max_in_flight: usize,
    pub max_attempts: u32,
    pub initial_backoff_ms: u64,
}

impl Default for HttpConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1/chat/completions".to_string(),
            api_key_env: "LLM_API_KEY".to_string(),
            timeout_secs: 120,
            max_in_flight: 4,
            max_attempts: 3,
            initial_backoff_ms: 1000,
        }
    }
}

/// Counting semaphore bounding concurrent requests.
#[derive(Debug)]
struct Slots {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Slots {
    fn acquire(&self) -> SlotGuard<'_> {
        let mut free = self.free.lock().expect("slot lock poisoned");
        while *free == 0 {
            free = self.cv.wait(free).expect("slot lock poisoned");
        }
        *free -= 1;
        SlotGuard(self)
    }
}

struct SlotGuard<'a>(&'a Slots);

impl Drop for SlotGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("slot lock poisoned") += 1;
        self.0.cv.notify_one();
    }
}

/// Retries transport failures and 5xx responses with exponential backoff.
/// The API key is read once at construction and never logged.
pub struct HttpBackend {
    config: HttpConfig,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
    slots: Slots,
    counter: Arc<dyn TokenCounter>,
}

enum Attempt {
    Done(String),
    Retry(GatewayError),
    Fail(GatewayError),
}

impl HttpBackend {
    pub fn new(config: HttpConfig, counter: Arc<dyn TokenCounter>) -> Result<Self, GatewayError> {
        if config.max_in_flight == 0 || config.max_attempts == 0 {
            return Err(GatewayError::Config("max_in_flight and max_attempts must be positive".into()));
        }
        let api_key = std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty());
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| GatewayError::Config(e.to_string()))?;
        Ok(Self {
            slots: Slots {
                free: Mutex::new(config.max_in_flight),
                cv: Condvar::new(),
            },
            config,
            api_key,
            client,
            counter,
        })
    }

    pub fn with_defaults() -> Result<Self, GatewayError> {
        Self::new(HttpConfig::default(), Arc::new(HeuristicCounter))
    }

    fn attempt(&self, body: &serde_json::Value) -> Attempt {
        let mut rb = self.client.post(&self.config.endpoint).json(body);
        if let Some(key) = &self.api_key {
            rb = rb.bearer_auth(key);
        }
        let resp = match rb.send() {
            Ok(r) => r,
            Err(e) if e.is_timeout() => return Attempt::Retry(GatewayError::Timeout),
            Err(e) => return Attempt::Retry(GatewayError::Transport(e.without_url().to_string())),
        };
        let status = resp.status();
        let text = match resp.text() {
            Ok(t) => t,
            Err(e) if e.is_timeout() => return Attempt::Retry(GatewayError::Timeout),
            Err(e) => return Attempt::Retry(GatewayError::Transport(e.without_url().to_string())),
        };
        if status.is_server_error() {
            return Attempt::Retry(GatewayError::ProviderError {
                status: status.as_u16(),
                body: text,
            });
        }
        if !status.is_success() {
            return Attempt::Fail(GatewayError::ProviderError {
                status: status.as_u16(),
                body: text,
            });
        }
        match extract_content(&text) {
            Some(content) => Attempt::Done(content),
            None => Attempt::Fail(GatewayError::ProviderError {
                status: status.as_u16(),
                body: text,
            }),
        }
    }
}

/// `choices[0].message.content` of a chat-completion response.
fn extract_content(body: &str) -> Option<String> {
    let v: serde_json::Value = serde_json::from_str(body).ok()?;
    v.pointer("/choices/0/message/content")?.as_str().map(str::to_string)
}

impl Generator for HttpBackend {
    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResult, GatewayError> {
        request.validate()?;
        let body = json!({
            "model": request.model_name,
            "temperature": request.temperature,
            "messages": [
                {"role": "system", "content": request.system_prompt},
                {"role": "user", "content": request.prompt},
            ],
        });
        let _slot = self.slots.acquire();
        let mut backoff = Duration::from_millis(self.config.initial_backoff_ms);
        let mut last = GatewayError::Timeout;
        for attempt in 1..=self.config.max_attempts {
            match self.attempt(&body) {
                Attempt::Done(text) => {
                    return Ok(GenerationResult {
                        output_tokens: self.counter.count(&text),
                        text,
                        backend: BackendKind::Http,
                        cache_key: request.cache_key(),
                    })
                }
                Attempt::Fail(e) => return Err(e),
                Attempt::Retry(e) => {
                    log::warn!("attempt {attempt} of {} failed: {e}", self.config.max_attempts);
                    last = e;
                }
            }
            if attempt < self.config.max_attempts {
                thread::sleep(backoff);
                backoff *= 2;
            }
        }
        Err(last)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;

    /// Serves one canned response per connection, in order.
    fn serve(responses: Vec<(u16, String)>) -> (String, thread::JoinHandle<Vec<String>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
        let handle = thread::spawn(move || {
            let mut bodies = Vec::new();
            for (status, body) in responses {
                let (stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0usize;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                }
                let mut buf = vec![0u8; len];
                reader.read_exact(&mut buf).unwrap();
                bodies.push(String::from_utf8(buf).unwrap());
                let mut stream = stream;
                write!(
                    stream,
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                )
                .unwrap();
            }
            bodies
        });
        (url, handle)
    }

    fn backend(url: String) -> HttpBackend {
        let config = HttpConfig {
            endpoint: url,
            api_key_env: "TOKENOPT_TEST_UNSET_KEY".into(),
            initial_backoff_ms: 5,
            ..HttpConfig::default()
        };
        HttpBackend::new(config, Arc::new(HeuristicCounter)).unwrap()
    }

    const OK: &str = r#"{"choices":[{"message":{"role":"assistant","content":"SELECT 1;"}}]}"#;

    #[test]
    fn retries_server_errors_then_succeeds() {
        let (url, server) = serve(vec![(503, "busy".into()), (200, OK.into())]);
        let req = GenerationRequest::new("SELECT 1 FROM dual", "sys", "gpt");
        let out = backend(url).generate(&req).unwrap();
        assert_eq!(out.text, "SELECT 1;");
        assert_eq!(out.backend, BackendKind::Http);
        let bodies = server.join().unwrap();
        assert_eq!(bodies.len(), 2);
        let sent: serde_json::Value = serde_json::from_str(&bodies[0]).unwrap();
        assert_eq!(sent["model"], "gpt");
        assert_eq!(sent["temperature"], 0.0);
        assert_eq!(sent["messages"][0]["role"], "system");
        assert_eq!(sent["messages"][1]["content"], "SELECT 1 FROM dual");
    }

    #[test]
    fn client_errors_are_not_retried() {
        let (url, server) = serve(vec![(401, "denied".into())]);
        let err = backend(url).generate(&GenerationRequest::new("x", "s", "m")).unwrap_err();
        assert_eq!(
            err,
            GatewayError::ProviderError {
                status: 401,
                body: "denied".into()
            }
        );
        assert_eq!(server.join().unwrap().len(), 1);
    }

    #[test]
    fn gives_up_after_three_attempts() {
        let (url, server) = serve(vec![(500, "a".into()), (502, "b".into()), (500, "c".into())]);
        let err = backend(url).generate(&GenerationRequest::new("x", "s", "m")).unwrap_err();
        assert_eq!(
            err,
            GatewayError::ProviderError {
                status: 500,
                body: "c".into()
            }
        );
        assert_eq!(server.join().unwrap().len(), 3);
    }
}
