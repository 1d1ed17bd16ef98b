//! Rating back ends: a lexical mock, a closed-world replay of recorded
//! ratings, and a chat-completions HTTP client.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use thiserror::Error;

use super::cache::{read_records, stmt_hash, CacheError};
use super::prompt::PromptProfile;

/// What a provider is asked. `prompt` is the only text a remote model sees;
/// `statement` and `profile` are there so offline providers need not parse it.
#[derive(Debug, Clone, Copy)]
pub struct Request<'a> {
    pub prompt: &'a str,
    pub statement: &'a str,
    pub profile: PromptProfile,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    #[error("transport: {0}")]
    Transport(String),
}

pub trait Provider: Send + Sync {
    /// Stable id recorded in cache keys and reports.
    fn id(&self) -> &str;
    /// Raw reply text for one prompt.
    fn complete(&self, req: &Request<'_>) -> Result<String, ProviderError>;
}

pub const MOCK_KEYWORDS: &[&str] = &[
    "passwd",
    "password",
    "auth",
    "uid",
    "gid",
    "setuid",
    "seteuid",
    "chown",
    "key",
    "token",
    "login",
    "permission",
];

pub const MOCK_FILE_APIS: &[&str] = &[
    "open", "fopen", "access", "stat", "lstat", "fstat", "opendir", "chdir", "realpath", "unlink", "rename", "mkdir",
    "rmdir",
];

fn segments(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(|s| s.to_ascii_lowercase())
}

/// The mock's rating table: 9 when a privilege keyword appears as a word
/// (identifiers are split at underscores), 5 for a branch or loop condition
/// that calls a file-path API, else 0.
pub fn mock_rating(statement: &str) -> u8 {
    if segments(statement).any(|w| MOCK_KEYWORDS.contains(&w.as_str())) {
        return 9;
    }
    let head = statement.trim_start();
    let is_condition = ["if", "while", "switch", "for"].iter().any(|kw| {
        head.strip_prefix(kw)
            .is_some_and(|rest| rest.starts_with(|c: char| c == '(' || c.is_whitespace()))
    });
    if is_condition && segments(statement).any(|w| MOCK_FILE_APIS.contains(&w.as_str())) {
        return 5;
    }
    0
}

/// Deterministic offline provider.
#[derive(Debug, Default)]
pub struct MockProvider {
    latency: Option<(Mutex<ChaCha8Rng>, u64)>,
    calls: AtomicUsize,
    inflight: AtomicUsize,
    max_inflight_seen: AtomicUsize,
}

impl MockProvider {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sleep a seeded random 0..=`max_ms` milliseconds per call.
    pub fn with_latency(seed: u64, max_ms: u64) -> Self {
        MockProvider {
            latency: Some((Mutex::new(ChaCha8Rng::seed_from_u64(seed)), max_ms)),
            ..Self::default()
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    /// Highest number of calls observed running at the same time.
    pub fn max_inflight_seen(&self) -> usize {
        self.max_inflight_seen.load(Ordering::SeqCst)
    }
}

impl Provider for MockProvider {
    fn id(&self) -> &str {
        "mock"
    }

    fn complete(&self, req: &Request<'_>) -> Result<String, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let now = self.inflight.fetch_add(1, Ordering::SeqCst) + 1;
        self.max_inflight_seen.fetch_max(now, Ordering::SeqCst);
        if let Some((rng, max_ms)) = &self.latency {
            let ms = rng.lock().expect("rng lock").gen_range(0..=*max_ms);
            std::thread::sleep(Duration::from_millis(ms));
        }
        self.inflight.fetch_sub(1, Ordering::SeqCst);
        Ok(mock_rating(req.statement).to_string())
    }
}

/// Answers from a recorded ratings file; anything not recorded is a
/// transport failure.
#[derive(Debug, Default)]
pub struct ReplayProvider {
    answers: BTreeMap<(String, PromptProfile), u8>,
    calls: AtomicUsize,
}

impl ReplayProvider {
    pub fn from_file(path: &Path) -> Result<Self, CacheError> {
        let mut p = Self::default();
        for rec in read_records(path)? {
            p.answers.insert((rec.key.stmt_hash, rec.key.profile), rec.value);
        }
        Ok(p)
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, PromptProfile, u8)>) -> Self {
        let mut p = Self::default();
        for (stmt, profile, value) in pairs {
            p.answers.insert((stmt_hash(stmt), profile), value);
        }
        p
    }

    pub fn len(&self) -> usize {
        self.answers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.answers.is_empty()
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl Provider for ReplayProvider {
    fn id(&self) -> &str {
        "replay"
    }

    fn complete(&self, req: &Request<'_>) -> Result<String, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.answers
            .get(&(stmt_hash(req.statement), req.profile))
            .map(|v| v.to_string())
            .ok_or_else(|| {
                ProviderError::Transport(format!("no recorded rating for `{}` ({})", req.statement, req.profile))
            })
    }
}

pub const API_KEY_ENV: &str = "UPR_LLM_API_KEY";

/// Chat-completions client. Sends the prompt as a single user message with
/// temperature 0 and a tiny completion budget.
#[derive(Debug)]
pub struct LlmProvider {
    base_url: String,
    model: String,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl LlmProvider {
    pub fn new(
        base_url: impl Into<String>,
        model: impl Into<String>,
        api_key: Option<String>,
        timeout: Duration,
    ) -> Self {
        LlmProvider {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            model: model.into(),
            api_key,
            agent: ureq::AgentBuilder::new().timeout(timeout).build(),
        }
    }

    /// Credentials come from [`API_KEY_ENV`] only; `None` when it is unset
    /// or empty.
    pub fn from_env(base_url: impl Into<String>, model: impl Into<String>) -> Option<Self> {
        let key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty())?;
        Some(Self::new(base_url, model, Some(key), Duration::from_secs(60)))
    }
}

impl Provider for LlmProvider {
    fn id(&self) -> &str {
        "llm"
    }

    fn complete(&self, req: &Request<'_>) -> Result<String, ProviderError> {
        let body = json!({
            "model": self.model,
            "messages": [{"role": "user", "content": req.prompt}],
            "temperature": 0,
            "max_tokens": 4,
        });
        let mut call = self.agent.post(&format!("{}/chat/completions", self.base_url));
        if let Some(key) = &self.api_key {
            call = call.set("Authorization", &format!("Bearer {key}"));
        }
        let resp = call
            .send_json(body)
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        let v: serde_json::Value = resp.into_json().map_err(|e| ProviderError::Transport(e.to_string()))?;
        v["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| ProviderError::Transport(format!("unexpected response shape: {v}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;

    fn req(stmt: &str) -> Request<'_> {
        Request {
            prompt: stmt,
            statement: stmt,
            profile: PromptProfile::Full,
        }
    }

    #[test]
    fn mock_table() {
        assert_eq!(mock_rating("password = read_line();"), 9);
        assert_eq!(mock_rating("if (pw->pw_uid == 0)"), 9);
        assert_eq!(mock_rating("int cleartxt_passwd_len = strlen(buf);"), 9);
        assert_eq!(mock_rating("if (stat(path, &st) < 0)"), 5);
        assert_eq!(mock_rating("stat(path, &st);"), 0);
        assert_eq!(mock_rating("if (fluid > 3)"), 0);
        assert_eq!(mock_rating("keyboard = 1;"), 0);
        assert_eq!(mock_rating("for (i = 0; i < n; i++)"), 0);
        assert_eq!(mock_rating("iffy = open_all;"), 0);
    }

    #[test]
    fn replay_is_closed_world() {
        let p = ReplayProvider::from_pairs([("a = 1;", PromptProfile::Full, 4)]);
        assert_eq!(p.complete(&req("a = 1;")).unwrap(), "4");
        assert!(matches!(p.complete(&req("b = 2;")), Err(ProviderError::Transport(_))));
        let none = Request {
            profile: PromptProfile::None,
            ..req("a = 1;")
        };
        assert!(p.complete(&none).is_err());
    }

    fn serve_once(reply: &'static str) -> (String, std::thread::JoinHandle<String>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let handle = std::thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut head = String::new();
            let mut len = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
                head.push_str(&line);
                if line == "\r\n" {
                    break;
                }
            }
            let mut body = vec![0; len];
            reader.read_exact(&mut body).unwrap();
            let mut stream = stream;
            write!(stream, "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{}", reply.len(), reply).unwrap();
            head + &String::from_utf8(body).unwrap()
        });
        (format!("http://{addr}/v1"), handle)
    }

    #[test]
    fn llm_round_trip() {
        let (url, server) = serve_once(r#"{"choices":[{"message":{"role":"assistant","content":"8"}}]}"#);
        let p = LlmProvider::new(url, "test-model", Some("sk-test".into()), Duration::from_secs(5));
        assert_eq!(p.complete(&req("setuid(0);")).unwrap(), "8");
        let seen = server.join().unwrap();
        assert!(seen.starts_with("POST /v1/chat/completions"));
        assert!(seen.contains("Bearer sk-test"));
        let body: serde_json::Value = serde_json::from_str(&seen[seen.find("\r\n\r\n").unwrap() + 4..]).unwrap();
        assert_eq!(body["temperature"], 0);
        assert_eq!(body["model"], "test-model");
        assert_eq!(body["messages"][0]["content"], "setuid(0);");
    }

    #[test]
    fn llm_unreachable_is_transport_error() {
        let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
        let p = LlmProvider::new(format!("http://127.0.0.1:{port}"), "m", None, Duration::from_secs(2));
        assert!(matches!(p.complete(&req("x;")), Err(ProviderError::Transport(_))));
    }
}
