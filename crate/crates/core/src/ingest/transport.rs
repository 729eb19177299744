//! Transports for the bibliographic retrieval service: a live HTTP client
//! plus a recorded-fixture store so that everything downstream runs offline.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use tracing::{debug, warn};

use super::ratelimit::RateLimiter;
use crate::error::{Error, Result};

pub const DEFAULT_BASE_URL: &str = "https://eutils.ncbi.nlm.nih.gov/entrez/eutils";

/// Parameters that identify the caller rather than the query. They are
/// excluded from fixture lookup keys.
const CREDENTIAL_PARAMS: &[&str] = &["api_key", "tool", "email"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endpoint {
    ESearch,
    EFetch,
    ESummary,
}

impl Endpoint {
    pub fn path(self) -> &'static str {
        match self {
            Endpoint::ESearch => "esearch.fcgi",
            Endpoint::EFetch => "efetch.fcgi",
            Endpoint::ESummary => "esummary.fcgi",
        }
    }

    fn name(self) -> &'static str {
        match self {
            Endpoint::ESearch => "esearch",
            Endpoint::EFetch => "efetch",
            Endpoint::ESummary => "esummary",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Request {
    pub endpoint: Endpoint,
    pub params: BTreeMap<String, String>,
}

impl Request {
    pub fn new(endpoint: Endpoint) -> Self {
        Self {
            endpoint,
            params: BTreeMap::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<String>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    /// Canonical key: endpoint plus sorted non-credential parameters.
    pub fn key(&self) -> String {
        let mut key = self.endpoint.name().to_string();
        for (k, v) in &self.params {
            if CREDENTIAL_PARAMS.contains(&k.as_str()) {
                continue;
            }
            key.push('&');
            key.push_str(k);
            key.push('=');
            key.push_str(v);
        }
        key
    }
}

impl fmt::Display for Request {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

pub trait Transport: Send + Sync {
    fn get(&self, request: &Request) -> Result<String>;
}

impl<T: Transport + ?Sized> Transport for Arc<T> {
    fn get(&self, request: &Request) -> Result<String> {
        (**self).get(request)
    }
}

/// Live HTTP transport with bounded retries and a shared rate gate.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
    base_url: String,
    api_key: Option<String>,
    limiter: Arc<RateLimiter>,
    max_retries: u32,
    backoff: Duration,
}

impl HttpTransport {
    pub fn new(api_key: Option<String>) -> Result<Self> {
        let limiter = Arc::new(RateLimiter::for_api_key(api_key.is_some()));
        Self::with_limiter(DEFAULT_BASE_URL, api_key, limiter)
    }

    pub fn with_limiter(
        base_url: &str,
        api_key: Option<String>,
        limiter: Arc<RateLimiter>,
    ) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(60))
            .user_agent(concat!("trialsent/", env!("CARGO_PKG_VERSION")))
            .build()
            .map_err(|e| Error::Transport {
                message: format!("cannot build HTTP client: {e}"),
                retryable: false,
            })?;
        Ok(Self {
            client,
            base_url: base_url.trim_end_matches('/').to_string(),
            api_key,
            limiter,
            max_retries: 3,
            backoff: Duration::from_millis(500),
        })
    }

    pub fn with_retries(mut self, max_retries: u32, backoff: Duration) -> Self {
        self.max_retries = max_retries;
        self.backoff = backoff;
        self
    }
}

impl Transport for HttpTransport {
    fn get(&self, request: &Request) -> Result<String> {
        let url = format!("{}/{}", self.base_url, request.endpoint.path());
        let mut query: Vec<(&str, &str)> = request
            .params
            .iter()
            .map(|(k, v)| (k.as_str(), v.as_str()))
            .collect();
        if let Some(key) = &self.api_key {
            query.push(("api_key", key.as_str()));
        }
        query.push(("tool", "trialsent"));

        let mut last_error = String::new();
        for attempt in 0..=self.max_retries {
            if attempt > 0 {
                std::thread::sleep(self.backoff * 2u32.pow(attempt - 1));
            }
            self.limiter.acquire();
            debug!(request = %request, attempt, "GET");
            match self.client.get(&url).query(&query).send() {
                Ok(resp) => {
                    let status = resp.status();
                    if status.is_success() {
                        return resp.text().map_err(|e| Error::Transport {
                            message: format!("reading body of {request}: {e}"),
                            retryable: true,
                        });
                    }
                    last_error = format!("HTTP {status} for {request}");
                    if status.is_client_error() && status.as_u16() != 429 {
                        return Err(Error::Transport {
                            message: last_error,
                            retryable: false,
                        });
                    }
                }
                Err(e) => last_error = format!("{request}: {e}"),
            }
            warn!(attempt, error = %last_error, "request failed");
        }
        Err(Error::Transport {
            message: format!("giving up after {} attempts: {last_error}", self.max_retries + 1),
            retryable: true,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FixtureEntry {
    endpoint: Endpoint,
    params: BTreeMap<String, String>,
    file: String,
}

const FIXTURE_INDEX: &str = "index.jsonl";

/// Replays responses recorded in a fixture directory. The directory holds an
/// `index.jsonl` mapping requests to response files; unknown requests fail
/// instead of reaching the network.
pub struct FixtureTransport {
    dir: PathBuf,
    responses: HashMap<String, PathBuf>,
}

impl FixtureTransport {
    pub fn open(dir: &Path) -> Result<Self> {
        let index_path = dir.join(FIXTURE_INDEX);
        let entries: Vec<FixtureEntry> = crate::jsonl::read_jsonl(&index_path)?;
        let responses = entries
            .into_iter()
            .map(|e| {
                let key = Request {
                    endpoint: e.endpoint,
                    params: e.params,
                }
                .key();
                (key, dir.join(e.file))
            })
            .collect();
        Ok(Self {
            dir: dir.to_path_buf(),
            responses,
        })
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

impl Transport for FixtureTransport {
    fn get(&self, request: &Request) -> Result<String> {
        let path = self.responses.get(&request.key()).ok_or_else(|| Error::Transport {
            message: format!(
                "no recorded response for {request} in {}",
                self.dir.display()
            ),
            retryable: false,
        })?;
        fs::read_to_string(path).map_err(|e| Error::io(path, e))
    }
}

/// Forwards to an inner transport and records every response into a fixture
/// directory readable by [`FixtureTransport`].
pub struct RecordingTransport<T: Transport> {
    inner: T,
    dir: PathBuf,
    counter: Mutex<usize>,
}

impl<T: Transport> RecordingTransport<T> {
    pub fn new(inner: T, dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let existing = match fs::read_to_string(dir.join(FIXTURE_INDEX)) {
            Ok(text) => text.lines().filter(|l| !l.trim().is_empty()).count(),
            Err(_) => 0,
        };
        Ok(Self {
            inner,
            dir: dir.to_path_buf(),
            counter: Mutex::new(existing),
        })
    }
}

impl<T: Transport> Transport for RecordingTransport<T> {
    fn get(&self, request: &Request) -> Result<String> {
        let body = self.inner.get(request)?;
        let mut counter = self.counter.lock().unwrap_or_else(|p| p.into_inner());
        let file = format!("{:05}-{}.txt", *counter, request.endpoint.name());
        *counter += 1;
        let path = self.dir.join(&file);
        fs::write(&path, &body).map_err(|e| Error::io(&path, e))?;
        let params = request
            .params
            .iter()
            .filter(|(k, _)| !CREDENTIAL_PARAMS.contains(&k.as_str()))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        let entry = FixtureEntry {
            endpoint: request.endpoint,
            params,
            file,
        };
        let index = self.dir.join(FIXTURE_INDEX);
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&index)
            .map_err(|e| Error::io(&index, e))?;
        let line = serde_json::to_string(&entry).map_err(|e| Error::json("fixture index", e))?;
        writeln!(f, "{line}").map_err(|e| Error::io(&index, e))?;
        Ok(body)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Echo;
    impl Transport for Echo {
        fn get(&self, request: &Request) -> Result<String> {
            Ok(format!("body for {}", request.key()))
        }
    }

    #[test]
    fn key_ignores_credentials_and_param_order() {
        let a = Request::new(Endpoint::ESearch)
            .param("term", "x")
            .param("db", "pubmed")
            .param("api_key", "secret");
        let b = Request::new(Endpoint::ESearch).param("db", "pubmed").param("term", "x");
        assert_eq!(a.key(), b.key());
        assert!(!a.key().contains("secret"));
    }

    #[test]
    fn record_then_replay() {
        let dir = tempfile::tempdir().unwrap();
        let req = Request::new(Endpoint::EFetch).param("id", "1,2");
        let recorder = RecordingTransport::new(Echo, dir.path()).unwrap();
        let live = recorder.get(&req).unwrap();

        let replay = FixtureTransport::open(dir.path()).unwrap();
        assert_eq!(replay.get(&req).unwrap(), live);
        let missing = Request::new(Endpoint::EFetch).param("id", "3");
        let err = replay.get(&missing).unwrap_err();
        assert!(matches!(err, Error::Transport { retryable: false, .. }));
    }
}
