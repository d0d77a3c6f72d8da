//! Page fetching: HTTP(S) GET with redirect and timeout limits, plus local
//! `file://` URLs so fixtures never touch the network.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;
use thiserror::Error;
use url::Url;

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("invalid URL '{url}': {message}")]
    InvalidUrl { url: String, message: String },
    #[error("unsupported URL scheme '{scheme}' in {url}")]
    UnsupportedScheme { url: String, scheme: String },
    #[error("resource not found: {url}")]
    NotFound { url: String },
    #[error("HTTP {status} fetching {url}")]
    Status { url: String, status: u16 },
    #[error("network failure fetching {url}: {message}")]
    Network { url: String, message: String },
    #[error("failed to read local file {url}: {message}")]
    File { url: String, message: String },
}

/// A fetched body plus the declared media type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchedPage {
    pub url: String,
    pub body: Vec<u8>,
    pub media_type: String,
}

/// Extension point for script-heavy pages: anything that can turn a URL into
/// bytes can back the ingest pipeline. The default [`StaticFetcher`] performs
/// a plain GET; a headless-browser renderer would implement this same trait.
pub trait PageRenderer: Send + Sync {
    fn render(&self, url: &str) -> Result<FetchedPage, FetchError>;
}

#[derive(Debug, Clone)]
pub struct FetchConfig {
    pub timeout: Duration,
    pub redirect_limit: u32,
    pub user_agent: String,
}

impl Default for FetchConfig {
    fn default() -> Self {
        FetchConfig {
            timeout: Duration::from_secs(30),
            redirect_limit: 5,
            user_agent: format!("metaharvest/{}", env!("CARGO_PKG_VERSION")),
        }
    }
}

/// Static (non-rendering) fetcher. Counts HTTP requests so tests can assert
/// that warm-cache runs never hit the network.
pub struct StaticFetcher {
    agent: ureq::Agent,
    http_requests: AtomicU64,
}

impl StaticFetcher {
    pub fn new(config: &FetchConfig) -> Self {
        StaticFetcher {
            agent: ureq::AgentBuilder::new()
                .timeout(config.timeout)
                .redirects(config.redirect_limit)
                .user_agent(&config.user_agent)
                .build(),
            http_requests: AtomicU64::new(0),
        }
    }

    pub fn http_requests(&self) -> u64 {
        self.http_requests.load(Ordering::Relaxed)
    }

    fn fetch_file(url: &Url) -> Result<FetchedPage, FetchError> {
        let path = url.to_file_path().map_err(|_| FetchError::InvalidUrl {
            url: url.to_string(),
            message: "file URL has no usable path".into(),
        })?;
        let body = std::fs::read(&path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                FetchError::NotFound {
                    url: url.to_string(),
                }
            } else {
                FetchError::File {
                    url: url.to_string(),
                    message: e.to_string(),
                }
            }
        })?;
        let media_type = match path.extension().and_then(|e| e.to_str()) {
            Some("html") | Some("htm") => "text/html",
            Some("xml") => "application/xml",
            Some("json") => "application/json",
            _ => "text/plain",
        };
        Ok(FetchedPage {
            url: url.to_string(),
            body,
            media_type: media_type.to_string(),
        })
    }

    fn fetch_http(&self, url: &Url) -> Result<FetchedPage, FetchError> {
        self.http_requests.fetch_add(1, Ordering::Relaxed);
        let response = self.agent.get(url.as_str()).call().map_err(|e| match e {
            ureq::Error::Status(404, _) => FetchError::NotFound {
                url: url.to_string(),
            },
            ureq::Error::Status(status, _) => FetchError::Status {
                url: url.to_string(),
                status,
            },
            ureq::Error::Transport(t) => FetchError::Network {
                url: url.to_string(),
                message: t.to_string(),
            },
        })?;
        let media_type = response.content_type().to_string();
        let mut body = Vec::new();
        use std::io::Read;
        response
            .into_reader()
            .take(64 * 1024 * 1024)
            .read_to_end(&mut body)
            .map_err(|e| FetchError::Network {
                url: url.to_string(),
                message: format!("failed to read body: {e}"),
            })?;
        Ok(FetchedPage {
            url: url.to_string(),
            body,
            media_type,
        })
    }
}

impl PageRenderer for StaticFetcher {
    fn render(&self, url: &str) -> Result<FetchedPage, FetchError> {
        let parsed = parse_fetch_url(url)?;
        match parsed.scheme() {
            "http" | "https" => self.fetch_http(&parsed),
            "file" => Self::fetch_file(&parsed),
            other => Err(FetchError::UnsupportedScheme {
                url: url.to_string(),
                scheme: other.to_string(),
            }),
        }
    }
}

/// Validates that a URL is absolute and has a fetchable scheme.
pub fn parse_fetch_url(url: &str) -> Result<Url, FetchError> {
    let parsed = Url::parse(url).map_err(|e| FetchError::InvalidUrl {
        url: url.to_string(),
        message: e.to_string(),
    })?;
    match parsed.scheme() {
        "http" | "https" | "file" => Ok(parsed),
        other => Err(FetchError::UnsupportedScheme {
            url: url.to_string(),
            scheme: other.to_string(),
        }),
    }
}
