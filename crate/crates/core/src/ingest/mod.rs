//! Fetching dataset landing pages and reducing them to promptable plain text.
//!
//! [`ingest_source`] turns a [`DatasetSource`] into a [`SourceDocument`]:
//! fetch the landing page (and the optional structured metadata file), cache
//! the raw bytes, extract visible text, truncate to the configured cap, and
//! hash the result. Re-ingesting a cached URL yields a byte-identical
//! document: fetch timestamps live in the cache next to the bytes.
//!
//! Fetches for distinct sources may run concurrently; nothing here holds
//! shared mutable state beyond the store, which serializes same-key writes.

mod fetch;
mod html;
mod xml;

pub use fetch::{
    parse_fetch_url, FetchConfig, FetchError, FetchedPage, PageRenderer, StaticFetcher,
};
pub use html::{escape_html_text, extract_text};
pub use xml::{parse_structured_metadata, XmlError};

use crate::store::{CacheKind, Store, StoreError};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One dataset to harvest: where its landing page lives and who provides it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSource {
    /// Short unique slug, used in file names and matrices.
    pub id: String,
    pub landing_url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata_file_url: Option<String>,
    pub provider: String,
}

impl DatasetSource {
    pub fn validate(&self) -> Result<(), IngestError> {
        if self.id.trim().is_empty() {
            return Err(IngestError::InvalidSource {
                id: self.id.clone(),
                message: "source id must be non-empty".into(),
            });
        }
        if !self
            .id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        {
            return Err(IngestError::InvalidSource {
                id: self.id.clone(),
                message: "source id may only contain alphanumerics, '-' and '_'".into(),
            });
        }
        parse_fetch_url(&self.landing_url).map_err(|e| IngestError::InvalidSource {
            id: self.id.clone(),
            message: e.to_string(),
        })?;
        if let Some(extra) = &self.metadata_file_url {
            parse_fetch_url(extra).map_err(|e| IngestError::InvalidSource {
                id: self.id.clone(),
                message: e.to_string(),
            })?;
        }
        Ok(())
    }
}

/// Scraped plain text for one source, ready for prompting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceDocument {
    pub source_id: String,
    pub page_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structured_text: Option<String>,
    pub fetched_at: DateTime<Utc>,
    pub content_hash: String,
    /// True when page text was cut at the configured cap.
    #[serde(default)]
    pub truncated: bool,
}

impl SourceDocument {
    /// Hash over exactly the texts; changes iff page or structured text change.
    pub fn compute_hash(page_text: &str, structured_text: Option<&str>) -> String {
        let key = serde_json::json!([page_text, structured_text]);
        crate::sha256_hex(key.to_string().as_bytes())
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("invalid source '{id}': {message}")]
    InvalidSource { id: String, message: String },
    #[error(transparent)]
    Fetch(#[from] FetchError),
    #[error("structured metadata for '{id}': {source}")]
    Xml {
        id: String,
        #[source]
        source: XmlError,
    },
    #[error("page for '{id}' produced no text")]
    EmptyPage { id: String },
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Debug, Clone)]
pub struct IngestConfig {
    pub fetch: FetchConfig,
    /// Page text is truncated at this many characters to bound prompt size.
    pub text_cap: usize,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            fetch: FetchConfig::default(),
            text_cap: 200_000,
        }
    }
}

/// Cached fetch envelope: sidecar metadata stored next to the raw body so a
/// cached URL re-ingests to a byte-identical document.
#[derive(Debug, Serialize, Deserialize)]
struct FetchMeta {
    url: String,
    media_type: String,
    fetched_at: DateTime<Utc>,
}

fn cache_key(url: &str) -> String {
    crate::sha256_hex(format!("url:{url}").as_bytes())
}

/// Fetches a URL through the cache: cache hits never touch the renderer.
fn fetch_cached(
    renderer: &dyn PageRenderer,
    store: Option<&Store>,
    url: &str,
) -> Result<(FetchedPage, DateTime<Utc>), IngestError> {
    let key = cache_key(url);
    let meta_key = format!("{key}.meta");
    if let Some(store) = store {
        if let (Some(body), Some(meta_bytes)) = (
            store.get(&key, CacheKind::Page)?,
            store.get(&meta_key, CacheKind::Page)?,
        ) {
            if let Ok(meta) = serde_json::from_slice::<FetchMeta>(&meta_bytes) {
                return Ok((
                    FetchedPage {
                        url: meta.url,
                        body,
                        media_type: meta.media_type,
                    },
                    meta.fetched_at,
                ));
            }
        }
    }
    let page = renderer.render(url)?;
    let fetched_at = Utc::now();
    if let Some(store) = store {
        store.put(&key, &page.body, CacheKind::Page)?;
        let meta = FetchMeta {
            url: page.url.clone(),
            media_type: page.media_type.clone(),
            fetched_at,
        };
        store.put(
            &meta_key,
            &serde_json::to_vec(&meta).expect("meta serializes"),
            CacheKind::Page,
        )?;
    }
    Ok((page, fetched_at))
}

/// Fetches and reduces one source to a [`SourceDocument`].
pub fn ingest_source(
    source: &DatasetSource,
    renderer: &dyn PageRenderer,
    store: Option<&Store>,
    config: &IngestConfig,
) -> Result<SourceDocument, IngestError> {
    source.validate()?;
    let (page, fetched_at) = fetch_cached(renderer, store, &source.landing_url)?;
    let mut page_text = if looks_like_xml(&page) {
        parse_structured_metadata(&page.body).map_err(|e| IngestError::Xml {
            id: source.id.clone(),
            source: e,
        })?
    } else {
        extract_text(&page.body)
    };
    if page_text.trim().is_empty() {
        return Err(IngestError::EmptyPage {
            id: source.id.clone(),
        });
    }
    let mut truncated = false;
    if page_text.chars().count() > config.text_cap {
        page_text = page_text.chars().take(config.text_cap).collect();
        truncated = true;
        tracing::warn!(
            source_id = %source.id,
            cap = config.text_cap,
            "page text truncated at configured cap"
        );
    }

    let structured_text = match &source.metadata_file_url {
        Some(url) => {
            let (file, _) = fetch_cached(renderer, store, url)?;
            let text = parse_structured_metadata(&file.body).map_err(|e| IngestError::Xml {
                id: source.id.clone(),
                source: e,
            })?;
            if text.trim().is_empty() {
                None
            } else {
                Some(text)
            }
        }
        None => None,
    };

    let content_hash = SourceDocument::compute_hash(&page_text, structured_text.as_deref());
    Ok(SourceDocument {
        source_id: source.id.clone(),
        page_text,
        structured_text,
        fetched_at,
        content_hash,
        truncated,
    })
}

fn looks_like_xml(page: &FetchedPage) -> bool {
    if page.media_type.contains("xml") && !page.media_type.contains("html") {
        // Some catalogues serve XML records with an .xml media type; an HTML
        // landing page always wins when in doubt.
        let head: String = String::from_utf8_lossy(&page.body)
            .chars()
            .take(512)
            .collect::<String>()
            .to_ascii_lowercase();
        return !head.contains("<html");
    }
    false
}
