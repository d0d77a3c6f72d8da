//! Schema-driven metadata harvesting for dataset catalogues.
//!
//! `metaharvest-core` scrapes dataset landing pages (and optional structured
//! metadata files), fills a user-defined metadata schema with an LLM-backed
//! named-entity-recognition pass plus a consolidation pass, scores the result
//! against ground-truth annotations, and links datasets to each other via
//! description-embedding similarity and temporal-coverage overlap.
//!
//! The pipeline is fully runnable offline: [`mock`] provides deterministic
//! chat and embedding models, and [`store`] caches pages, LLM responses and
//! embeddings so a warm re-run performs zero network calls and reproduces its
//! outputs byte for byte.
//!
//! Module map:
//!
//! - [`ingest`] — fetch landing pages / XML records, reduce them to plain text
//! - [`schema`] — metadata formats (field definitions), two built-in schemas
//! - [`gateway`] — provider-agnostic LLM and embedding access with caching
//! - [`extraction`] — prompt construction, entity parsing, consolidation
//! - [`evaluation`] — ROUGE-L, LLM-judged metrics, retrieval-outcome accounting
//! - [`linking`] — similarity matrices and temporal-coverage overlap matrices
//! - [`store`] — content-addressed persistence for every pipeline artifact
//! - [`corpus`] — corpus manifests binding sources to a schema
//!
//! Batch operations (corpus harvests, corpus scoring, matrix assembly) run on
//! a rayon pool when the default `parallel` feature is enabled and fall back
//! to sequential loops without it.

pub mod corpus;
pub mod evaluation;
pub mod extraction;
pub mod gateway;
pub mod ingest;
pub mod linking;
pub mod mock;
pub(crate) mod par;
pub mod schema;
pub mod store;

/// Sentinel value for a metadata field that is absent from the source.
///
/// Matches the annotation convention used by ground-truth files.
pub const NOT_AVAILABLE: &str = "N/A";

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        use std::fmt::Write;
        let _ = write!(out, "{b:02x}");
    }
    out
}
