//! Shared fixtures for the integration suites: a scriptable local HTTP
//! server and a three-dataset corpus over local file URLs.

#![allow(dead_code)]

use metaharvest_core::corpus::CorpusManifest;
use metaharvest_core::evaluation::{Availability, GroundTruthAnnotation};
use metaharvest_core::ingest::DatasetSource;
use metaharvest_core::schema::{parse_schema, MetadataSchema};
use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::path::Path;

/// One scripted HTTP response.
#[derive(Clone)]
pub struct Route {
    pub path: String,
    pub status: u16,
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
}

impl Route {
    pub fn ok(path: &str, content_type: &str, body: &str) -> Route {
        Route {
            path: path.into(),
            status: 200,
            headers: vec![("Content-Type".into(), content_type.into())],
            body: body.as_bytes().to_vec(),
        }
    }

    pub fn redirect(path: &str, to: &str) -> Route {
        Route {
            path: path.into(),
            status: 302,
            headers: vec![("Location".into(), to.into())],
            body: Vec::new(),
        }
    }

    pub fn status(path: &str, status: u16) -> Route {
        Route {
            path: path.into(),
            status,
            headers: Vec::new(),
            body: Vec::new(),
        }
    }
}

/// Minimal blocking HTTP server for fetch and gateway tests. Serves scripted
/// routes sequentially until the test process ends. When several routes share
/// a path they are served in order, one per request, which scripts
/// fail-then-succeed sequences.
pub struct TestServer {
    pub base_url: String,
}

impl TestServer {
    pub fn spawn(routes: Vec<Route>) -> TestServer {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind test server");
        let addr = listener.local_addr().unwrap();
        std::thread::spawn(move || {
            let mut remaining = routes;
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { continue };
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut request_line = String::new();
                if reader.read_line(&mut request_line).is_err() {
                    continue;
                }
                // Drain headers.
                loop {
                    let mut line = String::new();
                    match reader.read_line(&mut line) {
                        Ok(_) if line == "\r\n" || line == "\n" || line.is_empty() => break,
                        Ok(_) => continue,
                        Err(_) => break,
                    }
                }
                let path = request_line
                    .split_whitespace()
                    .nth(1)
                    .unwrap_or("/")
                    .to_string();
                let index = remaining.iter().position(|r| r.path == path);
                let response = match index {
                    Some(i) => {
                        if remaining.iter().filter(|r| r.path == path).count() > 1 {
                            remaining.remove(i)
                        } else {
                            remaining[i].clone()
                        }
                    }
                    None => Route::status(&path, 404),
                };
                let mut head = format!(
                    "HTTP/1.1 {} test\r\nContent-Length: {}\r\nConnection: close\r\n",
                    response.status,
                    response.body.len()
                );
                for (name, value) in &response.headers {
                    head.push_str(&format!("{name}: {value}\r\n"));
                }
                head.push_str("\r\n");
                let _ = stream.write_all(head.as_bytes());
                let _ = stream.write_all(&response.body);
                let _ = stream.flush();
            }
        });
        TestServer {
            base_url: format!("http://{addr}"),
        }
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base_url)
    }
}

pub const FIXTURE_SCHEMA_JSON: &str = r#"{
  "schema_id": "fixture-v1",
  "fields": [
    {"name": "Title", "group": "Identification", "definition": "The dataset name.", "match_mode": "exact", "standard_ref": "fixture"},
    {"name": "Description", "group": "Identification", "definition": "A free-text account of the dataset.", "match_mode": "fuzzy", "standard_ref": "fixture"},
    {"name": "Keywords", "group": "Identification", "definition": "Subject keywords.", "match_mode": "fuzzy", "standard_ref": "fixture"},
    {"name": "License", "group": "Rights", "definition": "The licence of the dataset.", "match_mode": "exact", "standard_ref": "fixture"},
    {"name": "Temporal coverage", "group": "Temporal", "definition": "The covered period.", "match_mode": "exact", "standard_ref": "fixture"},
    {"name": "Spatial resolution", "group": "Spatial", "definition": "The resolved spatial unit.", "match_mode": "exact", "standard_ref": "fixture"}
  ]
}"#;

pub fn fixture_schema() -> MetadataSchema {
    parse_schema(FIXTURE_SCHEMA_JSON).unwrap()
}

pub const ALPHA_HTML: &str = "<html><body>\
<h1>Alpha forest inventory</h1>\
<p>Title: Alpha forest inventory</p>\
<p>Description: Tree measurements from lowland forest reserves collected between 1982 and 2005.</p>\
<p>Keywords: forests; inventory; long-term</p>\
<p>License: CC-BY 4.0</p>\
<p>Temporal coverage: 1982-2005</p>\
</body></html>";

pub const BETA_HTML: &str = "<html><body>\
<h1>Beta camera traps</h1>\
<p>Title: Beta camera traps</p>\
<p>Description: Wildlife camera trap images from coastal dunes. The pixel size of the imagery is thirty metres.</p>\
<p>License: open data portal</p>\
<p>Temporal coverage: August 14, 2021 - September 24, 2021</p>\
</body></html>";

pub const GAMMA_HTML: &str = "<html><body>\
<h1>Gamma land use scenarios</h1>\
<p>Title: Gamma land use scenarios</p>\
<p>Description: Downscaled land use scenarios for a small region, derived from global projections.</p>\
<p>Keywords: land use; scenarios</p>\
<p>License: CC0 1.0</p>\
<p>Temporal coverage: Present to 2050</p>\
<p>Spatial resolution: 100 m</p>\
</body></html>";

fn file_url(path: &Path) -> String {
    url::Url::from_file_path(path).unwrap().to_string()
}

fn annotation(source_id: &str, entries: &[(&str, &str, Availability)]) -> GroundTruthAnnotation {
    let mut map = BTreeMap::new();
    for (field, value, availability) in entries {
        map.insert(
            field.to_string(),
            metaharvest_core::evaluation::AnnotationEntry {
                value: value.to_string(),
                availability: *availability,
            },
        );
    }
    GroundTruthAnnotation {
        source_id: source_id.into(),
        schema_id: "fixture-v1".into(),
        entries: map,
    }
}

/// The three-dataset fixture corpus. Designed so its evaluation contains at
/// least one of each retrieval outcome: alpha has a TN (Spatial resolution
/// absent and unannotated), beta has an FN (resolution only in prose), an FP
/// (a labelled "License" line the annotator rejected) and a TN (no
/// keywords), and everything else is a TP.
pub struct FixtureCorpus {
    pub manifest: CorpusManifest,
    pub schema: MetadataSchema,
    pub annotations: Vec<GroundTruthAnnotation>,
}

/// Expected outcome counts for the fixture corpus: (TP, FN, TN, FP).
pub const FIXTURE_OUTCOME_COUNTS: (usize, usize, usize, usize) = (14, 1, 2, 1);

pub fn build_fixture_corpus(dir: &Path) -> FixtureCorpus {
    let pages = [
        ("ds-alpha", ALPHA_HTML),
        ("ds-beta", BETA_HTML),
        ("ds-gamma", GAMMA_HTML),
    ];
    let mut sources = Vec::new();
    for (id, html) in pages {
        let path = dir.join(format!("{id}.html"));
        std::fs::write(&path, html).unwrap();
        sources.push(DatasetSource {
            id: id.into(),
            landing_url: file_url(&path),
            metadata_file_url: None,
            provider: provider_of(id).into(),
        });
    }

    use Availability::*;
    let annotations = vec![
        annotation(
            "ds-alpha",
            &[
                ("Title", "Alpha forest inventory", Structured),
                (
                    "Description",
                    "Tree measurements from lowland forest reserves collected between 1982 and 2005.",
                    Unstructured,
                ),
                ("Keywords", "forests; inventory; long-term", Structured),
                ("License", "CC-BY 4.0", Structured),
                ("Temporal coverage", "1982-2005", Structured),
                ("Spatial resolution", "N/A", Unavailable),
            ],
        ),
        annotation(
            "ds-beta",
            &[
                ("Title", "Beta camera traps", Structured),
                (
                    "Description",
                    "Wildlife camera trap images from coastal dunes.",
                    Unstructured,
                ),
                ("Keywords", "N/A", Unavailable),
                ("License", "N/A", Unavailable),
                (
                    "Temporal coverage",
                    "August 14, 2021 - September 24, 2021",
                    Structured,
                ),
                ("Spatial resolution", "thirty metres", Unstructured),
            ],
        ),
        annotation(
            "ds-gamma",
            &[
                ("Title", "Gamma land use scenarios", Structured),
                (
                    "Description",
                    "Downscaled land use scenarios for a small region, derived from global projections.",
                    Structured,
                ),
                ("Keywords", "land use; scenarios", Structured),
                ("License", "CC0 1.0", Structured),
                ("Temporal coverage", "Present to 2050", Structured),
                ("Spatial resolution", "100 m", Structured),
            ],
        ),
    ];

    FixtureCorpus {
        manifest: CorpusManifest {
            corpus_id: "fixture".into(),
            schema_id: "fixture-v1".into(),
            sources,
            llm: None,
        },
        schema: fixture_schema(),
        annotations,
    }
}

pub fn provider_of(id: &str) -> &'static str {
    match id {
        "ds-alpha" => "Forest Agency",
        "ds-beta" => "Dune Observatory",
        _ => "Scenario Hub",
    }
}
