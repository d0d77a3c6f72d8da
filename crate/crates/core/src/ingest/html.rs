//! Visible-text extraction from HTML.
//!
//! Rules, chosen so that extraction is idempotent on its own output:
//! - script/style/noscript/template subtrees are dropped entirely
//! - entering or leaving a block-level element emits a line break
//! - text nodes are appended verbatim (entities already decoded by the parser)
//! - normalization collapses runs of spaces and tabs inside a line, trims each
//!   line, drops empty lines, and collapses repeated line breaks
//!
//! Newlines inside text nodes are treated as line separators rather than
//! collapsed to spaces, so plain text wrapped back into an HTML body extracts
//! to itself. Malformed HTML is parsed leniently and never fails.

use scraper::{Html, Node};

const BLOCK_ELEMENTS: &[&str] = &[
    "address",
    "article",
    "aside",
    "blockquote",
    "br",
    "caption",
    "dd",
    "div",
    "dl",
    "dt",
    "fieldset",
    "figcaption",
    "figure",
    "footer",
    "form",
    "h1",
    "h2",
    "h3",
    "h4",
    "h5",
    "h6",
    "header",
    "hr",
    "li",
    "main",
    "nav",
    "ol",
    "option",
    "p",
    "pre",
    "section",
    "select",
    "table",
    "tbody",
    "td",
    "tfoot",
    "th",
    "thead",
    "title",
    "tr",
    "ul",
];

const SKIPPED_ELEMENTS: &[&str] = &["script", "style", "noscript", "template"];

/// Extracts visible plain text from raw HTML bytes. Bytes are decoded as
/// UTF-8 with replacement characters so a harvest never aborts on encoding
/// issues.
pub fn extract_text(html: &[u8]) -> String {
    let text = String::from_utf8_lossy(html);
    let document = Html::parse_document(&text);
    let mut out = String::new();
    walk(&document.tree.root(), &mut out);
    normalize(&out)
}

fn walk(node: &ego_tree::NodeRef<'_, Node>, out: &mut String) {
    match node.value() {
        Node::Text(t) => out.push_str(&t.text),
        Node::Element(el) => {
            let name = el.name();
            if SKIPPED_ELEMENTS.contains(&name) {
                return;
            }
            let block = BLOCK_ELEMENTS.contains(&name);
            if block {
                out.push('\n');
            }
            for child in node.children() {
                walk(&child, out);
            }
            if block {
                out.push('\n');
            }
        }
        _ => {
            for child in node.children() {
                walk(&child, out);
            }
        }
    }
}

fn normalize(raw: &str) -> String {
    let mut lines: Vec<String> = Vec::new();
    for line in raw.split('\n') {
        let mut collapsed = String::with_capacity(line.len());
        let mut pending_space = false;
        for ch in line.chars() {
            if ch == ' ' || ch == '\t' || ch == '\r' {
                pending_space = !collapsed.is_empty();
            } else {
                if pending_space {
                    collapsed.push(' ');
                    pending_space = false;
                }
                collapsed.push(ch);
            }
        }
        if !collapsed.is_empty() {
            lines.push(collapsed);
        }
    }
    lines.join("\n")
}

/// Escapes text for embedding in an HTML body; used by the idempotence tests
/// to re-wrap extracted text.
pub fn escape_html_text(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
