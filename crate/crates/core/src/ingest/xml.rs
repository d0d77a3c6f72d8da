//! Linearization of structured metadata files (XML records).
//!
//! Each text run is emitted as one `element/path: text` line in document
//! order, so field labels survive into the prompt alongside their values.

use quick_xml::events::Event;
use quick_xml::Reader;
use thiserror::Error;

#[derive(Debug, Error)]
#[error("XML parse failure at byte {offset}: {message}")]
pub struct XmlError {
    pub offset: u64,
    pub message: String,
}

/// Reduces an XML document to one `path: text` line per leaf text run.
/// Recoverable oddities are tolerated; an unrecoverable parse failure reports
/// its byte offset.
pub fn parse_structured_metadata(xml: &[u8]) -> Result<String, XmlError> {
    let mut reader = Reader::from_reader(xml);
    reader.config_mut().trim_text(true);

    let mut path: Vec<String> = Vec::new();
    let mut lines: Vec<String> = Vec::new();
    let mut buf = Vec::new();
    loop {
        match reader.read_event_into(&mut buf) {
            Ok(Event::Start(e)) => {
                path.push(decode_name(e.name().as_ref()));
            }
            Ok(Event::End(_)) => {
                path.pop();
            }
            Ok(Event::Empty(_)) => {}
            Ok(Event::Text(t)) => {
                let text = t
                    .unescape()
                    .map(|c| c.into_owned())
                    .unwrap_or_else(|_| String::from_utf8_lossy(t.as_ref()).into_owned());
                push_line(&mut lines, &path, &text);
            }
            Ok(Event::CData(c)) => {
                let text = String::from_utf8_lossy(c.as_ref()).into_owned();
                push_line(&mut lines, &path, &text);
            }
            Ok(Event::Eof) => break,
            Ok(_) => {}
            Err(e) => {
                return Err(XmlError {
                    offset: reader.buffer_position(),
                    message: e.to_string(),
                })
            }
        }
        buf.clear();
    }
    Ok(lines.join("\n"))
}

fn decode_name(raw: &[u8]) -> String {
    String::from_utf8_lossy(raw).into_owned()
}

fn push_line(lines: &mut Vec<String>, path: &[String], text: &str) {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return;
    }
    let joined = path.join("/");
    lines.push(format!("{joined}: {trimmed}"));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_leaf() {
        assert_eq!(
            parse_structured_metadata(b"<a><b>x</b></a>").unwrap(),
            "a/b: x"
        );
    }

    #[test]
    fn empty_element_yields_empty_text() {
        assert_eq!(parse_structured_metadata(b"<a/>").unwrap(), "");
    }

    #[test]
    fn two_leaves_in_document_order() {
        let xml = b"<meta><title>Ecotope map</title><year>2016</year></meta>";
        assert_eq!(
            parse_structured_metadata(xml).unwrap(),
            "meta/title: Ecotope map\nmeta/year: 2016"
        );
    }

    #[test]
    fn cdata_and_entities() {
        let xml = b"<a><b><![CDATA[x < y]]></b><c>a &amp; b</c></a>";
        assert_eq!(
            parse_structured_metadata(xml).unwrap(),
            "a/b: x < y\na/c: a & b"
        );
    }

    #[test]
    fn unrecoverable_failure_carries_offset() {
        let err = parse_structured_metadata(b"<a><b>x</wrong></a>").unwrap_err();
        assert!(err.offset > 0);
    }

    // Oracle: an event stream re-collection of character data written
    // independently of the production path, for well-formed documents.
    fn oracle_char_data(xml: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut rest = xml;
        let mut depth_names: Vec<String> = Vec::new();
        while let Some(open) = rest.find('<') {
            let before = &rest[..open];
            if !before.trim().is_empty() {
                out.push(format!("{}: {}", depth_names.join("/"), before.trim()));
            }
            let close = rest[open..].find('>').expect("well-formed") + open;
            let tag = &rest[open + 1..close];
            if let Some(name) = tag.strip_prefix('/') {
                assert_eq!(depth_names.pop().as_deref(), Some(name));
            } else if !tag.ends_with('/') && !tag.starts_with('?') && !tag.starts_with('!') {
                let name = tag.split_whitespace().next().unwrap();
                depth_names.push(name.to_string());
            }
            rest = &rest[close + 1..];
        }
        out
    }

    #[test]
    fn matches_independent_event_parse() {
        let xml = "<record><id>42</id><who><name>A. Muir</name><role>author</role></who>\
                   <where>Wadden Sea</where></record>";
        let expected = oracle_char_data(xml).join("\n");
        assert_eq!(parse_structured_metadata(xml.as_bytes()).unwrap(), expected);
    }
}
