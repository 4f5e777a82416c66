use quick_xml::events::Event;
use quick_xml::Reader;

use super::{OntologyId, SynonymTable};
use crate::error::{Error, Result};

const NAME_PATH: &[&[u8]] = &[b"DescriptorName", b"String"];
const UI_PATH: &[&[u8]] = &[b"DescriptorUI"];
const TERM_PATH: &[&[u8]] = &[b"ConceptList", b"Concept", b"TermList", b"Term", b"String"];

#[derive(Default)]
struct Descriptor {
    ui: String,
    name: String,
    terms: Vec<String>,
}

/// Parses a MeSH descriptor file (`DescriptorRecordSet/DescriptorRecord`).
/// The descriptor name is the canonical label; every term string in its
/// concept list becomes a synonym.
pub fn parse_mesh_concepts(doc: &str) -> Result<SynonymTable> {
    let mut reader = Reader::from_str(doc);
    reader.config_mut().trim_text(true);

    let mut table = SynonymTable::new(OntologyId::Mesh);
    let mut path: Vec<Vec<u8>> = Vec::new();
    let mut record_depth: Option<usize> = None;
    let mut current = Descriptor::default();
    let mut text = String::new();

    // element path below the open DescriptorRecord
    let rel = |path: &[Vec<u8>], record_depth: Option<usize>| -> Option<Vec<Vec<u8>>> {
        record_depth.map(|d| path[d..].to_vec())
    };
    let is = |rel: &[Vec<u8>], want: &[&[u8]]| {
        rel.len() == want.len() && rel.iter().zip(want).all(|(a, b)| a.as_slice() == *b)
    };

    loop {
        let event = reader
            .read_event()
            .map_err(|e| Error::Xml(format!("at byte {}: {e}", reader.buffer_position())))?;
        match event {
            Event::Start(e) => {
                let name = e.local_name().as_ref().to_vec();
                if record_depth.is_none() && name == b"DescriptorRecord" {
                    record_depth = Some(path.len() + 1);
                    current = Descriptor::default();
                }
                path.push(name);
                text.clear();
            }
            Event::Text(t) => {
                text.push_str(&t.unescape().map_err(|e| Error::Xml(e.to_string()))?);
            }
            Event::CData(c) => text.push_str(&String::from_utf8_lossy(&c.into_inner())),
            Event::End(_) => {
                if let Some(r) = rel(&path, record_depth) {
                    if is(&r, NAME_PATH) {
                        current.name = text.trim().to_string();
                    } else if is(&r, UI_PATH) {
                        current.ui = text.trim().to_string();
                    } else if is(&r, TERM_PATH) {
                        current.terms.push(text.trim().to_string());
                    }
                }
                if record_depth == Some(path.len()) {
                    let d = std::mem::take(&mut current);
                    if !d.name.is_empty() {
                        let id = if d.ui.is_empty() { d.name.clone() } else { d.ui };
                        table.insert(&id, &d.name, &d.terms);
                    }
                    record_depth = None;
                }
                path.pop();
                text.clear();
            }
            Event::Eof => break,
            _ => {}
        }
    }
    if !path.is_empty() {
        return Err(Error::Xml("unexpected end of document".into()));
    }
    Ok(table)
}
