use std::collections::HashMap;

use quick_xml::events::{BytesStart, Event};
use quick_xml::name::ResolveResult;
use quick_xml::NsReader;

use super::{OntologyId, SynonymTable};
use crate::error::{Error, Result};

const RDF_NS: &[u8] = b"http://www.w3.org/1999/02/22-rdf-syntax-ns#";
const RDFS_NS: &[u8] = b"http://www.w3.org/2000/01/rdf-schema#";
const OWL_NS: &[u8] = b"http://www.w3.org/2002/07/owl#";
const OBO_IN_OWL_NS: &[u8] = b"http://www.geneontology.org/formats/oboInOwl#";

#[derive(Debug, Clone, PartialEq)]
pub struct OwlParse {
    pub table: SynonymTable,
    /// Classes that carried exact synonyms but no `rdfs:label`.
    pub skipped_unlabeled: usize,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Field {
    Label,
    ExactSynonym,
}

#[derive(Default)]
struct ClassState {
    id: Option<String>,
    label: Option<String>,
    synonyms: Vec<String>,
    depth: usize,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Ns {
    Rdf,
    Rdfs,
    Owl,
    OboInOwl,
    Other,
}

impl Ns {
    fn of(ns: &ResolveResult) -> Ns {
        match ns {
            ResolveResult::Bound(n) => match n.as_ref() {
                RDF_NS => Ns::Rdf,
                RDFS_NS => Ns::Rdfs,
                OWL_NS => Ns::Owl,
                OBO_IN_OWL_NS => Ns::OboInOwl,
                _ => Ns::Other,
            },
            _ => Ns::Other,
        }
    }
}

fn ns_is(ns: &ResolveResult, expected: &[u8]) -> bool {
    matches!(ns, ResolveResult::Bound(n) if n.as_ref() == expected)
}

/// Pulls `<!ENTITY name "value">` declarations out of a DOCTYPE so that
/// attribute values such as `&obo;UBERON_1` can be expanded.
fn doctype_entities(doctype: &str) -> HashMap<String, String> {
    let mut out = HashMap::new();
    let mut rest = doctype;
    while let Some(pos) = rest.find("<!ENTITY") {
        rest = &rest[pos + "<!ENTITY".len()..];
        let mut parts = rest.trim_start().splitn(2, char::is_whitespace);
        let (Some(name), Some(tail)) = (parts.next(), parts.next()) else {
            break;
        };
        let tail = tail.trim_start();
        let Some(quote) = tail.chars().next().filter(|c| *c == '"' || *c == '\'') else {
            continue;
        };
        if let Some(end) = tail[1..].find(quote) {
            out.insert(name.to_string(), tail[1..1 + end].to_string());
        }
    }
    out
}

fn expand_entities(raw: &str, entities: &HashMap<String, String>) -> String {
    if !raw.contains('&') || entities.is_empty() {
        return raw.to_string();
    }
    let mut out = raw.to_string();
    for (name, value) in entities {
        out = out.replace(&format!("&{name};"), value);
    }
    out
}

fn concept_id_from_iri(iri: &str) -> String {
    let cut = iri.rfind(['#', '/']).map_or(0, |i| i + 1);
    let frag = &iri[cut..];
    if frag.is_empty() {
        iri.to_string()
    } else {
        frag.to_string()
    }
}

fn class_iri(
    reader: &NsReader<&[u8]>,
    start: &BytesStart,
    entities: &HashMap<String, String>,
) -> Result<Option<String>> {
    for attr in start.attributes() {
        let attr = attr.map_err(|e| Error::Xml(e.to_string()))?;
        let (ns, local) = reader.resolve_attribute(attr.key);
        if !ns_is(&ns, RDF_NS) {
            continue;
        }
        if matches!(local.as_ref(), b"about" | b"ID") {
            let raw = String::from_utf8_lossy(&attr.value).into_owned();
            let value = match attr.unescape_value() {
                Ok(v) => v.into_owned(),
                Err(_) => expand_entities(&raw, entities),
            };
            return Ok(Some(value));
        }
    }
    Ok(None)
}

/// Parses an RDF/XML ontology, taking each top-level `owl:Class` with an
/// `rdfs:label` as a concept and its `oboInOwl:hasExactSynonym` literals as
/// synonyms.
pub fn parse_owl_synonyms(doc: &str, ontology_id: OntologyId) -> Result<OwlParse> {
    let mut reader = NsReader::from_str(doc);
    reader.config_mut().trim_text(true);

    let mut table = SynonymTable::new(ontology_id);
    let mut skipped = 0;
    let mut entities = HashMap::new();
    let mut depth = 0usize;
    let mut rdf_depth: Option<usize> = None;
    let mut saw_root = false;
    let mut class: Option<ClassState> = None;
    let mut field: Option<(Field, usize)> = None;
    let mut text = String::new();

    loop {
        let (ns, event) = match reader.read_resolved_event() {
            Ok((ns, event)) => (Ns::of(&ns), event),
            Err(e) => return Err(Error::Xml(format!("at byte {}: {e}", reader.buffer_position()))),
        };
        match event {
            Event::DocType(d) => {
                entities = doctype_entities(&String::from_utf8_lossy(d.as_ref()));
            }
            Event::Start(ref e) => {
                depth += 1;
                saw_root = true;
                let local = e.local_name();
                let local = local.as_ref();
                if rdf_depth.is_none() && ns == Ns::Rdf && local == b"RDF" {
                    rdf_depth = Some(depth);
                } else if class.is_none() && rdf_depth == Some(depth - 1) && ns == Ns::Owl && local == b"Class" {
                    class = Some(ClassState {
                        id: class_iri(&reader, e, &entities)?,
                        depth,
                        ..Default::default()
                    });
                } else if let Some(c) = &class {
                    if depth == c.depth + 1 {
                        let f = if ns == Ns::Rdfs && local == b"label" {
                            Some(Field::Label)
                        } else if ns == Ns::OboInOwl && local == b"hasExactSynonym" {
                            Some(Field::ExactSynonym)
                        } else {
                            None
                        };
                        if let Some(f) = f {
                            field = Some((f, depth));
                            text.clear();
                        }
                    }
                }
            }
            Event::Empty(_) => {
                saw_root = true;
            }
            Event::Text(t) => {
                if field.is_some() {
                    let s = t.unescape().map_err(|e| Error::Xml(e.to_string()))?;
                    text.push_str(&s);
                }
            }
            Event::CData(c) => {
                if field.is_some() {
                    text.push_str(&String::from_utf8_lossy(&c.into_inner()));
                }
            }
            Event::End(_) => {
                if let Some((f, d)) = field {
                    if d == depth {
                        let c = class.as_mut().expect("field implies class");
                        match f {
                            Field::Label if c.label.is_none() => c.label = Some(text.clone()),
                            Field::Label => {}
                            Field::ExactSynonym => c.synonyms.push(text.clone()),
                        }
                        field = None;
                    }
                }
                if class.as_ref().is_some_and(|c| c.depth == depth) {
                    let c = class.take().expect("checked above");
                    match (c.id, c.label) {
                        (Some(id), Some(label)) => {
                            table.insert(&concept_id_from_iri(&id), &label, &c.synonyms);
                        }
                        _ if !c.synonyms.is_empty() => skipped += 1,
                        _ => {}
                    }
                }
                if rdf_depth == Some(depth) {
                    rdf_depth = None;
                }
                depth -= 1;
            }
            Event::Eof => break,
            _ => {}
        }
    }
    if depth != 0 {
        return Err(Error::Xml("unexpected end of document".into()));
    }
    if !saw_root {
        return Err(Error::Xml("document has no root element".into()));
    }
    Ok(OwlParse {
        table,
        skipped_unlabeled: skipped,
    })
}
