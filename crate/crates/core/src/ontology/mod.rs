//! Synonym tables parsed from ontology sources, with exact and fuzzy lookup.

mod fuzzy;
mod mesh;
mod owl;
mod umls;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use fuzzy::{levenshtein, similarity_score};
pub use mesh::parse_mesh_concepts;
pub use owl::{parse_owl_synonyms, OwlParse};
pub use umls::load_umls_dict;

pub const DEFAULT_THRESHOLD: f64 = 80.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OntologyId {
    #[serde(rename = "EFO")]
    Efo,
    #[serde(rename = "UBERON")]
    Uberon,
    #[serde(rename = "NCBI_TAXON")]
    NcbiTaxon,
    #[serde(rename = "MESH")]
    Mesh,
    #[serde(rename = "UMLS")]
    Umls,
}

impl OntologyId {
    pub const ALL: [OntologyId; 5] = [
        OntologyId::Efo,
        OntologyId::Uberon,
        OntologyId::NcbiTaxon,
        OntologyId::Mesh,
        OntologyId::Umls,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OntologyId::Efo => "EFO",
            OntologyId::Uberon => "UBERON",
            OntologyId::NcbiTaxon => "NCBI_TAXON",
            OntologyId::Mesh => "MESH",
            OntologyId::Umls => "UMLS",
        }
    }

    /// EFO, UBERON and NCBI Taxonomy are the dimension-specific sources.
    pub fn is_primary(self) -> bool {
        matches!(self, OntologyId::Efo | OntologyId::Uberon | OntologyId::NcbiTaxon)
    }
}

impl fmt::Display for OntologyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OntologyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "EFO" => Ok(OntologyId::Efo),
            "UBERON" => Ok(OntologyId::Uberon),
            "NCBI_TAXON" | "NCBITAXON" | "NCBI" => Ok(OntologyId::NcbiTaxon),
            "MESH" => Ok(OntologyId::Mesh),
            "UMLS" => Ok(OntologyId::Umls),
            other => Err(Error::Input(format!("unknown ontology `{other}`"))),
        }
    }
}

/// Lowercase, trim, strip surrounding quotes and collapse inner whitespace.
pub fn normalize(s: &str) -> String {
    const QUOTES: &[char] = &['"', '\'', '`', '\u{201C}', '\u{201D}', '\u{2018}', '\u{2019}'];
    let mut t = s.trim();
    loop {
        let stripped = t
            .strip_prefix(QUOTES)
            .and_then(|r| r.strip_suffix(QUOTES))
            .map(str::trim);
        match stripped {
            Some(r) => t = r,
            None => break,
        }
    }
    t.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptEntry {
    pub concept_id: String,
    pub canonical: String,
    pub synonyms: Vec<String>,
}

/// All concepts of one ontology keyed by normalized canonical label.
#[derive(Debug, Clone, PartialEq)]
pub struct SynonymTable {
    pub ontology_id: OntologyId,
    entries: BTreeMap<String, ConceptEntry>,
    by_synonym: BTreeMap<String, BTreeSet<String>>,
}

impl SynonymTable {
    pub fn new(ontology_id: OntologyId) -> Self {
        SynonymTable {
            ontology_id,
            entries: BTreeMap::new(),
            by_synonym: BTreeMap::new(),
        }
    }

    /// Adds a concept. Labels are normalized; a label already present merges
    /// its synonyms into the existing entry and keeps the first concept id.
    /// Returns false when the label normalizes to nothing.
    pub fn insert<I, S>(&mut self, concept_id: &str, label: &str, synonyms: I) -> bool
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let canonical = normalize(label);
        if canonical.is_empty() || concept_id.trim().is_empty() {
            return false;
        }
        let entry = self.entries.entry(canonical.clone()).or_insert_with(|| ConceptEntry {
            concept_id: concept_id.trim().to_string(),
            canonical: canonical.clone(),
            synonyms: Vec::new(),
        });
        for s in synonyms {
            let s = normalize(s.as_ref());
            if s.is_empty() || s == canonical || entry.synonyms.contains(&s) {
                continue;
            }
            entry.synonyms.push(s.clone());
            self.by_synonym.entry(s).or_default().insert(canonical.clone());
        }
        true
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, canonical: &str) -> Option<&ConceptEntry> {
        self.entries.get(&normalize(canonical))
    }

    pub fn entries(&self) -> impl Iterator<Item = &ConceptEntry> {
        self.entries.values()
    }

    /// Exact match of an already normalized term against canonicals first,
    /// then synonyms. A synonym shared by several concepts resolves to the
    /// lexicographically smallest canonical.
    pub fn exact(&self, normalized: &str) -> Option<&ConceptEntry> {
        if let Some(e) = self.entries.get(normalized) {
            return Some(e);
        }
        self.by_synonym
            .get(normalized)
            .and_then(|set| set.iter().next())
            .and_then(|c| self.entries.get(c))
    }

    /// Best fuzzy candidate at or above `threshold` over every canonical and
    /// synonym, reported with the canonical of its concept.
    pub fn fuzzy(&self, normalized: &str, threshold: f64) -> Option<(&ConceptEntry, f64)> {
        let term: Vec<char> = normalized.chars().collect();
        let mut best: Option<(&ConceptEntry, f64)> = None;
        let mut buf = Vec::new();
        for entry in self.entries.values() {
            for label in std::iter::once(&entry.canonical).chain(&entry.synonyms) {
                buf.clear();
                buf.extend(label.chars());
                let longest = term.len().max(buf.len());
                if longest > 0 {
                    // |len(a) - len(b)| is a lower bound on the distance
                    let gap = term.len().abs_diff(buf.len()) as f64;
                    let upper = 100.0 * (1.0 - gap / longest as f64);
                    if upper < threshold || best.is_some_and(|(_, s)| upper <= s) {
                        continue;
                    }
                }
                let score = fuzzy::score_chars(&term, &buf);
                // entries iterate in canonical order, so strict > keeps the smaller canonical on ties
                if score >= threshold && best.is_none_or(|(_, s)| score > s) {
                    best = Some((entry, score));
                }
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchKind {
    Exact,
    Fuzzy,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub matched: bool,
    pub kind: MatchKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub canonical: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub concept_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ontology_id: Option<OntologyId>,
    pub score: f64,
}

impl MatchResult {
    pub fn none() -> Self {
        MatchResult {
            matched: false,
            kind: MatchKind::None,
            canonical: None,
            concept_id: None,
            ontology_id: None,
            score: 0.0,
        }
    }

    fn hit(entry: &ConceptEntry, ontology: OntologyId, kind: MatchKind, score: f64) -> Self {
        MatchResult {
            matched: true,
            kind,
            canonical: Some(entry.canonical.clone()),
            concept_id: Some(entry.concept_id.clone()),
            ontology_id: Some(ontology),
            score,
        }
    }
}

/// Two-stage lookup: exact on the normalized term, then the best fuzzy
/// candidate scoring at least `threshold` percent.
pub fn lookup(term: &str, table: &SynonymTable, threshold: f64) -> MatchResult {
    let norm = normalize(term);
    if norm.is_empty() {
        return MatchResult::none();
    }
    if let Some(e) = table.exact(&norm) {
        return MatchResult::hit(e, table.ontology_id, MatchKind::Exact, 100.0);
    }
    match table.fuzzy(&norm, threshold) {
        Some((e, score)) => MatchResult::hit(e, table.ontology_id, MatchKind::Fuzzy, score),
        None => MatchResult::none(),
    }
}
