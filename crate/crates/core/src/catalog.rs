//! Cohort data model, catalog ingestion and the disease-specific filter.
//!
//! A catalog dump is line-delimited JSON, one flat object per cohort:
//!
//! ```text
//! {"accession":"GSE7621","title":"...","summary":"...","pmid":"19295912",
//!  "publication_title":"...","disease":"Parkinson's disease",
//!  "po":["Homo sapiens"],"as":["RNA-seq"],"ph":["PD"],"ti":["substantia nigra"]}
//! ```

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// The four metadata axes every cohort is described along.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Dimension {
    Po,
    As,
    Ph,
    Ti,
}

impl Dimension {
    pub const ALL: [Dimension; 4] = [Dimension::Po, Dimension::As, Dimension::Ph, Dimension::Ti];

    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::Po => "Po",
            Dimension::As => "As",
            Dimension::Ph => "Ph",
            Dimension::Ti => "Ti",
        }
    }

    pub fn index(self) -> usize {
        match self {
            Dimension::Po => 0,
            Dimension::As => 1,
            Dimension::Ph => 2,
            Dimension::Ti => 3,
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dimension {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "po" => Ok(Dimension::Po),
            "as" => Ok(Dimension::As),
            "ph" => Ok(Dimension::Ph),
            "ti" => Ok(Dimension::Ti),
            other => Err(Error::Input(format!("unknown dimension `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CohortRecord {
    pub accession: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub summary: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pmid: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub publication_title: Option<String>,
    #[serde(default)]
    pub disease: String,
    #[serde(default)]
    pub po: Vec<String>,
    #[serde(default, rename = "as")]
    pub as_: Vec<String>,
    #[serde(default)]
    pub ph: Vec<String>,
    #[serde(default)]
    pub ti: Vec<String>,
}

impl CohortRecord {
    pub fn new(accession: impl Into<String>, title: impl Into<String>) -> Self {
        CohortRecord {
            accession: accession.into(),
            title: title.into(),
            summary: String::new(),
            pmid: None,
            publication_title: None,
            disease: String::new(),
            po: Vec::new(),
            as_: Vec::new(),
            ph: Vec::new(),
            ti: Vec::new(),
        }
    }

    pub fn values(&self, dim: Dimension) -> &[String] {
        match dim {
            Dimension::Po => &self.po,
            Dimension::As => &self.as_,
            Dimension::Ph => &self.ph,
            Dimension::Ti => &self.ti,
        }
    }

    pub fn values_mut(&mut self, dim: Dimension) -> &mut Vec<String> {
        match dim {
            Dimension::Po => &mut self.po,
            Dimension::As => &mut self.as_,
            Dimension::Ph => &mut self.ph,
            Dimension::Ti => &mut self.ti,
        }
    }

    /// Text used as the answer side of a query/cohort pair.
    pub fn serialize_text(&self) -> String {
        format!(
            "{}. Po: {}; As: {}; Ph: {}; Ti: {}",
            self.title.trim_end_matches('.'),
            self.po.join(", "),
            self.as_.join(", "),
            self.ph.join(", "),
            self.ti.join(", ")
        )
    }

    fn validate(&mut self) -> std::result::Result<(), String> {
        if self.accession.trim().is_empty() {
            return Err("empty accession".into());
        }
        for opt in [&mut self.pmid, &mut self.publication_title] {
            if opt.as_deref().is_some_and(|s| s.trim().is_empty()) {
                *opt = None;
            }
        }
        for dim in Dimension::ALL {
            if self.values(dim).iter().any(|v| v.trim().is_empty()) {
                return Err(format!("empty string in `{}` list", dim.as_str().to_lowercase()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CohortCatalog {
    pub records: Vec<CohortRecord>,
    pub source_digest: String,
}

impl CohortCatalog {
    /// Builds a catalog from in-memory records, enforcing the same invariants as
    /// [`parse_catalog`].
    pub fn from_records(records: Vec<CohortRecord>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(records.len());
        for (i, mut r) in records.into_iter().enumerate() {
            r.validate().map_err(|m| Error::parse(i + 1, m))?;
            if !seen.insert(r.accession.clone()) {
                return Err(Error::DuplicateAccession(r.accession));
            }
            out.push(r);
        }
        let mut hasher = Sha256::new();
        for r in &out {
            hasher.update(serde_json::to_vec(r)?);
            hasher.update(b"\n");
        }
        Ok(CohortCatalog {
            records: out,
            source_digest: hex::encode(hasher.finalize()),
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, accession: &str) -> Option<&CohortRecord> {
        self.records.iter().find(|r| r.accession == accession)
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }
}

/// Reads a line-delimited catalog dump. Blank lines are ignored.
pub fn parse_catalog<R: BufRead>(mut reader: R) -> Result<CohortCatalog> {
    let mut hasher = Sha256::new();
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    let mut line = String::new();
    let mut lineno = 0;
    loop {
        line.clear();
        let n = reader
            .read_line(&mut line)
            .map_err(|e| Error::parse(lineno + 1, e.to_string()))?;
        if n == 0 {
            break;
        }
        lineno += 1;
        hasher.update(line.as_bytes());
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut record: CohortRecord =
            serde_json::from_str(trimmed).map_err(|e| Error::parse(lineno, e.to_string()))?;
        record.validate().map_err(|m| Error::parse(lineno, m))?;
        if !seen.insert(record.accession.clone()) {
            return Err(Error::DuplicateAccession(record.accession));
        }
        records.push(record);
    }
    Ok(CohortCatalog {
        records,
        source_digest: hex::encode(hasher.finalize()),
    })
}

/// MeSH terms and synonyms that identify one disease.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiseaseTermSet {
    pub disease: String,
    pub terms: Vec<String>,
}

impl DiseaseTermSet {
    /// The canonical label is always added to `terms` if missing.
    pub fn new(disease: impl Into<String>, terms: impl IntoIterator<Item = impl Into<String>>) -> Result<Self> {
        let disease = disease.into();
        if disease.trim().is_empty() {
            return Err(Error::Input("disease label is empty".into()));
        }
        let mut out: Vec<String> = Vec::new();
        let mut seen = HashSet::new();
        for t in std::iter::once(disease.clone()).chain(terms.into_iter().map(Into::into)) {
            let t = t.trim().to_string();
            if !t.is_empty() && seen.insert(fold(&t)) {
                out.push(t);
            }
        }
        Ok(DiseaseTermSet { disease, terms: out })
    }

    /// Parses a `{disease: [terms...]}` JSON mapping, ordered by disease label.
    pub fn load_map(text: &str) -> Result<Vec<DiseaseTermSet>> {
        let map: BTreeMap<String, Vec<String>> = serde_json::from_str(text)?;
        map.into_iter().map(|(d, t)| DiseaseTermSet::new(d, t)).collect()
    }

    /// Merges several term sets into one under `disease`.
    pub fn union(disease: &str, sets: &[DiseaseTermSet]) -> Result<Self> {
        DiseaseTermSet::new(
            disease,
            sets.iter().flat_map(|s| s.terms.iter().cloned()).collect::<Vec<_>>(),
        )
    }
}

/// Lowercases and folds typographic apostrophes so "Parkinson’s" matches "Parkinson's".
fn fold(s: &str) -> String {
    s.chars()
        .map(|c| match c {
            '\u{2019}' | '\u{2018}' | '\u{02BC}' => '\'',
            c => c,
        })
        .collect::<String>()
        .to_lowercase()
}

/// Splits text into sentences at `.`, `!` or `?` followed by whitespace or
/// end of text. Abbreviations are not special-cased.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if matches!(c, '.' | '!' | '?') {
            let at_boundary = match chars.peek() {
                None => true,
                Some(&(_, next)) => next.is_whitespace(),
            };
            if at_boundary {
                let end = i + c.len_utf8();
                let s = text[start..end].trim();
                if !s.is_empty() {
                    out.push(s);
                }
                start = end;
            }
        }
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(tail);
    }
    out
}

/// Drops the first and last sentence of an abstract. Two or fewer sentences
/// leave nothing.
pub fn strip_boilerplate(summary: &str) -> String {
    let sentences = split_sentences(summary);
    if sentences.len() <= 2 {
        return String::new();
    }
    sentences[1..sentences.len() - 1].join(" ")
}

/// Case-insensitive substring search that refuses matches inside a longer token.
pub fn contains_term(haystack: &str, term: &str) -> bool {
    let hay = fold(haystack);
    let needle = fold(term.trim());
    contains_folded(&hay, &needle)
}

fn contains_folded(hay: &str, needle: &str) -> bool {
    if needle.is_empty() {
        return false;
    }
    let first_alnum = needle.chars().next().is_some_and(char::is_alphanumeric);
    let last_alnum = needle.chars().next_back().is_some_and(char::is_alphanumeric);
    hay.match_indices(needle).any(|(i, m)| {
        let before_ok = !first_alnum || hay[..i].chars().next_back().is_none_or(|c| !c.is_alphanumeric());
        let after_ok = !last_alnum || hay[i + m.len()..].chars().next().is_none_or(|c| !c.is_alphanumeric());
        before_ok && after_ok
    })
}

/// Whether a record mentions any disease term in its title, publication
/// title or abstract body.
pub fn mentions_disease(record: &CohortRecord, terms: &DiseaseTermSet) -> bool {
    let folded: Vec<String> = terms.terms.iter().map(|t| fold(t.trim())).collect();
    record_matches(record, &folded)
}

fn record_matches(record: &CohortRecord, folded_terms: &[String]) -> bool {
    let mut fields = vec![fold(&record.title)];
    if let Some(pt) = &record.publication_title {
        fields.push(fold(pt));
    }
    fields.push(fold(&strip_boilerplate(&record.summary)));
    fields
        .iter()
        .any(|f| folded_terms.iter().any(|t| contains_folded(f, t)))
}

/// Keeps the records that mention at least one disease term. Order is preserved.
pub fn filter_disease(catalog: &CohortCatalog, terms: &DiseaseTermSet) -> CohortCatalog {
    let folded: Vec<String> = terms.terms.iter().map(|t| fold(t.trim())).collect();
    CohortCatalog {
        records: catalog
            .records
            .iter()
            .filter(|r| record_matches(r, &folded))
            .cloned()
            .collect(),
        source_digest: catalog.source_digest.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(acc: &str, title: &str, summary: &str) -> String {
        serde_json::json!({
            "accession": acc, "title": title, "summary": summary,
            "disease": "Parkinson's disease",
            "po": ["Homo sapiens"], "as": [], "ph": [], "ti": ["substantia nigra"]
        })
        .to_string()
    }

    fn pd_terms() -> DiseaseTermSet {
        DiseaseTermSet::new(
            "Parkinson's disease",
            ["Idiopathic Parkinson's Disease", "Parkinson Disease", "PD"],
        )
        .unwrap()
    }

    #[test]
    fn empty_stream_is_empty_catalog() {
        let c = parse_catalog("".as_bytes()).unwrap();
        assert!(c.is_empty());
    }

    #[test]
    fn preserves_input_order() {
        let text = format!("{}\n{}\n", line("GSE2", "b", ""), line("GSE1", "a", ""));
        let c = parse_catalog(text.as_bytes()).unwrap();
        let accs: Vec<_> = c.records.iter().map(|r| r.accession.as_str()).collect();
        assert_eq!(accs, ["GSE2", "GSE1"]);
        assert_eq!(c.records[0].ti, ["substantia nigra"]);
        assert_eq!(c.records[0].pmid, None);
    }

    #[test]
    fn duplicate_accession_is_named() {
        let text = format!("{}\n{}\n", line("GSE1", "a", ""), line("GSE1", "b", ""));
        match parse_catalog(text.as_bytes()) {
            Err(Error::DuplicateAccession(a)) => assert_eq!(a, "GSE1"),
            other => panic!("expected duplication error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = format!("{}\n{{not json\n", line("GSE1", "a", ""));
        match parse_catalog(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_list_entry_is_rejected() {
        let text = r#"{"accession":"GSE1","ti":["brain",""]}"#;
        assert!(matches!(
            parse_catalog(text.as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn empty_optional_becomes_absent() {
        let text = r#"{"accession":"GSE1","pmid":"","publication_title":"  "}"#;
        let c = parse_catalog(text.as_bytes()).unwrap();
        assert_eq!(c.records[0].pmid, None);
        assert_eq!(c.records[0].publication_title, None);
    }

    #[test]
    fn boilerplate_examples() {
        assert_eq!(strip_boilerplate("A. B. C."), "B.");
        assert_eq!(strip_boilerplate("A. B."), "");
        assert_eq!(strip_boilerplate(""), "");
        assert_eq!(strip_boilerplate("One! Two? Three. Four"), "Two? Three.");
    }

    #[test]
    fn sentence_split_needs_trailing_whitespace() {
        assert_eq!(split_sentences("v1.2 is out. Next"), ["v1.2 is out.", "Next"]);
    }

    #[test]
    fn disease_in_title_is_retained() {
        let mut r = CohortRecord::new("GSE1", "Idiopathic Parkinson's Disease cohort");
        r.summary = "Nothing. Here. Either.".into();
        assert!(mentions_disease(&r, &pd_terms()));
    }

    #[test]
    fn first_sentence_mention_is_dropped() {
        let mut r = CohortRecord::new("GSE1", "Brain expression atlas");
        r.summary = "This study is about Parkinson's disease. We sequenced tissue. Data are public.".into();
        assert!(!mentions_disease(&r, &pd_terms()));
    }

    #[test]
    fn publication_title_counts() {
        let mut r = CohortRecord::new("GSE1", "Brain expression atlas");
        r.publication_title = Some("Transcriptomics of parkinson disease".into());
        assert!(mentions_disease(&r, &pd_terms()));
    }

    #[test]
    fn word_boundaries_are_required() {
        assert!(!contains_term("ADenosine signalling", "AD"));
        assert!(contains_term("early-onset AD cases", "AD"));
        assert!(contains_term("Parkinson’s disease brains", "parkinson's disease"));
        assert!(!contains_term("PDGF receptor", "PD"));
    }

    #[test]
    fn canonical_label_is_a_term() {
        let t = DiseaseTermSet::new("Alzheimer Disease", Vec::<String>::new()).unwrap();
        assert_eq!(t.terms, ["Alzheimer Disease"]);
        let map = DiseaseTermSet::load_map(r#"{"PD": ["Parkinson Disease"], "AD": []}"#).unwrap();
        assert_eq!(map.len(), 2);
        assert_eq!(map[0].disease, "AD");
    }

    fn arb_record() -> impl Strategy<Value = CohortRecord> {
        let words = prop::sample::select(vec![
            "brain",
            "parkinson",
            "disease",
            "cohort",
            "PD",
            "study",
            "cortex",
            "nigra",
        ]);
        (
            prop::collection::vec(words.clone(), 1..6),
            prop::collection::vec(prop::collection::vec(words, 1..5), 0..5),
            any::<u32>(),
        )
            .prop_map(|(title, sentences, id)| {
                let mut r = CohortRecord::new(format!("GSE{id}"), title.join(" "));
                r.summary = sentences
                    .iter()
                    .map(|s| format!("{}.", s.join(" ")))
                    .collect::<Vec<_>>()
                    .join(" ");
                r
            })
    }

    proptest! {
        #[test]
        fn filter_is_idempotent_subsequence(records in prop::collection::vec(arb_record(), 0..20)) {
            let mut seen = HashSet::new();
            let records: Vec<_> = records.into_iter().filter(|r| seen.insert(r.accession.clone())).collect();
            let catalog = CohortCatalog::from_records(records).unwrap();
            let once = filter_disease(&catalog, &pd_terms());
            let twice = filter_disease(&once, &pd_terms());
            prop_assert_eq!(&once, &twice);
            let mut it = catalog.records.iter();
            for kept in &once.records {
                prop_assert!(it.any(|r| r == kept));
            }
        }

        #[test]
        fn stripped_text_omits_edge_sentences(n in 3usize..8) {
            let sentences: Vec<String> = (0..n).map(|i| format!("Sentence number w{i}x.")).collect();
            let text = sentences.join(" ");
            let out = strip_boilerplate(&text);
            prop_assert!(!out.contains(&sentences[0]));
            prop_assert!(!out.contains(&sentences[n - 1]));
        }
    }
}
