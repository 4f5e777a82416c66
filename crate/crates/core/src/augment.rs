//! Per-dimension ontology normalization and synonym expansion.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::catalog::{CohortCatalog, CohortRecord, Dimension};
use crate::error::{Error, Result};
use crate::ontology::{lookup, normalize, MatchKind, MatchResult, OntologyId, SynonymTable};

/// Ontology tables plus the order in which each dimension consults them.
#[derive(Debug, Clone)]
pub struct OntologyRegistry {
    tables: Vec<SynonymTable>,
    routes: BTreeMap<Dimension, Vec<usize>>,
}

impl OntologyRegistry {
    /// Default routing: Po→NCBI Taxonomy, As→EFO, Ph→EFO, Ti→UBERON, each
    /// falling back to MeSH then UMLS. Absent tables are skipped.
    pub fn new(tables: Vec<SynonymTable>) -> Result<Self> {
        let mut seen = HashSet::new();
        for t in &tables {
            if !seen.insert(t.ontology_id) {
                return Err(Error::Input(format!("ontology {} loaded twice", t.ontology_id)));
            }
        }
        let mut reg = OntologyRegistry {
            tables,
            routes: BTreeMap::new(),
        };
        use OntologyId::*;
        reg.set_route(Dimension::Po, &[NcbiTaxon, Mesh, Umls]);
        reg.set_route(Dimension::As, &[Efo, Mesh, Umls]);
        reg.set_route(Dimension::Ph, &[Efo, Mesh, Umls]);
        reg.set_route(Dimension::Ti, &[Uberon, Mesh, Umls]);
        Ok(reg)
    }

    /// Replaces the lookup order for one dimension.
    pub fn set_route(&mut self, dim: Dimension, order: &[OntologyId]) {
        let idx = order
            .iter()
            .filter_map(|id| self.tables.iter().position(|t| t.ontology_id == *id))
            .collect();
        self.routes.insert(dim, idx);
    }

    pub fn route(&self, dim: Dimension) -> impl Iterator<Item = &SynonymTable> {
        self.routes.get(&dim).into_iter().flatten().map(|&i| &self.tables[i])
    }

    pub fn route_ids(&self, dim: Dimension) -> Vec<OntologyId> {
        self.route(dim).map(|t| t.ontology_id).collect()
    }

    pub fn table(&self, id: OntologyId) -> Option<&SynonymTable> {
        self.tables.iter().find(|t| t.ontology_id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedTerm {
    pub raw: String,
    pub canonical: Option<String>,
    pub dimension: Dimension,
    #[serde(rename = "match")]
    pub match_: MatchResult,
}

/// Walks the dimension's route; the first table that yields an exact or
/// fuzzy hit wins and later tables are not consulted.
pub fn normalize_term(raw: &str, dimension: Dimension, registry: &OntologyRegistry, threshold: f64) -> NormalizedTerm {
    let hit = registry
        .route(dimension)
        .map(|t| lookup(raw, t, threshold))
        .find(|m| m.matched)
        .unwrap_or_else(MatchResult::none);
    NormalizedTerm {
        raw: raw.to_string(),
        canonical: hit.canonical.clone(),
        dimension,
        match_: hit,
    }
}

/// Synonyms of the concept whose canonical label is `canonical`, taken from
/// the first table on the route that holds it.
pub fn expand_synonyms(canonical: &str, dimension: Dimension, registry: &OntologyRegistry) -> Result<Vec<String>> {
    registry
        .route(dimension)
        .find_map(|t| t.get(canonical))
        .map(|e| e.synonyms.clone())
        .ok_or_else(|| Error::LookupMiss {
            term: canonical.to_string(),
            dimension: dimension.to_string(),
        })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabEntry {
    pub synonyms: Vec<String>,
    pub source: OntologyId,
    pub kind: MatchKind,
}

/// Canonical labels and their synonyms per dimension. Within a dimension
/// every string (canonical or synonym) occurs once.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "BTreeMap<Dimension, BTreeMap<String, VocabEntry>>")]
#[serde(into = "BTreeMap<Dimension, BTreeMap<String, VocabEntry>>")]
pub struct AugmentedVocabulary {
    dims: BTreeMap<Dimension, BTreeMap<String, VocabEntry>>,
    resolve: BTreeMap<Dimension, HashMap<String, String>>,
}

impl From<BTreeMap<Dimension, BTreeMap<String, VocabEntry>>> for AugmentedVocabulary {
    fn from(dims: BTreeMap<Dimension, BTreeMap<String, VocabEntry>>) -> Self {
        let mut resolve: BTreeMap<Dimension, HashMap<String, String>> = BTreeMap::new();
        for (dim, entries) in &dims {
            let map = resolve.entry(*dim).or_default();
            for canonical in entries.keys() {
                map.insert(canonical.clone(), canonical.clone());
            }
            for (canonical, e) in entries {
                for s in &e.synonyms {
                    map.entry(s.clone()).or_insert_with(|| canonical.clone());
                }
            }
        }
        AugmentedVocabulary { dims, resolve }
    }
}

impl From<AugmentedVocabulary> for BTreeMap<Dimension, BTreeMap<String, VocabEntry>> {
    fn from(v: AugmentedVocabulary) -> Self {
        v.dims
    }
}

impl AugmentedVocabulary {
    pub fn entries(&self, dim: Dimension) -> impl Iterator<Item = (&String, &VocabEntry)> {
        self.dims.get(&dim).into_iter().flatten()
    }

    pub fn canonical_count(&self, dim: Dimension) -> usize {
        self.dims.get(&dim).map_or(0, BTreeMap::len)
    }

    /// Every canonical and synonym of a dimension, sorted.
    pub fn terms(&self, dim: Dimension) -> Vec<String> {
        let mut out: Vec<String> = self
            .resolve
            .get(&dim)
            .map(|m| m.keys().cloned().collect())
            .unwrap_or_default();
        out.sort();
        out
    }

    pub fn total_terms(&self) -> usize {
        self.resolve.values().map(HashMap::len).sum()
    }

    /// Maps a canonical or synonym back to its canonical label.
    pub fn resolve(&self, dim: Dimension, term: &str) -> Option<&str> {
        self.resolve.get(&dim)?.get(term).map(String::as_str)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceCounts {
    /// EFO, NCBI Taxonomy or UBERON.
    pub primary: usize,
    pub mesh: usize,
    pub umls: usize,
}

impl SourceCounts {
    pub fn total(&self) -> usize {
        self.primary + self.mesh + self.umls
    }

    fn add(&mut self, id: OntologyId) {
        match id {
            OntologyId::Mesh => self.mesh += 1,
            OntologyId::Umls => self.umls += 1,
            _ => self.primary += 1,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionStats {
    pub original_count: usize,
    pub no_match: usize,
    #[serde(rename = "match")]
    pub matched: usize,
    pub synonyms: usize,
    pub sources: SourceCounts,
    pub direct: usize,
    pub fuzzy: usize,
    pub final_count: usize,
    #[serde(default)]
    pub collisions: usize,
}

fn pct(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

impl DimensionStats {
    pub fn primary_pct(&self) -> f64 {
        pct(self.sources.primary, self.sources.total())
    }

    pub fn mesh_pct(&self) -> f64 {
        pct(self.sources.mesh, self.sources.total())
    }

    pub fn umls_pct(&self) -> f64 {
        pct(self.sources.umls, self.sources.total())
    }

    pub fn direct_pct(&self) -> f64 {
        pct(self.direct, self.direct + self.fuzzy)
    }

    pub fn fuzzy_pct(&self) -> f64 {
        pct(self.fuzzy, self.direct + self.fuzzy)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AugmentationStats {
    pub dims: BTreeMap<Dimension, DimensionStats>,
}

impl AugmentationStats {
    pub fn get(&self, dim: Dimension) -> DimensionStats {
        self.dims.get(&dim).copied().unwrap_or_default()
    }
}

/// Raw values per dimension, as stored next to a normalized record.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionValues {
    #[serde(default)]
    pub po: Vec<String>,
    #[serde(default, rename = "as")]
    pub as_: Vec<String>,
    #[serde(default)]
    pub ph: Vec<String>,
    #[serde(default)]
    pub ti: Vec<String>,
}

impl DimensionValues {
    pub fn get(&self, dim: Dimension) -> &[String] {
        match dim {
            Dimension::Po => &self.po,
            Dimension::As => &self.as_,
            Dimension::Ph => &self.ph,
            Dimension::Ti => &self.ti,
        }
    }

    pub fn get_mut(&mut self, dim: Dimension) -> &mut Vec<String> {
        match dim {
            Dimension::Po => &mut self.po,
            Dimension::As => &mut self.as_,
            Dimension::Ph => &mut self.ph,
            Dimension::Ti => &mut self.ti,
        }
    }

    fn of(record: &CohortRecord) -> Self {
        DimensionValues {
            po: record.po.clone(),
            as_: record.as_.clone(),
            ph: record.ph.clone(),
            ti: record.ti.clone(),
        }
    }
}

/// A cohort whose matched values have been rewritten to canonical labels.
/// Values with no ontology match stay verbatim and are listed in `unmapped`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedCohort {
    #[serde(flatten)]
    pub record: CohortRecord,
    pub raw: DimensionValues,
    pub unmapped: DimensionValues,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NormalizedCatalog {
    pub cohorts: Vec<NormalizedCohort>,
}

impl NormalizedCatalog {
    pub fn len(&self) -> usize {
        self.cohorts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cohorts.is_empty()
    }

    pub fn get(&self, accession: &str) -> Option<&NormalizedCohort> {
        self.cohorts.iter().find(|c| c.record.accession == accession)
    }

    pub fn records(&self) -> impl Iterator<Item = &CohortRecord> {
        self.cohorts.iter().map(|c| &c.record)
    }

    /// Rewritten records as a plain catalog.
    pub fn to_catalog(&self) -> Result<CohortCatalog> {
        CohortCatalog::from_records(self.records().cloned().collect())
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for c in &self.cohorts {
            out.push_str(&serde_json::to_string(c)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut cohorts = Vec::new();
        let mut seen = HashSet::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let c: NormalizedCohort = serde_json::from_str(line).map_err(|e| Error::parse(i + 1, e.to_string()))?;
            if !seen.insert(c.record.accession.clone()) {
                return Err(Error::DuplicateAccession(c.record.accession));
            }
            cohorts.push(c);
        }
        Ok(NormalizedCatalog { cohorts })
    }
}

#[derive(Debug, Clone)]
pub struct Augmentation {
    pub vocabulary: AugmentedVocabulary,
    pub stats: AugmentationStats,
    pub catalog: NormalizedCatalog,
    /// One entry per distinct raw value and dimension.
    pub terms: Vec<NormalizedTerm>,
}

/// Normalizes every distinct raw value once per dimension, rewrites the
/// records, builds the synonym vocabulary and tallies the report counts.
pub fn augment_catalog(catalog: &CohortCatalog, registry: &OntologyRegistry, threshold: f64) -> Result<Augmentation> {
    let mut vocab_dims = BTreeMap::new();
    let mut stats = AugmentationStats::default();
    let mut all_terms = Vec::new();
    let mut mapping: BTreeMap<Dimension, HashMap<String, Option<String>>> = BTreeMap::new();

    for dim in Dimension::ALL {
        // distinct by normalized form; the first spelling seen is kept as raw
        let mut distinct: BTreeMap<String, String> = BTreeMap::new();
        for r in &catalog.records {
            for v in r.values(dim) {
                let key = normalize(v);
                if !key.is_empty() {
                    distinct.entry(key).or_insert_with(|| v.clone());
                }
            }
        }

        let mut s = DimensionStats {
            original_count: distinct.len(),
            ..Default::default()
        };
        // canonical -> (source, any exact hit)
        let mut concepts: BTreeMap<String, (OntologyId, bool)> = BTreeMap::new();
        let dim_map = mapping.entry(dim).or_default();
        for (key, raw) in &distinct {
            let nt = normalize_term(raw, dim, registry, threshold);
            match (&nt.canonical, nt.match_.ontology_id) {
                (Some(c), Some(src)) => {
                    s.matched += 1;
                    s.sources.add(src);
                    let exact = nt.match_.kind == MatchKind::Exact;
                    if exact {
                        s.direct += 1;
                    } else {
                        s.fuzzy += 1;
                    }
                    let slot = concepts.entry(c.clone()).or_insert((src, exact));
                    slot.1 |= exact;
                    dim_map.insert(key.clone(), Some(c.clone()));
                }
                _ => {
                    s.no_match += 1;
                    dim_map.insert(key.clone(), None);
                }
            }
            all_terms.push(nt);
        }

        let mut taken: HashSet<String> = concepts.keys().cloned().collect();
        let mut entries = BTreeMap::new();
        for (canonical, (src, exact)) in &concepts {
            let table = registry.table(*src).expect("match source comes from the registry");
            let mut synonyms = Vec::new();
            for syn in table.get(canonical).map(|e| e.synonyms.as_slice()).unwrap_or(&[]) {
                let resolves_back = table.exact(syn).is_some_and(|e| &e.canonical == canonical);
                if resolves_back && taken.insert(syn.clone()) {
                    synonyms.push(syn.clone());
                } else {
                    s.collisions += 1;
                }
            }
            s.synonyms += synonyms.len();
            entries.insert(
                canonical.clone(),
                VocabEntry {
                    synonyms,
                    source: *src,
                    kind: if *exact { MatchKind::Exact } else { MatchKind::Fuzzy },
                },
            );
        }
        s.final_count = entries.len();
        vocab_dims.insert(dim, entries);
        stats.dims.insert(dim, s);
    }

    let cohorts = catalog
        .records
        .iter()
        .map(|r| {
            let mut record = r.clone();
            let mut unmapped = DimensionValues::default();
            for dim in Dimension::ALL {
                let dim_map = &mapping[&dim];
                let mut out: Vec<String> = Vec::new();
                for v in r.values(dim) {
                    let value = match dim_map.get(&normalize(v)) {
                        Some(Some(c)) => c.clone(),
                        _ => {
                            unmapped.get_mut(dim).push(v.clone());
                            v.clone()
                        }
                    };
                    if !out.contains(&value) {
                        out.push(value);
                    }
                }
                *record.values_mut(dim) = out;
            }
            NormalizedCohort {
                record,
                raw: DimensionValues::of(r),
                unmapped,
            }
        })
        .collect();

    Ok(Augmentation {
        vocabulary: AugmentedVocabulary::from(vocab_dims),
        stats,
        catalog: NormalizedCatalog { cohorts },
        terms: all_terms,
    })
}

/// Row order used by the summary table.
pub const REPORT_ORDER: [Dimension; 4] = [Dimension::Ti, Dimension::Po, Dimension::As, Dimension::Ph];

pub const REPORT_HEADER: [&str; 11] = [
    "Field",
    "Original Count",
    "No Match",
    "Match",
    "Synonyms",
    "EFO/NCBI/UBERON (%)",
    "MeSH (%)",
    "UMLS (%)",
    "Direct (%)",
    "Fuzzy (%)",
    "Final Count",
];

/// One report row: counts verbatim, shares as `count (pct)` with two decimals.
pub fn report_row(dim: Dimension, s: &DimensionStats) -> String {
    let cell = |n: usize, p: f64| format!("{n} ({p:.2})");
    [
        dim.to_string(),
        s.original_count.to_string(),
        s.no_match.to_string(),
        s.matched.to_string(),
        s.synonyms.to_string(),
        cell(s.sources.primary, s.primary_pct()),
        cell(s.sources.mesh, s.mesh_pct()),
        cell(s.sources.umls, s.umls_pct()),
        cell(s.direct, s.direct_pct()),
        cell(s.fuzzy, s.fuzzy_pct()),
        s.final_count.to_string(),
    ]
    .join("\t")
}

/// Tab-separated synonym-augmentation summary, one row per dimension.
pub fn augmentation_report(stats: &AugmentationStats) -> String {
    let mut out = REPORT_HEADER.join("\t");
    out.push('\n');
    for dim in REPORT_ORDER {
        let _ = writeln!(out, "{}", report_row(dim, &stats.get(dim)));
    }
    out
}
