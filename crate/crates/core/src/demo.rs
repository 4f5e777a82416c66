//! Synthetic neurodegeneration corpus used by the `demo` command and tests.
//!
//! Every concept has a stem token that is absent from its canonical label and
//! shared by all of its synonyms, so a head trained on some synonyms can
//! carry over to the held-out ones.

use std::collections::BTreeMap;
use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::catalog::{CohortRecord, Dimension};
use crate::ontology::OntologyId;

pub const DEMO_SEED: u64 = 7;
pub const DEMO_COHORTS: usize = 240;
pub const DEMO_OFF_TOPIC: usize = 12;
pub const DEMO_DISEASE: &str = "neurodegenerative disease";

struct Concept {
    dim: Dimension,
    source: OntologyId,
    id: &'static str,
    canonical: &'static str,
    stem: &'static str,
    weight: u32,
}

const fn c(
    dim: Dimension,
    source: OntologyId,
    id: &'static str,
    canonical: &'static str,
    stem: &'static str,
    weight: u32,
) -> Concept {
    Concept {
        dim,
        source,
        id,
        canonical,
        stem,
        weight,
    }
}

use Dimension::{As, Ph, Po, Ti};
use OntologyId::{Efo, Mesh, NcbiTaxon, Uberon, Umls};

const CONCEPTS: &[Concept] = &[
    c(Po, NcbiTaxon, "NCBITaxon_9606", "homo sapiens", "human", 48),
    c(Po, NcbiTaxon, "NCBITaxon_10090", "mus musculus", "murine", 20),
    c(Po, NcbiTaxon, "NCBITaxon_10116", "rattus norvegicus", "rat", 12),
    c(Po, NcbiTaxon, "NCBITaxon_9544", "macaca mulatta", "rhesus", 8),
    c(Po, NcbiTaxon, "NCBITaxon_7955", "danio rerio", "zebrafish", 12),
    c(
        As,
        Efo,
        "EFO_0002770",
        "transcription profiling by high throughput sequencing",
        "rnaseq",
        34,
    ),
    c(
        As,
        Efo,
        "EFO_0002768",
        "transcription profiling by array",
        "microarray",
        30,
    ),
    c(As, Efo, "EFO_0002759", "methylation profiling by array", "cpg", 12),
    c(As, Efo, "EFO_0008913", "single cell sequencing", "chromium", 12),
    c(
        As,
        Efo,
        "EFO_0002766",
        "protein profiling by mass spectrometry",
        "proteomics",
        12,
    ),
    c(Ph, Efo, "MONDO_0005180", "parkinson's disease", "pd", 30),
    c(Ph, Efo, "MONDO_0004975", "alzheimer's disease", "ad", 16),
    c(Ph, Efo, "MONDO_0007803", "multiple system atrophy", "msa", 8),
    c(Ph, Efo, "MONDO_0004976", "amyotrophic lateral sclerosis", "als", 10),
    c(Ph, Efo, "MONDO_0007739", "huntington's disease", "hd", 8),
    c(Ph, Mesh, "D020961", "lewy body disease", "dlb", 8),
    c(Ph, Mesh, "D013494", "progressive supranuclear palsy", "psp", 6),
    c(Ph, Mesh, "D006262", "healthy", "ctrl", 14),
    c(Ti, Uberon, "UBERON_0002038", "substantia nigra", "nigral", 20),
    c(Ti, Uberon, "UBERON_0002435", "striatum", "striatal", 12),
    c(Ti, Uberon, "UBERON_0000956", "cerebral cortex", "cortical", 14),
    c(Ti, Uberon, "UBERON_0002037", "cerebellum", "cerebellar", 8),
    c(Ti, Uberon, "UBERON_0001954", "hippocampus", "hippocampal", 10),
    c(Ti, Uberon, "UBERON_0000178", "blood", "pbmc", 12),
    c(Ti, Uberon, "UBERON_0001891", "midbrain", "mesencephalic", 10),
    c(Ti, Umls, "C0037925", "spinal cord", "myelon", 8),
    c(Ti, Umls, "C0034169", "putamen", "putaminal", 6),
];

fn tails(dim: Dimension) -> [&'static str; 4] {
    match dim {
        Po => ["model", "donor", "specimen", "strain"],
        As => ["assay", "profiling", "experiment", "panel"],
        Ph => ["patient", "case", "subject", "group"],
        Ti => ["region", "tissue", "area", "zone"],
    }
}

const UNMAPPED: &[&str] = &["not specified", "unknown", "mixed", "other"];

/// Synonyms of a concept: the bare stem plus the stem with each tail word.
pub fn synonyms_of(dim: Dimension, stem: &str) -> Vec<String> {
    std::iter::once(stem.to_string())
        .chain(tails(dim).iter().map(|t| format!("{stem} {t}")))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemoCorpus {
    pub catalog_jsonl: String,
    pub disease_terms_json: String,
    /// File name inside the ontology directory and its contents.
    pub ontology_files: BTreeMap<&'static str, String>,
}

fn owl(concepts: &[&Concept]) -> String {
    let mut s = String::from(
        "<?xml version=\"1.0\"?>\n<rdf:RDF xmlns:rdf=\"http://www.w3.org/1999/02/22-rdf-syntax-ns#\"\n    \
         xmlns:rdfs=\"http://www.w3.org/2000/01/rdf-schema#\"\n    xmlns:owl=\"http://www.w3.org/2002/07/owl#\"\n    \
         xmlns:oboInOwl=\"http://www.geneontology.org/formats/oboInOwl#\">\n",
    );
    for c in concepts {
        writeln!(s, "  <owl:Class rdf:about=\"http://purl.obolibrary.org/obo/{}\">", c.id).unwrap();
        writeln!(s, "    <rdfs:label>{}</rdfs:label>", c.canonical).unwrap();
        for syn in synonyms_of(c.dim, c.stem) {
            writeln!(s, "    <oboInOwl:hasExactSynonym>{syn}</oboInOwl:hasExactSynonym>").unwrap();
        }
        s.push_str("  </owl:Class>\n");
    }
    s.push_str("</rdf:RDF>\n");
    s
}

fn mesh(concepts: &[&Concept]) -> String {
    let mut s = String::from("<?xml version=\"1.0\"?>\n<DescriptorRecordSet>\n");
    for c in concepts {
        writeln!(s, "  <DescriptorRecord>\n    <DescriptorUI>{}</DescriptorUI>", c.id).unwrap();
        writeln!(
            s,
            "    <DescriptorName><String>{}</String></DescriptorName>",
            c.canonical
        )
        .unwrap();
        s.push_str("    <ConceptList><Concept><TermList>\n");
        for syn in synonyms_of(c.dim, c.stem) {
            writeln!(s, "      <Term><String>{syn}</String></Term>").unwrap();
        }
        s.push_str("    </TermList></Concept></ConceptList>\n  </DescriptorRecord>\n");
    }
    s.push_str("</DescriptorRecordSet>\n");
    s
}

fn umls(concepts: &[&Concept]) -> String {
    let mut s = String::new();
    for c in concepts {
        for syn in synonyms_of(c.dim, c.stem) {
            writeln!(s, "{}\t{}\t{syn}", c.id, c.canonical).unwrap();
        }
    }
    s
}

fn pick<'a>(rng: &mut ChaCha8Rng, dim: Dimension) -> &'a Concept {
    let pool: Vec<&Concept> = CONCEPTS.iter().filter(|c| c.dim == dim).collect();
    pool.choose_weighted(rng, |c| c.weight).expect("non-empty pool")
}

/// A raw spelling of a concept: mostly canonical, sometimes a synonym, a
/// one-letter typo, a case/spacing variant, or an unmappable placeholder.
fn raw_value(rng: &mut ChaCha8Rng, c: &Concept) -> String {
    let r: f64 = rng.gen();
    if r < 0.55 {
        c.canonical.to_string()
    } else if r < 0.75 {
        synonyms_of(c.dim, c.stem).choose(rng).unwrap().clone()
    } else if r < 0.85 && c.canonical.len() >= 8 {
        let chars: Vec<char> = c.canonical.chars().collect();
        let drop = rng.gen_range(1..chars.len() - 1);
        chars
            .iter()
            .enumerate()
            .filter(|(i, ch)| *i != drop || **ch == ' ')
            .map(|(_, ch)| ch)
            .collect()
    } else if r < 0.95 {
        let upper: String = c
            .canonical
            .split(' ')
            .map(|w| {
                let mut cs = w.chars();
                cs.next()
                    .map(|f| f.to_uppercase().chain(cs).collect::<String>())
                    .unwrap_or_default()
            })
            .collect::<Vec<_>>()
            .join("  ");
        format!(" {upper} ")
    } else {
        UNMAPPED.choose(rng).unwrap().to_string()
    }
}

fn distinct_concepts(rng: &mut ChaCha8Rng, dim: Dimension, n: usize) -> Vec<&'static Concept> {
    let mut out: Vec<&Concept> = Vec::new();
    while out.len() < n {
        let c = pick(rng, dim);
        if !out.iter().any(|o| o.id == c.id) {
            out.push(c);
        }
    }
    out
}

fn cohort(rng: &mut ChaCha8Rng, i: usize) -> CohortRecord {
    let po = pick(rng, Po);
    let n_as = if rng.gen_bool(0.1) { 2 } else { 1 };
    let as_ = distinct_concepts(rng, As, n_as);
    let n_ph = if rng.gen_bool(0.3) { 2 } else { 1 };
    let ph = distinct_concepts(rng, Ph, n_ph);
    let n_ti = if rng.gen_bool(0.25) { 2 } else { 1 };
    let ti = distinct_concepts(rng, Ti, n_ti);
    let mut r = CohortRecord::new(
        format!("GSE{}", 100_000 + i),
        format!(
            "Expression study {} of {} in {}",
            i + 1,
            ph[0].canonical,
            ti[0].canonical
        ),
    );
    r.summary = format!(
        "Samples were collected for this series. The cohort covers {} with matched clinical data. \
         All data are available from the repository.",
        ph.iter().map(|c| c.canonical).collect::<Vec<_>>().join(" and ")
    );
    r.disease = ph[0].canonical.to_string();
    if i.is_multiple_of(3) {
        r.pmid = Some(format!("{}", 30_000_000 + i * 17));
        r.publication_title = Some(format!("Molecular profiling of {}", ph[0].canonical));
    }
    r.po = vec![raw_value(rng, po)];
    r.as_ = as_.iter().map(|c| raw_value(rng, c)).collect();
    r.ph = ph.iter().map(|c| raw_value(rng, c)).collect();
    r.ti = ti.iter().map(|c| raw_value(rng, c)).collect();
    r
}

fn off_topic(rng: &mut ChaCha8Rng, i: usize) -> CohortRecord {
    let topics = ["hepatocellular carcinoma", "type 2 diabetes", "asthma"];
    let topic = topics[i % topics.len()];
    let mut r = CohortRecord::new(
        format!("GSE{}", 200_000 + i),
        format!("Transcriptome of {topic} biopsies"),
    );
    r.summary = format!("Samples were collected. This series studies {topic}. Data are public.");
    r.disease = topic.to_string();
    r.po = vec![raw_value(rng, &CONCEPTS[0])];
    r.as_ = vec![raw_value(rng, &CONCEPTS[6])];
    r.ph = vec![topic.to_string()];
    r.ti = vec!["liver".into()];
    r
}

/// Builds the corpus deterministically from `seed`.
pub fn demo_corpus(seed: u64) -> DemoCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records: Vec<CohortRecord> = (0..DEMO_COHORTS).map(|i| cohort(&mut rng, i)).collect();
    for i in 0..DEMO_OFF_TOPIC {
        let r = off_topic(&mut rng, i);
        let at = rng.gen_range(0..=records.len());
        records.insert(at, r);
    }
    let mut catalog_jsonl = String::new();
    for r in &records {
        catalog_jsonl.push_str(&serde_json::to_string(r).expect("record serializes"));
        catalog_jsonl.push('\n');
    }

    let by = |src: OntologyId| -> Vec<&Concept> { CONCEPTS.iter().filter(|c| c.source == src).collect() };
    let mut ontology_files = BTreeMap::new();
    ontology_files.insert("efo.owl", owl(&by(Efo)));
    ontology_files.insert("uberon.owl", owl(&by(Uberon)));
    ontology_files.insert("ncbitaxon.owl", owl(&by(NcbiTaxon)));
    ontology_files.insert("mesh.xml", mesh(&by(Mesh)));
    ontology_files.insert("umls.tsv", umls(&by(Umls)));

    let terms: Vec<&str> = CONCEPTS.iter().filter(|c| c.dim == Ph).map(|c| c.canonical).collect();
    let disease_terms_json =
        serde_json::to_string_pretty(&BTreeMap::from([(DEMO_DISEASE, terms)])).expect("term map serializes");

    DemoCorpus {
        catalog_jsonl,
        disease_terms_json,
        ontology_files,
    }
}

/// Canonical labels and synonyms per dimension, as the ontologies state them.
pub fn demo_vocabulary() -> BTreeMap<Dimension, BTreeMap<&'static str, Vec<String>>> {
    let mut out: BTreeMap<Dimension, BTreeMap<&str, Vec<String>>> = BTreeMap::new();
    for c in CONCEPTS {
        out.entry(c.dim)
            .or_default()
            .insert(c.canonical, synonyms_of(c.dim, c.stem));
    }
    out
}
