//! File-level pipeline steps and the serving snapshot.

use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::augment::{AugmentationStats, AugmentedVocabulary, NormalizedCatalog, OntologyRegistry};
use crate::catalog::{parse_catalog, CohortCatalog, CohortRecord};
use crate::embed::{
    read_model, write_model, EmbeddingProvider, HashedTokenProvider, ModelFile, ProjectionHead, TrainPair,
};
use crate::error::{Error, Result};
use crate::index::{build_index, index_from_bytes, index_to_bytes, VectorIndex};
use crate::ontology::{load_umls_dict, parse_mesh_concepts, parse_owl_synonyms, OntologyId, SynonymTable};
use crate::qagen::QaPair;

pub const CATALOG_FILE: &str = "catalog.jsonl";
pub const VOCAB_FILE: &str = "vocabulary.json";
pub const STATS_FILE: &str = "augmentation_stats.json";
pub const MODEL_FILE: &str = "model.json";
pub const INDEX_FILE: &str = "index.bin";

/// Ontology files looked up inside an ontology directory.
pub const ONTOLOGY_FILES: [(OntologyId, &str); 5] = [
    (OntologyId::Efo, "efo.owl"),
    (OntologyId::Uberon, "uberon.owl"),
    (OntologyId::NcbiTaxon, "ncbitaxon.owl"),
    (OntologyId::Mesh, "mesh.xml"),
    (OntologyId::Umls, "umls.tsv"),
];

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| Error::io(&dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

pub fn load_catalog(path: &Path) -> Result<CohortCatalog> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_catalog(BufReader::new(f))
}

/// Loads every known ontology file present in `dir`.
pub fn load_ontologies(dir: &Path) -> Result<OntologyRegistry> {
    if !dir.is_dir() {
        return Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "ontology directory not found"),
        ));
    }
    let mut tables: Vec<SynonymTable> = Vec::new();
    for (id, name) in ONTOLOGY_FILES {
        let path = dir.join(name);
        if !path.exists() {
            continue;
        }
        let text = read_text(&path)?;
        let table = match id {
            OntologyId::Mesh => parse_mesh_concepts(&text),
            OntologyId::Umls => load_umls_dict(text.as_bytes()),
            _ => parse_owl_synonyms(&text, id).map(|p| {
                if p.skipped_unlabeled > 0 {
                    tracing::warn!("{}: skipped {} unlabeled classes", path.display(), p.skipped_unlabeled);
                }
                p.table
            }),
        }
        .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        tables.push(table);
    }
    if tables.is_empty() {
        return Err(Error::Input(format!("no ontology files found in {}", dir.display())));
    }
    OntologyRegistry::new(tables)
}

/// Projected embeddings of every record's serialized text.
pub fn cohort_index<'a>(
    head: &ProjectionHead,
    provider: &dyn EmbeddingProvider,
    records: impl IntoIterator<Item = &'a CohortRecord>,
) -> Result<VectorIndex> {
    let mut entries = Vec::new();
    for r in records {
        let v = head.project(provider.embed_text(&r.serialize_text())?.values())?;
        entries.push((r.accession.clone(), v));
    }
    build_index(head.d_out, &entries)
}

/// Query text paired with the serialized text of its answer cohort.
pub fn training_pairs(pairs: &[QaPair], catalog: &CohortCatalog) -> Result<Vec<TrainPair>> {
    pairs
        .iter()
        .map(|p| {
            let r = catalog
                .get(&p.accession)
                .ok_or_else(|| Error::Integrity(p.accession.clone()))?;
            Ok(TrainPair {
                anchor: p.nlq.clone(),
                positive: r.serialize_text(),
            })
        })
        .collect()
}

/// Everything a serving process answers from.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub catalog: NormalizedCatalog,
    pub vocabulary: AugmentedVocabulary,
    pub stats: AugmentationStats,
    pub model: ModelFile,
    pub head: ProjectionHead,
    pub provider: HashedTokenProvider,
    pub index: VectorIndex,
    pub dir: PathBuf,
}

impl Snapshot {
    pub fn load(dir: &Path) -> Result<Self> {
        let catalog = NormalizedCatalog::from_jsonl(&read_text(&dir.join(CATALOG_FILE))?)?;
        let vocabulary = read_json(&dir.join(VOCAB_FILE))?;
        let stats = read_json(&dir.join(STATS_FILE))?;
        let model = read_model(&read_text(&dir.join(MODEL_FILE))?)?;
        let head = model.head()?;
        let provider = HashedTokenProvider::from_id(&model.provider_id, model.d_in)?;
        let index = index_from_bytes(&read_bytes(&dir.join(INDEX_FILE))?)?;
        if index.dim() != head.d_out {
            return Err(Error::Shape {
                expected: head.d_out,
                actual: index.dim(),
            });
        }
        if let Some(missing) = index.ids().iter().find(|a| catalog.get(a).is_none()) {
            return Err(Error::Integrity(missing.clone()));
        }
        Ok(Snapshot {
            catalog,
            vocabulary,
            stats,
            model,
            head,
            provider,
            index,
            dir: dir.to_path_buf(),
        })
    }

    /// Writes the snapshot files into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        write_atomic(&dir.join(CATALOG_FILE), self.catalog.to_jsonl()?.as_bytes())?;
        write_json(&dir.join(VOCAB_FILE), &self.vocabulary)?;
        write_json(&dir.join(STATS_FILE), &self.stats)?;
        write_atomic(&dir.join(MODEL_FILE), write_model(&self.model)?.as_bytes())?;
        write_atomic(&dir.join(INDEX_FILE), &index_to_bytes(&self.index))
    }
}
