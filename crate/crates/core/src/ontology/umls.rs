use std::collections::HashMap;
use std::io::BufRead;

use super::{normalize, OntologyId, SynonymTable};
use crate::error::{Error, Result};

/// Loads a precompiled `CUI<TAB>preferred label<TAB>synonym` dictionary.
/// Lines are grouped by CUI; the first preferred label seen for a CUI wins.
pub fn load_umls_dict<R: BufRead>(reader: R) -> Result<SynonymTable> {
    let mut table = SynonymTable::new(OntologyId::Umls);
    let mut labels: HashMap<String, String> = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(Error::parse(
                lineno,
                format!("expected 3 tab-separated columns, found {}", cols.len()),
            ));
        }
        let cui = cols[0].trim();
        if cui.is_empty() || normalize(cols[1]).is_empty() {
            return Err(Error::parse(lineno, "empty CUI or preferred label"));
        }
        let label = labels.entry(cui.to_string()).or_insert_with(|| cols[1].to_string());
        table.insert(cui, label, [cols[2]]);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn groups_by_cui() {
        let text = "C0030567\tParkinson Disease\tParkinson's disease\n\
                    C0030567\tParkinson Disease\tParalysis agitans\n\
                    C0030567\tParkinson Disease\tPD\n";
        let t = load_umls_dict(text.as_bytes()).unwrap();
        assert_eq!(t.len(), 1);
        let e = t.get("parkinson disease").unwrap();
        assert_eq!(e.concept_id, "C0030567");
        assert_eq!(e.synonyms.len(), 3);
    }

    #[test]
    fn empty_stream() {
        assert!(load_umls_dict("".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn duplicate_synonym_stored_once() {
        let text = "C1\tBrain\tencephalon\nC1\tBrain\tEncephalon\nC1\tBrain\tbrain\n";
        let t = load_umls_dict(text.as_bytes()).unwrap();
        assert_eq!(t.get("brain").unwrap().synonyms, ["encephalon"]);
    }

    #[test]
    fn wrong_column_count() {
        let text = "C1\tBrain\tencephalon\nC2\tonly two\n";
        match load_umls_dict(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
