use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::augment::AugmentedVocabulary;
use crate::catalog::Dimension;
use crate::error::{Error, Result};

pub type DimensionTerms = BTreeMap<Dimension, BTreeSet<String>>;

/// Disjoint train/test term sets, stratified by dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitVocabulary {
    pub train_vals: DimensionTerms,
    pub test_vals: DimensionTerms,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl SplitVocabulary {
    pub fn train_count(&self) -> usize {
        self.train_vals.values().map(BTreeSet::len).sum()
    }

    pub fn test_count(&self) -> usize {
        self.test_vals.values().map(BTreeSet::len).sum()
    }

    pub fn in_train(&self, dim: Dimension, term: &str) -> bool {
        self.train_vals.get(&dim).is_some_and(|s| s.contains(term))
    }

    pub fn in_test(&self, dim: Dimension, term: &str) -> bool {
        self.test_vals.get(&dim).is_some_and(|s| s.contains(term))
    }
}

/// Per-dimension train quotas. Each dimension gets floor or ceil of
/// `ratio * n`, with the extra units going to the largest remainders so the
/// total equals `round(ratio * sum(n))`. Ties go to the earlier dimension.
pub fn apportion(sizes: &[usize], ratio: f64) -> Vec<usize> {
    let exact: Vec<f64> = sizes.iter().map(|&n| ratio * n as f64).collect();
    let mut quota: Vec<usize> = exact.iter().map(|x| (x + 1e-9).floor() as usize).collect();
    let total: usize = sizes.iter().sum();
    let target = (ratio * total as f64).round() as usize;
    let assigned: usize = quota.iter().sum();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - quota[a] as f64;
        let rb = exact[b] - quota[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(target.saturating_sub(assigned)) {
        if quota[i] < sizes[i] {
            quota[i] += 1;
        }
    }
    quota
}

/// Shuffles each dimension's terms with a seeded generator and assigns a
/// `ratio` share to training. A string that also occurs in an earlier
/// dimension inherits that dimension's side, keeping the sets globally
/// disjoint. Dimensions with fewer than two terms go entirely to training.
pub fn stratified_split(vocab: &AugmentedVocabulary, ratio: f64, seed: u64) -> Result<SplitVocabulary> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Input(format!("split ratio {ratio} is not in (0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut owner: HashMap<String, Dimension> = HashMap::new();
    let mut own: BTreeMap<Dimension, Vec<String>> = BTreeMap::new();
    let mut inherited: BTreeMap<Dimension, Vec<String>> = BTreeMap::new();
    for dim in Dimension::ALL {
        for t in vocab.terms(dim) {
            if owner.contains_key(&t) {
                inherited.entry(dim).or_default().push(t);
            } else {
                owner.insert(t.clone(), dim);
                own.entry(dim).or_default().push(t);
            }
        }
    }

    let mut warnings = Vec::new();
    let mut eligible = Vec::new();
    for dim in Dimension::ALL {
        let n = own.get(&dim).map_or(0, Vec::len);
        if n >= 2 {
            eligible.push(dim);
        } else if n == 1 {
            warnings.push(format!("{dim} has a single term; it is kept for training"));
        }
    }
    let sizes: Vec<usize> = eligible.iter().map(|d| own[d].len()).collect();
    let quotas: BTreeMap<Dimension, usize> = eligible.iter().copied().zip(apportion(&sizes, ratio)).collect();

    let mut train_vals = DimensionTerms::new();
    let mut test_vals = DimensionTerms::new();
    let mut side: HashMap<String, bool> = HashMap::new();
    for dim in Dimension::ALL {
        let mut terms = own.remove(&dim).unwrap_or_default();
        let quota = quotas.get(&dim).copied().unwrap_or(terms.len());
        terms.shuffle(&mut rng);
        for (i, t) in terms.into_iter().enumerate() {
            let is_train = i < quota;
            side.insert(t.clone(), is_train);
            let target = if is_train { &mut train_vals } else { &mut test_vals };
            target.entry(dim).or_default().insert(t);
        }
        for t in inherited.remove(&dim).unwrap_or_default() {
            let target = if side[&t] { &mut train_vals } else { &mut test_vals };
            target.entry(dim).or_default().insert(t);
        }
    }
    Ok(SplitVocabulary {
        train_vals,
        test_vals,
        seed,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::VocabEntry;
    use crate::ontology::{MatchKind, OntologyId};

    fn vocab(sizes: &[(Dimension, usize)]) -> AugmentedVocabulary {
        let mut dims = BTreeMap::new();
        for &(dim, n) in sizes {
            let mut entries = BTreeMap::new();
            // one canonical carrying n - 1 synonyms
            if n > 0 {
                entries.insert(
                    format!("{dim}-c"),
                    VocabEntry {
                        synonyms: (1..n).map(|i| format!("{dim}-s{i}")).collect(),
                        source: OntologyId::Mesh,
                        kind: MatchKind::Exact,
                    },
                );
            }
            dims.insert(dim, entries);
        }
        AugmentedVocabulary::from(dims)
    }

    #[test]
    fn large_vocabulary_totals() {
        // 105 + 51 + 292 + 326 = 774 terms
        let q = apportion(&[105, 51, 292, 326], 0.8);
        assert_eq!(q.iter().sum::<usize>(), 619);
        assert_eq!(q, [84, 41, 233, 261]);
        let v = vocab(&[
            (Dimension::Po, 105),
            (Dimension::As, 51),
            (Dimension::Ph, 292),
            (Dimension::Ti, 326),
        ]);
        let s = stratified_split(&v, 0.8, 1).unwrap();
        assert_eq!(s.train_count(), 619);
        assert_eq!(s.test_count(), 155);
    }

    #[test]
    fn ten_terms_split_eight_two() {
        let s = stratified_split(&vocab(&[(Dimension::Ti, 10)]), 0.8, 3).unwrap();
        assert_eq!(s.train_vals[&Dimension::Ti].len(), 8);
        assert_eq!(s.test_vals[&Dimension::Ti].len(), 2);
    }

    #[test]
    fn deterministic_per_seed() {
        let v = vocab(&[(Dimension::Ti, 30), (Dimension::Ph, 12)]);
        assert_eq!(
            stratified_split(&v, 0.8, 9).unwrap(),
            stratified_split(&v, 0.8, 9).unwrap()
        );
        assert_ne!(
            stratified_split(&v, 0.8, 9).unwrap(),
            stratified_split(&v, 0.8, 10).unwrap()
        );
    }

    #[test]
    fn single_term_dimension_goes_to_train() {
        let s = stratified_split(&vocab(&[(Dimension::Po, 1), (Dimension::Ti, 5)]), 0.8, 0).unwrap();
        assert_eq!(s.train_vals[&Dimension::Po].len(), 1);
        assert!(!s.test_vals.contains_key(&Dimension::Po));
        assert_eq!(s.warnings.len(), 1);
    }

    #[test]
    fn shared_strings_stay_on_one_side() {
        let mut dims = BTreeMap::new();
        for dim in [Dimension::Ph, Dimension::Ti] {
            let mut entries = BTreeMap::new();
            for i in 0..6 {
                entries.insert(
                    format!("shared{i}"),
                    VocabEntry {
                        synonyms: vec![format!("{dim}-only{i}")],
                        source: OntologyId::Mesh,
                        kind: MatchKind::Exact,
                    },
                );
            }
            dims.insert(dim, entries);
        }
        let s = stratified_split(&AugmentedVocabulary::from(dims), 0.8, 5).unwrap();
        let all_train: BTreeSet<&String> = s.train_vals.values().flatten().collect();
        let all_test: BTreeSet<&String> = s.test_vals.values().flatten().collect();
        assert!(all_train.is_disjoint(&all_test));
    }

    #[test]
    fn rejects_bad_ratio() {
        assert!(stratified_split(&vocab(&[]), 1.0, 0).is_err());
        assert!(stratified_split(&vocab(&[]), 0.0, 0).is_err());
    }
}
