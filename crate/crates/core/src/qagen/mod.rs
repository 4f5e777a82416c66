//! Question-answering dataset generation from the augmented vocabulary.
//!
//! The vocabulary is split into disjoint train/test term sets, combinations
//! of one to four terms from distinct dimensions are matched against the
//! normalized catalog, and every answerable combination becomes a templated
//! natural-language query paired with one of its answering cohorts.

mod render;
mod split;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::augment::AugmentedVocabulary;
use crate::catalog::{CohortCatalog, Dimension};
use crate::error::{Error, Result};

pub use render::{render_nlq, Connective, NlqRules, DEFAULT_TEMPLATES, TEST_ONLY_TEMPLATE};
pub use split::{apportion, stratified_split, DimensionTerms, SplitVocabulary};

pub const DEFAULT_RATIO: f64 = 0.8;
pub const DEFAULT_BUDGET: usize = 2000;
pub const DEFAULT_SUBSAMPLE_FACTOR: usize = 4;

/// One term for each of `k` distinct dimensions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QueryCombo {
    pub terms: BTreeMap<Dimension, String>,
}

impl QueryCombo {
    pub fn k(&self) -> usize {
        self.terms.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaPair {
    pub nlq: String,
    pub accession: String,
    pub all_matching: Vec<String>,
    pub terms: QueryCombo,
    pub n_terms: usize,
    pub template_id: usize,
    pub split: Split,
}

/// An answerable combination with its sampled answer and full ground truth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComboMatch {
    pub combo: QueryCombo,
    pub accession: String,
    pub all_matching: Vec<String>,
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Inverted index from canonical value to the records carrying it.
struct Postings<'a> {
    catalog: &'a CohortCatalog,
    by_dim: BTreeMap<Dimension, HashMap<&'a str, Vec<usize>>>,
}

impl<'a> Postings<'a> {
    fn new(catalog: &'a CohortCatalog) -> Self {
        let mut by_dim: BTreeMap<Dimension, HashMap<&str, Vec<usize>>> = BTreeMap::new();
        for (i, r) in catalog.records.iter().enumerate() {
            for dim in Dimension::ALL {
                for v in r.values(dim) {
                    let list = by_dim.entry(dim).or_default().entry(v.as_str()).or_default();
                    if list.last() != Some(&i) {
                        list.push(i);
                    }
                }
            }
        }
        Postings { catalog, by_dim }
    }

    fn matching(&self, combo: &QueryCombo, vocab: &AugmentedVocabulary) -> Vec<String> {
        let mut acc: Option<Vec<usize>> = None;
        for (dim, term) in &combo.terms {
            let canonical = vocab.resolve(*dim, term).unwrap_or(term);
            let list = self
                .by_dim
                .get(dim)
                .and_then(|m| m.get(canonical))
                .map(Vec::as_slice)
                .unwrap_or(&[]);
            acc = Some(match acc {
                None => list.to_vec(),
                Some(prev) => prev.into_iter().filter(|i| list.binary_search(i).is_ok()).collect(),
            });
            if acc.as_ref().is_some_and(Vec::is_empty) {
                break;
            }
        }
        acc.unwrap_or_default()
            .into_iter()
            .map(|i| self.catalog.records[i].accession.clone())
            .collect()
    }
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Draws `budget` distinct indices from `0..space`, or all of them when the
/// space is no larger than the budget. Output is sorted.
fn sample_indices(rng: &mut ChaCha8Rng, space: u128, budget: usize) -> Vec<u128> {
    if space <= budget as u128 {
        return (0..space).collect();
    }
    let mut picks: Vec<u128> = if space <= usize::MAX as u128 {
        index::sample(rng, space as usize, budget)
            .into_iter()
            .map(|i| i as u128)
            .collect()
    } else {
        let mut seen = HashSet::new();
        while seen.len() < budget {
            seen.insert(rng.gen_range(0..space));
        }
        seen.into_iter().collect()
    };
    picks.sort_unstable();
    picks
}

/// Samples term combinations for k = 1..4 and keeps those answered by at
/// least one cohort. A term matches a record when its canonical form is among
/// the record's values for that dimension. At most `budget` combinations are
/// drawn per k, without replacement; smaller spaces are enumerated fully.
pub fn enumerate_pairs(
    vals: &DimensionTerms,
    vocab: &AugmentedVocabulary,
    catalog: &CohortCatalog,
    seed: u64,
    budget: usize,
) -> Vec<ComboMatch> {
    let postings = Postings::new(catalog);
    let dims: Vec<(Dimension, Vec<&String>)> = Dimension::ALL
        .iter()
        .filter_map(|d| {
            let terms: Vec<&String> = vals.get(d)?.iter().collect();
            (!terms.is_empty()).then_some((*d, terms))
        })
        .collect();

    let mut out = Vec::new();
    for k in 1..=4u64 {
        let mut sample_rng = stream_rng(seed, 2 * k);
        let mut choice_rng = stream_rng(seed, 2 * k + 1);
        let groups = subsets(dims.len(), k as usize);
        let sizes: Vec<u128> = groups
            .iter()
            .map(|g| g.iter().map(|&i| dims[i].1.len() as u128).product())
            .collect();
        let space: u128 = sizes.iter().sum();
        for mut idx in sample_indices(&mut sample_rng, space, budget) {
            let mut g = 0;
            while idx >= sizes[g] {
                idx -= sizes[g];
                g += 1;
            }
            let mut terms = BTreeMap::new();
            for &di in groups[g].iter().rev() {
                let (dim, list) = &dims[di];
                let n = list.len() as u128;
                terms.insert(*dim, list[(idx % n) as usize].clone());
                idx /= n;
            }
            let combo = QueryCombo { terms };
            let all_matching = postings.matching(&combo, vocab);
            if all_matching.is_empty() {
                continue;
            }
            let accession = all_matching[choice_rng.gen_range(0..all_matching.len())].clone();
            out.push(ComboMatch {
                combo,
                accession,
                all_matching,
            });
        }
    }
    out
}

/// Whether every term of the combo belongs to `vals` in its dimension.
pub fn uses_only(vals: &DimensionTerms, combo: &QueryCombo) -> bool {
    combo
        .terms
        .iter()
        .all(|(d, t)| vals.get(d).is_some_and(|s| s.contains(t)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QaConfig {
    pub ratio: f64,
    pub seed: u64,
    pub budget: usize,
}

impl Default for QaConfig {
    fn default() -> Self {
        QaConfig {
            ratio: DEFAULT_RATIO,
            seed: 0,
            budget: DEFAULT_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QaDataset {
    pub split: SplitVocabulary,
    pub train: Vec<QaPair>,
    pub test: Vec<QaPair>,
}

/// Split, enumerate over each side, render one templated query per pair and
/// partition: training keeps pairs built only from training terms and never
/// the test-only template; test keeps pairs built only from test terms.
pub fn generate_qad(
    vocab: &AugmentedVocabulary,
    catalog: &CohortCatalog,
    config: &QaConfig,
    rules: &NlqRules,
) -> Result<QaDataset> {
    let split = stratified_split(vocab, config.ratio, config.seed)?;
    let train_ids = rules.train_templates();
    let all_ids = rules.all_templates();
    if train_ids.is_empty() {
        return Err(Error::Input("every template is test-only".into()));
    }

    let mut final_qa = Vec::new();
    for (side, vals, ids, stream) in [
        (Split::Train, &split.train_vals, &train_ids, 100),
        (Split::Test, &split.test_vals, &all_ids, 101),
    ] {
        let side_seed = config.seed.wrapping_add(stream);
        let mut template_rng = stream_rng(config.seed, stream);
        for m in enumerate_pairs(vals, vocab, catalog, side_seed, config.budget) {
            let template_id = ids[template_rng.gen_range(0..ids.len())];
            final_qa.push(QaPair {
                nlq: render_nlq(&m.combo, template_id, rules)?,
                accession: m.accession,
                all_matching: m.all_matching,
                n_terms: m.combo.k(),
                terms: m.combo,
                template_id,
                split: side,
            });
        }
    }

    let (mut train, mut test) = (Vec::new(), Vec::new());
    for p in final_qa {
        if uses_only(&split.train_vals, &p.terms) && !rules.is_test_only(p.template_id) {
            train.push(QaPair {
                split: Split::Train,
                ..p
            });
        } else if uses_only(&split.test_vals, &p.terms) {
            test.push(QaPair {
                split: Split::Test,
                ..p
            });
        }
    }
    Ok(QaDataset { split, train, test })
}

/// Uniform subsample without replacement to `min(len, factor * test_size)`,
/// keeping the original order.
pub fn subsample_train(train: &[QaPair], test_size: usize, factor: usize, seed: u64) -> Vec<QaPair> {
    let target = train.len().min(factor.saturating_mul(test_size));
    if target == train.len() {
        return train.to_vec();
    }
    let mut rng = stream_rng(seed, 200);
    let mut picks = index::sample(&mut rng, train.len(), target).into_vec();
    picks.sort_unstable();
    picks.into_iter().map(|i| train[i].clone()).collect()
}

pub fn write_jsonl(pairs: &[QaPair]) -> Result<String> {
    let mut out = String::new();
    for p in pairs {
        out.push_str(&serde_json::to_string(p)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn read_jsonl(text: &str) -> Result<Vec<QaPair>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::parse(i + 1, e.to_string())))
        .collect()
}
