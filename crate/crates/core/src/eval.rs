//! R-precision and mean percentile rank over a held-out QA set.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::embed::{EmbeddingProvider, ProjectionHead};
use crate::error::{Error, Result};
use crate::index::VectorIndex;
use crate::qagen::QaPair;

pub const HIST_BINS: usize = 20;
pub const HIST_WIDTH: f64 = 0.05;

fn positions(ranking: &[String]) -> HashMap<&str, usize> {
    let mut pos = HashMap::with_capacity(ranking.len());
    for (i, a) in ranking.iter().enumerate() {
        pos.entry(a.as_str()).or_insert(i);
    }
    pos
}

fn distinct(relevant: &[String]) -> Result<Vec<&str>> {
    let mut seen = HashSet::new();
    let out: Vec<&str> = relevant
        .iter()
        .map(String::as_str)
        .filter(|a| seen.insert(*a))
        .collect();
    if out.is_empty() {
        return Err(Error::Input("relevant set is empty".into()));
    }
    Ok(out)
}

fn rank_of(pos: &HashMap<&str, usize>, accession: &str) -> Result<usize> {
    pos.get(accession)
        .map(|i| i + 1)
        .ok_or_else(|| Error::Integrity(accession.to_string()))
}

/// Fraction of the top-R ranked items that are relevant, R = |relevant|.
pub fn retrieval_precision(ranking: &[String], relevant: &[String]) -> Result<f64> {
    let rel = distinct(relevant)?;
    let pos = positions(ranking);
    let r = rel.len();
    let mut hits = 0;
    for a in &rel {
        if rank_of(&pos, a)? <= r {
            hits += 1;
        }
    }
    Ok(hits as f64 / r as f64)
}

fn percentile(rank: usize, total: usize) -> f64 {
    if total <= 1 {
        1.0
    } else {
        1.0 - (rank - 1) as f64 / (total - 1) as f64
    }
}

/// `1 − (r − 1)/(Total − 1)`: 1.0 at the top, 0.0 at the bottom.
pub fn percentile_rank(ranking: &[String], accession: &str) -> Result<f64> {
    let r = rank_of(&positions(ranking), accession)?;
    Ok(percentile(r, ranking.len()))
}

pub fn mean_percentile_rank(ranking: &[String], relevant: &[String]) -> Result<f64> {
    let rel = distinct(relevant)?;
    let pos = positions(ranking);
    let mut sum = 0.0;
    for a in &rel {
        sum += percentile(rank_of(&pos, a)?, ranking.len());
    }
    Ok(sum / rel.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryEvaluation {
    pub nlq: String,
    pub accession: String,
    pub n_terms: usize,
    pub n_relevant: usize,
    /// 1-based ranks of the relevant cohorts, ascending.
    pub relevant_ranks: Vec<usize>,
    pub precision: f64,
    pub mpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub count: usize,
    pub mean_precision: f64,
    pub mean_mpr: f64,
    pub precision_hist: Vec<usize>,
    pub mpr_hist: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub total_cohorts: usize,
    pub count: usize,
    pub mean_precision: f64,
    pub mean_mpr: f64,
    pub bin_width: f64,
    pub by_n_terms: BTreeMap<usize, GroupSummary>,
    pub queries: Vec<QueryEvaluation>,
}

fn bin(v: f64) -> usize {
    ((v / HIST_WIDTH).floor().max(0.0) as usize).min(HIST_BINS - 1)
}

fn summarize<'a>(rows: impl Iterator<Item = &'a QueryEvaluation>) -> GroupSummary {
    let mut g = GroupSummary {
        count: 0,
        mean_precision: 0.0,
        mean_mpr: 0.0,
        precision_hist: vec![0; HIST_BINS],
        mpr_hist: vec![0; HIST_BINS],
    };
    let (mut sp, mut sm) = (0.0, 0.0);
    for q in rows {
        g.count += 1;
        sp += q.precision;
        sm += q.mpr;
        g.precision_hist[bin(q.precision)] += 1;
        g.mpr_hist[bin(q.mpr)] += 1;
    }
    if g.count > 0 {
        g.mean_precision = sp / g.count as f64;
        g.mean_mpr = sm / g.count as f64;
    }
    g
}

impl EvalReport {
    pub fn from_queries(total_cohorts: usize, queries: Vec<QueryEvaluation>) -> Result<Self> {
        if queries.is_empty() {
            return Err(Error::EmptyReport);
        }
        let all = summarize(queries.iter());
        let mut by_n_terms = BTreeMap::new();
        for k in 1..=4 {
            let g = summarize(queries.iter().filter(|q| q.n_terms == k));
            if g.count > 0 {
                by_n_terms.insert(k, g);
            }
        }
        Ok(EvalReport {
            total_cohorts,
            count: all.count,
            mean_precision: all.mean_precision,
            mean_mpr: all.mean_mpr,
            bin_width: HIST_WIDTH,
            by_n_terms,
            queries,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Summary table: one row per n_terms group plus the overall row.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("n_terms\tcount\tmean_precision\tmean_mpr\n");
        for (k, g) in &self.by_n_terms {
            out.push_str(&format!(
                "{k}\t{}\t{:.6}\t{:.6}\n",
                g.count, g.mean_precision, g.mean_mpr
            ));
        }
        out.push_str(&format!(
            "all\t{}\t{:.6}\t{:.6}\n",
            self.count, self.mean_precision, self.mean_mpr
        ));
        out
    }
}

/// Embeds and projects each test query, ranks every indexed cohort and
/// scores the ranking against the pair's full set of matching cohorts.
pub fn evaluate(
    head: &ProjectionHead,
    provider: &dyn EmbeddingProvider,
    index: &VectorIndex,
    test_set: &[QaPair],
) -> Result<EvalReport> {
    if test_set.is_empty() {
        return Err(Error::EmptyReport);
    }
    let mut rows = Vec::with_capacity(test_set.len());
    for pair in test_set {
        let q = head.project(provider.embed_text(&pair.nlq)?.values())?;
        let ranking: Vec<String> = index.rank_all(q.values())?.into_iter().map(|h| h.accession).collect();
        let pos = positions(&ranking);
        let rel = distinct(&pair.all_matching)?;
        let mut relevant_ranks = rel.iter().map(|a| rank_of(&pos, a)).collect::<Result<Vec<_>>>()?;
        relevant_ranks.sort_unstable();
        rows.push(QueryEvaluation {
            nlq: pair.nlq.clone(),
            accession: pair.accession.clone(),
            n_terms: pair.n_terms,
            n_relevant: rel.len(),
            precision: retrieval_precision(&ranking, &pair.all_matching)?,
            mpr: mean_percentile_rank(&ranking, &pair.all_matching)?,
            relevant_ranks,
        });
    }
    EvalReport::from_queries(index.len(), rows)
}
