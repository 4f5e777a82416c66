use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::QueryCombo;
use crate::catalog::Dimension;
use crate::error::{Error, Result};

/// The six query openers. The last one is reserved for the test split.
pub const DEFAULT_TEMPLATES: [&str; 6] = [
    "Give me papers about",
    "Can you show findings about",
    "Explore data related to",
    "Show me studies on",
    "What research exists on",
    "I'd like to know about",
];

pub const TEST_ONLY_TEMPLATE: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Connective {
    pub prefix: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suffix: Option<String>,
    /// Apply the suffix only when this dimension closes the query.
    #[serde(default)]
    pub suffix_when_last: bool,
}

impl Connective {
    fn new(prefix: &str, suffix: Option<&str>, suffix_when_last: bool) -> Self {
        Connective {
            prefix: prefix.into(),
            suffix: suffix.map(Into::into),
            suffix_when_last,
        }
    }
}

/// Templates plus the prefix/suffix phrases wrapped around each dimension term.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NlqRules {
    pub templates: Vec<String>,
    /// 1-based ids of templates that may only appear in the test split.
    pub test_only: BTreeSet<usize>,
    pub subject: String,
    pub order: Vec<Dimension>,
    pub connectives: BTreeMap<Dimension, Connective>,
}

impl Default for NlqRules {
    fn default() -> Self {
        let connectives = BTreeMap::from([
            (Dimension::Po, Connective::new("within", Some("population"), false)),
            (Dimension::Ti, Connective::new("from", None, false)),
            (Dimension::As, Connective::new("from", Some("assay"), true)),
            (Dimension::Ph, Connective::new("with", Some("observations"), true)),
        ]);
        NlqRules {
            templates: DEFAULT_TEMPLATES.iter().map(|s| s.to_string()).collect(),
            test_only: BTreeSet::from([TEST_ONLY_TEMPLATE]),
            subject: "cohorts".into(),
            order: vec![Dimension::Po, Dimension::Ti, Dimension::As, Dimension::Ph],
            connectives,
        }
    }
}

impl NlqRules {
    pub fn template_count(&self) -> usize {
        self.templates.len()
    }

    pub fn is_test_only(&self, template_id: usize) -> bool {
        self.test_only.contains(&template_id)
    }

    /// Template ids usable for training pairs.
    pub fn train_templates(&self) -> Vec<usize> {
        (1..=self.templates.len())
            .filter(|id| !self.is_test_only(*id))
            .collect()
    }

    pub fn all_templates(&self) -> Vec<usize> {
        (1..=self.templates.len()).collect()
    }
}

/// Renders `<template> <subject> <phrase>...` with phrases in rule order.
pub fn render_nlq(combo: &QueryCombo, template_id: usize, rules: &NlqRules) -> Result<String> {
    let template = template_id
        .checked_sub(1)
        .and_then(|i| rules.templates.get(i))
        .ok_or_else(|| Error::Input(format!("template {template_id} does not exist")))?;
    let dims: Vec<Dimension> = rules
        .order
        .iter()
        .copied()
        .filter(|d| combo.terms.contains_key(d))
        .collect();
    if dims.len() != combo.terms.len() {
        return Err(Error::Input("rule order does not cover every combo dimension".into()));
    }
    let mut parts = vec![template.trim().to_string(), rules.subject.clone()];
    for (i, dim) in dims.iter().enumerate() {
        let term = &combo.terms[dim];
        let last = i + 1 == dims.len();
        match rules.connectives.get(dim) {
            Some(c) => {
                if !c.prefix.is_empty() {
                    parts.push(c.prefix.clone());
                }
                parts.push(term.clone());
                if let Some(s) = &c.suffix {
                    if !c.suffix_when_last || last {
                        parts.push(s.clone());
                    }
                }
            }
            None => parts.push(term.clone()),
        }
    }
    Ok(parts
        .into_iter()
        .filter(|p| !p.is_empty())
        .collect::<Vec<_>>()
        .join(" "))
}
