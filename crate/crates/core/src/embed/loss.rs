use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{cosine, dot, ProjectionHead};
use crate::error::{Error, Result};

pub const DEFAULT_SCALE: f64 = 20.0;
pub const DEFAULT_MARGIN: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossVariant {
    Infonce,
    Hinge,
}

impl fmt::Display for LossVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossVariant::Infonce => "infonce",
            LossVariant::Hinge => "hinge",
        })
    }
}

impl FromStr for LossVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "infonce" => Ok(LossVariant::Infonce),
            "hinge" => Ok(LossVariant::Hinge),
            _ => Err(Error::Input(format!("unknown loss {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub variant: LossVariant,
    pub scale: f64,
    pub margin: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            variant: LossVariant::Infonce,
            scale: DEFAULT_SCALE,
            margin: DEFAULT_MARGIN,
        }
    }
}

impl LossConfig {
    pub fn hinge(margin: f64) -> Self {
        LossConfig {
            variant: LossVariant::Hinge,
            margin,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::Input(format!("scale must be positive, got {}", self.scale)));
        }
        if !self.margin.is_finite() {
            return Err(Error::Input("margin must be finite".into()));
        }
        Ok(())
    }
}

/// Aligned anchors and positives; every other positive is an implicit
/// negative for a given anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingBatch {
    pub anchors: Vec<Vec<f64>>,
    pub positives: Vec<Vec<f64>>,
}

impl TrainingBatch {
    pub fn new(anchors: Vec<Vec<f64>>, positives: Vec<Vec<f64>>) -> Result<Self> {
        let b = TrainingBatch { anchors, positives };
        b.validate()?;
        Ok(b)
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    fn validate(&self) -> Result<()> {
        if self.anchors.len() != self.positives.len() {
            return Err(Error::Shape {
                expected: self.anchors.len(),
                actual: self.positives.len(),
            });
        }
        if self.anchors.len() < 2 {
            return Err(Error::Input(format!(
                "a batch needs at least 2 pairs, got {}",
                self.anchors.len()
            )));
        }
        Ok(())
    }

    fn similarities(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let mut s = Vec::with_capacity(self.len() * self.len());
        for q in &self.anchors {
            for p in &self.positives {
                s.push(cosine(q, p)?);
            }
        }
        Ok(s)
    }
}

/// Loss and its derivative with respect to each entry of the row-major
/// `P × P` similarity matrix (`sims[i*P + j] = cos(qᵢ, pⱼ)`).
pub fn loss_from_sims(sims: &[f64], p: usize, config: &LossConfig) -> Result<(f64, Vec<f64>)> {
    config.validate()?;
    if p < 2 || sims.len() != p * p {
        return Err(Error::Input(format!(
            "similarity matrix does not describe a batch of {p}"
        )));
    }
    let mut grad = vec![0.0; p * p];
    let mut loss = 0.0;
    match config.variant {
        LossVariant::Infonce => {
            let s = config.scale;
            for i in 0..p {
                let row = &sims[i * p..(i + 1) * p];
                // logits relative to the positive, so the separable case keeps precision
                let z: Vec<f64> = row.iter().map(|x| s * (x - row[i])).collect();
                let (jmax, m) = z
                    .iter()
                    .copied()
                    .enumerate()
                    .fold((i, z[i]), |acc, (j, v)| if v > acc.1 { (j, v) } else { acc });
                let rest: f64 = z
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != jmax)
                    .map(|(_, v)| (v - m).exp())
                    .sum();
                loss += m + rest.ln_1p();
                let denom = 1.0 + rest;
                for j in 0..p {
                    let softmax = (z[j] - m).exp() / denom;
                    let delta = if i == j { 1.0 } else { 0.0 };
                    grad[i * p + j] = s * (softmax - delta) / p as f64;
                }
            }
            loss /= p as f64;
        }
        LossVariant::Hinge => {
            for i in 0..p {
                for j in 0..p {
                    if i == j {
                        continue;
                    }
                    let arg = sims[i * p + j] - sims[i * p + i] + config.margin;
                    if arg > 0.0 {
                        loss += arg;
                        grad[i * p + j] += 1.0;
                        grad[i * p + i] -= 1.0;
                    }
                }
            }
        }
    }
    Ok((loss, grad))
}

pub fn infonce_loss(batch: &TrainingBatch, scale: f64) -> Result<f64> {
    let config = LossConfig {
        variant: LossVariant::Infonce,
        scale,
        ..Default::default()
    };
    batch_loss(batch, &config)
}

pub fn hinge_loss(batch: &TrainingBatch, margin: f64) -> Result<f64> {
    batch_loss(batch, &LossConfig::hinge(margin))
}

/// Loss of a batch of already-embedded vectors under cosine similarity.
pub fn batch_loss(batch: &TrainingBatch, config: &LossConfig) -> Result<f64> {
    let sims = batch.similarities()?;
    Ok(loss_from_sims(&sims, batch.len(), config)?.0)
}

/// Gradient with respect to the head parameters. Only rows touched by a
/// nonzero input coordinate are stored.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HeadGradient {
    pub rows: BTreeMap<usize, Vec<f64>>,
    pub bias: Option<Vec<f64>>,
}

impl HeadGradient {
    pub fn dense(&self, head: &ProjectionHead) -> Vec<f64> {
        let mut out = vec![0.0; head.parameter_count()];
        for (&a, row) in &self.rows {
            out[a * head.d_out..(a + 1) * head.d_out].copy_from_slice(row);
        }
        if let Some(b) = &self.bias {
            out[head.weights.len()..].copy_from_slice(b);
        }
        out
    }

    pub fn norm(&self) -> f64 {
        self.rows
            .values()
            .chain(self.bias.iter())
            .map(|r| dot(r, r))
            .sum::<f64>()
            .sqrt()
    }

    /// Gradient-descent step `θ ← θ − lr·g`.
    pub fn apply(&self, head: &mut ProjectionHead, lr: f64) {
        let d = head.d_out;
        for (&a, row) in &self.rows {
            for (w, g) in head.weights[a * d..(a + 1) * d].iter_mut().zip(row) {
                *w -= lr * g;
            }
        }
        if let (Some(b), Some(g)) = (head.bias.as_mut(), &self.bias) {
            for (w, g) in b.iter_mut().zip(g) {
                *w -= lr * g;
            }
        }
    }
}

struct Projected {
    unit: Vec<f64>,
    norm: f64,
}

fn project_with_norm(head: &ProjectionHead, x: &[f64]) -> Result<Projected> {
    let mut u = head.forward(x)?;
    let norm = dot(&u, &u).sqrt();
    if !(norm > 0.0) {
        return Err(Error::ZeroVector);
    }
    u.iter_mut().for_each(|v| *v /= norm);
    Ok(Projected { unit: u, norm })
}

/// Loss of the batch after projecting both sides through `head`, and its
/// analytic gradient with respect to the head.
pub fn loss_gradient(head: &ProjectionHead, batch: &TrainingBatch, config: &LossConfig) -> Result<(f64, HeadGradient)> {
    batch.validate()?;
    let p = batch.len();
    let q: Vec<Projected> = batch
        .anchors
        .iter()
        .map(|x| project_with_norm(head, x))
        .collect::<Result<_>>()?;
    let k: Vec<Projected> = batch
        .positives
        .iter()
        .map(|x| project_with_norm(head, x))
        .collect::<Result<_>>()?;
    let mut sims = Vec::with_capacity(p * p);
    for qi in &q {
        for pj in &k {
            sims.push(dot(&qi.unit, &pj.unit));
        }
    }
    let (loss, g_s) = loss_from_sims(&sims, p, config)?;

    let d = head.d_out;
    let mut grad = HeadGradient {
        rows: BTreeMap::new(),
        bias: head.bias.as_ref().map(|_| vec![0.0; d]),
    };
    let mut backprop = |x: &[f64], proj: &Projected, g: Vec<f64>| {
        // d(u/|u|)/du applied to g
        let wg = dot(&proj.unit, &g);
        let du: Vec<f64> = g
            .iter()
            .zip(&proj.unit)
            .map(|(gb, wb)| (gb - wb * wg) / proj.norm)
            .collect();
        for (a, &xa) in x.iter().enumerate() {
            if xa == 0.0 {
                continue;
            }
            let row = grad.rows.entry(a).or_insert_with(|| vec![0.0; d]);
            for (r, dub) in row.iter_mut().zip(&du) {
                *r += xa * dub;
            }
        }
        if let Some(b) = grad.bias.as_mut() {
            for (r, dub) in b.iter_mut().zip(&du) {
                *r += dub;
            }
        }
    };
    for i in 0..p {
        let mut g = vec![0.0; d];
        for j in 0..p {
            let c = g_s[i * p + j];
            if c != 0.0 {
                g.iter_mut().zip(&k[j].unit).for_each(|(a, b)| *a += c * b);
            }
        }
        backprop(&batch.anchors[i], &q[i], g);
    }
    for j in 0..p {
        let mut g = vec![0.0; d];
        for i in 0..p {
            let c = g_s[i * p + j];
            if c != 0.0 {
                g.iter_mut().zip(&q[i].unit).for_each(|(a, b)| *a += c * b);
            }
        }
        backprop(&batch.positives[j], &k[j], g);
    }
    Ok((loss, grad))
}
