use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{batch_loss, loss_gradient, LossConfig, TrainingBatch};
use super::{EmbeddingProvider, ProjectionHead};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub warmup_fraction: f64,
    pub eval_fraction: f64,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 2,
            warmup_fraction: 0.10,
            eval_fraction: 0.05,
            batch_size: 32,
            learning_rate: 0.05,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return Err(Error::Input(format!(
                "warmup fraction {} not in [0, 1)",
                self.warmup_fraction
            )));
        }
        if !(self.eval_fraction > 0.0 && self.eval_fraction <= 1.0) {
            return Err(Error::Input(format!(
                "eval fraction {} not in (0, 1]",
                self.eval_fraction
            )));
        }
        if self.batch_size < 2 {
            return Err(Error::Input("batch size must be at least 2".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Input(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Query text and the serialized text of its answering cohort.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainPair {
    pub anchor: String,
    pub positive: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub step: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LossCurve {
    pub points: Vec<CurvePoint>,
    pub total_steps: usize,
    /// Full training-set loss before the first and after the last step.
    pub initial_train_loss: Option<f64>,
    pub final_train_loss: Option<f64>,
}

impl LossCurve {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("step\ttrain_loss\tval_loss\n");
        for p in &self.points {
            let val = p.val_loss.map_or(String::new(), |v| format!("{v:.6}"));
            out.push_str(&format!("{}\t{:.6}\t{}\n", p.step, p.train_loss, val));
        }
        out
    }
}

struct Embedded {
    vectors: Vec<Vec<f64>>,
    pairs: Vec<(usize, usize)>,
}

fn embed_pairs(pairs: &[TrainPair], provider: &dyn EmbeddingProvider) -> Result<Embedded> {
    let mut ids: HashMap<&str, usize> = HashMap::new();
    let mut vectors = Vec::new();
    let mut out = Vec::with_capacity(pairs.len());
    for p in pairs {
        let mut side = [0usize; 2];
        for (slot, text) in side.iter_mut().zip([&p.anchor, &p.positive]) {
            *slot = match ids.get(text.as_str()) {
                Some(&i) => i,
                None => {
                    vectors.push(provider.embed_text(text)?.into_inner());
                    ids.insert(text, vectors.len() - 1);
                    vectors.len() - 1
                }
            };
        }
        out.push((side[0], side[1]));
    }
    Ok(Embedded { vectors, pairs: out })
}

/// Mean loss over consecutive batches in stored order, weighted by batch
/// size. A trailing batch of one is dropped.
fn full_loss(head: &ProjectionHead, data: &Embedded, batch_size: usize, config: &LossConfig) -> Result<Option<f64>> {
    let projected: Vec<Vec<f64>> = data
        .vectors
        .iter()
        .map(|v| head.project(v).map(|e| e.into_inner()))
        .collect::<Result<_>>()?;
    let (mut sum, mut count) = (0.0, 0usize);
    for chunk in data.pairs.chunks(batch_size) {
        if chunk.len() < 2 {
            continue;
        }
        let batch = TrainingBatch {
            anchors: chunk.iter().map(|&(a, _)| projected[a].clone()).collect(),
            positives: chunk.iter().map(|&(_, b)| projected[b].clone()).collect(),
        };
        sum += batch_loss(&batch, config)? * chunk.len() as f64;
        count += chunk.len();
    }
    Ok((count > 0).then(|| sum / count as f64))
}

/// Mini-batch gradient descent over shuffled pairs. The learning rate ramps
/// linearly over the first `warmup_fraction` of all steps, then stays
/// constant. Validation loss is recorded every `eval_fraction` of an epoch.
pub fn train(
    head: &ProjectionHead,
    train_set: &[TrainPair],
    provider: &dyn EmbeddingProvider,
    config: &TrainConfig,
    loss: &LossConfig,
    validation: Option<&[TrainPair]>,
) -> Result<(ProjectionHead, LossCurve)> {
    config.validate()?;
    loss.validate()?;
    if provider.dim() != head.d_in {
        return Err(Error::Shape {
            expected: head.d_in,
            actual: provider.dim(),
        });
    }
    let mut head = head.clone();
    if config.epochs == 0 {
        return Ok((head, LossCurve::default()));
    }
    if train_set.len() < 2 {
        return Err(Error::Input(format!(
            "training needs at least 2 pairs, got {}",
            train_set.len()
        )));
    }
    let data = embed_pairs(train_set, provider)?;
    let val = validation
        .filter(|v| v.len() >= 2)
        .map(|v| embed_pairs(v, provider))
        .transpose()?;

    let n = data.pairs.len();
    let steps_per_epoch = n / config.batch_size + usize::from(n % config.batch_size >= 2);
    let total_steps = steps_per_epoch * config.epochs;
    let warmup_steps = (config.warmup_fraction * total_steps as f64).round() as usize;
    let eval_every = ((config.eval_fraction * steps_per_epoch as f64).round() as usize).max(1);

    let mut curve = LossCurve {
        total_steps,
        initial_train_loss: full_loss(&head, &data, config.batch_size, loss)?,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let (mut step, mut acc, mut acc_n) = (0usize, 0.0, 0usize);
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            if chunk.len() < 2 {
                continue;
            }
            step += 1;
            let batch = TrainingBatch {
                anchors: chunk.iter().map(|&i| data.vectors[data.pairs[i].0].clone()).collect(),
                positives: chunk.iter().map(|&i| data.vectors[data.pairs[i].1].clone()).collect(),
            };
            let (l, grad) = loss_gradient(&head, &batch, loss)?;
            if !l.is_finite() {
                return Err(Error::Diverged { step, loss: l });
            }
            let lr = if step <= warmup_steps {
                config.learning_rate * step as f64 / warmup_steps as f64
            } else {
                config.learning_rate
            };
            grad.apply(&mut head, lr);
            if !head.is_finite() {
                return Err(Error::Diverged { step, loss: f64::NAN });
            }
            acc += l;
            acc_n += 1;
            if step % eval_every == 0 || step == total_steps {
                let val_loss = match &val {
                    Some(v) => full_loss(&head, v, config.batch_size, loss)?,
                    None => None,
                };
                curve.points.push(CurvePoint {
                    step,
                    train_loss: acc / acc_n as f64,
                    val_loss,
                });
                acc = 0.0;
                acc_n = 0;
            }
        }
    }
    curve.final_train_loss = full_loss(&head, &data, config.batch_size, loss)?;
    Ok((head, curve))
}
