//! Base embeddings, the trainable projection head, contrastive losses and
//! the training loop.

mod loss;
mod model;
mod train;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use loss::{
    batch_loss, hinge_loss, infonce_loss, loss_from_sims, loss_gradient, HeadGradient, LossConfig, LossVariant,
    TrainingBatch, DEFAULT_MARGIN, DEFAULT_SCALE,
};
pub use model::{read_model, write_model, ModelFile};
pub use train::{train, CurvePoint, LossCurve, TrainConfig, TrainPair};

pub const DEFAULT_DIM: usize = 768;
pub const INIT_NOISE: f64 = 1e-3;

/// A unit-norm embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    /// L2-normalizes `values`; an all-zero input is rejected.
    pub fn normalized(mut values: Vec<f64>) -> Result<Self> {
        let n = norm(&values);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::ZeroVector);
        }
        values.iter_mut().for_each(|x| *x /= n);
        Ok(EmbeddingVector(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Shape {
            expected: u.len(),
            actual: v.len(),
        });
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot(u, v) / (nu * nv)).clamp(-1.0, 1.0))
}

pub trait EmbeddingProvider: Send + Sync {
    fn provider_id(&self) -> String;
    fn dim(&self) -> usize;
    fn embed_text(&self, text: &str) -> Result<EmbeddingVector>;
}

/// Bag of hashed tokens: lowercase alphanumeric runs are hashed with FNV-1a
/// into `dim` buckets, counted, then L2-normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashedTokenProvider {
    dim: usize,
}

pub const HASHED_PROVIDER: &str = "hashed-fnv1a";

impl HashedTokenProvider {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "provider dimension must be positive");
        HashedTokenProvider { dim }
    }

    pub fn bucket(&self, token: &str) -> usize {
        (fnv1a(token.as_bytes()) % self.dim as u64) as usize
    }

    pub fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
        text.split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(str::to_lowercase)
    }

    /// Restores the provider named in a model file.
    pub fn from_id(id: &str, dim: usize) -> Result<Self> {
        match id.strip_prefix(HASHED_PROVIDER) {
            Some(rest) if rest.is_empty() || rest == format!("-{dim}") => Ok(Self::new(dim)),
            _ => Err(Error::Format(format!("unknown embedding provider {id:?}"))),
        }
    }
}

impl Default for HashedTokenProvider {
    fn default() -> Self {
        Self::new(DEFAULT_DIM)
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

impl EmbeddingProvider for HashedTokenProvider {
    fn provider_id(&self) -> String {
        format!("{HASHED_PROVIDER}-{}", self.dim)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_text(&self, text: &str) -> Result<EmbeddingVector> {
        if text.trim().is_empty() {
            return Err(Error::Input("cannot embed empty text".into()));
        }
        let mut v = vec![0.0; self.dim];
        for t in Self::tokens(text) {
            v[self.bucket(&t)] += 1.0;
        }
        EmbeddingVector::normalized(v).map_err(|_| Error::Input(format!("text {text:?} has no tokens")))
    }
}

/// Linear map `u = Wᵀx + b` followed by L2 normalization. `weights` is
/// row-major `d_in × d_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionHead {
    pub d_in: usize,
    pub d_out: usize,
    pub weights: Vec<f64>,
    pub bias: Option<Vec<f64>>,
}

impl ProjectionHead {
    pub fn identity(d: usize) -> Self {
        let mut weights = vec![0.0; d * d];
        for i in 0..d {
            weights[i * d + i] = 1.0;
        }
        ProjectionHead {
            d_in: d,
            d_out: d,
            weights,
            bias: None,
        }
    }

    /// Identity plus seeded Gaussian noise of standard deviation `sigma`.
    pub fn identity_noise(d: usize, sigma: f64, seed: u64) -> Self {
        let mut head = Self::identity(d);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, sigma).expect("finite sigma");
        head.weights.iter_mut().for_each(|w| *w += normal.sample(&mut rng));
        head
    }

    pub fn with_bias(mut self, bias: Vec<f64>) -> Result<Self> {
        if bias.len() != self.d_out {
            return Err(Error::Shape {
                expected: self.d_out,
                actual: bias.len(),
            });
        }
        self.bias = Some(bias);
        Ok(self)
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.len() + self.bias.as_ref().map_or(0, Vec::len)
    }

    /// Unnormalized output `Wᵀx + b`. Zero inputs are skipped, so sparse
    /// bag-of-token vectors only touch their occupied rows.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.d_in {
            return Err(Error::Shape {
                expected: self.d_in,
                actual: x.len(),
            });
        }
        let mut u = self.bias.clone().unwrap_or_else(|| vec![0.0; self.d_out]);
        for (a, &xa) in x.iter().enumerate() {
            if xa == 0.0 {
                continue;
            }
            let row = &self.weights[a * self.d_out..(a + 1) * self.d_out];
            for (ub, w) in u.iter_mut().zip(row) {
                *ub += xa * w;
            }
        }
        Ok(u)
    }

    pub fn project(&self, v: &[f64]) -> Result<EmbeddingVector> {
        EmbeddingVector::normalized(self.forward(v)?)
    }

    pub fn is_finite(&self) -> bool {
        self.weights
            .iter()
            .chain(self.bias.iter().flatten())
            .all(|x| x.is_finite())
    }
}
