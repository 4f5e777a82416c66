use std::fmt::Write;

use serde::Deserialize;

use super::{LossConfig, LossVariant, ProjectionHead};
use crate::error::{Error, Result};

/// Persisted projection head with the provider and loss it was trained for.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ModelFile {
    pub provider_id: String,
    pub d_in: usize,
    pub d_out: usize,
    pub scale: f64,
    pub variant: LossVariant,
    #[serde(default)]
    pub margin: Option<f64>,
    pub weights: Vec<f64>,
    #[serde(default)]
    pub bias: Option<Vec<f64>>,
}

impl ModelFile {
    pub fn new(provider_id: &str, head: &ProjectionHead, loss: &LossConfig) -> Self {
        ModelFile {
            provider_id: provider_id.into(),
            d_in: head.d_in,
            d_out: head.d_out,
            scale: loss.scale,
            variant: loss.variant,
            margin: (loss.variant == LossVariant::Hinge).then_some(loss.margin),
            weights: head.weights.clone(),
            bias: head.bias.clone(),
        }
    }

    pub fn head(&self) -> Result<ProjectionHead> {
        if self.weights.len() != self.d_in * self.d_out {
            return Err(Error::Shape {
                expected: self.d_in * self.d_out,
                actual: self.weights.len(),
            });
        }
        let head = ProjectionHead {
            d_in: self.d_in,
            d_out: self.d_out,
            weights: self.weights.clone(),
            bias: None,
        };
        let head = match &self.bias {
            Some(b) => head.with_bias(b.clone())?,
            None => head,
        };
        if !head.is_finite() {
            return Err(Error::Format("model has non-finite parameters".into()));
        }
        Ok(head)
    }
}

fn num(out: &mut String, x: f64) {
    // 17 significant digits round-trips every f64
    write!(out, "{x:.16e}").unwrap();
}

fn array(out: &mut String, xs: &[f64]) {
    out.push('[');
    for (i, &x) in xs.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        num(out, x);
    }
    out.push(']');
}

pub fn write_model(model: &ModelFile) -> Result<String> {
    if !model
        .weights
        .iter()
        .chain(model.bias.iter().flatten())
        .all(|x| x.is_finite())
    {
        return Err(Error::Format("model has non-finite parameters".into()));
    }
    let mut out = String::from("{\n");
    writeln!(
        out,
        "  \"provider_id\": {},",
        serde_json::to_string(&model.provider_id)?
    )
    .unwrap();
    writeln!(out, "  \"d_in\": {},", model.d_in).unwrap();
    writeln!(out, "  \"d_out\": {},", model.d_out).unwrap();
    out.push_str("  \"scale\": ");
    num(&mut out, model.scale);
    out.push_str(",\n");
    writeln!(out, "  \"variant\": \"{}\",", model.variant).unwrap();
    if let Some(m) = model.margin {
        out.push_str("  \"margin\": ");
        num(&mut out, m);
        out.push_str(",\n");
    }
    out.push_str("  \"weights\": ");
    array(&mut out, &model.weights);
    out.push_str(",\n  \"bias\": ");
    match &model.bias {
        Some(b) => array(&mut out, b),
        None => out.push_str("null"),
    }
    out.push_str("\n}\n");
    Ok(out)
}

pub fn read_model(text: &str) -> Result<ModelFile> {
    let model: ModelFile = serde_json::from_str(text)?;
    model.head()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let head = ProjectionHead::identity_noise(5, 0.37, 9)
            .with_bias(vec![1e-300, -0.1, 1.0 / 3.0, 0.0, -7.25])
            .unwrap();
        let m = ModelFile::new("hashed-fnv1a-5", &head, &LossConfig::hinge(0.5));
        let text = write_model(&m).unwrap();
        let back = read_model(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.head().unwrap(), head);
        assert_eq!(write_model(&back).unwrap(), text);
        assert!(text.contains("\"variant\": \"hinge\""));
    }

    #[test]
    fn shape_checked() {
        let mut m = ModelFile::new("x", &ProjectionHead::identity(3), &LossConfig::default());
        m.weights.pop();
        let text = write_model(&m).unwrap();
        assert!(read_model(&text).is_err());
    }
}
