//! Routing models and their on-disk container.
//!
//! Model file layout (all integers little-endian):
//!
//! ```text
//! offset  size  field
//! 0       8     magic  b"GEOROUTR"
//! 8       4     u32    format version (currently 1)
//! 12      4     u32    header length H in bytes
//! 16      H     UTF-8 JSON header:
//!               {"kind":"linear"|"mlp","hidden":h?,"input_dim":m,
//!                "param_count":n,"encoder":{...}}
//! 16+H    8*n   parameters, f64 little-endian
//! ```
//!
//! Parameter order: linear models store `theta[0..m]`. MLP models store the
//! hidden weights row by row (`h x m`), then the hidden biases (`h`), then
//! the output weights (`h`), then the output bias.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::encoder::{EncoderSpec, FeatureEncoder};
use crate::error::{Error, Result};

pub const MODEL_MAGIC: &[u8; 8] = b"GEOROUTR";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    Linear,
    /// One tanh hidden layer.
    Mlp {
        hidden: usize,
    },
}

impl ModelKind {
    pub fn param_count(self, input_dim: usize) -> usize {
        match self {
            ModelKind::Linear => input_dim,
            ModelKind::Mlp { hidden } => hidden * input_dim + 2 * hidden + 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouterModel {
    kind: ModelKind,
    input_dim: usize,
    params: Vec<f64>,
    encoder: EncoderSpec,
}

impl RouterModel {
    /// Zero-initialized linear head; routes everything to retrieval until trained.
    pub fn linear(encoder: EncoderSpec) -> Self {
        let input_dim = encoder.dim();
        Self {
            kind: ModelKind::Linear,
            input_dim,
            params: vec![0.0; input_dim],
            encoder,
        }
    }

    /// MLP with weights drawn from `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    pub fn mlp(encoder: EncoderSpec, hidden: usize, seed: u64) -> Self {
        let m = encoder.dim();
        let kind = ModelKind::Mlp { hidden };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |fan_in: usize, count: usize| -> Vec<f64> {
            let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
            (0..count)
                .map(|_| rng.random_range(-bound..bound))
                .collect()
        };
        let mut params = draw(m, hidden * m);
        params.extend(draw(m, hidden));
        params.extend(draw(hidden, hidden + 1));
        Self {
            kind,
            input_dim: m,
            params,
            encoder,
        }
    }

    pub fn from_parts(kind: ModelKind, encoder: EncoderSpec, params: Vec<f64>) -> Result<Self> {
        let input_dim = encoder.dim();
        if let ModelKind::Mlp { hidden: 0 } = kind {
            return Err(Error::invalid("hidden", "must be at least 1"));
        }
        let expected = kind.param_count(input_dim);
        if params.len() != expected {
            return Err(Error::Dimension {
                context: "model parameters".into(),
                expected,
                got: params.len(),
            });
        }
        if let Some(i) = params.iter().position(|p| !p.is_finite()) {
            return Err(Error::invalid(format!("params[{i}]"), "not finite"));
        }
        Ok(Self {
            kind,
            input_dim,
            params,
            encoder,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn encoder(&self) -> &EncoderSpec {
        &self.encoder
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    fn check_input(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.input_dim {
            return Err(Error::Dimension {
                context: "router input".into(),
                expected: self.input_dim,
                got: u.len(),
            });
        }
        Ok(())
    }

    fn hidden_activations(&self, hidden: usize, u: &[f64]) -> Vec<f64> {
        let m = self.input_dim;
        let (w1, rest) = self.params.split_at(hidden * m);
        let b1 = &rest[..hidden];
        (0..hidden)
            .map(|j| {
                let row = &w1[j * m..(j + 1) * m];
                let pre: f64 = row.iter().zip(u).map(|(w, x)| w * x).sum::<f64>() + b1[j];
                pre.tanh()
            })
            .collect()
    }

    /// Routing logit for an already-encoded feature vector.
    pub fn score_features(&self, u: &[f64]) -> Result<f64> {
        self.check_input(u)?;
        Ok(match self.kind {
            ModelKind::Linear => self.params.iter().zip(u).map(|(t, x)| t * x).sum(),
            ModelKind::Mlp { hidden } => {
                let h = self.hidden_activations(hidden, u);
                let off = hidden * self.input_dim + hidden;
                let w2 = &self.params[off..off + hidden];
                let b2 = self.params[off + hidden];
                w2.iter().zip(&h).map(|(w, a)| w * a).sum::<f64>() + b2
            }
        })
    }

    /// Adds `upstream * d(score)/d(params)` at `u` into `grad`.
    pub fn accumulate_grad(&self, u: &[f64], upstream: f64, grad: &mut [f64]) -> Result<()> {
        self.check_input(u)?;
        if grad.len() != self.params.len() {
            return Err(Error::Dimension {
                context: "gradient buffer".into(),
                expected: self.params.len(),
                got: grad.len(),
            });
        }
        match self.kind {
            ModelKind::Linear => {
                for (g, x) in grad.iter_mut().zip(u) {
                    *g += upstream * x;
                }
            }
            ModelKind::Mlp { hidden } => {
                let m = self.input_dim;
                let h = self.hidden_activations(hidden, u);
                let w2_off = hidden * m + hidden;
                for j in 0..hidden {
                    let w2j = self.params[w2_off + j];
                    let back = upstream * w2j * (1.0 - h[j] * h[j]);
                    for (g, x) in grad[j * m..(j + 1) * m].iter_mut().zip(u) {
                        *g += back * x;
                    }
                    grad[hidden * m + j] += back;
                    grad[w2_off + j] += upstream * h[j];
                }
                grad[w2_off + hidden] += upstream;
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct ModelHeader {
    #[serde(flatten)]
    kind: ModelKind,
    input_dim: usize,
    param_count: usize,
    encoder: EncoderSpec,
}

pub(crate) fn encode_model(model: &RouterModel) -> Vec<u8> {
    let header = ModelHeader {
        kind: model.kind,
        input_dim: model.input_dim,
        param_count: model.params.len(),
        encoder: model.encoder.clone(),
    };
    // plain data, serialization cannot fail
    let json = serde_json::to_vec(&header).unwrap_or_default();
    let mut out = Vec::with_capacity(16 + json.len() + 8 * model.params.len());
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for p in &model.params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

pub(crate) fn decode_model(bytes: &[u8]) -> Result<RouterModel> {
    let bad = |msg: String| Error::ModelFormat(msg);
    if bytes.len() < 16 {
        return Err(bad(format!(
            "truncated: {} bytes is shorter than the fixed prefix",
            bytes.len()
        )));
    }
    if &bytes[..8] != MODEL_MAGIC {
        return Err(bad("bad magic, not a router model".into()));
    }
    let u32_at =
        |i: usize| u32::from_le_bytes([bytes[i], bytes[i + 1], bytes[i + 2], bytes[i + 3]]);
    let version = u32_at(8);
    if version != MODEL_VERSION {
        return Err(bad(format!(
            "version mismatch: file v{version}, supported v{MODEL_VERSION}"
        )));
    }
    let header_len = u32_at(12) as usize;
    let body = &bytes[16..];
    if body.len() < header_len {
        return Err(bad("truncated header".into()));
    }
    let header: ModelHeader = serde_json::from_slice(&body[..header_len])
        .map_err(|e| bad(format!("corrupt header: {e}")))?;
    let raw = &body[header_len..];
    if raw.len() < header.param_count * 8 {
        return Err(bad(format!(
            "truncated parameters: header declares {} values, file holds {} bytes",
            header.param_count,
            raw.len()
        )));
    }
    if raw.len() > header.param_count * 8 {
        return Err(bad(format!(
            "{} trailing bytes after the parameters",
            raw.len() - header.param_count * 8
        )));
    }
    let encoder_dim = header.encoder.dim();
    if encoder_dim != header.input_dim {
        return Err(bad(format!(
            "declared input dimension {} does not match encoder dimension {encoder_dim}",
            header.input_dim
        )));
    }
    let expected = header.kind.param_count(header.input_dim);
    if header.param_count != expected {
        return Err(bad(format!(
            "declared parameter count {} does not match {expected} for input dimension {}",
            header.param_count, header.input_dim
        )));
    }
    let params = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    RouterModel::from_parts(header.kind, header.encoder, params).map_err(|e| bad(e.to_string()))
}

pub fn save_model(path: impl AsRef<Path>, model: &RouterModel) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_model(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<RouterModel> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes)
}
