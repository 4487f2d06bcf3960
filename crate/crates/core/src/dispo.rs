//! Distance-aware preference objective.
//!
//! Binary cross-entropy of the routing logit against a target `q`, where `q`
//! is the soft label `p = sigmoid(alpha * delta)` or, in hard-label mode, the
//! binary label `y`. Evaluated through softplus so confident logits never
//! take the log of a saturated sigmoid.

use serde::{Deserialize, Serialize};

use crate::data::PreferenceTarget;
use crate::error::{Error, Result};
use crate::router::RouterModel;

pub const DEFAULT_ALPHA: f64 = 1.6;
pub const DEFAULT_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DispoConfig {
    pub alpha: f64,
    pub epsilon: f64,
    /// Train on `y` instead of `p` (plain BCE ablation).
    pub hard_label_mode: bool,
}

impl Default for DispoConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            epsilon: DEFAULT_EPSILON,
            hard_label_mode: false,
        }
    }
}

impl DispoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::invalid(
                "alpha",
                format!("{} must be positive", self.alpha),
            ));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::invalid(
                "epsilon",
                format!("{} must be positive", self.epsilon),
            ));
        }
        Ok(())
    }

    /// The label the loss is fitted against.
    pub fn label(&self, target: &PreferenceTarget) -> f64 {
        if self.hard_label_mode {
            f64::from(target.hard_label)
        } else {
            target.soft_label
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Inverse sigmoid with `q` clamped to `[1e-12, 1 - 1e-12]`.
pub fn logit(q: f64) -> f64 {
    let q = q.clamp(1e-12, 1.0 - 1e-12);
    (q / (1.0 - q)).ln()
}

/// `-[q ln sigmoid(r) + (1 - q) ln(1 - sigmoid(r))]`.
pub fn instance_loss(r: f64, q: f64) -> f64 {
    q * softplus(-r) + (1.0 - q) * softplus(r)
}

fn check_label(q: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::invalid("label", format!("{q} is outside [0, 1]")));
    }
    Ok(())
}

fn check_score(r: f64) -> Result<()> {
    if !r.is_finite() {
        return Err(Error::invalid("score", format!("{r} is not finite")));
    }
    Ok(())
}

/// Mean loss over a batch, summed in input order.
pub fn loss(scores: &[f64], targets: &[PreferenceTarget], cfg: &DispoConfig) -> Result<f64> {
    if scores.len() != targets.len() {
        return Err(Error::Dimension {
            context: "loss scores vs targets".into(),
            expected: targets.len(),
            got: scores.len(),
        });
    }
    if scores.is_empty() {
        return Err(Error::NoRecords);
    }
    let mut total = 0.0;
    for (&r, t) in scores.iter().zip(targets) {
        check_score(r)?;
        total += instance_loss(r, cfg.label(t));
    }
    Ok(total / scores.len() as f64)
}

/// `dL_i/dr_i = sigmoid(r) - q`.
pub fn grad_wrt_score(r: f64, q: f64) -> Result<f64> {
    check_label(q)?;
    check_score(r)?;
    Ok(sigmoid(r) - q)
}

/// Mean loss and its gradient with respect to the model parameters for a
/// batch of `(features, label)` pairs. Terms are accumulated in batch order.
pub fn loss_and_grad(batch: &[(&[f64], f64)], model: &RouterModel) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::NoRecords);
    }
    let mut grad = vec![0.0; model.num_params()];
    let mut total = 0.0;
    let scale = 1.0 / batch.len() as f64;
    for &(u, q) in batch {
        check_label(q)?;
        let r = model.score_features(u)?;
        total += instance_loss(r, q);
        model.accumulate_grad(u, (sigmoid(r) - q) * scale, &mut grad)?;
    }
    Ok((total * scale, grad))
}

pub fn grad_wrt_params(batch: &[(&[f64], f64)], model: &RouterModel) -> Result<Vec<f64>> {
    loss_and_grad(batch, model).map(|(_, g)| g)
}
