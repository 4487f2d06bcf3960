use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::encoder::FeatureEncoder;
use super::model::RouterModel;
use crate::data::Instance;
use crate::dispo::{loss_and_grad, DispoConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub weight_decay: f64,
    /// Share of the training set used; the subset is drawn once per run.
    pub data_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            batch_size: 24,
            epochs: 3,
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            weight_decay: 0.01,
            data_fraction: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::invalid(
                "learning_rate",
                "must be finite and non-negative",
            ));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::invalid("beta", "betas must lie in [0, 1)"));
        }
        if self.adam_eps.is_nan() || self.adam_eps <= 0.0 {
            return Err(Error::invalid("adam_eps", "must be positive"));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(Error::invalid(
                "weight_decay",
                "must be finite and non-negative",
            ));
        }
        if !(self.data_fraction > 0.0 && self.data_fraction <= 1.0) {
            return Err(Error::invalid("data_fraction", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// AdamW with decoupled weight decay.
#[derive(Debug, Clone)]
pub struct AdamW {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    weight_decay: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl AdamW {
    pub fn new(cfg: &TrainConfig, num_params: usize) -> Self {
        Self {
            lr: cfg.learning_rate,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            eps: cfg.adam_eps,
            weight_decay: cfg.weight_decay,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t);
        let bc2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.lr * self.weight_decay * params[i];
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: RouterModel,
    /// Mean per-instance training loss of each epoch, measured before each
    /// batch's update.
    pub epoch_losses: Vec<f64>,
}

/// Minibatch AdamW on the preference objective.
///
/// Every random choice comes from one generator seeded with `cfg.seed`: first
/// the data-fraction subset (only when the fraction is below one), then one
/// shuffle per epoch.
pub fn train(
    instances: &[Instance],
    cfg: &TrainConfig,
    dispo: &DispoConfig,
    init: RouterModel,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    dispo.validate()?;
    if instances.is_empty() {
        return Err(Error::NoRecords);
    }
    let encoder = init.encoder().clone();
    let features = instances
        .iter()
        .map(|i| encoder.encode(&i.record))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<f64> = instances.iter().map(|i| dispo.label(&i.target)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..instances.len()).collect();
    if cfg.data_fraction < 1.0 {
        order.shuffle(&mut rng);
        let keep = ((cfg.data_fraction * order.len() as f64).ceil() as usize).clamp(1, order.len());
        order.truncate(keep);
    }

    let mut model = init;
    let mut opt = AdamW::new(cfg, model.num_params());
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<(&[f64], f64)> = chunk
                .iter()
                .map(|&i| (features[i].as_slice(), labels[i]))
                .collect();
            let (loss, grad) = loss_and_grad(&batch, &model)?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFinite { epoch, batch: b });
            }
            total += loss * chunk.len() as f64;
            opt.step(model.params_mut(), &grad);
        }
        epoch_losses.push(total / order.len() as f64);
    }
    Ok(TrainOutcome {
        model,
        epoch_losses,
    })
}
