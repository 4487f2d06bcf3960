use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::policy::Policy;
use super::report::{evaluate, EvalReport};
use crate::data::{Dataset, Instance, RoutingRecord};
use crate::dispo::DispoConfig;
use crate::error::{Error, Result};
use crate::geo::ThresholdSet;
use crate::router::{train, RouterModel, TrainConfig};

pub const DEFAULT_ALPHA_GRID: [f64; 10] = [0.1, 0.4, 0.7, 1.0, 1.3, 1.6, 1.9, 2.2, 2.5, 3.0];

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub train: TrainConfig,
    /// `alpha` is replaced per row in an alpha sweep.
    pub dispo: DispoConfig,
    pub thresholds: ThresholdSet,
    pub holdout_fraction: f64,
    pub split_seed: u64,
    /// Every row starts training from this model.
    pub init: RouterModel,
}

impl SweepConfig {
    pub fn new(init: RouterModel) -> Self {
        Self {
            train: TrainConfig::default(),
            dispo: DispoConfig::default(),
            thresholds: ThresholdSet::default(),
            holdout_fraction: 0.2,
            split_seed: 0,
            init,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// The swept value: alpha or data fraction.
    pub value: f64,
    pub report: EvalReport,
}

/// Seeded shuffle-split into `(train, held_out)`; both keep input order.
pub fn holdout_split(
    records: &[RoutingRecord],
    holdout_fraction: f64,
    seed: u64,
) -> Result<(Vec<RoutingRecord>, Vec<RoutingRecord>)> {
    if !(holdout_fraction > 0.0 && holdout_fraction < 1.0) {
        return Err(Error::invalid("holdout_fraction", "must lie in (0, 1)"));
    }
    if records.len() < 2 {
        return Err(Error::invalid(
            "dataset",
            "at least two records are needed to split",
        ));
    }
    let mut idx: Vec<usize> = (0..records.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_hold =
        ((holdout_fraction * records.len() as f64).round() as usize).clamp(1, records.len() - 1);
    let mut held = idx[..n_hold].to_vec();
    let mut rest = idx[n_hold..].to_vec();
    held.sort_unstable();
    rest.sort_unstable();
    let pick = |ix: Vec<usize>| ix.into_iter().map(|i| records[i].clone()).collect();
    Ok((pick(rest), pick(held)))
}

fn run_row(
    train_records: &[RoutingRecord],
    held: &[RoutingRecord],
    train_cfg: &TrainConfig,
    dispo: &DispoConfig,
    cfg: &SweepConfig,
) -> Result<EvalReport> {
    let instances: Vec<Instance> = Dataset {
        embedding_dim: None,
        records: train_records.to_vec(),
    }
    .instances(dispo.epsilon, dispo.alpha)?;
    let outcome = train(&instances, train_cfg, dispo, cfg.init.clone())?;
    evaluate(
        held,
        &[
            Policy::PureRetrieval,
            Policy::PureGeneration,
            Policy::Router(outcome.model),
            Policy::Oracle,
        ],
        &cfg.thresholds,
    )
}

/// Retrains from the same initialization for every alpha and evaluates on
/// the held-out split.
pub fn sweep_alpha(dataset: &Dataset, alphas: &[f64], cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    if alphas.is_empty() {
        return Err(Error::invalid("alphas", "at least one value is required"));
    }
    let (train_records, held) =
        holdout_split(&dataset.records, cfg.holdout_fraction, cfg.split_seed)?;
    alphas
        .iter()
        .map(|&alpha| {
            let dispo = DispoConfig { alpha, ..cfg.dispo };
            Ok(SweepRow {
                value: alpha,
                report: run_row(&train_records, &held, &cfg.train, &dispo, cfg)?,
            })
        })
        .collect()
}

/// Same harness over the share of training data used.
pub fn sweep_fraction(
    dataset: &Dataset,
    fractions: &[f64],
    cfg: &SweepConfig,
) -> Result<Vec<SweepRow>> {
    if fractions.is_empty() {
        return Err(Error::invalid(
            "fractions",
            "at least one value is required",
        ));
    }
    let (train_records, held) =
        holdout_split(&dataset.records, cfg.holdout_fraction, cfg.split_seed)?;
    fractions
        .iter()
        .map(|&fraction| {
            let train_cfg = TrainConfig {
                data_fraction: fraction,
                ..cfg.train
            };
            Ok(SweepRow {
                value: fraction,
                report: run_row(&train_records, &held, &train_cfg, &cfg.dispo, cfg)?,
            })
        })
        .collect()
}

/// `<value_name>,threshold_km,accuracy` rows for the router policy.
pub fn sweep_csv(rows: &[SweepRow], value_name: &str) -> String {
    let mut out = format!("{value_name},threshold_km,accuracy\n");
    for row in rows {
        if let Some(router) = row.report.row("router") {
            for (t, acc) in row
                .report
                .thresholds
                .iter()
                .zip(&router.geolocalization.per_threshold)
            {
                out.push_str(&format!("{},{},{:.4}\n", row.value, t, acc));
            }
        }
    }
    out
}
