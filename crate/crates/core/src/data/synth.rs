//! Seeded synthetic routing datasets.
//!
//! Each record gets a latent `z` in {-1, +1}; `z = +1` means generation is the
//! favored paradigm. With probability `(1 + signal_strength) / 2` the favored
//! paradigm draws its error with the smaller of the two configured scales,
//! otherwise with the larger. Errors are log-normal around their scale.
//! Embedding dimension 0 is `z` plus Gaussian noise of variance
//! `1 - signal_strength`; the other dimensions are standard normal.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::record::{Candidate, Dataset, RoutingRecord};
use crate::error::{Error, Result};
use crate::geo::{DistanceKm, GeoCoordinate};

/// Synthetic errors are capped below the antipodal distance.
pub const MAX_SYNTH_ERROR_KM: f64 = 19_000.0;

/// Half-width of the log-ratio band used for near-tie records.
const NEAR_TIE_HALF_WIDTH: f64 = 0.18;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n: usize,
    pub seed: u64,
    pub dim: usize,
    pub signal_strength: f64,
    pub retrieval_error_scale: f64,
    pub generation_error_scale: f64,
    /// Standard deviation of the log-error around its scale. Zero makes
    /// every error equal to its scale.
    pub error_spread: f64,
    /// Retrieved candidates per record, including the top-1.
    pub candidates: usize,
    /// Fraction of records whose two errors differ by a log-ratio below 0.18.
    pub near_tie_fraction: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            seed: 0,
            dim: 8,
            signal_strength: 0.9,
            retrieval_error_scale: 20.0,
            generation_error_scale: 200.0,
            error_spread: 1.0,
            candidates: 10,
            near_tie_fraction: 0.0,
        }
    }
}

impl SynthConfig {
    /// Fully planted data: the latent alone decides the label.
    pub fn noise_free(n: usize, seed: u64, dim: usize) -> Self {
        Self {
            n,
            seed,
            dim,
            signal_strength: 1.0,
            error_spread: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if self.n == 0 {
            return Err(Error::invalid("n", "must be at least 1"));
        }
        if self.dim == 0 {
            return Err(Error::invalid("dim", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.signal_strength) {
            return Err(Error::invalid("signal_strength", "must lie in [0, 1]"));
        }
        if !positive(self.retrieval_error_scale) {
            return Err(Error::invalid("retrieval_error_scale", "must be positive"));
        }
        if !positive(self.generation_error_scale) {
            return Err(Error::invalid("generation_error_scale", "must be positive"));
        }
        if !(self.error_spread.is_finite() && self.error_spread >= 0.0) {
            return Err(Error::invalid("error_spread", "must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.near_tie_fraction) {
            return Err(Error::invalid("near_tie_fraction", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

fn lognormal(rng: &mut ChaCha8Rng, scale: f64, spread: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    (scale * (spread * z).exp()).min(MAX_SYNTH_ERROR_KM)
}

fn displaced(rng: &mut ChaCha8Rng, origin: GeoCoordinate, km: f64) -> GeoCoordinate {
    let bearing = rng.random::<f64>() * 2.0 * PI;
    // km is finite and non-negative by construction
    origin.destination(DistanceKm::new(km).unwrap_or(DistanceKm::ZERO), bearing)
}

pub fn synthesize(config: &SynthConfig) -> Result<Dataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let small = config
        .retrieval_error_scale
        .min(config.generation_error_scale);
    let large = config
        .retrieval_error_scale
        .max(config.generation_error_scale);
    let noise_sd = (1.0 - config.signal_strength).sqrt();
    let width = config.n.saturating_sub(1).to_string().len().max(6);

    let mut records = Vec::with_capacity(config.n);
    for i in 0..config.n {
        // area-uniform ground truth
        let lat = (2.0 * rng.random::<f64>() - 1.0).asin().to_degrees();
        let lon = rng.random::<f64>() * 360.0 - 180.0;
        let gt = GeoCoordinate::new(lat, lon)?;

        let z: f64 = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let keep = rng.random::<f64>() < (1.0 + config.signal_strength) / 2.0;
        let generation_small = keep == (z > 0.0);
        let (gen_scale, ret_scale) = if generation_small {
            (small, large)
        } else {
            (large, small)
        };

        let near_tie = rng.random::<f64>() < config.near_tie_fraction;
        let (d_ret, d_gen) = if near_tie {
            let base = lognormal(&mut rng, small, config.error_spread);
            let shift = (2.0 * rng.random::<f64>() - 1.0) * NEAR_TIE_HALF_WIDTH;
            let other = (base * shift.exp()).min(MAX_SYNTH_ERROR_KM);
            if generation_small {
                (other, base)
            } else {
                (base, other)
            }
        } else {
            let d_gen = lognormal(&mut rng, gen_scale, config.error_spread);
            let d_ret = lognormal(&mut rng, ret_scale, config.error_spread);
            (d_ret, d_gen)
        };

        let pred_gen = displaced(&mut rng, gt, d_gen);
        let pred_ret = displaced(&mut rng, gt, d_ret);

        // Candidates cluster around the top-1 with the retrieval scale.
        let mut scatter: Vec<f64> = (1..config.candidates)
            .map(|_| lognormal(&mut rng, ret_scale, 1.0))
            .collect();
        scatter.sort_by(f64::total_cmp);
        let mut candidates = Vec::with_capacity(config.candidates);
        if config.candidates > 0 {
            candidates.push(Candidate::new(pred_ret, Some(1.0))?);
        }
        for km in scatter {
            let at = displaced(&mut rng, pred_ret, km);
            candidates.push(Candidate::new(at, Some(1.0 / (1.0 + km / 100.0)))?);
        }

        let mut embedding = Vec::with_capacity(config.dim);
        let noise: f64 = StandardNormal.sample(&mut rng);
        embedding.push(z + noise_sd * noise);
        for _ in 1..config.dim {
            embedding.push(StandardNormal.sample(&mut rng));
        }

        records.push(
            RoutingRecord::new(format!("synth-{i:0width$}"), Some(gt), pred_ret, pred_gen)
                .with_candidates(candidates)
                .with_embedding(embedding),
        );
    }
    Dataset::new(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{build_targets, write_jsonl_to};

    #[test]
    fn seeded_output_is_byte_identical() {
        let cfg = SynthConfig {
            n: 200,
            seed: 99,
            ..SynthConfig::default()
        };
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_jsonl_to(&mut a, &synthesize(&cfg).unwrap()).unwrap();
        write_jsonl_to(&mut b, &synthesize(&cfg).unwrap()).unwrap();
        assert_eq!(a, b);
        let other = SynthConfig { seed: 100, ..cfg };
        let mut c = Vec::new();
        write_jsonl_to(&mut c, &synthesize(&other).unwrap()).unwrap();
        assert_ne!(a, c);
    }

    fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let mut sxy = 0.0;
        let mut sxx = 0.0;
        let mut syy = 0.0;
        for (x, y) in xs.iter().zip(ys) {
            sxy += (x - mx) * (y - my);
            sxx += (x - mx) * (x - mx);
            syy += (y - my) * (y - my);
        }
        sxy / (sxx * syy).sqrt()
    }

    #[test]
    fn zero_signal_decouples_label_from_embedding() {
        let ds = synthesize(&SynthConfig {
            n: 10_000,
            seed: 3,
            signal_strength: 0.0,
            ..SynthConfig::default()
        })
        .unwrap();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for r in &ds.records {
            xs.push(r.embedding.as_ref().unwrap()[0]);
            ys.push(build_targets(r, 1e-6, 1.6).unwrap().hard_label as f64);
        }
        let rho = correlation(&xs, &ys);
        assert!(rho.abs() < 0.05, "correlation {rho}");
    }

    #[test]
    fn full_noise_free_signal_predicts_label_exactly() {
        let ds = synthesize(&SynthConfig::noise_free(2000, 11, 4)).unwrap();
        for r in &ds.records {
            let y = build_targets(r, 1e-6, 1.6).unwrap().hard_label;
            let sign_says_generation = r.embedding.as_ref().unwrap()[0] > 0.0;
            assert_eq!(sign_says_generation, y == 1, "{}", r.id);
        }
    }

    #[test]
    fn near_tie_fraction_is_respected() {
        let ds = synthesize(&SynthConfig {
            n: 5000,
            seed: 5,
            near_tie_fraction: 0.3,
            ..SynthConfig::default()
        })
        .unwrap();
        let ties = ds
            .records
            .iter()
            .filter(|r| build_targets(r, 1e-6, 1.6).unwrap().delta.abs() < 0.2)
            .count() as f64
            / ds.len() as f64;
        assert!(ties > 0.3 && ties < 0.4, "{ties}");
    }

    #[test]
    fn top_candidate_is_retrieval_prediction() {
        let ds = synthesize(&SynthConfig {
            n: 50,
            ..SynthConfig::default()
        })
        .unwrap();
        for r in &ds.records {
            assert_eq!(r.candidates.len(), 10);
            assert_eq!(r.candidates[0].coordinate, r.pred_retrieval);
        }
    }

    #[test]
    fn rejects_bad_config() {
        let bad = [
            SynthConfig {
                n: 0,
                ..SynthConfig::default()
            },
            SynthConfig {
                dim: 0,
                ..SynthConfig::default()
            },
            SynthConfig {
                signal_strength: 1.5,
                ..SynthConfig::default()
            },
            SynthConfig {
                retrieval_error_scale: 0.0,
                ..SynthConfig::default()
            },
        ];
        for cfg in bad {
            assert!(synthesize(&cfg).is_err());
        }
    }
}
