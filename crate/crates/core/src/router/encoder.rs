use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::data::RoutingRecord;
use crate::error::{Error, Result};
use crate::geo::{geodesic_distance, GeoCoordinate};

/// Number of features produced by [`ContextEncoder`].
pub const CONTEXT_DIM: usize = 14;

/// Candidates within this radius of the retrieval prediction count as agreeing.
const AGREEMENT_RADIUS_KM: f64 = 25.0;

/// Maps a record to a fixed-length, finite feature vector.
pub trait FeatureEncoder {
    fn dim(&self) -> usize;
    fn encode(&self, record: &RoutingRecord) -> Result<Vec<f64>>;
}

/// Which parts of the routing context the context features may see.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ContextAblation {
    #[default]
    Full,
    /// Drop the candidate list.
    NoCandidates,
    /// Drop the candidate list and the retrieval prediction.
    NoCandidatesNoRetrieval,
    /// Drop the generation prediction.
    NoGeneration,
    /// Drop every prediction; only the bias remains.
    NoContext,
}

impl ContextAblation {
    /// Feature indices zeroed under this ablation.
    fn masked(self) -> &'static [usize] {
        match self {
            ContextAblation::Full => &[],
            ContextAblation::NoCandidates => &[1, 2, 3, 4],
            ContextAblation::NoCandidatesNoRetrieval => &[0, 1, 2, 3, 4, 5, 6, 7, 8],
            ContextAblation::NoGeneration => &[0, 9, 10, 11, 12],
            ContextAblation::NoContext => &[0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12],
        }
    }
}

/// Passes the record's precomputed embedding through.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbeddingEncoder {
    pub dim: usize,
}

impl FeatureEncoder for EmbeddingEncoder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, record: &RoutingRecord) -> Result<Vec<f64>> {
        let e = record.embedding.as_ref().ok_or_else(|| {
            Error::invalid(
                "embedding",
                format!("record `{}` has no embedding", record.id),
            )
        })?;
        if e.len() != self.dim {
            return Err(Error::Dimension {
                context: format!("embedding of `{}`", record.id),
                expected: self.dim,
                got: e.len(),
            });
        }
        Ok(e.clone())
    }
}

/// Geometry of the two predictions and the candidate list.
///
/// Layout:
///
/// | index | feature |
/// |-------|---------|
/// | 0 | `ln(1 + D(pred_ret, pred_gen))` |
/// | 1 | `ln(1 + mean D(candidate, pred_ret))` |
/// | 2 | `ln(1 + std D(candidate, pred_ret))` (population) |
/// | 3 | fraction of candidates within 25 km of `pred_ret` |
/// | 4 | `K / 10` |
/// | 5..9 | `sin lat, cos lat, sin lon, cos lon` of `pred_ret` |
/// | 9..13 | same for `pred_gen` |
/// | 13 | constant 1 |
///
/// Candidate features are zero when there are no candidates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ContextEncoder {
    pub ablation: ContextAblation,
}

fn trig(c: GeoCoordinate) -> [f64; 4] {
    let (lat, lon) = (c.lat().to_radians(), c.lon().to_radians());
    [lat.sin(), lat.cos(), lon.sin(), lon.cos()]
}

impl ContextEncoder {
    pub fn features(&self, record: &RoutingRecord) -> [f64; CONTEXT_DIM] {
        let mut f = [0.0; CONTEXT_DIM];
        let ret = record.pred_retrieval;
        f[0] = geodesic_distance(ret, record.pred_generation).km().ln_1p();

        // Sorted so the reductions do not depend on candidate order.
        let mut d: Vec<f64> = record
            .candidates
            .iter()
            .map(|c| geodesic_distance(c.coordinate, ret).km())
            .collect();
        d.sort_by(f64::total_cmp);
        if !d.is_empty() {
            let k = d.len() as f64;
            let mean = d.iter().sum::<f64>() / k;
            let var = d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / k;
            f[1] = mean.ln_1p();
            f[2] = var.sqrt().ln_1p();
            f[3] = d.iter().filter(|&&x| x <= AGREEMENT_RADIUS_KM).count() as f64 / k;
            f[4] = k / 10.0;
        }
        f[5..9].copy_from_slice(&trig(ret));
        f[9..13].copy_from_slice(&trig(record.pred_generation));
        f[13] = 1.0;
        for &i in self.ablation.masked() {
            f[i] = 0.0;
        }
        f
    }
}

impl FeatureEncoder for ContextEncoder {
    fn dim(&self) -> usize {
        CONTEXT_DIM
    }

    fn encode(&self, record: &RoutingRecord) -> Result<Vec<f64>> {
        Ok(self.features(record).to_vec())
    }
}

/// Embedding followed by context features.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcatEncoder {
    pub embedding: EmbeddingEncoder,
    pub context: ContextEncoder,
}

impl FeatureEncoder for ConcatEncoder {
    fn dim(&self) -> usize {
        self.embedding.dim + CONTEXT_DIM
    }

    fn encode(&self, record: &RoutingRecord) -> Result<Vec<f64>> {
        let mut u = self.embedding.encode(record)?;
        u.extend_from_slice(&self.context.features(record));
        Ok(u)
    }
}

/// Serializable description of an encoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EncoderSpec {
    Embedding {
        dim: usize,
    },
    Context {
        ablation: ContextAblation,
    },
    Concat {
        embedding_dim: usize,
        ablation: ContextAblation,
    },
}

impl From<ContextAblation> for EncoderSpec {
    fn from(ablation: ContextAblation) -> Self {
        EncoderSpec::Context { ablation }
    }
}

impl EncoderSpec {
    fn with<T>(&self, f: impl FnOnce(&dyn FeatureEncoder) -> T) -> T {
        match *self {
            EncoderSpec::Embedding { dim } => f(&EmbeddingEncoder { dim }),
            EncoderSpec::Context { ablation } => f(&ContextEncoder { ablation }),
            EncoderSpec::Concat {
                embedding_dim,
                ablation,
            } => f(&ConcatEncoder {
                embedding: EmbeddingEncoder { dim: embedding_dim },
                context: ContextEncoder { ablation },
            }),
        }
    }
}

impl FeatureEncoder for EncoderSpec {
    fn dim(&self) -> usize {
        self.with(|e| e.dim())
    }

    fn encode(&self, record: &RoutingRecord) -> Result<Vec<f64>> {
        self.with(|e| e.encode(record))
    }
}
