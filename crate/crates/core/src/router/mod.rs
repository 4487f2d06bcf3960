//! Feature encoding, routing models, training and the routing decision.

mod encoder;
mod model;
mod train;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use encoder::{
    ConcatEncoder, ContextAblation, ContextEncoder, EmbeddingEncoder, EncoderSpec, FeatureEncoder,
    CONTEXT_DIM,
};
pub use model::{load_model, save_model, ModelKind, RouterModel, MODEL_MAGIC, MODEL_VERSION};
pub use train::{train, AdamW, TrainConfig, TrainOutcome};

use crate::data::RoutingRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParadigmChoice {
    Retrieval,
    Generation,
}

impl fmt::Display for ParadigmChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParadigmChoice::Retrieval => "retrieval",
            ParadigmChoice::Generation => "generation",
        })
    }
}

/// Routing logit for one record.
pub fn score(record: &RoutingRecord, model: &RouterModel) -> Result<f64> {
    let u = model.encoder().encode(record)?;
    model.score_features(&u)
}

/// Generation iff `r > 0`; zero routes to retrieval.
pub fn decide(r: f64) -> Result<ParadigmChoice> {
    if !r.is_finite() {
        return Err(Error::invalid("score", format!("{r} is not finite")));
    }
    Ok(if r > 0.0 {
        ParadigmChoice::Generation
    } else {
        ParadigmChoice::Retrieval
    })
}
