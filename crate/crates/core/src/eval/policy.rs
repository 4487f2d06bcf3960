use crate::data::RoutingRecord;
use crate::error::{Error, Result};
use crate::geo::{geodesic_distance, GeoCoordinate};
use crate::router::{decide, score, ParadigmChoice, RouterModel};

#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    PureRetrieval,
    PureGeneration,
    Router(RouterModel),
    /// Picks whichever prediction is strictly closer to ground truth,
    /// retrieval on ties.
    Oracle,
}

impl Policy {
    pub fn name(&self) -> &'static str {
        match self {
            Policy::PureRetrieval => "retrieval",
            Policy::PureGeneration => "generation",
            Policy::Router(_) => "router",
            Policy::Oracle => "oracle",
        }
    }

    pub fn choose(&self, record: &RoutingRecord) -> Result<ParadigmChoice> {
        Ok(match self {
            Policy::PureRetrieval => ParadigmChoice::Retrieval,
            Policy::PureGeneration => ParadigmChoice::Generation,
            Policy::Router(model) => decide(score(record, model)?)?,
            Policy::Oracle => {
                let gt = record
                    .ground_truth
                    .ok_or_else(|| Error::Unlabeled(record.id.clone()))?;
                let d_ret = geodesic_distance(record.pred_retrieval, gt);
                let d_gen = geodesic_distance(record.pred_generation, gt);
                if d_gen < d_ret {
                    ParadigmChoice::Generation
                } else {
                    ParadigmChoice::Retrieval
                }
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Routed {
    pub choice: ParadigmChoice,
    pub coordinate: GeoCoordinate,
}

pub fn apply_policy(record: &RoutingRecord, policy: &Policy) -> Result<Routed> {
    let choice = policy.choose(record)?;
    let coordinate = match choice {
        ParadigmChoice::Retrieval => record.pred_retrieval,
        ParadigmChoice::Generation => record.pred_generation,
    };
    Ok(Routed { choice, coordinate })
}
