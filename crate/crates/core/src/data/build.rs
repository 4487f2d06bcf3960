use std::collections::HashSet;

use serde::Serialize;

use super::record::{build_targets, Instance, RawEntry};
use crate::error::{Error, Result};
use crate::geo::GeoCoordinate;

/// One line of a raw prediction dump: its 1-based line number and either the
/// parsed entry or the parse failure.
pub type RawLine = (usize, std::result::Result<RawEntry, String>);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub line: usize,
    pub id: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BuildSummary {
    pub total: usize,
    pub built: usize,
    pub skipped: usize,
    /// Fraction of built instances with `y = 1`.
    pub label_balance: f64,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone)]
pub struct BuildOutput {
    pub embedding_dim: Option<usize>,
    pub instances: Vec<Instance>,
    pub summary: BuildSummary,
}

fn prepare(
    entry: RawEntry,
    embedding_dim: Option<usize>,
    epsilon: f64,
    alpha: f64,
) -> Result<Instance> {
    let mut entry = entry;
    if entry.gt.is_none() {
        return Err(Error::invalid("gt", "missing"));
    }
    // The retrieval prediction is the top-1 candidate's location.
    match (entry.pred_ret, entry.candidates.first()) {
        (None, Some(top)) => entry.pred_ret = Some(top.gps),
        (Some(p), Some(top)) if p != top.gps => {
            return Err(Error::invalid(
                "pred_ret",
                "does not match candidates[0].gps",
            ));
        }
        _ => {}
    }
    if let (Some(e), Some(dim)) = (&entry.embedding, embedding_dim) {
        if e.len() != dim {
            return Err(Error::Dimension {
                context: "embedding".into(),
                expected: dim,
                got: e.len(),
            });
        }
    }
    // A built instance never carries a stale target.
    entry.extra.remove("target");
    let record = entry.into_record()?;
    Ok(Instance {
        target: build_targets(&record, epsilon, alpha)?,
        record,
    })
}

/// Turns raw prediction entries into labeled instances, in input order.
///
/// Invalid entries are skipped and reported; duplicate ids abort the build.
pub fn build_dataset(
    entries: impl IntoIterator<Item = RawLine>,
    epsilon: f64,
    alpha: f64,
) -> Result<BuildOutput> {
    // Validate hyperparameters once, up front.
    let origin = GeoCoordinate::new(0.0, 0.0)?;
    build_targets(
        &super::RoutingRecord::new("-", Some(origin), origin, origin),
        epsilon,
        alpha,
    )?;

    let mut instances = Vec::new();
    let mut diagnostics = Vec::new();
    let mut seen = HashSet::new();
    let mut embedding_dim = None;
    let mut total = 0;

    for (line, parsed) in entries {
        total += 1;
        let entry = match parsed {
            Ok(e) => e,
            Err(message) => {
                diagnostics.push(Diagnostic {
                    line,
                    id: None,
                    message,
                });
                continue;
            }
        };
        let id = entry.id.clone();
        match prepare(entry, embedding_dim, epsilon, alpha) {
            Ok(inst) => {
                if !seen.insert(inst.record.id.clone()) {
                    return Err(Error::DuplicateId(inst.record.id));
                }
                if embedding_dim.is_none() {
                    embedding_dim = inst.record.embedding.as_ref().map(Vec::len);
                }
                instances.push(inst);
            }
            Err(err) => diagnostics.push(Diagnostic {
                line,
                id,
                message: err.to_string(),
            }),
        }
    }

    if instances.is_empty() {
        return Err(Error::NoRecords);
    }
    let positives = instances
        .iter()
        .filter(|i| i.target.hard_label == 1)
        .count();
    let summary = BuildSummary {
        total,
        built: instances.len(),
        skipped: diagnostics.len(),
        label_balance: positives as f64 / instances.len() as f64,
        diagnostics,
    };
    Ok(BuildOutput {
        embedding_dim,
        instances,
        summary,
    })
}
