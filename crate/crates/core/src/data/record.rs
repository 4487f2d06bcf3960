use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::dispo::sigmoid;
use crate::error::{Error, Result};
use crate::geo::{geodesic_distance, DistanceKm, GeoCoordinate};

/// One retrieved database entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub coordinate: GeoCoordinate,
    pub similarity: Option<f64>,
}

impl Candidate {
    pub fn new(coordinate: GeoCoordinate, similarity: Option<f64>) -> Result<Self> {
        if let Some(s) = similarity {
            if !s.is_finite() {
                return Err(Error::invalid(
                    "candidate.similarity",
                    format!("{s} is not finite"),
                ));
            }
        }
        Ok(Self {
            coordinate,
            similarity,
        })
    }
}

/// One query with both paradigm predictions and its retrieval context.
///
/// The query image itself is represented by `id` and, optionally, a
/// precomputed `embedding`. Fields this crate does not know are kept in
/// `extra` and written back unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingRecord {
    pub id: String,
    pub ground_truth: Option<GeoCoordinate>,
    pub pred_retrieval: GeoCoordinate,
    pub pred_generation: GeoCoordinate,
    /// Ordered by retrieval rank; the first element is the top-1.
    pub candidates: Vec<Candidate>,
    pub embedding: Option<Vec<f64>>,
    pub extra: Map<String, Value>,
}

impl RoutingRecord {
    pub fn new(
        id: impl Into<String>,
        ground_truth: Option<GeoCoordinate>,
        pred_retrieval: GeoCoordinate,
        pred_generation: GeoCoordinate,
    ) -> Self {
        Self {
            id: id.into(),
            ground_truth,
            pred_retrieval,
            pred_generation,
            candidates: Vec::new(),
            embedding: None,
            extra: Map::new(),
        }
    }

    pub fn with_candidates(mut self, candidates: Vec<Candidate>) -> Self {
        self.candidates = candidates;
        self
    }

    pub fn with_embedding(mut self, embedding: Vec<f64>) -> Self {
        self.embedding = Some(embedding);
        self
    }

    /// Errors of both paradigms against ground truth, `(retrieval, generation)`.
    pub fn distances(&self) -> Result<(DistanceKm, DistanceKm)> {
        let gt = self
            .ground_truth
            .ok_or_else(|| Error::Unlabeled(self.id.clone()))?;
        Ok((
            geodesic_distance(self.pred_retrieval, gt),
            geodesic_distance(self.pred_generation, gt),
        ))
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::invalid("id", "must be non-empty"));
        }
        for (i, c) in self.candidates.iter().enumerate() {
            if let Some(s) = c.similarity {
                if !s.is_finite() {
                    return Err(Error::invalid(
                        format!("candidates[{i}].similarity"),
                        "not finite",
                    ));
                }
            }
        }
        if let Some(e) = &self.embedding {
            if let Some(j) = e.iter().position(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("embedding[{j}]"), "not finite"));
            }
        }
        Ok(())
    }
}

/// Per-record supervision derived from the two paradigm errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreferenceTarget {
    #[serde(rename = "d_ret")]
    pub d_retrieval: DistanceKm,
    #[serde(rename = "d_gen")]
    pub d_generation: DistanceKm,
    pub delta: f64,
    #[serde(rename = "p")]
    pub soft_label: f64,
    #[serde(rename = "y")]
    pub hard_label: u8,
}

/// Log-ratio of the two (epsilon-shifted) errors.
///
/// Near ties go through `ln_1p` so the result keeps full relative precision
/// even when the two errors almost cancel.
fn log_error_ratio(d_ret: f64, d_gen: f64, epsilon: f64) -> f64 {
    if d_ret == d_gen {
        return 0.0;
    }
    let a = d_ret + epsilon;
    let b = d_gen + epsilon;
    let ratio = a / b;
    if (0.5..=2.0).contains(&ratio) {
        ((d_ret - d_gen) / b).ln_1p()
    } else {
        a.ln() - b.ln()
    }
}

fn check_hyper(epsilon: f64, alpha: f64) -> Result<()> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::invalid(
            "epsilon",
            format!("{epsilon} must be positive"),
        ));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::invalid("alpha", format!("{alpha} must be positive")));
    }
    Ok(())
}

/// Soft and hard labels from a pair of paradigm errors.
///
/// `delta = ln(d_ret + eps) - ln(d_gen + eps)`, `p = sigmoid(alpha * delta)`,
/// `y = 1` iff generation is strictly closer. Ties give `p = 0.5, y = 0`.
pub fn preference_from_distances(
    d_retrieval: DistanceKm,
    d_generation: DistanceKm,
    epsilon: f64,
    alpha: f64,
) -> Result<PreferenceTarget> {
    check_hyper(epsilon, alpha)?;
    let delta = log_error_ratio(d_retrieval.km(), d_generation.km(), epsilon);
    Ok(PreferenceTarget {
        d_retrieval,
        d_generation,
        delta,
        soft_label: sigmoid(alpha * delta),
        hard_label: u8::from(d_generation.km() < d_retrieval.km()),
    })
}

pub fn build_targets(record: &RoutingRecord, epsilon: f64, alpha: f64) -> Result<PreferenceTarget> {
    check_hyper(epsilon, alpha)?;
    let (d_ret, d_gen) = record.distances()?;
    preference_from_distances(d_ret, d_gen, epsilon, alpha)
}

/// A record paired with its supervision.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub record: RoutingRecord,
    pub target: PreferenceTarget,
}

/// Records sharing one embedding dimension and unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub embedding_dim: Option<usize>,
    pub records: Vec<RoutingRecord>,
}

impl Dataset {
    /// Validates ids and embedding dimensions; the dimension is taken from
    /// the first record carrying an embedding.
    pub fn new(records: Vec<RoutingRecord>) -> Result<Self> {
        let embedding_dim = records
            .iter()
            .find_map(|r| r.embedding.as_ref().map(Vec::len));
        let ds = Self {
            embedding_dim,
            records,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for r in &self.records {
            r.validate()?;
            if !seen.insert(r.id.as_str()) {
                return Err(Error::DuplicateId(r.id.clone()));
            }
            if let (Some(e), Some(dim)) = (&r.embedding, self.embedding_dim) {
                if e.len() != dim {
                    return Err(Error::Dimension {
                        context: format!("embedding of `{}`", r.id),
                        expected: dim,
                        got: e.len(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Targets for every record; fails on the first unlabeled one.
    pub fn instances(&self, epsilon: f64, alpha: f64) -> Result<Vec<Instance>> {
        self.records
            .iter()
            .map(|r| {
                Ok(Instance {
                    target: build_targets(r, epsilon, alpha)?,
                    record: r.clone(),
                })
            })
            .collect()
    }
}

/// The on-disk JSON shape of a record line. Every field is optional so that
/// raw prediction dumps with gaps can be parsed and diagnosed.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RawEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pred_ret: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pred_gen: Option<[f64; 2]>,
    #[serde(default)]
    pub candidates: Vec<RawCandidate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<f64>>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawCandidate {
    pub gps: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub similarity: Option<f64>,
}

fn coord(raw: [f64; 2], field: &str) -> Result<GeoCoordinate> {
    GeoCoordinate::validated(raw[0], raw[1], field)
}

impl RawEntry {
    /// Strict conversion: `id`, `pred_ret` and `pred_gen` must be present.
    pub fn into_record(self) -> Result<RoutingRecord> {
        let id = self
            .id
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::invalid("id", "missing or empty"))?;
        let ground_truth = self.gt.map(|g| coord(g, "gt")).transpose()?;
        let pred_retrieval = coord(
            self.pred_ret
                .ok_or_else(|| Error::invalid("pred_ret", "missing"))?,
            "pred_ret",
        )?;
        let pred_generation = coord(
            self.pred_gen
                .ok_or_else(|| Error::invalid("pred_gen", "missing"))?,
            "pred_gen",
        )?;
        let candidates = self
            .candidates
            .into_iter()
            .enumerate()
            .map(|(i, c)| {
                let field = format!("candidates[{i}]");
                Candidate::new(coord(c.gps, &field)?, c.similarity)
                    .map_err(|_| Error::invalid(format!("{field}.similarity"), "not finite"))
            })
            .collect::<Result<Vec<_>>>()?;
        let record = RoutingRecord {
            id,
            ground_truth,
            pred_retrieval,
            pred_generation,
            candidates,
            embedding: self.embedding,
            extra: self.extra,
        };
        record.validate()?;
        Ok(record)
    }
}

impl From<&RoutingRecord> for RawEntry {
    fn from(r: &RoutingRecord) -> Self {
        RawEntry {
            id: Some(r.id.clone()),
            gt: r.ground_truth.map(Into::into),
            pred_ret: Some(r.pred_retrieval.into()),
            pred_gen: Some(r.pred_generation.into()),
            candidates: r
                .candidates
                .iter()
                .map(|c| RawCandidate {
                    gps: c.coordinate.into(),
                    similarity: c.similarity,
                })
                .collect(),
            embedding: r.embedding.clone(),
            extra: r.extra.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn km(v: f64) -> DistanceKm {
        DistanceKm::new(v).unwrap()
    }

    fn c(lat: f64, lon: f64) -> GeoCoordinate {
        GeoCoordinate::new(lat, lon).unwrap()
    }

    #[test]
    fn tie_gives_neutral_label_and_retrieval() {
        let gt = c(10.0, 20.0);
        let r = RoutingRecord::new("a", Some(gt), gt, gt);
        let t = build_targets(&r, 1e-6, 1.6).unwrap();
        assert_eq!(t.delta, 0.0);
        assert_eq!(t.soft_label, 0.5);
        assert_eq!(t.hard_label, 0);
        let t = preference_from_distances(km(0.0), km(0.0), 1e-6, 1.6).unwrap();
        assert_eq!((t.delta, t.soft_label, t.hard_label), (0.0, 0.5, 0));
    }

    #[test]
    fn hundred_to_one() {
        let t = preference_from_distances(km(100.0), km(1.0), 1e-6, 1.6).unwrap();
        assert!((t.delta - 4.605169).abs() < 1e-6, "{}", t.delta);
        assert!((t.soft_label - 0.999370).abs() < 1e-5, "{}", t.soft_label);
        assert_eq!(t.hard_label, 1);
    }

    #[test]
    fn errors() {
        let gt = c(0.0, 0.0);
        let r = RoutingRecord::new("x", None, gt, gt);
        assert!(matches!(
            build_targets(&r, 1e-6, 1.6),
            Err(Error::Unlabeled(_))
        ));
        let r = RoutingRecord::new("x", Some(gt), gt, gt);
        assert!(build_targets(&r, 0.0, 1.6).is_err());
        assert!(build_targets(&r, 1e-6, -1.0).is_err());
    }

    #[test]
    fn large_alpha_approaches_hard_label() {
        for (a, b) in [(10.0, 9.0), (5.0, 500.0), (1.0, 1.2), (3000.0, 2.0)] {
            let t = preference_from_distances(km(a), km(b), 1e-6, 100.0).unwrap();
            if t.delta.abs() >= 0.1 {
                let indicator = if t.delta > 0.0 { 1.0 } else { 0.0 };
                assert!((t.soft_label - indicator).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn duplicate_ids_rejected() {
        let p = c(1.0, 1.0);
        let recs = vec![
            RoutingRecord::new("a", None, p, p),
            RoutingRecord::new("a", None, p, p),
        ];
        assert!(matches!(Dataset::new(recs), Err(Error::DuplicateId(id)) if id == "a"));
    }

    #[test]
    fn mixed_embedding_dimensions_rejected() {
        let p = c(1.0, 1.0);
        let recs = vec![
            RoutingRecord::new("a", None, p, p).with_embedding(vec![1.0, 2.0]),
            RoutingRecord::new("b", None, p, p).with_embedding(vec![1.0]),
        ];
        assert!(matches!(Dataset::new(recs), Err(Error::Dimension { .. })));
    }
}
