use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::policy::Policy;
use crate::data::RoutingRecord;
use crate::error::{Error, Result};
use crate::geo::{accuracy_at_thresholds, mean, DistanceKm, ThresholdAccuracy, ThresholdSet};
use crate::router::ParadigmChoice;

/// Routing accuracy at one threshold.
///
/// Only records where exactly one paradigm lands within the threshold count;
/// `percent` is `None` when there are no such records.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoutingAccuracy {
    pub percent: Option<f64>,
    pub disagreements: usize,
}

fn routing_counts(
    distances: &[(DistanceKm, DistanceKm)],
    choices: &[ParadigmChoice],
    t: f64,
) -> RoutingAccuracy {
    let mut disagreements = 0usize;
    let mut correct = 0usize;
    for (&(d_ret, d_gen), &choice) in distances.iter().zip(choices) {
        let ret_in = d_ret.km() <= t;
        let gen_in = d_gen.km() <= t;
        if ret_in == gen_in {
            continue;
        }
        disagreements += 1;
        let chose_winner = match choice {
            ParadigmChoice::Retrieval => ret_in,
            ParadigmChoice::Generation => gen_in,
        };
        correct += usize::from(chose_winner);
    }
    RoutingAccuracy {
        percent: (disagreements > 0).then(|| 100.0 * correct as f64 / disagreements as f64),
        disagreements,
    }
}

fn labeled_distances(records: &[RoutingRecord]) -> Result<Vec<(DistanceKm, DistanceKm)>> {
    records.iter().map(RoutingRecord::distances).collect()
}

pub fn routing_accuracy(
    records: &[RoutingRecord],
    choices: &[ParadigmChoice],
    threshold_km: f64,
) -> Result<RoutingAccuracy> {
    if records.is_empty() {
        return Err(Error::NoRecords);
    }
    if records.len() != choices.len() {
        return Err(Error::Dimension {
            context: "routing choices".into(),
            expected: records.len(),
            got: choices.len(),
        });
    }
    ThresholdSet::new(vec![threshold_km])?;
    Ok(routing_counts(
        &labeled_distances(records)?,
        choices,
        threshold_km,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingRow {
    pub per_threshold: Vec<Option<f64>>,
    /// Mean over thresholds with a defined value.
    pub average: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyRow {
    pub policy: String,
    pub geolocalization: ThresholdAccuracy,
    pub routing: RoutingRow,
    /// Percentage of records sent to generation.
    pub generation_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub records: usize,
    pub thresholds: Vec<f64>,
    pub disagreements: Vec<usize>,
    pub rows: Vec<PolicyRow>,
}

pub fn evaluate(
    records: &[RoutingRecord],
    policies: &[Policy],
    ts: &ThresholdSet,
) -> Result<EvalReport> {
    if records.is_empty() {
        return Err(Error::NoRecords);
    }
    let distances = labeled_distances(records)?;
    let mut disagreements = Vec::new();
    let mut rows = Vec::with_capacity(policies.len());
    for policy in policies {
        let choices = records
            .iter()
            .map(|r| policy.choose(r))
            .collect::<Result<Vec<_>>>()?;
        let chosen: Vec<DistanceKm> = distances
            .iter()
            .zip(&choices)
            .map(|(&(d_ret, d_gen), c)| match c {
                ParadigmChoice::Retrieval => d_ret,
                ParadigmChoice::Generation => d_gen,
            })
            .collect();
        let routing: Vec<RoutingAccuracy> = ts
            .as_slice()
            .iter()
            .map(|&t| routing_counts(&distances, &choices, t))
            .collect();
        if disagreements.is_empty() {
            disagreements = routing.iter().map(|r| r.disagreements).collect();
        }
        let per_threshold: Vec<Option<f64>> = routing.iter().map(|r| r.percent).collect();
        let defined: Vec<f64> = per_threshold.iter().flatten().copied().collect();
        let generation = choices
            .iter()
            .filter(|&&c| c == ParadigmChoice::Generation)
            .count();
        rows.push(PolicyRow {
            policy: policy.name().to_string(),
            geolocalization: accuracy_at_thresholds(&chosen, ts)?,
            routing: RoutingRow {
                average: (!defined.is_empty()).then(|| mean(&defined)),
                per_threshold,
            },
            generation_share: 100.0 * generation as f64 / records.len() as f64,
        });
    }
    if disagreements.is_empty() {
        disagreements = ts
            .as_slice()
            .iter()
            .map(|&t| routing_counts(&distances, &[], t).disagreements)
            .collect();
    }
    let report = EvalReport {
        records: records.len(),
        thresholds: ts.as_slice().to_vec(),
        disagreements,
        rows,
    };
    debug_assert!(report.oracle_dominates());
    Ok(report)
}

fn threshold_label(t: f64) -> String {
    format!("{t}km")
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.2}"))
}

impl EvalReport {
    pub fn row(&self, policy: &str) -> Option<&PolicyRow> {
        self.rows.iter().find(|r| r.policy == policy)
    }

    /// True when there is no oracle row or it is at least every other row at
    /// every threshold.
    pub fn oracle_dominates(&self) -> bool {
        let Some(oracle) = self.row("oracle") else {
            return true;
        };
        self.rows.iter().all(|row| {
            row.geolocalization
                .per_threshold
                .iter()
                .zip(&oracle.geolocalization.per_threshold)
                .all(|(a, o)| a <= o)
        })
    }

    pub fn to_json(&self) -> String {
        // plain data, serialization cannot fail
        serde_json::to_string_pretty(self).unwrap_or_default()
    }

    /// Aligned text table: geolocalization accuracy, then routing accuracy.
    pub fn to_table(&self) -> String {
        let mut cols: Vec<String> = self
            .thresholds
            .iter()
            .map(|&t| threshold_label(t))
            .collect();
        cols.push("Average".into());
        let width = cols.iter().map(String::len).max().unwrap_or(0).max(7);
        let name_w = self
            .rows
            .iter()
            .map(|r| r.policy.len())
            .max()
            .unwrap_or(0)
            .max(10);
        let block = cols.len() * (width + 1);

        let mut out = String::new();
        let _ = writeln!(out, "records: {}", self.records);
        let _ = writeln!(
            out,
            "{:name_w$} {:<block$}| Routing Accuracy (%)",
            "", "Geolocalization Accuracy (%)"
        );
        let mut header = format!("{:name_w$} ", "policy");
        for _ in 0..2 {
            for c in &cols {
                let _ = write!(header, "{c:>width$} ");
            }
            header.push_str("| ");
        }
        let _ = writeln!(out, "{}", header.trim_end_matches([' ', '|']));
        for row in &self.rows {
            let mut line = format!("{:name_w$} ", row.policy);
            for v in &row.geolocalization.per_threshold {
                let _ = write!(line, "{:>width$} ", cell(Some(*v)));
            }
            let _ = write!(
                line,
                "{:>width$} | ",
                cell(Some(row.geolocalization.average))
            );
            for v in &row.routing.per_threshold {
                let _ = write!(line, "{:>width$} ", cell(*v));
            }
            let _ = write!(line, "{:>width$}", cell(row.routing.average));
            let _ = writeln!(out, "{line}");
        }
        let mut line = format!("{:name_w$} ", "disagree");
        line.push_str(&" ".repeat(block));
        line.push_str("| ");
        for d in &self.disagreements {
            let _ = write!(line, "{d:>width$} ");
        }
        let _ = writeln!(out, "{}", line.trim_end());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synthesize, SynthConfig};
    use crate::geo::GeoCoordinate;

    fn eq(lon: f64) -> GeoCoordinate {
        GeoCoordinate::new(0.0, lon).unwrap()
    }

    /// Degrees of longitude on the equator for a distance in km.
    fn deg(km: f64) -> f64 {
        km / (std::f64::consts::PI * crate::geo::EARTH_RADIUS_KM / 180.0)
    }

    fn rec(id: &str, d_ret: f64, d_gen: f64) -> RoutingRecord {
        RoutingRecord::new(id, Some(eq(0.0)), eq(deg(d_ret)), eq(-deg(d_gen)))
    }

    #[test]
    fn disagreement_set_count() {
        // A: only retrieval within 25 km, B: only generation, C: both.
        let records = [
            rec("A", 10.0, 100.0),
            rec("B", 100.0, 10.0),
            rec("C", 5.0, 6.0),
        ];
        let choices = [ParadigmChoice::Generation; 3];
        let acc = routing_accuracy(&records, &choices, 25.0).unwrap();
        assert_eq!(acc.disagreements, 2);
        assert_eq!(acc.percent, Some(50.0));
        let none = routing_accuracy(&records, &choices, 1.0).unwrap();
        assert_eq!(
            none,
            RoutingAccuracy {
                percent: None,
                disagreements: 0
            }
        );
        assert!(routing_accuracy(&[], &[], 1.0).is_err());
        assert!(routing_accuracy(&records, &choices[..1], 1.0).is_err());
    }

    #[test]
    fn exact_generation_dominates() {
        let records: Vec<RoutingRecord> = (0..20)
            .map(|i| rec(&format!("r{i}"), 10_000.0, 0.0))
            .collect();
        let report = evaluate(
            &records,
            &[
                Policy::PureRetrieval,
                Policy::PureGeneration,
                Policy::Oracle,
            ],
            &ThresholdSet::default(),
        )
        .unwrap();
        assert_eq!(
            report
                .row("generation")
                .unwrap()
                .geolocalization
                .per_threshold,
            vec![100.0; 5]
        );
        assert_eq!(
            report
                .row("retrieval")
                .unwrap()
                .geolocalization
                .per_threshold,
            vec![0.0; 5]
        );
        assert_eq!(
            report.row("oracle").unwrap().geolocalization.per_threshold,
            vec![100.0; 5]
        );
        assert_eq!(report.row("oracle").unwrap().routing.average, Some(100.0));
    }

    #[test]
    fn averages_and_complementarity() {
        let ds = synthesize(&SynthConfig {
            n: 500,
            ..SynthConfig::default()
        })
        .unwrap();
        let report = evaluate(
            &ds.records,
            &[
                Policy::PureRetrieval,
                Policy::PureGeneration,
                Policy::Oracle,
            ],
            &ThresholdSet::default(),
        )
        .unwrap();
        for row in &report.rows {
            let g = &row.geolocalization;
            assert!((g.average - g.per_threshold.iter().sum::<f64>() / 5.0).abs() < 1e-9);
            assert!(g.per_threshold.windows(2).all(|w| w[0] <= w[1]));
        }
        let ret = &report.row("retrieval").unwrap().routing.per_threshold;
        let gen = &report.row("generation").unwrap().routing.per_threshold;
        for (a, b) in ret.iter().zip(gen) {
            if let (Some(a), Some(b)) = (a, b) {
                assert!((a + b - 100.0).abs() < 1e-9);
            }
        }
        assert!(report.oracle_dominates());
    }

    #[test]
    fn table_and_json_render() {
        let records = [rec("A", 10.0, 100.0), rec("B", 100.0, 10.0)];
        let report = evaluate(
            &records,
            &[Policy::PureRetrieval, Policy::Oracle],
            &ThresholdSet::default(),
        )
        .unwrap();
        let table = report.to_table();
        assert!(table.contains("2500km"));
        assert!(table.contains("n/a"));
        assert!(table.lines().any(|l| l.starts_with("oracle")));
        let back: EvalReport = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn empty_and_unlabeled() {
        assert!(evaluate(&[], &[Policy::Oracle], &ThresholdSet::default()).is_err());
        let mut r = rec("x", 1.0, 2.0);
        r.ground_truth = None;
        assert!(evaluate(&[r], &[Policy::PureRetrieval], &ThresholdSet::default()).is_err());
    }
}
