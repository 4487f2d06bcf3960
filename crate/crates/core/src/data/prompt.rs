use std::fmt::Write;

use super::record::RoutingRecord;

/// Text form of the routing prompt.
///
/// Images are replaced by placeholders: the query by its id, the top-1
/// retrieved image by a fixed tag. Candidates after the top-1 are listed one
/// per line.
pub fn render_prompt(record: &RoutingRecord) -> String {
    let mut out = String::new();
    out.push_str(
        "Task: Decide whether to use generation or retrieval for this image's geolocalization.\n",
    );
    let _ = writeln!(out, "Query: <image:{}>", record.id);
    let _ = writeln!(
        out,
        "Generation-based Prediction: ({})",
        record.pred_generation
    );
    let _ = writeln!(
        out,
        "Retrieval-based Prediction: ({}) <image:top-1 retrieved>",
        record.pred_retrieval
    );
    out.push_str("Other Retrieved Candidate Coordinates:\n");
    for c in record.candidates.iter().skip(1) {
        let _ = writeln!(out, "({})", c.coordinate);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Candidate;
    use crate::geo::GeoCoordinate;

    fn c(lat: f64, lon: f64) -> GeoCoordinate {
        GeoCoordinate::new(lat, lon).unwrap()
    }

    #[test]
    fn no_candidates_gives_empty_list() {
        let r = RoutingRecord::new("q42", None, c(1.0, 2.0), c(-3.5, 4.25));
        let text = render_prompt(&r);
        assert_eq!(
            text,
            "Task: Decide whether to use generation or retrieval for this image's geolocalization.\n\
             Query: <image:q42>\n\
             Generation-based Prediction: (-3.500000, 4.250000)\n\
             Retrieval-based Prediction: (1.000000, 2.000000) <image:top-1 retrieved>\n\
             Other Retrieved Candidate Coordinates:\n"
        );
        assert_eq!(text, render_prompt(&r));
    }

    #[test]
    fn top_one_is_excluded_from_trailing_list() {
        let cands = vec![
            Candidate::new(c(1.0, 2.0), Some(0.9)).unwrap(),
            Candidate::new(c(5.0, 6.0), None).unwrap(),
            Candidate::new(c(7.123456789, -8.0), None).unwrap(),
        ];
        let r = RoutingRecord::new("q", None, c(1.0, 2.0), c(0.0, 0.0)).with_candidates(cands);
        let text = render_prompt(&r);
        let tail: Vec<&str> = text
            .split("Other Retrieved Candidate Coordinates:\n")
            .nth(1)
            .unwrap()
            .lines()
            .collect();
        assert_eq!(tail, ["(5.000000, 6.000000)", "(7.123457, -8.000000)"]);
    }
}
