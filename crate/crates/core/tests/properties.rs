use georouter::data::{
    preference_from_distances, read_jsonl_from, synthesize, write_jsonl_to, SynthConfig,
};
use georouter::dispo::{grad_wrt_score, instance_loss, logit, loss, DispoConfig};
use georouter::geo::{counts_within, geodesic_distance, DistanceKm, GeoCoordinate, ThresholdSet};
use georouter::router::{decide, ContextAblation, ContextEncoder, FeatureEncoder};
use proptest::prelude::*;

const HALF_CIRCUMFERENCE_KM: f64 = std::f64::consts::PI * 6371.0;

fn coordinate() -> impl Strategy<Value = GeoCoordinate> {
    (-90.0f64..=90.0, -180.0f64..=180.0)
        .prop_map(|(lat, lon)| GeoCoordinate::new(lat, lon).unwrap())
}

fn distance() -> impl Strategy<Value = f64> {
    prop_oneof![
        Just(0.0),
        1e-3f64..2e4,
        (-3.0f64..4.3).prop_map(|e| 10f64.powf(e))
    ]
}

fn entropy(q: f64) -> f64 {
    let h = |x: f64| if x > 0.0 { -x * x.ln() } else { 0.0 };
    h(q) + h(1.0 - q)
}

proptest! {
    #[test]
    fn geodesic_is_symmetric_and_bounded(a in coordinate(), b in coordinate()) {
        let ab = geodesic_distance(a, b).km();
        prop_assert_eq!(ab.to_bits(), geodesic_distance(b, a).km().to_bits());
        prop_assert!((0.0..=HALF_CIRCUMFERENCE_KM + 1e-9).contains(&ab));
        prop_assert_eq!(geodesic_distance(a, a).km(), 0.0);
    }

    #[test]
    fn geodesic_triangle_inequality(a in coordinate(), b in coordinate(), c in coordinate()) {
        let ac = geodesic_distance(a, c).km();
        let via = geodesic_distance(a, b).km() + geodesic_distance(b, c).km();
        prop_assert!(ac <= via + 1e-9 * via.max(1.0));
    }

    #[test]
    fn threshold_counts_grow_with_threshold(ds in prop::collection::vec(0.0f64..20_000.0, 0..50)) {
        let ds: Vec<DistanceKm> = ds.into_iter().map(|d| DistanceKm::new(d).unwrap()).collect();
        let counts = counts_within(&ds, &ThresholdSet::default());
        prop_assert!(counts.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(counts.iter().all(|&c| c <= ds.len()));
    }

    #[test]
    fn soft_label_monotone_in_retrieval_error(
        d1 in distance(), d2 in distance(), dg in distance(), alpha in 0.05f64..20.0,
    ) {
        let (lo, hi) = (d1.min(d2), d1.max(d2));
        let p = |dr: f64| preference_from_distances(
            DistanceKm::new(dr).unwrap(), DistanceKm::new(dg).unwrap(), 1e-6, alpha,
        ).unwrap().soft_label;
        prop_assert!(p(lo) <= p(hi));
    }

    #[test]
    fn swapping_paradigms_mirrors_targets(dr in distance(), dg in distance(), alpha in 0.05f64..20.0) {
        let t = |a: f64, b: f64| preference_from_distances(
            DistanceKm::new(a).unwrap(), DistanceKm::new(b).unwrap(), 1e-6, alpha,
        ).unwrap();
        let (fwd, back) = (t(dr, dg), t(dg, dr));
        prop_assert!((fwd.delta + back.delta).abs() <= 1e-15 * fwd.delta.abs().max(1e-300));
        prop_assert!((fwd.soft_label + back.soft_label - 1.0).abs() < 1e-15);
        prop_assert_eq!(fwd.hard_label, u8::from(dg < dr));
        prop_assert_eq!(back.hard_label, u8::from(dr < dg));
        prop_assert!((0.0..=1.0).contains(&fwd.soft_label));
    }

    #[test]
    fn loss_bounded_below_by_label_entropy(r in -50.0f64..50.0, q in 0.0f64..=1.0) {
        prop_assert!(instance_loss(r, q) >= entropy(q) - 1e-12);
        if q > 1e-6 && q < 1.0 - 1e-6 {
            prop_assert!((instance_loss(logit(q), q) - entropy(q)).abs() < 1e-9);
        }
    }

    #[test]
    fn score_gradient_lies_in_label_window(r in -1e4f64..1e4, q in 0.0f64..=1.0) {
        let g = grad_wrt_score(r, q).unwrap();
        prop_assert!(g >= -q && g <= 1.0 - q);
    }

    #[test]
    fn batch_loss_is_weighted_mean(
        xs in prop::collection::vec((-30.0f64..30.0, distance(), distance()), 1..12),
        ys in prop::collection::vec((-30.0f64..30.0, distance(), distance()), 1..12),
    ) {
        let cfg = DispoConfig::default();
        let split = |v: &[(f64, f64, f64)]| -> (Vec<f64>, Vec<_>) {
            v.iter().map(|&(r, a, b)| (r, preference_from_distances(
                DistanceKm::new(a).unwrap(), DistanceKm::new(b).unwrap(), cfg.epsilon, cfg.alpha,
            ).unwrap())).unzip()
        };
        let (rx, tx) = split(&xs);
        let (ry, ty) = split(&ys);
        let both = loss(&[rx.clone(), ry.clone()].concat(), &[tx.clone(), ty.clone()].concat(), &cfg).unwrap();
        let (nx, ny) = (xs.len() as f64, ys.len() as f64);
        let parts = (loss(&rx, &tx, &cfg).unwrap() * nx + loss(&ry, &ty, &cfg).unwrap() * ny) / (nx + ny);
        prop_assert!((both - parts).abs() <= 1e-12 * both.max(1.0));
    }

    #[test]
    fn hard_mode_is_plain_cross_entropy(r in -30.0f64..30.0, dr in distance(), dg in distance()) {
        let t = preference_from_distances(DistanceKm::new(dr).unwrap(), DistanceKm::new(dg).unwrap(), 1e-6, 1.6).unwrap();
        let hard = DispoConfig { hard_label_mode: true, ..DispoConfig::default() };
        // -ln sigmoid(r) = ln(1 + e^-r), -ln(1 - sigmoid(r)) = ln(1 + e^r)
        let bce = if t.hard_label == 1 { (1.0 + (-r).exp()).ln() } else { (1.0 + r.exp()).ln() };
        prop_assert!((loss(&[r], &[t], &hard).unwrap() - bce).abs() < 1e-10);
    }

    #[test]
    fn decision_depends_only_on_sign(r in -1e6f64..1e6, c in 1e-6f64..1e6) {
        prop_assert_eq!(decide(c * r).unwrap(), decide(r).unwrap());
    }

    #[test]
    fn context_features_ignore_candidate_order(seed in any::<u64>(), shift in 1usize..9) {
        let rec = synthesize(&SynthConfig { n: 1, seed, ..SynthConfig::default() }).unwrap().records.remove(0);
        let mut shuffled = rec.clone();
        shuffled.candidates[1..].rotate_left(shift);
        let enc = ContextEncoder { ablation: ContextAblation::Full };
        let (a, b) = (enc.encode(&rec).unwrap(), enc.encode(&shuffled).unwrap());
        for i in [1, 2, 3, 4] {
            prop_assert!((a[i] - b[i]).abs() < 1e-12);
        }
        prop_assert!(a.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn jsonl_round_trip(seed in any::<u64>(), n in 1usize..20) {
        let ds = synthesize(&SynthConfig { n, seed, dim: 3, ..SynthConfig::default() }).unwrap();
        let mut buf = Vec::new();
        write_jsonl_to(&mut buf, &ds).unwrap();
        prop_assert_eq!(read_jsonl_from(buf.as_slice()).unwrap(), ds);
    }
}
