//! Reference implementations shared by the integration tests. None of them
//! call into the library's math.

#![allow(dead_code)]

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;

type Big = FBig<HalfEven, 2>;

const BITS: usize = 256;

fn big(x: f64) -> Big {
    Big::try_from(x)
        .expect("finite")
        .with_precision(BITS)
        .value()
}

/// `delta` and `p` evaluated in 256-bit binary floating point.
pub fn exact_delta_p(d_ret: f64, d_gen: f64, eps: f64, alpha: f64) -> (f64, f64) {
    let e = big(eps);
    let delta = (big(d_ret) + &e).ln() - (big(d_gen) + &e).ln();
    let z = big(alpha) * &delta;
    let p = Big::ONE.with_precision(BITS).value() / (Big::ONE + (-z).exp());
    (delta.to_f64().value(), p.to_f64().value())
}

pub const RADIUS_KM: f64 = 6371.0;

/// Great-circle distance through the atan2 form of the central angle.
pub fn great_circle_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dl = (lon2 - lon1).to_radians();
    let x = p2.cos() * dl.sin();
    let y = p1.cos() * p2.sin() - p1.sin() * p2.cos() * dl.cos();
    let z = p1.sin() * p2.sin() + p1.cos() * p2.cos() * dl.cos();
    RADIUS_KM * x.hypot(y).atan2(z)
}

/// Flat-parameter router forward pass: linear is `theta . u`; the MLP layout
/// is `w1 (h x m, row-major) | b1 (h) | w2 (h) | b2`.
pub fn naive_score(hidden: Option<usize>, params: &[f64], u: &[f64]) -> f64 {
    let m = u.len();
    match hidden {
        None => {
            let mut s = 0.0;
            for i in 0..m {
                s += params[i] * u[i];
            }
            s
        }
        Some(h) => {
            let b1 = h * m;
            let w2 = b1 + h;
            let mut s = params[w2 + h];
            for j in 0..h {
                let mut a = params[b1 + j];
                for i in 0..m {
                    a += params[j * m + i] * u[i];
                }
                s += params[w2 + j] * a.tanh();
            }
            s
        }
    }
}

/// Mean binary cross-entropy written directly from its definition.
pub fn naive_loss(hidden: Option<usize>, params: &[f64], batch: &[(Vec<f64>, f64)]) -> f64 {
    let mut total = 0.0;
    for (u, q) in batch {
        let s = 1.0 / (1.0 + (-naive_score(hidden, params, u)).exp());
        total -= q * s.ln() + (1.0 - q) * (1.0 - s).ln();
    }
    total / batch.len() as f64
}

/// Five-point central difference of `f` along coordinate `i`.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
    let at = |k: f64| {
        let mut y = x.to_vec();
        y[i] += k * h;
        f(&y)
    };
    (-at(2.0) + 8.0 * at(1.0) - 8.0 * at(-1.0) + at(-2.0)) / (12.0 * h)
}

pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// `-[q ln sigmoid(r) + (1 - q) ln(1 - sigmoid(r))]`. The working precision
/// grows with `|r|` so that `1 + e^-|r|` stays distinguishable from one.
pub fn exact_loss(r: f64, q: f64) -> f64 {
    let bits = BITS + (r.abs() * std::f64::consts::LOG2_E) as usize;
    let lift = |x: f64| {
        Big::try_from(x)
            .expect("finite")
            .with_precision(bits)
            .value()
    };
    let one = lift(1.0);
    let (r, q) = (lift(r), lift(q));
    let pos = (one.clone() + (-r.clone()).exp()).ln();
    let neg = (one.clone() + r.exp()).ln();
    (q.clone() * pos + (one - q) * neg).to_f64().value()
}
