//! Shared fixtures for the integration tests: seeded parameter draws that
//! respect each standard form's constraints.
#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, PI};

use nls_solitons::system_model::StandardForm;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn unit3(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 0.1 && n <= 1.0 {
            return v.map(|x| x / n);
        }
    }
}

/// A random admissible instance of the standard form `tag`.
pub fn draw(tag: &str, rng: &mut ChaCha8Rng) -> StandardForm {
    match tag {
        "NLS1" => {
            const PAIRS: [(f64, f64); 6] = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, -1.0), (1.0, -1.0), (-1.0, -1.0)];
            let (alpha, beta) = PAIRS[rng.random_range(0..PAIRS.len())];
            StandardForm::Nls1 { alpha, beta }
        }
        "NLS2" => {
            let (a, b): (f64, f64) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let sigma = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            // a small share of the degenerate α = β = 0 case
            if rng.random_bool(0.05) {
                return StandardForm::Nls2 { alpha: 0.0, beta: 0.0, sigma };
            }
            StandardForm::Nls2 { alpha: a.max(b), beta: a.min(b), sigma }
        }
        "NLS3" => {
            let r = rng.random_range(-3.0..3.0);
            if rng.random_bool(0.05) {
                let alpha1 = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                return StandardForm::Nls3 { alpha1, alpha2: 0.0, r };
            }
            loop {
                let phi: f64 = rng.random_range(0.0..PI);
                let (alpha1, alpha2) = (phi.cos(), phi.sin());
                if (alpha1.abs() - alpha2.abs()).abs() > 1e-3 {
                    return StandardForm::Nls3 { alpha1, alpha2, r };
                }
            }
        }
        "NLS4" => loop {
            let [a, b, c] = unit3(rng);
            let (alpha1, alpha2, alpha3) = (a, b.abs(), c.abs());
            if alpha3 > 1e-3 && (alpha1 - alpha2).abs() > 1e-3 {
                return StandardForm::Nls4 { alpha1, alpha2, alpha3, r: rng.random_range(-3.0..3.0) };
            }
        },
        "NLS5" => loop {
            let [a, b, c] = unit3(rng);
            let (alpha1, alpha2, alpha3) = (a, b.abs(), c.abs());
            let eta: f64 = rng.random_range(0.0..PI);
            if alpha2 > 1e-3 && alpha3 > 1e-3 && eta > 1e-3 && (eta > FRAC_PI_2 && alpha1 > 0.0 || eta <= FRAC_PI_2) {
                return StandardForm::Nls5 { alpha1, alpha2, alpha3, r: rng.random_range(-3.0..3.0), eta };
            }
        },
        "CO" => StandardForm::Co { kappa: rng.random_range(-2.0..3.0), gamma: rng.random_range(0.01..3.0) },
        other => panic!("unknown tag {other}"),
    }
}
