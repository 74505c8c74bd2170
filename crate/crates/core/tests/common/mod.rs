//! Oracles shared by the integration tests.

#![allow(dead_code)]

use std::f64::consts::PI;

use hl_core::legendre::legendre_p;

/// Colatitudes where `P_ℓ(cos θ) = u`, by a fine scan and bisection.
pub fn zonal_level_colatitudes(l: usize, u: f64) -> Vec<f64> {
    let g = |t: f64| legendre_p(l, t.cos()).unwrap() - u;
    let n = 400 * (l + 1);
    let h = PI / n as f64;
    let mut roots = Vec::new();
    let mut prev = g(0.0);
    for i in 1..=n {
        let t = i as f64 * h;
        let cur = g(t);
        if prev == 0.0 {
            roots.push(t - h);
        } else if prev * cur < 0.0 {
            let (mut a, mut b, mut fa) = (t - h, t, prev);
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                let fm = g(m);
                if fa * fm <= 0.0 {
                    b = m;
                } else {
                    a = m;
                    fa = fm;
                }
            }
            roots.push(0.5 * (a + b));
        }
        prev = cur;
    }
    roots
}

/// Length of `{P_ℓ(cos θ) = u}`: a union of latitude circles.
pub fn zonal_level_length(l: usize, u: f64) -> f64 {
    zonal_level_colatitudes(l, u)
        .iter()
        .map(|t| 2.0 * PI * t.sin())
        .sum()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}
