//! Legendre polynomials, their derivatives, fully normalized associated
//! Legendre functions and Gauss–Legendre quadrature.
//!
//! Everything here is a pure function of its arguments.

mod gauss;
mod moments;

pub use gauss::{gauss_legendre, GaussLegendre};
pub use moments::{appendix_moment_integrals, MomentId, MomentIntegralTable, MomentScaling};

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// `P_ℓ(t)` together with its first two derivatives in `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegendreEval {
    pub degree: usize,
    pub argument: f64,
    pub p: f64,
    pub dp: f64,
    pub ddp: f64,
}

impl LegendreEval {
    /// Residual of the Legendre ODE `(1−t²)P″ − 2tP′ + ℓ(ℓ+1)P`.
    pub fn ode_residual(&self) -> f64 {
        let t = self.argument;
        let l = self.degree as f64;
        (1.0 - t * t) * self.ddp - 2.0 * t * self.dp + l * (l + 1.0) * self.p
    }
}

fn check_argument(t: f64) -> Result<()> {
    if !t.is_finite() || t.abs() > 1.0 {
        return Err(Error::Domain(format!(
            "Legendre argument {t} outside [-1, 1]"
        )));
    }
    Ok(())
}

/// Bonnet recurrence without argument checks; callers guarantee `|t| ≤ 1`.
#[inline]
pub(crate) fn legendre_pair_unchecked(l: usize, t: f64) -> (f64, f64) {
    // returns (P_ℓ, P_{ℓ−1}); P_{−1} is taken as 0
    if l == 0 {
        return (1.0, 0.0);
    }
    let mut prev = 1.0;
    let mut cur = t;
    for n in 1..l {
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0) * t * cur - nf * prev) / (nf + 1.0);
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

/// `P_ℓ(t)` by the three-term recurrence. Exact at `t = ±1`.
pub fn legendre_p(l: usize, t: f64) -> Result<f64> {
    check_argument(t)?;
    if t == 1.0 {
        return Ok(1.0);
    }
    if t == -1.0 {
        return Ok(if l % 2 == 0 { 1.0 } else { -1.0 });
    }
    Ok(legendre_pair_unchecked(l, t).0)
}

#[inline]
pub(crate) fn legendre_with_derivatives_unchecked(l: usize, t: f64) -> LegendreEval {
    // P'_{n+1} = P'_{n-1} + (2n+1) P_n and the same one level up for P''.
    // No division by 1 − t², so the endpoints need no special casing.
    let (mut p0, mut p1) = (1.0, t);
    let (mut d0, mut d1) = (0.0, 1.0);
    let (mut s0, mut s1) = (0.0, 0.0);
    if l == 0 {
        return LegendreEval {
            degree: 0,
            argument: t,
            p: 1.0,
            dp: 0.0,
            ddp: 0.0,
        };
    }
    for n in 1..l {
        let nf = n as f64;
        let p2 = ((2.0 * nf + 1.0) * t * p1 - nf * p0) / (nf + 1.0);
        let d2 = d0 + (2.0 * nf + 1.0) * p1;
        let s2 = s0 + (2.0 * nf + 1.0) * d1;
        p0 = p1;
        p1 = p2;
        d0 = d1;
        d1 = d2;
        s0 = s1;
        s1 = s2;
    }
    LegendreEval {
        degree: l,
        argument: t,
        p: p1,
        dp: d1,
        ddp: s1,
    }
}

/// `P_ℓ`, `P′_ℓ` and `P″_ℓ` at `t`.
///
/// At `t = ±1` the analytic limits `P′_ℓ(±1) = (±1)^{ℓ+1} ℓ(ℓ+1)/2` and
/// `P″_ℓ(±1) = (±1)^ℓ (ℓ−1)ℓ(ℓ+1)(ℓ+2)/8` are returned.
pub fn legendre_with_derivatives(l: usize, t: f64) -> Result<LegendreEval> {
    check_argument(t)?;
    if t.abs() == 1.0 {
        let lf = l as f64;
        let sign_p = if t < 0.0 && l % 2 == 1 { -1.0 } else { 1.0 };
        return Ok(LegendreEval {
            degree: l,
            argument: t,
            p: sign_p,
            dp: sign_p * t * lf * (lf + 1.0) / 2.0,
            ddp: sign_p * (lf - 1.0) * lf * (lf + 1.0) * (lf + 2.0) / 8.0,
        });
    }
    Ok(legendre_with_derivatives_unchecked(l, t))
}

/// Orders whose value falls below this past the turning point `m > ℓ sin θ`
/// are treated as zero, together with every higher order.
const UNDERFLOW_FLOOR: f64 = 1e-280;

/// The sectoral seed is kept as `mantissa · 2^{−600 e}`; the recurrence in
/// degree can grow it by hundreds of decades before it becomes significant.
const SCALE_EXP: i32 = 600;

#[derive(Debug, Clone, Copy)]
struct ScaledSeed {
    mantissa: f64,
    exponent: i32,
}

impl ScaledSeed {
    fn start() -> Self {
        Self {
            mantissa: (1.0 / (4.0 * PI)).sqrt(),
            exponent: 0,
        }
    }

    /// `P̄_m^m → P̄_{m+1}^{m+1}`.
    #[inline]
    fn step(&mut self, next_m: usize, sin_t: f64) {
        let mf = next_m as f64;
        self.mantissa *= -((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * sin_t;
        if self.mantissa != 0.0 && self.mantissa.abs() < f64::powi(2.0, -SCALE_EXP) {
            self.mantissa *= f64::powi(2.0, SCALE_EXP);
            self.exponent += 1;
        }
    }
}

/// Fully normalized associated Legendre values `P̄_ℓ^m(cos θ)` for every
/// `m = 0..=ℓ` at one colatitude, with their θ-derivatives.
///
/// Normalization: `Y_ℓm(θ, φ) = P̄_ℓ^m(cos θ) e^{imφ}` is orthonormal on the
/// sphere, Condon–Shortley phase included, so that
/// `Y_{ℓ,−m} = (−1)^m conj(Y_ℓm)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssocLegendreRow {
    pub degree: usize,
    pub theta: f64,
    pub values: Vec<f64>,
    pub dtheta: Vec<f64>,
}

impl AssocLegendreRow {
    pub fn new(l: usize, theta: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::Domain(format!("colatitude {theta} outside [0, pi]")));
        }
        Ok(Self::new_unchecked(l, theta))
    }

    pub(crate) fn new_unchecked(l: usize, theta: f64) -> Self {
        let (sin_t, cos_t) = theta.sin_cos();
        let sin_t = sin_t.abs();
        let mut values = vec![0.0; l + 1];
        let mut seed = ScaledSeed::start();
        let turning = l as f64 * sin_t;
        for m in 0..=l {
            if m > 0 {
                seed.step(m, sin_t);
            }
            values[m] = upward_in_degree(l, m, seed, cos_t);
            if m as f64 > turning && values[m].abs() < UNDERFLOW_FLOOR {
                break;
            }
        }
        let dtheta = theta_derivatives(l, &values);
        Self {
            degree: l,
            theta,
            values,
            dtheta,
        }
    }
}

/// Runs the normalized recurrence in degree from `P̄_m^m` up to `P̄_ℓ^m`.
#[inline]
fn upward_in_degree(l: usize, m: usize, seed: ScaledSeed, x: f64) -> f64 {
    let mut exponent = seed.exponent;
    let mut cur = seed.mantissa;
    if l > m {
        let mf = m as f64;
        let mut prev = cur;
        cur *= (2.0 * mf + 3.0).sqrt() * x;
        let down = f64::powi(2.0, -SCALE_EXP);
        for n in (m + 2)..=l {
            let nf = n as f64;
            let n1 = nf - 1.0;
            let a = ((4.0 * nf * nf - 1.0) / (nf * nf - mf * mf)).sqrt();
            let b = ((n1 * n1 - mf * mf) / (4.0 * n1 * n1 - 1.0)).sqrt();
            let next = a * (x * cur - b * prev);
            prev = cur;
            cur = next;
            if exponent > 0 && cur.abs() > 1.0 {
                cur *= down;
                prev *= down;
                exponent -= 1;
            }
        }
    }
    for _ in 0..exponent {
        cur *= f64::powi(2.0, -SCALE_EXP);
    }
    cur
}

/// θ-derivatives from neighbouring orders at fixed degree; no division by sin θ.
fn theta_derivatives(l: usize, values: &[f64]) -> Vec<f64> {
    let lf = l as f64;
    (0..=l)
        .map(|m| {
            let mf = m as f64;
            let up = if m < l {
                ((lf - mf) * (lf + mf + 1.0)).sqrt() * values[m + 1]
            } else {
                0.0
            };
            let down = if m == 0 {
                // P̄^{−1} = −P̄^{1}
                if l >= 1 {
                    -values[1] * (lf * (lf + 1.0)).sqrt()
                } else {
                    0.0
                }
            } else {
                ((lf + mf) * (lf - mf + 1.0)).sqrt() * values[m - 1]
            };
            0.5 * (up - down)
        })
        .collect()
}

/// Colatitude part `P̄_ℓ^m(cos θ)` of the orthonormal spherical harmonic `Y_ℓm`.
pub fn associated_legendre_normalized(l: usize, m: usize, theta: f64) -> Result<f64> {
    if m > l {
        return Err(Error::Domain(format!("order m={m} exceeds degree l={l}")));
    }
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::Domain(format!("colatitude {theta} outside [0, pi]")));
    }
    let (sin_t, cos_t) = theta.sin_cos();
    let mut seed = ScaledSeed::start();
    for i in 1..=m {
        seed.step(i, sin_t.abs());
    }
    Ok(upward_in_degree(l, m, seed, cos_t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Exact coefficients (in t) of P_0..P_8 from Rodrigues' formula.
    fn rodrigues(l: usize, t: f64) -> f64 {
        let coeffs: &[f64] = match l {
            0 => &[1.0],
            1 => &[0.0, 1.0],
            2 => &[-0.5, 0.0, 1.5],
            3 => &[0.0, -1.5, 0.0, 2.5],
            4 => &[3.0 / 8.0, 0.0, -30.0 / 8.0, 0.0, 35.0 / 8.0],
            5 => &[0.0, 15.0 / 8.0, 0.0, -70.0 / 8.0, 0.0, 63.0 / 8.0],
            6 => &[
                -5.0 / 16.0,
                0.0,
                105.0 / 16.0,
                0.0,
                -315.0 / 16.0,
                0.0,
                231.0 / 16.0,
            ],
            7 => &[
                0.0,
                -35.0 / 16.0,
                0.0,
                315.0 / 16.0,
                0.0,
                -693.0 / 16.0,
                0.0,
                429.0 / 16.0,
            ],
            8 => &[
                35.0 / 128.0,
                0.0,
                -1260.0 / 128.0,
                0.0,
                6930.0 / 128.0,
                0.0,
                -12012.0 / 128.0,
                0.0,
                6435.0 / 128.0,
            ],
            _ => unreachable!(),
        };
        coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    #[test]
    fn spot_values() {
        assert_eq!(legendre_p(5, 1.0).unwrap(), 1.0);
        assert!((legendre_p(2, 0.0).unwrap() + 0.5).abs() < 1e-15);
        assert!((legendre_p(3, 0.5).unwrap() + 0.4375).abs() < 1e-15);
        assert_eq!(legendre_p(7, -1.0).unwrap(), -1.0);
    }

    #[test]
    fn rejects_out_of_domain() {
        assert!(matches!(legendre_p(3, 1.0 + 1e-12), Err(Error::Domain(_))));
        assert!(legendre_with_derivatives(3, -2.0).is_err());
        assert!(legendre_p(3, f64::NAN).is_err());
        assert!(associated_legendre_normalized(3, 4, 0.1).is_err());
        assert!(associated_legendre_normalized(3, 1, -0.1).is_err());
    }

    #[test]
    fn recurrence_matches_rodrigues() {
        for l in 0..=8 {
            for i in 0..=40 {
                let t = -1.0 + i as f64 * 0.05;
                let exact = rodrigues(l, t);
                let got = legendre_p(l, t).unwrap();
                assert!(
                    (got - exact).abs() <= 1e-12 * exact.abs().max(1e-3),
                    "l={l} t={t}: {got} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn low_degree_derivatives() {
        let e = legendre_with_derivatives(1, 0.3).unwrap();
        assert_eq!((e.p, e.dp, e.ddp), (0.3, 1.0, 0.0));
        for &t in &[-0.9, -0.2, 0.0, 0.4, 0.77] {
            let e = legendre_with_derivatives(2, t).unwrap();
            assert!((e.dp - 3.0 * t).abs() < 1e-14);
            assert!((e.ddp - 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn endpoint_limits() {
        for l in 0..12 {
            let lf = l as f64;
            let up = legendre_with_derivatives(l, 1.0).unwrap();
            let inner = legendre_with_derivatives_unchecked(l, 1.0);
            assert_eq!(up.p, 1.0);
            assert!((up.dp - lf * (lf + 1.0) / 2.0).abs() < 1e-12);
            assert!((up.ddp - (lf - 1.0) * lf * (lf + 1.0) * (lf + 2.0) / 8.0).abs() < 1e-9);
            assert!((up.dp - inner.dp).abs() < 1e-9 * up.dp.abs().max(1.0));
            assert!((up.ddp - inner.ddp).abs() < 1e-9 * up.ddp.abs().max(1.0));
            let dn = legendre_with_derivatives(l, -1.0).unwrap();
            let inner = legendre_with_derivatives_unchecked(l, -1.0);
            assert!((dn.p - inner.p).abs() < 1e-12);
            assert!(
                (dn.dp - inner.dp).abs() < 1e-9 * dn.dp.abs().max(1.0),
                "l={l}"
            );
            assert!(
                (dn.ddp - inner.ddp).abs() < 1e-9 * dn.ddp.abs().max(1.0),
                "l={l}"
            );
        }
    }

    #[test]
    fn ode_residual_high_degree() {
        let e = legendre_with_derivatives(10, 0.7).unwrap();
        let scale = e.p.abs().max(e.dp.abs()).max(e.ddp.abs());
        assert!(e.ode_residual().abs() < 1e-8 * scale);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-5;
        for &l in &[3usize, 10, 25, 60] {
            for i in 1..20 {
                let t = -0.95 + i as f64 * 0.095;
                let e = legendre_with_derivatives(l, t).unwrap();
                let fd1 =
                    (legendre_p(l, t + h).unwrap() - legendre_p(l, t - h).unwrap()) / (2.0 * h);
                let ep = legendre_with_derivatives(l, t + h).unwrap();
                let em = legendre_with_derivatives(l, t - h).unwrap();
                let fd2 = (ep.dp - em.dp) / (2.0 * h);
                let s1 = e.dp.abs().max(1.0);
                let s2 = e.ddp.abs().max(1.0);
                assert!((fd1 - e.dp).abs() < 1e-4 * s1, "l={l} t={t}");
                assert!((fd2 - e.ddp).abs() < 1e-4 * s2, "l={l} t={t}");
            }
        }
    }

    #[test]
    fn associated_closed_forms() {
        let y00 = associated_legendre_normalized(0, 0, 1.234).unwrap();
        assert!((y00 - 0.28209479177387814).abs() < 1e-15);
        let y11 = associated_legendre_normalized(1, 1, PI / 2.0).unwrap();
        assert!((y11.abs() - (3.0 / (8.0 * PI)).sqrt()).abs() < 1e-15);
        for &l in &[1usize, 7, 40, 300] {
            for &theta in &[0.01, 0.5, 1.9, 3.1] {
                let zonal = associated_legendre_normalized(l, 0, theta).unwrap();
                let expect = ((2.0 * l as f64 + 1.0) / (4.0 * PI)).sqrt()
                    * legendre_p(l, theta.cos()).unwrap();
                assert!(
                    (zonal - expect).abs() < 1e-11 * expect.abs().max(1e-3),
                    "l={l}"
                );
            }
        }
    }

    #[test]
    fn row_matches_single_evaluations() {
        let row = AssocLegendreRow::new(37, 0.83).unwrap();
        for m in 0..=37 {
            let single = associated_legendre_normalized(37, m, 0.83).unwrap();
            assert!((row.values[m] - single).abs() < 1e-14);
        }
    }

    #[test]
    fn row_theta_derivative_finite_difference() {
        let h = 1e-6;
        for &l in &[1usize, 5, 64] {
            let theta = 1.1;
            let row = AssocLegendreRow::new(l, theta).unwrap();
            let plus = AssocLegendreRow::new(l, theta + h).unwrap();
            let minus = AssocLegendreRow::new(l, theta - h).unwrap();
            for m in 0..=l {
                let fd = (plus.values[m] - minus.values[m]) / (2.0 * h);
                assert!(
                    (fd - row.dtheta[m]).abs() < 1e-6 * (l as f64 + 1.0),
                    "l={l} m={m}"
                );
            }
        }
    }

    #[test]
    fn addition_theorem_normalization() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let l = rng.random_range(1..200usize);
            let theta = rng.random_range(0.0..PI);
            let row = AssocLegendreRow::new(l, theta).unwrap();
            // sum over m = −ℓ..ℓ of |Y_ℓm|²
            let sum: f64 =
                row.values[0].powi(2) + 2.0 * row.values[1..].iter().map(|v| v * v).sum::<f64>();
            let expect = (2.0 * l as f64 + 1.0) / (4.0 * PI);
            assert!((sum - expect).abs() < 1e-8 * expect, "l={l}");
        }
    }

    #[test]
    fn high_degree_stays_finite() {
        let row = AssocLegendreRow::new(2048, 0.3).unwrap();
        assert!(row.values.iter().all(|v| v.is_finite()));
        assert!(row.dtheta.iter().all(|v| v.is_finite()));
        let sum: f64 =
            row.values[0].powi(2) + 2.0 * row.values[1..].iter().map(|v| v * v).sum::<f64>();
        let expect = (2.0 * 2048.0 + 1.0) / (4.0 * PI);
        assert!((sum - expect).abs() < 1e-8 * expect, "{sum} vs {expect}");
    }

    #[test]
    fn zonal_normalization_by_quadrature() {
        // 2π ∫ P̄_ℓ^0(cos θ)² sin θ dθ = 1
        for &l in &[0usize, 3, 50] {
            let gl = gauss_legendre(l + 2);
            let total: f64 = gl
                .nodes
                .iter()
                .zip(&gl.weights)
                .map(|(&x, &w)| {
                    w * associated_legendre_normalized(l, 0, x.acos())
                        .unwrap()
                        .powi(2)
                })
                .sum();
            assert!((2.0 * PI * total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gauss_quadrature_of_legendre_squares() {
        for &l in &[0usize, 1, 10, 100, 400] {
            let gl = gauss_legendre(l + 1);
            let total: f64 = gl
                .nodes
                .iter()
                .zip(&gl.weights)
                .map(|(&x, &w)| w * legendre_p(l, x).unwrap().powi(2))
                .sum();
            let expect = 2.0 / (2.0 * l as f64 + 1.0);
            assert!((total - expect).abs() < 1e-10 * expect, "l={l}");
        }
    }

    proptest! {
        #[test]
        fn bounded_on_interval(l in 0usize..400, t in -1.0f64..=1.0) {
            prop_assert!(legendre_p(l, t).unwrap().abs() <= 1.0 + 1e-12);
        }

        #[test]
        fn ode_holds(l in 0usize..300, t in -0.999f64..0.999) {
            let e = legendre_with_derivatives(l, t).unwrap();
            let scale = e.p.abs().max(e.dp.abs()).max(e.ddp.abs()).max(1.0);
            prop_assert!(e.ode_residual().abs() < 1e-8 * scale);
        }
    }
}
