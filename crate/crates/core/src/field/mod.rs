//! Random spherical harmonics of a fixed degree ℓ: coefficient sampling,
//! grid synthesis of the field and its normalized gradient, and the sample
//! power spectrum.
//!
//! The field is
//! `f(x) = √(4π/(2ℓ+1)) Σ_{m=−ℓ..ℓ} a_ℓm Y_ℓm(x)` with `a_ℓ0` real standard
//! normal and `a_ℓm`, `m > 0`, standard complex normal. Negative orders are
//! implied by `a_{ℓ,−m} = (−1)^m conj(a_ℓm)`, which with the Condon–Shortley
//! basis used here makes `f` real. The law of `f` does not depend on the
//! phase convention of the basis.

mod dump;
mod rng;

pub use rng::StreamKey;

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::legendre::{gauss_legendre, AssocLegendreRow};

/// Coefficients `a_ℓ0, a_ℓ1, …, a_ℓℓ` of one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicCoefficients {
    pub degree: usize,
    pub a0: f64,
    /// `a_ℓm` for `m = 1..=ℓ`.
    pub am: Vec<Complex64>,
    /// Provenance tag of the stream that produced the draw.
    pub seed: u64,
}

impl HarmonicCoefficients {
    pub fn new(degree: usize, a0: f64, am: Vec<Complex64>, seed: u64) -> Result<Self> {
        if degree < 1 {
            return Err(Error::Domain("degree must be at least 1".into()));
        }
        if am.len() != degree {
            return Err(Error::Domain(format!(
                "expected {degree} positive-order coefficients, got {}",
                am.len()
            )));
        }
        Ok(Self {
            degree,
            a0,
            am,
            seed,
        })
    }

    /// The zonal field `f(θ, φ) = P_ℓ(cos θ)`.
    pub fn zonal(degree: usize) -> Result<Self> {
        Self::new(degree, 1.0, vec![Complex64::new(0.0, 0.0); degree], 0)
    }

    /// `a_ℓm` for any `m ∈ [−ℓ, ℓ]`, negative orders via the reality constraint.
    pub fn coefficient(&self, m: i64) -> Complex64 {
        match m {
            0 => Complex64::new(self.a0, 0.0),
            m if m > 0 => self.am[m as usize - 1],
            m => {
                let c = self.am[(-m) as usize - 1].conj();
                if m % 2 == 0 {
                    c
                } else {
                    -c
                }
            }
        }
    }

    fn amplitude(&self) -> f64 {
        (4.0 * PI / (2.0 * self.degree as f64 + 1.0)).sqrt()
    }

    /// Point evaluation of `(f, ∂̃₁f, ∂̃₂f)` at `(θ, φ)`; `O(ℓ²)`.
    pub fn evaluate(&self, theta: f64, phi: f64) -> Result<(f64, f64, f64)> {
        let row = AssocLegendreRow::new(self.degree, theta)?;
        let (mut f, mut d1, mut d2) = (self.a0 * row.values[0], self.a0 * row.dtheta[0], 0.0);
        for m in 1..=self.degree {
            let e = Complex64::from_polar(1.0, m as f64 * phi);
            let c = self.am[m - 1] * e;
            f += 2.0 * c.re * row.values[m];
            d1 += 2.0 * c.re * row.dtheta[m];
            // ∂_φ of 2 Re(c) is −2 m Im(c)
            d2 += -2.0 * m as f64 * c.im * row.values[m];
        }
        let s = self.amplitude();
        let g = s / half_lambda(self.degree).sqrt();
        Ok((s * f, g * d1, g * d2 / theta.sin()))
    }
}

/// `λ_ℓ / 2 = ℓ(ℓ+1)/2`, the variance of each gradient component.
pub fn half_lambda(l: usize) -> f64 {
    let lf = l as f64;
    lf * (lf + 1.0) / 2.0
}

/// Draws one coefficient vector: `a0 ~ N(0,1)`, real and imaginary parts of
/// `a_m` independent `N(0, 1/2)`.
pub fn sample_coefficients<R: Rng + ?Sized>(
    l: usize,
    rng: &mut R,
    seed: u64,
) -> Result<HarmonicCoefficients> {
    if l < 1 {
        return Err(Error::Domain("degree must be at least 1".into()));
    }
    let a0: f64 = rng.sample(StandardNormal);
    let am = (0..l)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        })
        .collect();
    HarmonicCoefficients::new(l, a0, am, seed)
}

/// Samples the coefficients for the stream identified by `key`.
pub fn sample_for_stream(key: StreamKey) -> Result<HarmonicCoefficients> {
    let mut rng = key.rng();
    sample_coefficients(key.ell, &mut rng, key.tag())
}

/// Sample power spectrum `Ĉ_ℓ` and the squared `L²` norm `4π Ĉ_ℓ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumSample {
    pub degree: usize,
    pub c_hat: f64,
    pub l2_norm_sq: f64,
}

pub fn sample_power_spectrum(coeffs: &HarmonicCoefficients) -> SpectrumSample {
    let l = coeffs.degree;
    let sum = coeffs.a0 * coeffs.a0 + 2.0 * coeffs.am.iter().map(|a| a.norm_sqr()).sum::<f64>();
    let c_hat = sum / (2.0 * l as f64 + 1.0);
    SpectrumSample {
        degree: l,
        c_hat,
        l2_norm_sq: 4.0 * PI * c_hat,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SynthesisMethod {
    /// Direct trigonometric sum over orders at every longitude.
    #[default]
    Direct,
    /// Inverse FFT over longitude per latitude ring.
    Fft,
}

/// Sampled field on a Gauss(cos θ) × equispaced-φ grid.
///
/// Matrices are row-major by colatitude: entry `(i, j)` is at `i * n_phi + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub degree: usize,
    pub thetas: Vec<f64>,
    pub phis: Vec<f64>,
    pub values: Vec<f64>,
    pub grad1: Vec<f64>,
    pub grad2: Vec<f64>,
    /// Per-ring weights: `Σ_ij weights[i] g(θ_i, φ_j) ≈ ∫_{S²} g`.
    pub weights: Vec<f64>,
    pub seed: u64,
}

impl FieldGrid {
    pub fn n_theta(&self) -> usize {
        self.thetas.len()
    }

    pub fn n_phi(&self) -> usize {
        self.phis.len()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.phis.len() + j
    }

    /// False for grids from [`SynthesisPlan::synthesize_values`].
    pub fn has_gradient(&self) -> bool {
        self.grad1.len() == self.values.len()
    }

    /// `Σ_ij w_i g(f, ∂̃₁f, ∂̃₂f)` over the grid; the gradient arguments are
    /// NaN on a values-only grid.
    pub fn integrate<F: Fn(f64, f64, f64) -> f64>(&self, g: F) -> f64 {
        let np = self.n_phi();
        if !self.has_gradient() {
            return self
                .weights
                .iter()
                .enumerate()
                .map(|(i, w)| {
                    w * self.values[i * np..(i + 1) * np]
                        .iter()
                        .map(|&f| g(f, f64::NAN, f64::NAN))
                        .sum::<f64>()
                })
                .sum();
        }
        self.weights
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let row = i * np..(i + 1) * np;
                let s: f64 = self.values[row.clone()]
                    .iter()
                    .zip(&self.grad1[row.clone()])
                    .zip(&self.grad2[row])
                    .map(|((&f, &a), &b)| g(f, a, b))
                    .sum();
                w * s
            })
            .sum()
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum::<f64>() * self.n_phi() as f64
    }

    /// Standard deviation of the sampled values (unweighted).
    pub fn value_scale(&self) -> f64 {
        let n = self.values.len() as f64;
        (self.values.iter().map(|v| v * v).sum::<f64>() / n).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Smallest 2^a 3^b 5^c not below `n`.
fn smooth_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Grid layout plus the Legendre tables it needs; built once per `(ℓ, k)`
/// and shared read-only across replications.
pub struct SynthesisPlan {
    degree: usize,
    factor: usize,
    thetas: Vec<f64>,
    weights: Vec<f64>,
    phis: Vec<f64>,
    rows: Vec<AssocLegendreRow>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SynthesisPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SynthesisPlan")
            .field("degree", &self.degree)
            .field("factor", &self.factor)
            .field("n_theta", &self.thetas.len())
            .field("n_phi", &self.phis.len())
            .finish()
    }
}

impl SynthesisPlan {
    /// At least `k(ℓ+1)` colatitudes and `k(2ℓ+1)` longitudes (rounded up to
    /// an FFT-friendly size).
    pub fn new(degree: usize, factor: usize) -> Result<Self> {
        if degree < 1 {
            return Err(Error::Domain("degree must be at least 1".into()));
        }
        if factor < 2 {
            return Err(Error::Resolution(format!(
                "oversampling factor k={factor} < 2"
            )));
        }
        let n_theta = factor * (degree + 1);
        let n_phi = smooth_size(factor * (2 * degree + 1));
        Ok(Self::with_sizes(degree, factor, n_theta, n_phi))
    }

    fn with_sizes(degree: usize, factor: usize, n_theta: usize, n_phi: usize) -> Self {
        let gl = gauss_legendre(n_theta);
        let dphi = 2.0 * PI / n_phi as f64;
        let weights = gl.weights.iter().map(|w| w * dphi).collect();
        let phis = (0..n_phi).map(|j| j as f64 * dphi).collect();

        // P̄_ℓ^m(π−θ) = (−1)^{ℓ+m} P̄_ℓ^m(θ); the derivative picks up one more sign
        let mut rows: Vec<Option<AssocLegendreRow>> = vec![None; n_theta];
        for i in 0..n_theta.div_ceil(2) {
            rows[i] = Some(AssocLegendreRow::new_unchecked(degree, gl.thetas[i]));
        }
        for i in n_theta.div_ceil(2)..n_theta {
            let src = rows[n_theta - 1 - i].as_ref().expect("north row");
            let mut values = src.values.clone();
            let mut dtheta = src.dtheta.clone();
            for m in 0..=degree {
                if (degree + m) % 2 == 1 {
                    values[m] = -values[m];
                } else {
                    dtheta[m] = -dtheta[m];
                }
            }
            rows[i] = Some(AssocLegendreRow {
                degree,
                theta: gl.thetas[i],
                values,
                dtheta,
            });
        }
        let rows = rows.into_iter().map(|r| r.expect("row")).collect();

        let fft = FftPlanner::new().plan_fft_inverse(n_phi);
        Self {
            degree,
            factor,
            thetas: gl.thetas,
            weights,
            phis,
            rows,
            fft,
        }
    }

    /// Plan with exactly twice as many colatitudes and longitudes, so both
    /// grid spacings halve together.
    pub fn doubled(&self) -> Self {
        Self::with_sizes(
            self.degree,
            2 * self.factor,
            2 * self.n_theta(),
            2 * self.n_phi(),
        )
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn factor(&self) -> usize {
        self.factor
    }

    pub fn n_theta(&self) -> usize {
        self.thetas.len()
    }

    pub fn n_phi(&self) -> usize {
        self.phis.len()
    }

    /// Ring spectra `c_m` of `f`, `∂_θ f` and `(1/sin θ) ∂_φ f` (unscaled).
    fn ring_spectra(&self, coeffs: &HarmonicCoefficients, i: usize, out: &mut RingSpectra) {
        let row = &self.rows[i];
        let inv_sin = 1.0 / self.thetas[i].sin();
        out.f[0] = Complex64::new(coeffs.a0 * row.values[0], 0.0);
        out.d1[0] = Complex64::new(coeffs.a0 * row.dtheta[0], 0.0);
        out.d2[0] = Complex64::new(0.0, 0.0);
        for m in 1..=self.degree {
            let a = coeffs.am[m - 1];
            out.f[m] = a * row.values[m];
            out.d1[m] = a * row.dtheta[m];
            // ∂_φ e^{imφ} = i m e^{imφ}
            out.d2[m] = Complex64::new(-a.im, a.re) * (m as f64 * row.values[m] * inv_sin);
        }
    }

    /// Synthesizes `f`, `∂̃₁f`, `∂̃₂f` on the plan's grid.
    pub fn synthesize(
        &self,
        coeffs: &HarmonicCoefficients,
        method: SynthesisMethod,
    ) -> Result<FieldGrid> {
        if coeffs.degree != self.degree {
            return Err(Error::Domain(format!(
                "coefficients of degree {} on a plan for degree {}",
                coeffs.degree, self.degree
            )));
        }
        let nt = self.n_theta();
        let np = self.n_phi();
        let mut values = vec![0.0; nt * np];
        let mut grad1 = vec![0.0; nt * np];
        let mut grad2 = vec![0.0; nt * np];
        match method {
            SynthesisMethod::Direct => self.direct(coeffs, &mut values, &mut grad1, &mut grad2),
            SynthesisMethod::Fft => self.via_fft(coeffs, &mut values, &mut grad1, &mut grad2),
        }
        let s = coeffs.amplitude();
        let g = s / half_lambda(self.degree).sqrt();
        values.iter_mut().for_each(|v| *v *= s);
        grad1.iter_mut().for_each(|v| *v *= g);
        grad2.iter_mut().for_each(|v| *v *= g);
        Ok(FieldGrid {
            degree: self.degree,
            thetas: self.thetas.clone(),
            phis: self.phis.clone(),
            values,
            grad1,
            grad2,
            weights: self.weights.clone(),
            seed: coeffs.seed,
        })
    }

    /// Field values only (no gradient), two rings per complex FFT.
    pub fn synthesize_values(&self, coeffs: &HarmonicCoefficients) -> Result<FieldGrid> {
        if coeffs.degree != self.degree {
            return Err(Error::Domain(format!(
                "coefficients of degree {} on a plan for degree {}",
                coeffs.degree, self.degree
            )));
        }
        let l = self.degree;
        let nt = self.n_theta();
        let np = self.n_phi();
        let s = coeffs.amplitude();
        let mut values = vec![0.0; nt * np];
        let mut a = vec![Complex64::new(0.0, 0.0); l + 1];
        let mut b = vec![Complex64::new(0.0, 0.0); l + 1];
        let mut buf = vec![Complex64::new(0.0, 0.0); np];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        let ring = |i: usize, out: &mut [Complex64]| {
            let row = &self.rows[i];
            out[0] = Complex64::new(coeffs.a0 * row.values[0], 0.0);
            for m in 1..=l {
                out[m] = coeffs.am[m - 1] * row.values[m];
            }
        };
        let i_unit = Complex64::new(0.0, 1.0);
        for i in (0..nt).step_by(2) {
            ring(i, &mut a);
            let pair = i + 1 < nt;
            if pair {
                ring(i + 1, &mut b);
            } else {
                b.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            }
            buf.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            buf[0] = a[0] + i_unit * b[0];
            for m in 1..=l {
                buf[m] = a[m] + i_unit * b[m];
                buf[np - m] = a[m].conj() + i_unit * b[m].conj();
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for j in 0..np {
                values[i * np + j] = s * buf[j].re;
            }
            if pair {
                for j in 0..np {
                    values[(i + 1) * np + j] = s * buf[j].im;
                }
            }
        }
        Ok(FieldGrid {
            degree: l,
            thetas: self.thetas.clone(),
            phis: self.phis.clone(),
            values,
            grad1: Vec::new(),
            grad2: Vec::new(),
            weights: self.weights.clone(),
            seed: coeffs.seed,
        })
    }

    fn direct(
        &self,
        coeffs: &HarmonicCoefficients,
        values: &mut [f64],
        grad1: &mut [f64],
        grad2: &mut [f64],
    ) {
        let l = self.degree;
        let np = self.n_phi();
        let mut spec = RingSpectra::new(l);
        // e^{imφ_j} by table lookup on the index m·j mod n_φ
        let roots: Vec<Complex64> = (0..np)
            .map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / np as f64))
            .collect();
        for i in 0..self.n_theta() {
            self.ring_spectra(coeffs, i, &mut spec);
            for j in 0..np {
                let (mut f, mut a, mut b) = (spec.f[0].re, spec.d1[0].re, 0.0);
                let mut idx = 0usize;
                for m in 1..=l {
                    idx += j;
                    if idx >= np {
                        idx %= np;
                    }
                    let e = roots[idx];
                    f += 2.0 * (spec.f[m] * e).re;
                    a += 2.0 * (spec.d1[m] * e).re;
                    b += 2.0 * (spec.d2[m] * e).re;
                }
                let k = i * np + j;
                values[k] = f;
                grad1[k] = a;
                grad2[k] = b;
            }
        }
    }

    fn via_fft(
        &self,
        coeffs: &HarmonicCoefficients,
        values: &mut [f64],
        grad1: &mut [f64],
        grad2: &mut [f64],
    ) {
        let l = self.degree;
        let nt = self.n_theta();
        let np = self.n_phi();
        let mut spec = RingSpectra::new(l);
        let mut spec_next = RingSpectra::new(l);
        let mut buf = vec![Complex64::new(0.0, 0.0); np];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        let i_unit = Complex64::new(0.0, 1.0);

        // Hermitian spectra Y_m = c_m, Y_{N−m} = conj(c_m) give real rings;
        // two real rings ride on one complex transform as re + i·im.
        let load = |buf: &mut [Complex64], x: &[Complex64], y: Option<&[Complex64]>| {
            buf.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            buf[0] = Complex64::new(x[0].re, 0.0) + i_unit * y.map_or(0.0, |y| y[0].re);
            for m in 1..=l {
                let (ym, yc) = match y {
                    Some(y) => (y[m], y[m].conj()),
                    None => (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)),
                };
                buf[m] = x[m] + i_unit * ym;
                buf[np - m] = x[m].conj() + i_unit * yc;
            }
        };

        let mut i = 0;
        while i < nt {
            self.ring_spectra(coeffs, i, &mut spec);
            load(&mut buf, &spec.f, Some(&spec.d1));
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for j in 0..np {
                values[i * np + j] = buf[j].re;
                grad1[i * np + j] = buf[j].im;
            }
            if i + 1 < nt {
                self.ring_spectra(coeffs, i + 1, &mut spec_next);
                load(&mut buf, &spec_next.f, Some(&spec_next.d1));
                self.fft.process_with_scratch(&mut buf, &mut scratch);
                for j in 0..np {
                    values[(i + 1) * np + j] = buf[j].re;
                    grad1[(i + 1) * np + j] = buf[j].im;
                }
                load(&mut buf, &spec.d2, Some(&spec_next.d2));
                self.fft.process_with_scratch(&mut buf, &mut scratch);
                for j in 0..np {
                    grad2[i * np + j] = buf[j].re;
                    grad2[(i + 1) * np + j] = buf[j].im;
                }
            } else {
                load(&mut buf, &spec.d2, None);
                self.fft.process_with_scratch(&mut buf, &mut scratch);
                for j in 0..np {
                    grad2[i * np + j] = buf[j].re;
                }
            }
            i += 2;
        }
    }
}

struct RingSpectra {
    f: Vec<Complex64>,
    d1: Vec<Complex64>,
    d2: Vec<Complex64>,
}

impl RingSpectra {
    fn new(l: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); l + 1];
        Self {
            f: z.clone(),
            d1: z.clone(),
            d2: z,
        }
    }
}

/// One-shot synthesis with oversampling factor `k` (builds a throwaway plan).
pub fn synthesize(coeffs: &HarmonicCoefficients, factor: usize) -> Result<FieldGrid> {
    SynthesisPlan::new(coeffs.degree, factor)?.synthesize(coeffs, SynthesisMethod::Direct)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::legendre::legendre_p;

    fn sample(l: usize, rep: u64) -> HarmonicCoefficients {
        sample_for_stream(StreamKey::new(42, l, rep)).unwrap()
    }

    #[test]
    fn values_only_matches_full_synthesis() {
        let c = sample(33, 5);
        let plan = SynthesisPlan::new(33, 3).unwrap();
        let full = plan.synthesize(&c, SynthesisMethod::Direct).unwrap();
        let vals = plan.synthesize_values(&c).unwrap();
        assert!(!vals.has_gradient() && full.has_gradient());
        for (a, b) in full.values.iter().zip(&vals.values) {
            assert!((a - b).abs() < 1e-11);
        }
        let d = plan.doubled();
        assert_eq!(
            (d.n_theta(), d.n_phi()),
            (2 * plan.n_theta(), 2 * plan.n_phi())
        );
        let fine = d.synthesize_values(&c).unwrap();
        let norm = |g: &FieldGrid| g.integrate(|f, _, _| f * f);
        assert!((norm(&fine) - norm(&full)).abs() < 1e-10);
        assert!(vals.integrate(|_, a, _| a).is_nan());
    }

    #[test]
    fn fixed_seed_is_bitwise_reproducible() {
        assert_eq!(sample(17, 3), sample(17, 3));
        assert_ne!(sample(17, 3), sample(17, 4));
    }

    #[test]
    fn coefficient_moments() {
        let n = 100_000u64;
        let mut rng = StreamKey::new(9, 1, 0).rng();
        let (mut s0, mut s1) = (0.0, 0.0);
        for _ in 0..n {
            let c = sample_coefficients(1, &mut rng, 0).unwrap();
            s0 += c.a0;
            s1 += c.am[0].norm_sqr();
        }
        let mean0 = s0 / n as f64;
        let mean1 = s1 / n as f64;
        assert!(mean0.abs() < 3.0 / (n as f64).sqrt());
        // |a|² ~ Exp(1): standard error 1/√n
        assert!((mean1 - 1.0).abs() < 3.0 / (n as f64).sqrt());
    }

    #[test]
    fn negative_orders_follow_reality_constraint() {
        let c = sample(5, 0);
        for m in 1..=5i64 {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(c.coefficient(-m), c.coefficient(m).conj() * sign);
        }
    }

    #[test]
    fn rejects_low_resolution_and_bad_degree() {
        assert!(matches!(
            SynthesisPlan::new(10, 1),
            Err(Error::Resolution(_))
        ));
        assert!(SynthesisPlan::new(0, 2).is_err());
        assert!(HarmonicCoefficients::new(3, 1.0, vec![], 0).is_err());
    }

    #[test]
    fn zonal_field_is_legendre() {
        let l = 12;
        let grid = synthesize(&HarmonicCoefficients::zonal(l).unwrap(), 2).unwrap();
        for (i, &t) in grid.thetas.iter().enumerate() {
            let p = legendre_p(l, t.cos()).unwrap();
            for j in 0..grid.n_phi() {
                assert!((grid.values[grid.index(i, j)] - p).abs() < 1e-12);
                assert!(grid.grad2[grid.index(i, j)].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn direct_and_fft_agree() {
        for &l in &[1usize, 2, 7, 40] {
            let plan = SynthesisPlan::new(l, 2).unwrap();
            let c = sample(l, 1);
            let a = plan.synthesize(&c, SynthesisMethod::Direct).unwrap();
            let b = plan.synthesize(&c, SynthesisMethod::Fft).unwrap();
            let diff = |x: &[f64], y: &[f64]| {
                x.iter()
                    .zip(y)
                    .fold(0.0f64, |m, (p, q)| m.max((p - q).abs()))
            };
            assert!(diff(&a.values, &b.values) < 1e-11, "l={l}");
            assert!(diff(&a.grad1, &b.grad1) < 1e-11, "l={l}");
            assert!(diff(&a.grad2, &b.grad2) < 1e-11, "l={l}");
        }
    }

    #[test]
    fn grid_matches_point_evaluation() {
        let l = 9;
        let c = sample(l, 2);
        let grid = synthesize(&c, 3).unwrap();
        for &(i, j) in &[(0usize, 0usize), (5, 7), (14, 50), (29, 1)] {
            let (f, d1, d2) = c.evaluate(grid.thetas[i], grid.phis[j]).unwrap();
            let k = grid.index(i, j);
            assert!((f - grid.values[k]).abs() < 1e-12);
            assert!((d1 - grid.grad1[k]).abs() < 1e-12);
            assert!((d2 - grid.grad2[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn weights_and_zero_mean() {
        let l = 33;
        let grid = synthesize(&sample(l, 5), 2).unwrap();
        assert!((grid.weight_sum() - 4.0 * PI).abs() < 1e-10 * 4.0 * PI);
        let mean = grid.integrate(|f, _, _| f);
        assert!(mean.abs() < 1e-8 * (4.0 * PI).sqrt());
    }

    #[test]
    fn parseval_on_grid() {
        for &l in &[4usize, 64] {
            let c = sample(l, 11);
            let plan = SynthesisPlan::new(l, 2).unwrap();
            let grid = plan.synthesize(&c, SynthesisMethod::Fft).unwrap();
            let spec = sample_power_spectrum(&c);
            let norm = grid.integrate(|f, _, _| f * f);
            assert!((norm - spec.l2_norm_sq).abs() < 1e-8 * spec.l2_norm_sq);
            let h2 = grid.integrate(|f, _, _| f * f - 1.0);
            assert!((h2 - 4.0 * PI * (spec.c_hat - 1.0)).abs() < 1e-8 * 4.0 * PI);
        }
    }

    #[test]
    fn unit_moduli_spectrum() {
        let am = (0..6)
            .map(|m| Complex64::from_polar(1.0, m as f64))
            .collect();
        let c = HarmonicCoefficients::new(6, 1.0, am, 0).unwrap();
        let s = sample_power_spectrum(&c);
        assert!((s.c_hat - 1.0).abs() < 1e-15);
        assert!((s.l2_norm_sq - 4.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn green_identity_for_gradient() {
        // ∫ (∂̃₁f)² + (∂̃₂f)² = 2 ∫ f²
        let c = sample(21, 3);
        let grid = synthesize(&c, 2).unwrap();
        let g = grid.integrate(|_, a, b| a * a + b * b);
        let f = grid.integrate(|f, _, _| f * f);
        assert!((g - 2.0 * f).abs() < 1e-9 * f);
    }

    #[test]
    fn smooth_sizes() {
        assert_eq!(smooth_size(1), 1);
        assert_eq!(smooth_size(7), 8);
        assert_eq!(smooth_size(202), 216);
        assert_eq!(smooth_size(250), 250);
    }
}
