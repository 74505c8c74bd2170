//! Wiener chaos expansion of the level-curve length.
//!
//! With `γ` the standard Gaussian density and `H_k` the probabilists'
//! Hermite polynomials,
//!
//! ```text
//! proj[L(u) | q] = √(λ/2) Σ_{2a+2b+c=q} α_{2a,2b} β_c(u) / ((2a)!(2b)!c!)
//!                         ∫ H_c(f) H_{2a}(∂̃₁f) H_{2b}(∂̃₂f)
//! ```
//!
//! where `β_c(u) = γ(u) H_c(u)` and `α_{2n,2m}` are the chaos coefficients of
//! the Euclidean norm. The sphere integrals do not depend on `u`, so they are
//! computed once per grid ([`ChaosIntegrals`]) and combined per level.
//!
//! On the Gauss grid with oversampling `k` every integrand of order
//! `q ≤ 2k` is a band-limited polynomial the rule integrates exactly.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{half_lambda, FieldGrid, SpectrumSample};
use crate::gaussian_density;
use crate::legendre::gauss_legendre;

/// Highest chaos order the generic path accepts.
pub const MAX_ORDER: usize = 8;

/// Probabilists' Hermite polynomial `H_k(t)`.
pub fn hermite(k: usize, t: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, t);
    if k == 0 {
        return prev;
    }
    for j in 1..k {
        let next = t * cur - j as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `H_0(t) ..= H_k(t)` into `out[..=k]`.
#[inline]
fn hermite_all(t: f64, out: &mut [f64]) {
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = t;
    }
    for j in 2..out.len() {
        out[j] = t * out[j - 1] - (j - 1) as f64 * out[j - 2];
    }
}

/// `β_k(u) = γ(u) H_k(u)`.
pub fn beta_coefficient(k: usize, u: f64) -> f64 {
    gaussian_density(u) * hermite(k, u)
}

/// `(2ε)⁻¹ ∫_{u−ε}^{u+ε} H_k γ`, by a 32-point Gauss rule.
pub fn beta_epsilon(k: usize, u: f64, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::Domain(format!(
            "band half-width {epsilon} must be positive"
        )));
    }
    let gl = gauss_legendre(32);
    let s: f64 = gl
        .nodes
        .iter()
        .zip(&gl.weights)
        .map(|(x, w)| {
            let t = u + epsilon * x;
            w * hermite(k, t) * gaussian_density(t)
        })
        .sum();
    // the rule's weights sum to 2 on [−1, 1]: (2ε)⁻¹ · ε Σ = Σ / 2
    Ok(0.5 * s)
}

/// `p_N(1/4) = C(1/2, N)`, the generalized binomial coefficient.
pub fn swinging_factorial_quarter(n: usize) -> f64 {
    let mut p = 1.0;
    for k in 0..n {
        p *= (0.5 - k as f64) / (k as f64 + 1.0);
    }
    p
}

/// `ln Γ(n+1)` for integer `n`.
fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// `α_{2n,2m} = √(π/2) (2n)!(2m)! / (n! m!) 2^{−(n+m)} p_{n+m}(1/4)`,
/// accumulated in logs.
pub fn alpha_coefficient(n: usize, m: usize) -> f64 {
    let big = n + m;
    // C(1/2, N) = (−1)^{N−1} (2N)! / (4^N (N!)² (2N−1)) for N ≥ 1
    let (ln_p, sign) = if big == 0 {
        (0.0, 1.0)
    } else {
        let nf = big as f64;
        let ln = ln_factorial(2 * big)
            - 2.0 * ln_factorial(big)
            - nf * 4f64.ln()
            - (2.0 * nf - 1.0).ln();
        (ln, if big % 2 == 1 { 1.0 } else { -1.0 })
    };
    let ln_rest = ln_factorial(2 * n) + ln_factorial(2 * m)
        - ln_factorial(n)
        - ln_factorial(m)
        - big as f64 * 2f64.ln();
    sign * (PI / 2.0).sqrt() * (ln_rest + ln_p).exp()
}

/// Precomputed `β_k(u)` for a set of levels and `α_{2n,2m}` with
/// `2n + 2m ≤ k_max`. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChaosCoefficients {
    pub k_max: usize,
    pub levels: Vec<f64>,
    /// `beta[i][k] = β_k(levels[i])`.
    pub beta: Vec<Vec<f64>>,
    /// `alpha[n][m] = α_{2n,2m}`, defined for `2n + 2m ≤ k_max`.
    pub alpha: Vec<Vec<f64>>,
}

impl ChaosCoefficients {
    pub const DEFAULT_K_MAX: usize = 8;

    pub fn new(k_max: usize, levels: &[f64]) -> Self {
        let mut h = vec![0.0; k_max + 1];
        let beta = levels
            .iter()
            .map(|&u| {
                hermite_all(u, &mut h);
                let g = gaussian_density(u);
                h.iter().map(|v| g * v).collect()
            })
            .collect();
        let alpha = (0..=k_max / 2)
            .map(|n| {
                (0..=k_max / 2 - n)
                    .map(|m| alpha_coefficient(n, m))
                    .collect()
            })
            .collect();
        Self {
            k_max,
            levels: levels.to_vec(),
            beta,
            alpha,
        }
    }

    pub fn alpha(&self, n: usize, m: usize) -> f64 {
        self.alpha[n][m]
    }
}

/// Index triples `(a, b, c)` with `2a + 2b + c = q`.
fn triples(q: usize) -> impl Iterator<Item = (usize, usize, usize)> {
    (0..=q / 2).flat_map(move |a| (0..=(q - 2 * a) / 2).map(move |b| (a, b, q - 2 * a - 2 * b)))
}

fn factorial(n: usize) -> f64 {
    (2..=n).map(|k| k as f64).product()
}

/// `∫ H_c(f) H_{2a}(∂̃₁f) H_{2b}(∂̃₂f)` for every triple of order `≤ q_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaosIntegrals {
    pub degree: usize,
    pub q_max: usize,
    values: BTreeMap<(usize, usize, usize), f64>,
}

impl ChaosIntegrals {
    pub fn new(grid: &FieldGrid, q_max: usize) -> Result<Self> {
        if q_max > MAX_ORDER {
            return Err(Error::UnsupportedOrder(q_max));
        }
        require_gradient(grid)?;
        let keys: Vec<_> = (0..=q_max).flat_map(triples).collect();
        let mut sums = vec![0.0; keys.len()];
        let (mut hf, mut h1, mut h2) = (
            vec![0.0; q_max + 1],
            vec![0.0; q_max + 1],
            vec![0.0; q_max + 1],
        );
        let np = grid.n_phi();
        let mut ring = vec![0.0; keys.len()];
        for (i, w) in grid.weights.iter().enumerate() {
            ring.iter_mut().for_each(|v| *v = 0.0);
            for k in i * np..(i + 1) * np {
                hermite_all(grid.values[k], &mut hf);
                hermite_all(grid.grad1[k], &mut h1);
                hermite_all(grid.grad2[k], &mut h2);
                for (r, &(a, b, c)) in ring.iter_mut().zip(&keys) {
                    *r += hf[c] * h1[2 * a] * h2[2 * b];
                }
            }
            for (s, r) in sums.iter_mut().zip(&ring) {
                *s += w * r;
            }
        }
        Ok(Self {
            degree: grid.degree,
            q_max,
            values: keys.into_iter().zip(sums).collect(),
        })
    }

    /// `∫ H_c(f) H_{2a}(∂̃₁f) H_{2b}(∂̃₂f)`.
    pub fn get(&self, a: usize, b: usize, c: usize) -> Option<f64> {
        self.values.get(&(a, b, c)).copied()
    }

    /// `proj[L(u) | q]`.
    pub fn projection(&self, u: f64, q: usize) -> Result<f64> {
        if q > self.q_max {
            return Err(Error::UnsupportedOrder(q));
        }
        let mut hu = vec![0.0; q + 1];
        hermite_all(u, &mut hu);
        let g = gaussian_density(u);
        let total: f64 = triples(q)
            .map(|(a, b, c)| {
                let coef = alpha_coefficient(a, b) * g * hu[c]
                    / (factorial(2 * a) * factorial(2 * b) * factorial(c));
                coef * self.values[&(a, b, c)]
            })
            .sum();
        Ok(half_lambda(self.degree).sqrt() * total)
    }
}

fn require_gradient(grid: &FieldGrid) -> Result<()> {
    if grid.has_gradient() {
        Ok(())
    } else {
        Err(Error::Domain(
            "chaos integrals need a grid with gradients".into(),
        ))
    }
}

/// `proj[L(u) | q]` on one grid; `q = 4` goes through [`fourth_chaos_terms`].
pub fn chaos_projection(grid: &FieldGrid, u: f64, q: usize) -> Result<f64> {
    if q == 4 {
        return Ok(fourth_chaos_terms(grid, u)?.total());
    }
    ChaosIntegrals::new(grid, q)?.projection(u, q)
}

/// The six summands of the fourth-order projection, integrated separately.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourthChaosTerms {
    /// `α₀₀β₄/4! ∫H₄(f)`
    pub a: f64,
    /// `α₂₀β₂/(2!2!) ∫H₂(f)H₂(∂̃₁f)`
    pub b: f64,
    /// `α₄₀β₀/4! ∫H₄(∂̃₁f)`
    pub c: f64,
    /// `α₂₂β₀/(2!2!) ∫H₂(∂̃₁f)H₂(∂̃₂f)`
    pub d: f64,
    /// `α₀₂β₂/(2!2!) ∫H₂(f)H₂(∂̃₂f)`
    pub e: f64,
    /// `α₀₄β₀/4! ∫H₄(∂̃₂f)`
    pub f: f64,
}

impl FourthChaosTerms {
    pub fn total(&self) -> f64 {
        self.a + self.b + self.c + self.d + self.e + self.f
    }
}

/// Fourth-order projection as six explicit integrals, each scaled by `√(λ/2)`.
pub fn fourth_chaos_terms(grid: &FieldGrid, u: f64) -> Result<FourthChaosTerms> {
    require_gradient(grid)?;
    let h2 = |t: f64| t * t - 1.0;
    let h4 = |t: f64| {
        let t2 = t * t;
        t2 * t2 - 6.0 * t2 + 3.0
    };
    let np = grid.n_phi();
    let mut s = [0.0; 6];
    for (i, w) in grid.weights.iter().enumerate() {
        let mut r = [0.0; 6];
        for k in i * np..(i + 1) * np {
            let (f, x, y) = (grid.values[k], grid.grad1[k], grid.grad2[k]);
            let (hf, hx, hy) = (h2(f), h2(x), h2(y));
            r[0] += h4(f);
            r[1] += hf * hx;
            r[2] += h4(x);
            r[3] += hx * hy;
            r[4] += hf * hy;
            r[5] += h4(y);
        }
        for (a, b) in s.iter_mut().zip(r) {
            *a += w * b;
        }
    }
    let scale = half_lambda(grid.degree).sqrt();
    let g = gaussian_density(u);
    let (b0, b2, b4) = (g, g * hermite(2, u), g * hermite(4, u));
    Ok(FourthChaosTerms {
        a: scale * alpha_coefficient(0, 0) * b4 / 24.0 * s[0],
        b: scale * alpha_coefficient(1, 0) * b2 / 4.0 * s[1],
        c: scale * alpha_coefficient(2, 0) * b0 / 24.0 * s[2],
        d: scale * alpha_coefficient(1, 1) * b0 / 4.0 * s[3],
        e: scale * alpha_coefficient(0, 1) * b2 / 4.0 * s[4],
        f: scale * alpha_coefficient(0, 2) * b0 / 24.0 * s[5],
    })
}

/// `∫ H_k(f)` by grid quadrature.
pub fn hermite_integral(grid: &FieldGrid, k: usize) -> f64 {
    grid.integrate(|f, _, _| hermite(k, f))
}

/// `¼ √(λ/2) u² e^{−u²/2}`.
fn second_chaos_prefactor(l: usize, u: f64) -> f64 {
    0.25 * half_lambda(l).sqrt() * u * u * (-0.5 * u * u).exp()
}

/// `D_ℓ(u)` from the power spectrum, using `∫H₂(f) = 4π(Ĉ_ℓ − 1)`.
pub fn second_chaos(spectrum: &SpectrumSample, u: f64) -> f64 {
    second_chaos_prefactor(spectrum.degree, u) * 4.0 * PI * (spectrum.c_hat - 1.0)
}

/// `D_ℓ(u)` with `∫H₂(f)` by grid quadrature.
pub fn second_chaos_grid(grid: &FieldGrid, u: f64) -> f64 {
    second_chaos_prefactor(grid.degree, u) * hermite_integral(grid, 2)
}

/// Coefficient of `∫H₄(f)` in `M_ℓ(u)`:
/// `√(λ/2) √(π/2) γ(u) (H₄(u) + 2H₂(u) − 3/2) / 4!`; equals `−¼√(λ/2)/4!` at `u = 0`.
pub fn trispectrum_prefactor(l: usize, u: f64) -> f64 {
    half_lambda(l).sqrt()
        * (PI / 2.0).sqrt()
        * gaussian_density(u)
        * (hermite(4, u) + 2.0 * hermite(2, u) - 1.5)
        / 24.0
}

/// Sample trispectrum `M_ℓ(u)`.
pub fn sample_trispectrum(grid: &FieldGrid, u: f64) -> f64 {
    trispectrum_prefactor(grid.degree, u) * hermite_integral(grid, 4)
}

/// Measured length minus the chaos projections of order `≤ q_max`.
pub fn length_decomposition_check(
    grid: &FieldGrid,
    u: f64,
    q_max: usize,
    measured_length: f64,
) -> Result<f64> {
    let ints = ChaosIntegrals::new(grid, q_max)?;
    let mut total = 0.0;
    for q in 0..=q_max {
        total += ints.projection(u, q)?;
    }
    Ok(measured_length - total)
}

/// Chaos summary of one realization at one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChaosProjections {
    pub level: f64,
    /// `D_ℓ(u)`.
    pub d: f64,
    /// `M_ℓ(u)`.
    pub m4: f64,
    /// `q ↦ proj[L(u) | q]` for `q = 0..=q_max`.
    pub proj: BTreeMap<usize, f64>,
    /// `Σ_{3 ≤ q ≤ q_max} proj[L(u) | q]`.
    pub residual_34plus: f64,
}

impl ChaosProjections {
    pub const CSV_HEADER: &'static str = "ell,u,q,value,seed";

    /// Projections of every order up to `ints.q_max`; `D` from the spectrum.
    pub fn compute(ints: &ChaosIntegrals, spectrum: &SpectrumSample, u: f64) -> Result<Self> {
        let mut proj = BTreeMap::new();
        for q in 0..=ints.q_max {
            proj.insert(q, ints.projection(u, q)?);
        }
        let residual_34plus = proj.range(3..).map(|(_, v)| v).sum();
        let m4 = match ints.get(0, 0, 4) {
            Some(h4) => trispectrum_prefactor(ints.degree, u) * h4,
            None => f64::NAN,
        };
        Ok(Self {
            level: u,
            d: second_chaos(spectrum, u),
            m4,
            proj,
            residual_34plus,
        })
    }

    pub fn csv_rows(&self, ell: usize, seed: u64) -> Vec<String> {
        self.proj
            .iter()
            .map(|(q, v)| format!("{},{},{},{:.17e},{}", ell, self.level, q, v, seed))
            .collect()
    }
}
