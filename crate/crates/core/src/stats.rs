//! Sample correlations, partial correlations given a control variable, and
//! Monte Carlo summaries over replication records.
//!
//! Population moments are replaced by sample moments throughout. Degenerate
//! variances are errors, never silent zeros.

use serde::{Deserialize, Serialize};

use crate::chaos::ChaosProjections;
use crate::error::{Error, Result};

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Centred sums `(Σ(x−x̄)², Σ(y−ȳ)², Σ(x−x̄)(y−ȳ))`.
fn centred_moments(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let (mx, my) = (mean(xs), mean(ys));
    xs.iter()
        .zip(ys)
        .fold((0.0, 0.0, 0.0), |(sxx, syy, sxy), (x, y)| {
            let (dx, dy) = (x - mx, y - my);
            (sxx + dx * dx, syy + dy * dy, sxy + dx * dy)
        })
}

fn check_lengths(n_min: usize, vs: &[&[f64]]) -> Result<usize> {
    let n = vs[0].len();
    if vs.iter().any(|v| v.len() != n) {
        return Err(Error::Domain("sample vectors differ in length".into()));
    }
    if n < n_min {
        return Err(Error::Domain(format!(
            "need at least {n_min} samples, got {n}"
        )));
    }
    if vs.iter().any(|v| v.iter().any(|x| !x.is_finite())) {
        return Err(Error::Domain("non-finite sample".into()));
    }
    Ok(n)
}

/// Pearson correlation.
pub fn correlation(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_lengths(3, &[xs, ys])?;
    let (sxx, syy, sxy) = centred_moments(xs, ys);
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::Degenerate(
            "zero sample variance in correlation".into(),
        ));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// `(w − w̄) − (cov(w,z)/var(z)) (z − z̄)`.
pub fn regression_residual(ws: &[f64], zs: &[f64]) -> Result<Vec<f64>> {
    check_lengths(2, &[ws, zs])?;
    let (szz, _, szw) = centred_moments(zs, ws);
    if szz <= 0.0 {
        return Err(Error::Degenerate(
            "control variable has zero sample variance".into(),
        ));
    }
    let slope = szw / szz;
    let (mw, mz) = (mean(ws), mean(zs));
    Ok(ws
        .iter()
        .zip(zs)
        .map(|(w, z)| (w - mw) - slope * (z - mz))
        .collect())
}

/// Residual variances below this fraction of the raw variance count as zero.
const DEGENERATE_RESIDUAL: f64 = 1e-20;

/// Correlation of the residuals of `xs` and `ys` after regression on `zs`.
pub fn partial_correlation(xs: &[f64], ys: &[f64], zs: &[f64]) -> Result<f64> {
    check_lengths(4, &[xs, ys, zs])?;
    let rx = regression_residual(xs, zs)?;
    let ry = regression_residual(ys, zs)?;
    for (r, raw, name) in [(&rx, xs, "first"), (&ry, ys, "second")] {
        let vr: f64 = r.iter().map(|v| v * v).sum();
        let (vraw, _, _) = centred_moments(raw, raw);
        if vr <= DEGENERATE_RESIDUAL * vraw || vr == 0.0 {
            return Err(Error::Degenerate(format!(
                "{name} variable is affine in the control variable"
            )));
        }
    }
    correlation(&rx, &ry)
}

/// Standard error of a correlation estimate by the Fisher `z` transform,
/// `(1 − ρ²)/√(n − 3 − controls)`.
pub fn fisher_se(rho: f64, n: usize, controls: usize) -> f64 {
    let dof = n as f64 - 3.0 - controls as f64;
    if dof <= 0.0 {
        return f64::INFINITY;
    }
    ((1.0 - rho * rho) / dof.sqrt()).max(f64::MIN_POSITIVE)
}

/// `(x − x̄)/s` with the unbiased sample standard deviation.
pub fn standardize(xs: &[f64]) -> Result<Vec<f64>> {
    let s = mc_summary(xs)?;
    if s.variance <= 0.0 {
        return Err(Error::Degenerate(
            "cannot standardize a constant sample".into(),
        ));
    }
    let sd = s.variance.sqrt();
    Ok(xs.iter().map(|x| (x - s.mean) / sd).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub n: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub se_mean: f64,
    /// `√((m₄ − (n−3)/(n−1) s⁴)/n)`, `m₄` the fourth central sample moment.
    pub se_variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

pub fn mc_summary(xs: &[f64]) -> Result<McSummary> {
    let n = check_lengths(2, &[xs])?;
    let nf = n as f64;
    let m = mean(xs);
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for x in xs {
        let d = x - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let variance = m2 / (nf - 1.0);
    let (m2, m3, m4) = (m2 / nf, m3 / nf, m4 / nf);
    let var_of_var = ((m4 - (nf - 3.0) / (nf - 1.0) * variance * variance) / nf).max(0.0);
    let (skewness, excess_kurtosis) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    } else {
        (0.0, 0.0)
    };
    Ok(McSummary {
        n,
        mean: m,
        variance,
        se_mean: (variance / nf).sqrt(),
        se_variance: var_of_var.sqrt(),
        skewness,
        excess_kurtosis,
    })
}

/// Everything measured on one realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub seed: u64,
    pub ell: usize,
    pub c_hat: f64,
    /// `(u, L_ℓ(u))` in level order.
    pub lengths: Vec<(f64, f64)>,
    /// Per level, in the same order as `lengths`.
    pub projections: Option<Vec<ChaosProjections>>,
}

impl ReplicationRecord {
    pub fn length_at(&self, u: f64) -> Option<f64> {
        self.lengths.iter().find(|(v, _)| *v == u).map(|(_, l)| *l)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationPair {
    pub u1: f64,
    pub u2: f64,
    pub rho: f64,
    /// Partial correlation given the squared `L²` norm `4π Ĉ_ℓ`.
    pub rho_partial: f64,
    pub n: usize,
    pub se_rho: f64,
    pub se_rho_partial: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub ell: usize,
    pub pairs: Vec<CorrelationPair>,
    /// `(u, Var(L_{ℓ|Ĉ_ℓ}(u)))`.
    pub residual_variances: Vec<(f64, f64)>,
}

impl CorrelationReport {
    pub const CSV_HEADER: &'static str = "ell,u1,u2,rho,rho_partial,n,se_rho,se_rho_partial";

    /// Correlations for every unordered pair of `levels`.
    pub fn from_records(ell: usize, levels: &[f64], records: &[ReplicationRecord]) -> Result<Self> {
        let norm: Vec<f64> = records
            .iter()
            .map(|r| 4.0 * std::f64::consts::PI * r.c_hat)
            .collect();
        let series = |u: f64| -> Result<Vec<f64>> {
            records
                .iter()
                .map(|r| {
                    r.length_at(u).ok_or_else(|| {
                        Error::Domain(format!("record {} has no length at level {u}", r.seed))
                    })
                })
                .collect()
        };
        let all: Vec<Vec<f64>> = levels.iter().map(|&u| series(u)).collect::<Result<_>>()?;
        let n = records.len();
        let mut pairs = Vec::new();
        for i in 0..levels.len() {
            for j in i + 1..levels.len() {
                let rho = correlation(&all[i], &all[j])?;
                let rho_partial = partial_correlation(&all[i], &all[j], &norm)?;
                pairs.push(CorrelationPair {
                    u1: levels[i],
                    u2: levels[j],
                    rho,
                    rho_partial,
                    n,
                    se_rho: fisher_se(rho, n, 0),
                    se_rho_partial: fisher_se(rho_partial, n, 1),
                });
            }
        }
        let residual_variances = levels
            .iter()
            .zip(&all)
            .map(|(&u, xs)| {
                let r = regression_residual(xs, &norm)?;
                Ok((u, mc_summary(&r)?.variance))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            ell,
            pairs,
            residual_variances,
        })
    }

    pub fn pair(&self, u1: f64, u2: f64) -> Option<&CorrelationPair> {
        self.pairs
            .iter()
            .find(|p| (p.u1 == u1 && p.u2 == u2) || (p.u1 == u2 && p.u2 == u1))
    }

    pub fn csv_rows(&self) -> Vec<String> {
        self.pairs
            .iter()
            .map(|p| {
                format!(
                    "{},{},{},{:.17e},{:.17e},{},{:.17e},{:.17e}",
                    self.ell, p.u1, p.u2, p.rho, p.rho_partial, p.n, p.se_rho, p.se_rho_partial
                )
            })
            .collect()
    }
}
