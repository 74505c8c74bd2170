//! Config-driven Monte Carlo experiments and their reports.
//!
//! Every replication draws its coefficients from its own counter-based
//! stream `(master_seed, ℓ, index)`, so records do not depend on scheduling.
//! Records are collected into an index-ordered buffer before any reduction,
//! which makes every report bit-identical for any `parallelism`.
//!
//! Lengths are measured with [`extrapolated_length`] on a values-only grid
//! at oversampling `grid_factor` and its exact doubling. Chaos integrals use
//! a grid with gradients at oversampling `max(2, ⌈q_max/2⌉)`, on which every
//! integrand of order `≤ q_max` is integrated exactly.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chaos::{ChaosIntegrals, ChaosProjections, MAX_ORDER};
use crate::error::{Error, Result};
use crate::field::{
    half_lambda, sample_for_stream, sample_power_spectrum, FieldGrid, StreamKey, SynthesisMethod,
    SynthesisPlan,
};
use crate::geometry::extrapolated_length;
use crate::legendre::{appendix_moment_integrals, MomentId, MomentScaling};
use crate::stats::{
    correlation, fisher_se, mc_summary, CorrelationReport, McSummary, ReplicationRecord,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub ells: Vec<usize>,
    pub levels: Vec<f64>,
    pub replications: usize,
    pub master_seed: u64,
    /// Oversampling factor `k` of the coarse length grid.
    pub grid_factor: usize,
    /// Half-width of the band estimator.
    pub epsilon: f64,
    /// `C` in the lower limit `C/ℓ` of the moment integrals.
    pub cutoff: f64,
    pub q_max: usize,
    pub output_dir: PathBuf,
    /// Maximum number of replications in flight.
    pub parallelism: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            ells: vec![32, 64, 128],
            levels: vec![0.0, 0.5, 1.0, 2.0],
            replications: 2000,
            master_seed: 20_160_509,
            grid_factor: 2,
            epsilon: 0.05,
            cutoff: 1.0,
            q_max: 4,
            output_dir: PathBuf::from("hl-output"),
            parallelism: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let c: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    /// Reads a `.json` file as JSON and anything else as TOML.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.ells.is_empty() {
            return fail("ells must not be empty".into());
        }
        if let Some(l) = self.ells.iter().find(|&&l| l < 2) {
            return fail(format!("degree {l} < 2"));
        }
        if self.levels.is_empty() {
            return fail("levels must not be empty".into());
        }
        if let Some(u) = self.levels.iter().find(|u| !u.is_finite()) {
            return fail(format!("level {u} is not finite"));
        }
        for (i, u) in self.levels.iter().enumerate() {
            if self.levels[..i].contains(u) {
                return fail(format!("duplicate level {u}"));
            }
        }
        if self.replications < 2 {
            return fail(format!("replications = {} < 2", self.replications));
        }
        if self.grid_factor < 2 {
            return fail(format!("grid_factor k = {} < 2", self.grid_factor));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return fail(format!("epsilon = {} must be positive", self.epsilon));
        }
        if !(self.cutoff > 0.0 && self.cutoff.is_finite()) {
            return fail(format!("cutoff = {} must be positive", self.cutoff));
        }
        if self.q_max > MAX_ORDER {
            return fail(format!("q_max = {} exceeds {MAX_ORDER}", self.q_max));
        }
        if self.parallelism == 0 {
            return fail("parallelism must be at least 1".into());
        }
        Ok(())
    }

    /// Oversampling of the gradient grid used for chaos integrals.
    pub fn chaos_grid_factor(&self) -> usize {
        self.q_max.div_ceil(2).max(2)
    }
}

/// Synthesis plans for one degree, shared read-only by all replications.
#[derive(Debug)]
pub struct ReplicationPlans {
    pub ell: usize,
    coarse: SynthesisPlan,
    fine: SynthesisPlan,
    chaos: Option<SynthesisPlan>,
}

impl ReplicationPlans {
    pub fn new(config: &ExperimentConfig, ell: usize, with_chaos: bool) -> Result<Self> {
        let coarse = SynthesisPlan::new(ell, config.grid_factor)?;
        let fine = coarse.doubled();
        let chaos = if with_chaos {
            Some(SynthesisPlan::new(ell, config.chaos_grid_factor())?)
        } else {
            None
        };
        Ok(Self {
            ell,
            coarse,
            fine,
            chaos,
        })
    }

    /// Gradient grid for replication `rep`, as written by `field-dump`.
    pub fn chaos_grid(&self, config: &ExperimentConfig, rep: u64) -> Result<FieldGrid> {
        let key = StreamKey::new(config.master_seed, self.ell, rep);
        let mut coeffs = sample_for_stream(key)?;
        coeffs.seed = key.tag();
        match &self.chaos {
            Some(p) => p.synthesize(&coeffs, SynthesisMethod::Fft),
            None => self.coarse.synthesize(&coeffs, SynthesisMethod::Fft),
        }
    }

    /// Lengths at every level, and chaos projections when the plans carry a chaos grid.
    pub fn measure(&self, config: &ExperimentConfig, rep: u64) -> Result<ReplicationRecord> {
        let key = StreamKey::new(config.master_seed, self.ell, rep);
        let seed = key.tag();
        let wrap = |e: Error| Error::Replication {
            seed,
            source: Box::new(e),
        };
        let mut coeffs = sample_for_stream(key).map_err(wrap)?;
        coeffs.seed = seed;
        let spectrum = sample_power_spectrum(&coeffs);
        let chaos_grid = match &self.chaos {
            Some(p) => Some(p.synthesize(&coeffs, SynthesisMethod::Fft).map_err(wrap)?),
            None => None,
        };
        let coarse = match &chaos_grid {
            Some(g) if g.n_theta() == self.coarse.n_theta() && g.n_phi() == self.coarse.n_phi() => {
                None
            }
            _ => Some(self.coarse.synthesize_values(&coeffs).map_err(wrap)?),
        };
        let coarse = coarse
            .as_ref()
            .or(chaos_grid.as_ref())
            .expect("a coarse grid");
        let fine = self.fine.synthesize_values(&coeffs).map_err(wrap)?;
        let mut lengths = Vec::with_capacity(config.levels.len());
        for &u in &config.levels {
            let m = extrapolated_length(coarse, &fine, u).map_err(wrap)?;
            if !m.length.is_finite() {
                return Err(wrap(Error::Domain(format!(
                    "non-finite length at level {u}"
                ))));
            }
            lengths.push((u, m.length));
        }
        let projections = match &chaos_grid {
            Some(g) => {
                let ints = ChaosIntegrals::new(g, config.q_max).map_err(wrap)?;
                Some(
                    config
                        .levels
                        .iter()
                        .map(|&u| ChaosProjections::compute(&ints, &spectrum, u))
                        .collect::<Result<Vec<_>>>()
                        .map_err(wrap)?,
                )
            }
            None => None,
        };
        Ok(ReplicationRecord {
            seed,
            ell: self.ell,
            c_hat: spectrum.c_hat,
            lengths,
            projections,
        })
    }
}

fn pool(parallelism: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))
}

/// All replications for one degree, in index order.
pub fn run_replications(
    config: &ExperimentConfig,
    ell: usize,
    with_chaos: bool,
) -> Result<Vec<ReplicationRecord>> {
    config.validate()?;
    let plans = ReplicationPlans::new(config, ell, with_chaos)?;
    log::info!(
        "ell={ell}: {} replications, grid {}x{} (+ doubled){}",
        config.replications,
        plans.coarse.n_theta(),
        plans.coarse.n_phi(),
        if with_chaos {
            ", with chaos integrals"
        } else {
            ""
        }
    );
    let n = config.replications as u64;
    pool(config.parallelism)?.install(|| {
        (0..n)
            .into_par_iter()
            .map(|r| plans.measure(config, r))
            .collect()
    })
}

/// `D_ℓ(u)` for `n` replications from the power spectrum alone.
pub fn second_chaos_samples(master_seed: u64, ell: usize, u: f64, n: usize) -> Result<Vec<f64>> {
    (0..n as u64)
        .map(|r| {
            let c = sample_for_stream(StreamKey::new(master_seed, ell, r))?;
            Ok(crate::chaos::second_chaos(&sample_power_spectrum(&c), u))
        })
        .collect()
}

/// `2π √(λ/2) e^{−u²/2}`.
pub fn mean_length(ell: usize, u: f64) -> f64 {
    2.0 * PI * half_lambda(ell).sqrt() * (-0.5 * u * u).exp()
}

/// `π² λ/(2ℓ+1) u⁴ e^{−u²}`.
pub fn second_chaos_variance(ell: usize, u: f64) -> f64 {
    let lam = 2.0 * half_lambda(ell);
    PI * PI * lam / (2.0 * ell as f64 + 1.0) * u.powi(4) * (-u * u).exp()
}

/// Leading large-ℓ variance: `(π²/2) u⁴ e^{−u²} ℓ` off the nodal line,
/// `log ℓ / 32` on it.
pub fn asymptotic_length_variance(ell: usize, u: f64) -> f64 {
    if u == 0.0 {
        (ell as f64).ln() / 32.0
    } else {
        PI * PI / 2.0 * u.powi(4) * (-u * u).exp() * ell as f64
    }
}

fn lengths_at(records: &[ReplicationRecord], u: f64) -> Vec<f64> {
    records
        .iter()
        .map(|r| r.length_at(u).expect("level measured"))
        .collect()
}

/// A report that can be written as CSV, JSON and a text summary.
pub trait Report: Serialize {
    /// File stem.
    fn name(&self) -> &'static str;
    fn csv_header(&self) -> &'static str;
    fn csv_rows(&self) -> Vec<String>;
    fn summary(&self) -> String;
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:.17e}"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub ell: usize,
    pub u: f64,
    pub summary: McSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Report {
    pub correlations: Vec<CorrelationReport>,
    pub lengths: Vec<LevelSummary>,
    pub note: String,
}

const BAND_NOTE: &str = "No finite-degree reference values exist for these correlations; \
acceptance bands are implementation-chosen and checked as monotone trends in the degree.";

pub fn run_theorem1(config: &ExperimentConfig) -> Result<Theorem1Report> {
    config.validate()?;
    let mut correlations = Vec::new();
    let mut lengths = Vec::new();
    for &ell in &config.ells {
        let records = run_replications(config, ell, false)?;
        correlations.push(CorrelationReport::from_records(
            ell,
            &config.levels,
            &records,
        )?);
        for &u in &config.levels {
            lengths.push(LevelSummary {
                ell,
                u,
                summary: mc_summary(&lengths_at(&records, u))?,
            });
        }
    }
    Ok(Theorem1Report {
        correlations,
        lengths,
        note: BAND_NOTE.into(),
    })
}

impl Report for Theorem1Report {
    fn name(&self) -> &'static str {
        "theorem1"
    }

    fn csv_header(&self) -> &'static str {
        CorrelationReport::CSV_HEADER
    }

    fn csv_rows(&self) -> Vec<String> {
        self.correlations
            .iter()
            .flat_map(|c| c.csv_rows())
            .collect()
    }

    fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:>6} {:>6} {:>6} {:>10} {:>10} {:>10} {:>12}",
            "ell", "u1", "u2", "rho", "se", "rho_norm", "se_norm"
        );
        for c in &self.correlations {
            for p in &c.pairs {
                let _ = writeln!(
                    s,
                    "{:>6} {:>6} {:>6} {:>10.4} {:>10.4} {:>10.4} {:>12.4}",
                    c.ell, p.u1, p.u2, p.rho, p.se_rho, p.rho_partial, p.se_rho_partial
                );
            }
        }
        let _ = writeln!(s, "\n{}", self.note);
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub ell: usize,
    pub u: f64,
    pub n: usize,
    pub mean: f64,
    pub se_mean: f64,
    pub mean_target: f64,
    pub mean_ratio: f64,
    pub variance: f64,
    pub se_variance: f64,
    /// Leading-order asymptotic variance.
    pub variance_target: f64,
    pub variance_ratio: f64,
    pub d_variance: f64,
    pub se_d_variance: f64,
    pub d_variance_target: f64,
    /// `None` at `u = 0`, where `D` vanishes identically.
    pub d_variance_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub rows: Vec<MomentRow>,
}

pub fn run_moment_laws(config: &ExperimentConfig) -> Result<MomentReport> {
    config.validate()?;
    let mut rows = Vec::new();
    for &ell in &config.ells {
        let records = run_replications(config, ell, false)?;
        for &u in &config.levels {
            let s = mc_summary(&lengths_at(&records, u))?;
            let d: Vec<f64> =
                second_chaos_samples(config.master_seed, ell, u, config.replications)?;
            let ds = mc_summary(&d)?;
            let mean_target = mean_length(ell, u);
            let variance_target = asymptotic_length_variance(ell, u);
            let d_variance_target = second_chaos_variance(ell, u);
            rows.push(MomentRow {
                ell,
                u,
                n: s.n,
                mean: s.mean,
                se_mean: s.se_mean,
                mean_target,
                mean_ratio: s.mean / mean_target,
                variance: s.variance,
                se_variance: s.se_variance,
                variance_target,
                variance_ratio: s.variance / variance_target,
                d_variance: ds.variance,
                se_d_variance: ds.se_variance,
                d_variance_target,
                d_variance_ratio: (u != 0.0).then(|| ds.variance / d_variance_target),
            });
        }
    }
    Ok(MomentReport { rows })
}

impl Report for MomentReport {
    fn name(&self) -> &'static str {
        "moments"
    }

    fn csv_header(&self) -> &'static str {
        "ell,u,n,mean,se_mean,mean_target,mean_ratio,variance,se_variance,variance_target,variance_ratio,d_variance,se_d_variance,d_variance_target,d_variance_ratio"
    }

    fn csv_rows(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| {
                format!(
                    "{},{},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}",
                    r.ell,
                    r.u,
                    r.n,
                    r.mean,
                    r.se_mean,
                    r.mean_target,
                    r.mean_ratio,
                    r.variance,
                    r.se_variance,
                    r.variance_target,
                    r.variance_ratio,
                    r.d_variance,
                    r.se_d_variance,
                    r.d_variance_target,
                    fmt_opt(r.d_variance_ratio)
                )
            })
            .collect()
    }

    fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:>6} {:>6} {:>12} {:>10} {:>10} {:>12} {:>10} {:>10}",
            "ell", "u", "mean", "se", "ratio", "variance", "target", "ratio"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:>6} {:>6} {:>12.4} {:>10.4} {:>10.5} {:>12.5} {:>10.5} {:>10.4}",
                r.ell,
                r.u,
                r.mean,
                r.se_mean,
                r.mean_ratio,
                r.variance,
                r.variance_target,
                r.variance_ratio
            );
        }
        let _ = writeln!(s, "\nVariance targets are leading-order asymptotics; the nodal one omits an unknown O(1) term.");
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxyRow {
    pub ell: usize,
    pub quantity: String,
    pub u: f64,
    pub value: f64,
    pub se: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxyReport {
    pub rows: Vec<ProxyRow>,
}

impl ProxyReport {
    pub fn get(&self, ell: usize, quantity: &str, u: f64) -> Option<&ProxyRow> {
        self.rows
            .iter()
            .find(|r| r.ell == ell && r.quantity == quantity && r.u == u)
    }
}

/// Correlation of the nodal length with `M_ℓ`.
pub const CORR_NODAL_TRISPECTRUM: &str = "corr_length_trispectrum";
/// Correlation of `L(u)` with `D_ℓ(u)`.
pub const CORR_LENGTH_SECOND_CHAOS: &str = "corr_length_second_chaos";
/// Correlation of `proj[L(u)|4]` with `M_ℓ(u)`.
pub const CORR_FOURTH_TRISPECTRUM: &str = "corr_proj4_trispectrum";
/// `Var(L − Σ_{q≤q_max} proj)/Var(L)`.
pub const RESIDUAL_VARIANCE_RATIO: &str = "residual_variance_ratio";

pub fn run_proxy_convergence(config: &ExperimentConfig) -> Result<ProxyReport> {
    config.validate()?;
    if config.q_max < 4 {
        return Err(Error::Config(format!(
            "proxies need q_max >= 4, got {}",
            config.q_max
        )));
    }
    let mut rows = Vec::new();
    for &ell in &config.ells {
        let records = run_replications(config, ell, true)?;
        rows.extend(proxy_rows(config, ell, &records)?);
    }
    Ok(ProxyReport { rows })
}

/// Proxy correlations for one degree from records carrying chaos projections.
pub fn proxy_rows(
    config: &ExperimentConfig,
    ell: usize,
    records: &[ReplicationRecord],
) -> Result<Vec<ProxyRow>> {
    if records.iter().any(|r| r.projections.is_none()) {
        return Err(Error::Config(
            "proxy rows need records with chaos projections".into(),
        ));
    }
    let mut rows = Vec::new();
    let n = records.len();
    for (i, &u) in config.levels.iter().enumerate() {
        let len = lengths_at(&records, u);
        let proj = |f: &dyn Fn(&ChaosProjections) -> f64| -> Vec<f64> {
            records
                .iter()
                .map(|r| f(&r.projections.as_ref().expect("chaos measured")[i]))
                .collect()
        };
        let mut push = |quantity: &str, value: f64, se: f64| {
            rows.push(ProxyRow {
                ell,
                quantity: quantity.into(),
                u,
                value,
                se,
                n,
            })
        };
        let m = proj(&|p| p.m4);
        let m_is_flat = mc_summary(&m)?.variance == 0.0;
        if u == 0.0 {
            let r = correlation(&len, &m)?;
            push(CORR_NODAL_TRISPECTRUM, r, fisher_se(r, n, 0));
        } else {
            let r = correlation(&len, &proj(&|p| p.d))?;
            push(CORR_LENGTH_SECOND_CHAOS, r, fisher_se(r, n, 0));
        }
        if !m_is_flat {
            let r = correlation(&proj(&|p| p.proj[&4]), &m)?;
            push(CORR_FOURTH_TRISPECTRUM, r, fisher_se(r, n, 0));
        }
        let total = proj(&|p| p.proj.values().sum());
        let resid: Vec<f64> = len.iter().zip(&total).map(|(l, t)| l - t).collect();
        let (vr, vl) = (mc_summary(&resid)?, mc_summary(&len)?);
        let ratio = vr.variance / vl.variance;
        // delta method on a ratio of two variances
        let se = ratio
            * ((vr.se_variance / vr.variance).powi(2) + (vl.se_variance / vl.variance).powi(2))
                .sqrt();
        push(RESIDUAL_VARIANCE_RATIO, ratio, se);
    }
    Ok(rows)
}

impl Report for ProxyReport {
    fn name(&self) -> &'static str {
        "proxies"
    }

    fn csv_header(&self) -> &'static str {
        "ell,quantity,u,value,se,n"
    }

    fn csv_rows(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| {
                format!(
                    "{},{},{},{:.17e},{:.17e},{}",
                    r.ell, r.quantity, r.u, r.value, r.se, r.n
                )
            })
            .collect()
    }

    fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:>6} {:>28} {:>6} {:>10} {:>10}",
            "ell", "quantity", "u", "value", "se"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:>6} {:>28} {:>6} {:>10.4} {:>10.4}",
                r.ell, r.quantity, r.u, r.value, r.se
            );
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppendixRow {
    pub ell: usize,
    pub id: String,
    pub scaling: MomentScaling,
    pub value: f64,
    /// `value` for bounded entries, `value·ℓ²/log ℓ` for log-scaling ones,
    /// `value·ℓ²` for the `O(ℓ⁻²)` ones.
    pub normalized: f64,
    /// Limit of `normalized` where known.
    pub target: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppendixReport {
    pub cutoff: f64,
    pub rows: Vec<AppendixRow>,
}

impl AppendixReport {
    pub fn get(&self, ell: usize, id: MomentId) -> Option<&AppendixRow> {
        self.rows.iter().find(|r| r.ell == ell && r.id == id.name())
    }
}

pub fn run_appendix_checks(config: &ExperimentConfig) -> Result<AppendixReport> {
    config.validate()?;
    let mut rows = Vec::new();
    for &ell in &config.ells {
        let table = appendix_moment_integrals(ell, config.cutoff)?;
        let l = ell as f64;
        for (id, value) in &table.values {
            let scaling = id.scaling();
            let (normalized, target) = match scaling {
                MomentScaling::Bounded => (*value, None),
                MomentScaling::LogOverSquare { coefficient } => {
                    (table.log_normalized(*id), Some(coefficient))
                }
                MomentScaling::InverseSquare => (value * l * l, None),
            };
            rows.push(AppendixRow {
                ell,
                id: id.name().into(),
                scaling,
                value: *value,
                normalized,
                target,
            });
        }
    }
    Ok(AppendixReport {
        cutoff: config.cutoff,
        rows,
    })
}

impl Report for AppendixReport {
    fn name(&self) -> &'static str {
        "appendix"
    }

    fn csv_header(&self) -> &'static str {
        "ell,id,value,normalized,target"
    }

    fn csv_rows(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| {
                format!(
                    "{},{},{:.17e},{:.17e},{}",
                    r.ell,
                    r.id,
                    r.value,
                    r.normalized,
                    fmt_opt(r.target)
                )
            })
            .collect()
    }

    fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "cutoff C = {}", self.cutoff);
        let _ = writeln!(
            s,
            "{:>6} {:>12} {:>14} {:>12} {:>10}",
            "ell", "id", "value", "normalized", "target"
        );
        for r in &self.rows {
            let t = r.target.map_or("-".to_string(), |t| format!("{t:.5}"));
            let _ = writeln!(
                s,
                "{:>6} {:>12} {:>14.6e} {:>12.6} {:>10}",
                r.ell, r.id, r.value, r.normalized, t
            );
        }
        s
    }
}

#[derive(Serialize)]
struct Envelope<'a, R: Serialize> {
    config: &'a ExperimentConfig,
    master_seed: u64,
    report: &'a R,
}

/// Writes `<name>.csv`, `<name>.json` (with the config echoed) and
/// `<name>_summary.txt` under `dir`; returns the paths written.
pub fn emit<R: Report>(report: &R, config: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = report.name();
    let csv = dir.join(format!("{name}.csv"));
    let json = dir.join(format!("{name}.json"));
    let txt = dir.join(format!("{name}_summary.txt"));

    let mut body = String::new();
    body.push_str(report.csv_header());
    body.push('\n');
    for row in report.csv_rows() {
        body.push_str(&row);
        body.push('\n');
    }
    fs::write(&csv, body).map_err(|e| Error::io(&csv, e))?;

    let envelope = Envelope {
        config,
        master_seed: config.master_seed,
        report,
    };
    let mut text =
        serde_json::to_string_pretty(&envelope).map_err(|e| Error::Serialization(e.to_string()))?;
    text.push('\n');
    fs::write(&json, text).map_err(|e| Error::io(&json, e))?;

    fs::write(&txt, report.summary()).map_err(|e| Error::io(&txt, e))?;
    Ok(vec![csv, json, txt])
}

/// Reads back the config echoed in an emitted JSON document.
pub fn config_from_report_json(text: &str) -> Result<ExperimentConfig> {
    let v: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
    let c = v
        .get("config")
        .ok_or_else(|| Error::Serialization("report has no config".into()))?;
    ExperimentConfig::from_json_str(&c.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            ells: vec![6],
            levels: vec![0.0, 1.0],
            replications: 6,
            master_seed: 11,
            output_dir: PathBuf::from("unused"),
            ..Default::default()
        }
    }

    #[test]
    fn validation_rejects_bad_configs() {
        assert!(small().validate().is_ok());
        let cases: Vec<Box<dyn Fn(&mut ExperimentConfig)>> = vec![
            Box::new(|c| c.replications = 1),
            Box::new(|c| c.grid_factor = 1),
            Box::new(|c| c.levels = vec![0.5, 1.0, 0.5]),
            Box::new(|c| c.ells = vec![1]),
            Box::new(|c| c.ells.clear()),
            Box::new(|c| c.levels = vec![f64::NAN]),
            Box::new(|c| c.q_max = 9),
            Box::new(|c| c.parallelism = 0),
            Box::new(|c| c.epsilon = 0.0),
        ];
        for f in cases {
            let mut c = small();
            f(&mut c);
            assert!(c.validate().unwrap_err().is_config());
        }
    }

    #[test]
    fn toml_parsing() {
        let c = ExperimentConfig::from_toml_str(
            "ells = [10, 20]\nlevels = [0.0, 1.0]\nreplications = 50\n",
        )
        .unwrap();
        assert_eq!(c.ells, vec![10, 20]);
        assert_eq!(c.grid_factor, 2);
        assert!(ExperimentConfig::from_toml_str("bogus = 1")
            .unwrap_err()
            .is_config());
        assert!(ExperimentConfig::from_toml_str("replications = 1")
            .unwrap_err()
            .is_config());
    }

    #[test]
    fn chaos_grid_factor_covers_order() {
        let mut c = small();
        assert_eq!(c.chaos_grid_factor(), 2);
        c.q_max = 6;
        assert_eq!(c.chaos_grid_factor(), 3);
        c.q_max = 1;
        assert_eq!(c.chaos_grid_factor(), 2);
    }

    #[test]
    fn replication_records_are_reproducible() {
        let c = small();
        let plans = ReplicationPlans::new(&c, 6, true).unwrap();
        let a = plans.measure(&c, 3).unwrap();
        let b = plans.measure(&c, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.lengths.len(), 2);
        assert_eq!(a.projections.as_ref().unwrap().len(), 2);
        assert!(a.lengths.iter().all(|(_, l)| *l >= 0.0));
    }

    #[test]
    fn targets() {
        assert!((mean_length(50, 0.0) - 2.0 * PI * 1275f64.sqrt()).abs() < 1e-12);
        assert!(
            (second_chaos_variance(2, 1.0) - PI * PI * 6.0 / 5.0 * (-1f64).exp()).abs() < 1e-12
        );
        assert!(
            (asymptotic_length_variance(100, 1.0) / 100.0 - PI * PI / 2.0 * (-1f64).exp()).abs()
                < 1e-12
        );
        assert!((asymptotic_length_variance(200, 0.0) - 200f64.ln() / 32.0).abs() < 1e-15);
    }

    #[test]
    fn proxies_need_fourth_order() {
        let mut c = small();
        c.q_max = 3;
        assert!(run_proxy_convergence(&c).unwrap_err().is_config());
    }

    #[test]
    fn empty_report_writes_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let r = ProxyReport { rows: vec![] };
        let paths = emit(&r, &small(), dir.path()).unwrap();
        let csv = fs::read_to_string(&paths[0]).unwrap();
        assert_eq!(csv, "ell,quantity,u,value,se,n\n");
        let json = fs::read_to_string(&paths[1]).unwrap();
        assert_eq!(config_from_report_json(&json).unwrap(), small());
    }
}
