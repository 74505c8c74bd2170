//! Truncated oscillatory integrals of products of `P_ℓ(cos θ)`, its
//! derivatives and trigonometric weights over `[C/ℓ, π/2]`.
//!
//! These are the covariance building blocks of the third- and fourth-order
//! chaos variances. The first group is bounded in ℓ; the second behaves like
//! `κ · log ℓ / ℓ²` (or `O(ℓ⁻²)`).

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{gauss_legendre, legendre_with_derivatives_unchecked};
use crate::error::{Error, Result};

/// Identifier of one truncated moment integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MomentId {
    /// `ℓ(ℓ+1)/2 ∫ P³ sin θ`
    Cubic1,
    /// `∫ P (P′ sin θ)² sin θ`
    Cubic2,
    /// `2/(ℓ(ℓ+1)) ∫ P (P cos θ − P″ sin²θ)² sin θ`
    Cubic3,
    /// `2/(ℓ(ℓ+1)) ∫ (P sin θ)² (P cos θ − P″ sin²θ) sin θ`
    Cubic4,
    /// `2/(ℓ(ℓ+1)) ∫ P (P′)² sin θ`
    Cubic5,
    /// `∫ P⁴ sin θ`
    Quartic1,
    /// `∫ P² · 2/(ℓ(ℓ+1)) (P′ sin θ)² sin θ`
    Quartic2,
    /// `∫ P² · 4/(ℓ²(ℓ+1)²) (P cos θ − P″ sin²θ)² sin θ`
    Quartic3,
    /// `∫ P · 4/(ℓ²(ℓ+1)²) (P′ sin θ)² (P cos θ − P″ sin²θ) sin θ`
    Quartic4,
    /// `∫ 4/(ℓ²(ℓ+1)²) P′⁴ sin⁵θ`
    Quartic5,
    /// `∫ 8/(ℓ³(ℓ+1)³) (P′ sin θ)² (P cos θ − P″ sin²θ)² sin θ`
    Quartic6,
    /// `∫ 16/(ℓ⁴(ℓ+1)⁴) (P cos θ − P″ sin²θ)⁴ sin θ`
    Quartic7,
    /// `∫ P² · 4/(ℓ²(ℓ+1)²) P′² sin θ`
    Quartic8,
    /// `∫ 2/(ℓ(ℓ+1)) (P′ sin θ)² · 4/(ℓ²(ℓ+1)²) P′² sin θ`
    Quartic9,
    /// `∫ 4/(ℓ²(ℓ+1)²) (P cos θ − P″ sin²θ)² · 4/(ℓ²(ℓ+1)²) P′² sin θ`
    Quartic10,
    /// `∫ 16/(ℓ⁴(ℓ+1)⁴) P′⁴ sin θ`
    Quartic11,
}

/// Expected large-ℓ behaviour of a normalized moment integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MomentScaling {
    /// Bounded in ℓ.
    Bounded,
    /// `coefficient · log ℓ / ℓ² + O(ℓ⁻²)`.
    LogOverSquare { coefficient: f64 },
    /// `O(ℓ⁻²)`.
    InverseSquare,
}

impl MomentId {
    pub const ALL: [MomentId; 16] = [
        MomentId::Cubic1,
        MomentId::Cubic2,
        MomentId::Cubic3,
        MomentId::Cubic4,
        MomentId::Cubic5,
        MomentId::Quartic1,
        MomentId::Quartic2,
        MomentId::Quartic3,
        MomentId::Quartic4,
        MomentId::Quartic5,
        MomentId::Quartic6,
        MomentId::Quartic7,
        MomentId::Quartic8,
        MomentId::Quartic9,
        MomentId::Quartic10,
        MomentId::Quartic11,
    ];

    pub const CUBIC: [MomentId; 5] = [
        MomentId::Cubic1,
        MomentId::Cubic2,
        MomentId::Cubic3,
        MomentId::Cubic4,
        MomentId::Cubic5,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MomentId::Cubic1 => "cubic_1",
            MomentId::Cubic2 => "cubic_2",
            MomentId::Cubic3 => "cubic_3",
            MomentId::Cubic4 => "cubic_4",
            MomentId::Cubic5 => "cubic_5",
            MomentId::Quartic1 => "quartic_1",
            MomentId::Quartic2 => "quartic_2",
            MomentId::Quartic3 => "quartic_3",
            MomentId::Quartic4 => "quartic_4",
            MomentId::Quartic5 => "quartic_5",
            MomentId::Quartic6 => "quartic_6",
            MomentId::Quartic7 => "quartic_7",
            MomentId::Quartic8 => "quartic_8",
            MomentId::Quartic9 => "quartic_9",
            MomentId::Quartic10 => "quartic_10",
            MomentId::Quartic11 => "quartic_11",
        }
    }

    pub fn scaling(self) -> MomentScaling {
        let c = |k: f64| MomentScaling::LogOverSquare {
            coefficient: k / (PI * PI),
        };
        match self {
            MomentId::Cubic1
            | MomentId::Cubic2
            | MomentId::Cubic3
            | MomentId::Cubic4
            | MomentId::Cubic5 => MomentScaling::Bounded,
            MomentId::Quartic1 => c(4.0 * 3.0 / 8.0),
            MomentId::Quartic2 => c(1.0),
            MomentId::Quartic3 => c(16.0 * 3.0 / 8.0),
            MomentId::Quartic4 => c(16.0 / 8.0),
            MomentId::Quartic5 => c(16.0 * 3.0 / 8.0),
            MomentId::Quartic6 => c(32.0 / 8.0),
            MomentId::Quartic7 => c(64.0 * 3.0 / 8.0),
            MomentId::Quartic8 | MomentId::Quartic9 | MomentId::Quartic10 | MomentId::Quartic11 => {
                MomentScaling::InverseSquare
            }
        }
    }

    /// Whether the integrand is an even power of a single factor (hence ≥ 0).
    pub fn is_even_power(self) -> bool {
        matches!(
            self,
            MomentId::Quartic1 | MomentId::Quartic5 | MomentId::Quartic7 | MomentId::Quartic11
        )
    }

    /// Integrand value (normalizing prefactor included, `sin θ` measure included).
    fn integrand(self, s: &Sample) -> f64 {
        let Sample {
            p,
            dp,
            sin,
            hess,
            n1,
        } = *s;
        let n2 = n1 * n1;
        let dps = dp * sin;
        match self {
            MomentId::Cubic1 => p * p * p * sin / n1,
            MomentId::Cubic2 => p * dps * dps * sin,
            MomentId::Cubic3 => n1 * p * hess * hess * sin,
            MomentId::Cubic4 => n1 * (p * sin).powi(2) * hess * sin,
            MomentId::Cubic5 => n1 * p * dp * dp * sin,
            MomentId::Quartic1 => p.powi(4) * sin,
            MomentId::Quartic2 => p * p * n1 * dps * dps * sin,
            MomentId::Quartic3 => p * p * n2 * hess * hess * sin,
            MomentId::Quartic4 => p * n2 * dps * dps * hess * sin,
            MomentId::Quartic5 => n2 * dp.powi(4) * sin.powi(5),
            MomentId::Quartic6 => n2 * n1 * dps * dps * hess * hess * sin,
            MomentId::Quartic7 => n2 * n2 * hess.powi(4) * sin,
            MomentId::Quartic8 => p * p * n2 * dp * dp * sin,
            MomentId::Quartic9 => n1 * dps * dps * n2 * dp * dp * sin,
            MomentId::Quartic10 => n2 * hess * hess * n2 * dp * dp * sin,
            MomentId::Quartic11 => n2 * n2 * dp.powi(4) * sin,
        }
    }
}

impl fmt::Display for MomentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Quantities shared by all integrands at one colatitude.
#[derive(Clone, Copy)]
struct Sample {
    p: f64,
    dp: f64,
    sin: f64,
    /// `P cos θ − P″ sin²θ`
    hess: f64,
    /// `2 / (ℓ(ℓ+1))`
    n1: f64,
}

impl Sample {
    fn at(l: usize, theta: f64) -> Self {
        let (sin, cos) = theta.sin_cos();
        let e = legendre_with_derivatives_unchecked(l, cos);
        let lf = l as f64;
        Sample {
            p: e.p,
            dp: e.dp,
            sin,
            hess: e.p * cos - e.ddp * sin * sin,
            n1: 2.0 / (lf * (lf + 1.0)),
        }
    }
}

/// All sixteen truncated integrals at one degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentIntegralTable {
    pub degree: usize,
    pub cutoff: f64,
    pub values: Vec<(MomentId, f64)>,
}

impl MomentIntegralTable {
    pub fn get(&self, id: MomentId) -> f64 {
        self.values
            .iter()
            .find(|(k, _)| *k == id)
            .map(|(_, v)| *v)
            .expect("table holds every moment id")
    }

    /// `value · ℓ² / log ℓ`, the quantity that converges for the log-scaling entries.
    pub fn log_normalized(&self, id: MomentId) -> f64 {
        let l = self.degree as f64;
        self.get(id) * l * l / l.ln()
    }

    pub fn write_csv_header(out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "id,ell,cutoff,value")
    }

    pub fn write_csv_rows(&self, out: &mut impl Write) -> std::io::Result<()> {
        for (id, v) in &self.values {
            writeln!(out, "{},{},{},{:.17e}", id, self.degree, self.cutoff, v)?;
        }
        Ok(())
    }
}

/// Gauss points per panel.
const PANEL_ORDER: usize = 12;
const REL_TOL: f64 = 1e-8;

/// Evaluates the sixteen truncated integrals over `[C/ℓ, π/2]`.
///
/// Panels have width at most `π/(4ℓ)`; each panel is integrated with a
/// 12-point Gauss rule and again as two half-panels. The refined sum is
/// returned, and the coarse/refined difference must stay below `1e−8` of the
/// integral of the absolute integrand.
pub fn appendix_moment_integrals(l: usize, cutoff: f64) -> Result<MomentIntegralTable> {
    if l < 2 {
        return Err(Error::Domain(format!(
            "moment integrals need l >= 2, got {l}"
        )));
    }
    if !(cutoff > 0.0) || cutoff / l as f64 >= PI / 2.0 {
        return Err(Error::Domain(format!(
            "cutoff C={cutoff} must satisfy 0 < C/l < pi/2 (l={l})"
        )));
    }
    let lf = l as f64;
    let lo = cutoff / lf;
    let hi = PI / 2.0;
    let max_width = PI / (4.0 * lf);
    let panels = ((hi - lo) / max_width).ceil() as usize;
    let width = (hi - lo) / panels as f64;
    let rule = gauss_legendre(PANEL_ORDER);

    let n = MomentId::ALL.len();
    let mut fine = vec![0.0; n];
    let mut abs_fine = vec![0.0; n];
    let mut diff = vec![0.0; n];
    let mut worst = vec![(0.0f64, lo); n];

    let mut coarse_panel = vec![0.0; n];
    let mut fine_panel = vec![0.0; n];
    let mut abs_panel = vec![0.0; n];
    let integrate = |a: f64, b: f64, acc: &mut [f64], abs_acc: Option<&mut [f64]>| {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut abs_acc = abs_acc;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let s = Sample::at(l, mid + half * x);
            for (k, id) in MomentId::ALL.iter().enumerate() {
                let v = id.integrand(&s) * w * half;
                acc[k] += v;
                if let Some(a) = abs_acc.as_deref_mut() {
                    a[k] += v.abs();
                }
            }
        }
    };

    for i in 0..panels {
        let a = lo + i as f64 * width;
        let b = if i + 1 == panels { hi } else { a + width };
        coarse_panel.iter_mut().for_each(|v| *v = 0.0);
        fine_panel.iter_mut().for_each(|v| *v = 0.0);
        abs_panel.iter_mut().for_each(|v| *v = 0.0);
        let m = 0.5 * (a + b);
        integrate(a, b, &mut coarse_panel, None);
        integrate(a, m, &mut fine_panel, Some(&mut abs_panel));
        integrate(m, b, &mut fine_panel, Some(&mut abs_panel));
        for k in 0..n {
            let d = (fine_panel[k] - coarse_panel[k]).abs();
            fine[k] += fine_panel[k];
            abs_fine[k] += abs_panel[k];
            diff[k] += d;
            if d > worst[k].0 {
                worst[k] = (d, m);
            }
        }
    }

    for (k, id) in MomentId::ALL.iter().enumerate() {
        if !fine[k].is_finite() || diff[k] > REL_TOL * abs_fine[k].max(f64::MIN_POSITIVE) {
            return Err(Error::Quadrature {
                what: format!("{id} at l={l}"),
                worst_error: worst[k].0,
                worst_theta: worst[k].1,
            });
        }
    }

    Ok(MomentIntegralTable {
        degree: l,
        cutoff,
        values: MomentId::ALL.iter().copied().zip(fine).collect(),
    })
}
