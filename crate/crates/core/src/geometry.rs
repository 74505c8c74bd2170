//! Length of the level set `f⁻¹(u)` measured on a [`FieldGrid`].
//!
//! Two independent estimators:
//!
//! * [`level_curve_length`]: marching squares on the `(θ, φ)` cells with
//!   linear interpolation along cell edges; each segment is measured with the
//!   spherical line element `√(Δθ² + sin²θ̄ Δφ²)`, `θ̄` the mean colatitude of
//!   its endpoints.
//! * [`epsilon_band_length`]: grid quadrature of `(2ε)⁻¹ 1{|f−u| ≤ ε} ‖∇f‖`.
//!
//! The marching-squares error of a realization behaves like `c / k²` in the
//! oversampling factor `k`, with `c` depending on the realization and the
//! level. [`extrapolated_length`] combines grids at `k` and `2k` to cancel it.
//!
//! Longitude is periodic; the two polar caps beyond the extreme Gauss rings
//! are not covered by any cell.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{half_lambda, FieldGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthMethod {
    Contour,
    /// Contour lengths at spacing `h` and `h/2` combined as `(4L_{h/2} − L_h)/3`.
    ContourExtrapolated,
    EpsilonBand,
}

impl fmt::Display for LengthMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LengthMethod::Contour => "contour",
            LengthMethod::ContourExtrapolated => "contour_extrapolated",
            LengthMethod::EpsilonBand => "epsilon_band",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthMeasurement {
    pub level: f64,
    /// Geodesic length on the unit sphere.
    pub length: f64,
    /// Cells crossed by the curve (contour) or grid points inside the band.
    pub cell_count: usize,
    pub method: LengthMethod,
    /// Cells whose four corners all sat exactly on the level.
    pub degenerate_cells: usize,
}

impl LengthMeasurement {
    pub const CSV_HEADER: &'static str = "ell,u,method,length,cell_count,seed";

    pub fn csv_row(&self, ell: usize, seed: u64) -> String {
        format!(
            "{},{},{},{:.17e},{},{}",
            ell, self.level, self.method, self.length, self.cell_count, seed
        )
    }
}

/// Length of `{f = u}` by marching squares.
///
/// Corners exactly on the level are nudged to `+1e−12 · σ` above it, `σ`
/// the RMS of the grid values, so no cell has a corner on the curve. The
/// ambiguous saddle cells are split by the sign of the bilinear centre value.
pub fn level_curve_length(grid: &FieldGrid, u: f64) -> Result<LengthMeasurement> {
    if !u.is_finite() {
        return Err(Error::Domain(format!("level {u} is not finite")));
    }
    let nt = grid.n_theta();
    let np = grid.n_phi();
    let mut out = LengthMeasurement {
        level: u,
        length: 0.0,
        cell_count: 0,
        method: LengthMethod::Contour,
        degenerate_cells: 0,
    };
    if nt < 2 || np < 2 || grid.max_abs() < u.abs() {
        return Ok(out);
    }
    let nudge = 1e-12 * grid.value_scale().max(f64::MIN_POSITIVE);
    let dphi = 2.0 * std::f64::consts::PI / np as f64;

    // offsets from the level and their signs, one row at a time
    let fill = |i: usize, d: &mut [f64], s: &mut [u8]| -> bool {
        let mut exact = false;
        for (j, &v) in grid.values[i * np..(i + 1) * np].iter().enumerate() {
            let mut x = v - u;
            if x == 0.0 {
                x = nudge;
                exact = true;
            }
            d[j] = x;
            s[j] = (x > 0.0) as u8;
        }
        exact
    };
    let (mut d0, mut d1) = (vec![0.0; np], vec![0.0; np]);
    let (mut s0, mut s1) = (vec![0u8; np], vec![0u8; np]);
    let mut exact0 = fill(0, &mut d0, &mut s0);

    let mut total = 0.0;
    for i in 0..nt - 1 {
        let exact1 = fill(i + 1, &mut d1, &mut s1);
        let (t0, t1) = (grid.thetas[i], grid.thetas[i + 1]);
        let mut row_len = 0.0;
        for j in 0..np {
            let jn = if j + 1 == np { 0 } else { j + 1 };
            // corners: a=(t0,φ0) b=(t0,φ1) c=(t1,φ1) d=(t1,φ0)
            let case = s0[j] | s0[jn] << 1 | s1[jn] << 2 | s1[j] << 3;
            if case == 0 || case == 15 {
                if exact0
                    && exact1
                    && [d0[j], d0[jn], d1[jn], d1[j]].iter().all(|&x| x == nudge)
                    && [(i, j), (i, jn), (i + 1, jn), (i + 1, j)]
                        .iter()
                        .all(|&(r, c)| grid.values[r * np + c] == u)
                {
                    out.degenerate_cells += 1;
                }
                continue;
            }
            let (a, b, c, d) = (d0[j], d0[jn], d1[jn], d1[j]);
            // crossing points as (θ, φ)
            let p0 = j as f64 * dphi;
            let top = || (t0, p0 + dphi * a / (a - b));
            let right = || (t0 + (t1 - t0) * b / (b - c), p0 + dphi);
            let bottom = || (t1, p0 + dphi * d / (d - c));
            let left = || (t0 + (t1 - t0) * a / (a - d), p0);
            let mut seg = |p: (f64, f64), q: (f64, f64)| {
                let dt = q.0 - p.0;
                let s = (0.5 * (p.0 + q.0)).sin();
                let dp = q.1 - p.1;
                row_len += (dt * dt + s * s * dp * dp).sqrt();
            };
            match case {
                1 | 14 => seg(top(), left()),
                2 | 13 => seg(top(), right()),
                3 | 12 => seg(left(), right()),
                4 | 11 => seg(right(), bottom()),
                6 | 9 => seg(top(), bottom()),
                7 | 8 => seg(left(), bottom()),
                5 | 10 => {
                    let centre = 0.25 * (a + b + c + d);
                    // a and c share a sign; if the centre agrees with them the
                    // a–c diagonal is connected and the curve cuts off b and d
                    let ac_connected = (centre > 0.0) == (a > 0.0);
                    if ac_connected {
                        seg(top(), right());
                        seg(left(), bottom());
                    } else {
                        seg(top(), left());
                        seg(right(), bottom());
                    }
                }
                _ => unreachable!(),
            }
            out.cell_count += 1;
        }
        total += row_len;
        std::mem::swap(&mut d0, &mut d1);
        std::mem::swap(&mut s0, &mut s1);
        exact0 = exact1;
    }
    if out.degenerate_cells > 0 {
        log::warn!(
            "{} degenerate cells at level {u} (all corners on the level)",
            out.degenerate_cells
        );
    }
    out.length = total;
    Ok(out)
}

/// Richardson-extrapolated contour length from a grid and its exact doubling
/// (see [`crate::field::SynthesisPlan::doubled`]); clamped at zero.
pub fn extrapolated_length(
    coarse: &FieldGrid,
    fine: &FieldGrid,
    u: f64,
) -> Result<LengthMeasurement> {
    if fine.n_theta() != 2 * coarse.n_theta() || fine.n_phi() != 2 * coarse.n_phi() {
        return Err(Error::Resolution(format!(
            "fine grid {}x{} is not the doubling of {}x{}",
            fine.n_theta(),
            fine.n_phi(),
            coarse.n_theta(),
            coarse.n_phi()
        )));
    }
    let c = level_curve_length(coarse, u)?;
    let f = level_curve_length(fine, u)?;
    Ok(LengthMeasurement {
        level: u,
        length: richardson(c.length, f.length).max(0.0),
        cell_count: f.cell_count,
        method: LengthMethod::ContourExtrapolated,
        degenerate_cells: c.degenerate_cells + f.degenerate_cells,
    })
}

/// Eliminates the `h²` term from estimates at spacings `h` and `h/2`.
#[inline]
pub fn richardson(coarse: f64, fine: f64) -> f64 {
    (4.0 * fine - coarse) / 3.0
}

/// Minimum number of grid points in the band before a warning is issued.
const MIN_BAND_POINTS: usize = 10;

/// `ε`-band approximation `(2ε)⁻¹ ∫ 1{|f−u| ≤ ε} ‖∇f‖`.
pub fn epsilon_band_length(grid: &FieldGrid, u: f64, epsilon: f64) -> Result<LengthMeasurement> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::Domain(format!(
            "band half-width {epsilon} must be positive"
        )));
    }
    if !u.is_finite() {
        return Err(Error::Domain(format!("level {u} is not finite")));
    }
    if !grid.has_gradient() {
        return Err(Error::Domain(
            "the band estimator needs a grid with gradients".into(),
        ));
    }
    let np = grid.n_phi();
    let grad_scale = half_lambda(grid.degree).sqrt();
    let mut count = 0usize;
    let mut total = 0.0;
    for (i, w) in grid.weights.iter().enumerate() {
        let mut ring = 0.0;
        for k in i * np..(i + 1) * np {
            if (grid.values[k] - u).abs() <= epsilon {
                count += 1;
                ring += grid.grad1[k].hypot(grid.grad2[k]);
            }
        }
        total += w * ring;
    }
    if count < MIN_BAND_POINTS && total > 0.0 {
        log::warn!("only {count} grid points inside the band |f-{u}| <= {epsilon}; epsilon too small for the grid");
    }
    Ok(LengthMeasurement {
        level: u,
        length: total * grad_scale / (2.0 * epsilon),
        cell_count: count,
        method: LengthMethod::EpsilonBand,
        degenerate_cells: 0,
    })
}
