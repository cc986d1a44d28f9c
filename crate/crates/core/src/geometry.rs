//! Discrete geometric functionals of a conformal metric.
//!
//! Curvature is `R = -Δ̄(ln v) / v`, the gradient norm is
//! `|Du|² = |∇̄v|² / v³`. On the radial chart the Laplacian is the
//! finite-volume form `(1/r)(r u_r)_r`, which reduces at the origin to
//! `4 (u₁ - u₀) / r₁²` (the smooth limit `2 u_rr(0)`).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};
use crate::metric::{fmt_f64, u_from_v, Field, FlowState, LogField, PlanarField, RadialProfile};
use crate::solver::BoundaryCondition;

/// Fraction of the (truncated) radial nodes used for the tail fit.
pub const TAIL_FRACTION: f64 = 0.25;
/// Minimum number of nodes in the tail fit.
pub const MIN_TAIL_NODES: usize = 8;
/// Tolerance on the fitted tail exponent around the critical value 2.
pub const TAIL_TOLERANCE: f64 = 0.05;

// ---------------------------------------------------------------------------
// radial stencils

/// Midpoint radii `r_{i+1/2}`.
fn midpoints(r: &[f64]) -> Vec<f64> {
    r.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}

/// Finite-volume cell areas (per unit angle) about each radial node,
/// half cells at both ends.
pub(crate) fn radial_volumes(r: &[f64]) -> Vec<f64> {
    let n = r.len();
    let m = midpoints(r);
    let mut vol = Vec::with_capacity(n);
    vol.push(0.5 * m[0] * m[0]);
    for i in 1..n - 1 {
        vol.push(0.5 * (m[i] * m[i] - m[i - 1] * m[i - 1]));
    }
    vol.push(0.5 * (r[n - 1] * r[n - 1] - m[n - 2] * m[n - 2]));
    vol
}

/// Three-point derivative at the last node.
fn one_sided_derivative(r: &[f64], u: &[f64]) -> f64 {
    let n = r.len();
    let (x0, x1, x2) = (r[n - 3], r[n - 2], r[n - 1]);
    let (f0, f1, f2) = (u[n - 3], u[n - 2], u[n - 1]);
    f0 * (x2 - x1) / ((x0 - x1) * (x0 - x2))
        + f1 * (x2 - x0) / ((x1 - x0) * (x1 - x2))
        + f2 * (2.0 * x2 - x0 - x1) / ((x2 - x0) * (x2 - x1))
}

/// Outer radial flux `r u_r` at the last node.
///
/// A frozen log-slope boundary prescribes it; otherwise it is estimated
/// from the three outermost nodes.
pub(crate) fn outer_flux(r: &[f64], u: &[f64], bc: Option<&BoundaryCondition>) -> f64 {
    match bc {
        Some(BoundaryCondition::FrozenLogSlope { q0, .. }) => *q0,
        _ => r[r.len() - 1] * one_sided_derivative(r, u),
    }
}

/// Radial Laplacian `(1/r)(r u_r)_r` at every node.
pub(crate) fn radial_laplacian(r: &[f64], u: &[f64], outer: f64) -> Vec<f64> {
    let n = r.len();
    let m = midpoints(r);
    let vol = radial_volumes(r);
    let flux: Vec<f64> = (0..n - 1)
        .map(|i| m[i] * (u[i + 1] - u[i]) / (r[i + 1] - r[i]))
        .collect();
    (0..n)
        .map(|i| {
            let right = if i == n - 1 { outer } else { flux[i] };
            let left = if i == 0 { 0.0 } else { flux[i - 1] };
            (right - left) / vol[i]
        })
        .collect()
}

/// Radial derivative `u_r` at every node; zero at the origin.
pub(crate) fn radial_gradient(r: &[f64], u: &[f64], outer: f64) -> Vec<f64> {
    let n = r.len();
    let mut g = vec![0.0; n];
    for i in 1..n - 1 {
        let (h1, h2) = (r[i] - r[i - 1], r[i + 1] - r[i]);
        g[i] = -h2 / (h1 * (h1 + h2)) * u[i - 1]
            + (h2 - h1) / (h1 * h2) * u[i]
            + h1 / (h2 * (h1 + h2)) * u[i + 1];
    }
    g[n - 1] = outer / r[n - 1];
    g
}

/// Trapezoidal integral of `f` against `r dr` on `[0, upto]`, times 2π.
///
/// The last partial interval is integrated with `f` linearly interpolated.
pub(crate) fn disk_integral(r: &[f64], f: &[f64], upto: f64) -> f64 {
    let g: Vec<f64> = r.iter().zip(f).map(|(a, b)| a * b).collect();
    2.0 * PI * line_integral(r, &g, upto)
}

/// Trapezoidal `∫₀^upto g dr`.
pub(crate) fn line_integral(r: &[f64], g: &[f64], upto: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..r.len() - 1 {
        if r[i] >= upto {
            break;
        }
        if r[i + 1] <= upto {
            acc += 0.5 * (g[i] + g[i + 1]) * (r[i + 1] - r[i]);
        } else {
            let w = (upto - r[i]) / (r[i + 1] - r[i]);
            let gend = g[i] + w * (g[i + 1] - g[i]);
            acc += 0.5 * (g[i] + gend) * (upto - r[i]);
        }
    }
    acc
}

// ---------------------------------------------------------------------------
// planar stencils

fn planar_second(
    u: &[f64],
    nx: usize,
    i: usize,
    j: usize,
    di: isize,
    dj: isize,
    len: usize,
    pos: usize,
) -> f64 {
    let at = |k: isize| -> f64 {
        let ii = (i as isize + di * k) as usize;
        let jj = (j as isize + dj * k) as usize;
        u[jj * nx + ii]
    };
    if pos == 0 {
        2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)
    } else if pos == len - 1 {
        2.0 * at(0) - 5.0 * at(-1) + 4.0 * at(-2) - at(-3)
    } else {
        at(1) - 2.0 * at(0) + at(-1)
    }
}

fn planar_first(
    u: &[f64],
    nx: usize,
    i: usize,
    j: usize,
    di: isize,
    dj: isize,
    len: usize,
    pos: usize,
) -> f64 {
    let at = |k: isize| -> f64 {
        let ii = (i as isize + di * k) as usize;
        let jj = (j as isize + dj * k) as usize;
        u[jj * nx + ii]
    };
    if pos == 0 {
        0.5 * (-3.0 * at(0) + 4.0 * at(1) - at(2))
    } else if pos == len - 1 {
        0.5 * (3.0 * at(0) - 4.0 * at(-1) + at(-2))
    } else {
        0.5 * (at(1) - at(-1))
    }
}

/// Five-point Laplacian in the interior, second-order one-sided second
/// differences on the boundary.
pub(crate) fn planar_laplacian(u: &[f64], nx: usize, ny: usize, h: f64) -> Vec<f64> {
    let mut out = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let dxx = planar_second(u, nx, i, j, 1, 0, nx, i);
            let dyy = planar_second(u, nx, i, j, 0, 1, ny, j);
            out[j * nx + i] = (dxx + dyy) / (h * h);
        }
    }
    out
}

fn planar_grad_sq(u: &[f64], nx: usize, ny: usize, h: f64) -> Vec<f64> {
    let mut out = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let dx = planar_first(u, nx, i, j, 1, 0, nx, i) / h;
            let dy = planar_first(u, nx, i, j, 0, 1, ny, j) / h;
            out[j * nx + i] = dx * dx + dy * dy;
        }
    }
    out
}

/// Trapezoidal weights on the square grid.
fn planar_weights(nx: usize, ny: usize, h: f64) -> impl Fn(usize, usize) -> f64 {
    move |i, j| {
        let wx = if i == 0 || i == nx - 1 { 0.5 } else { 1.0 };
        let wy = if j == 0 || j == ny - 1 { 0.5 } else { 1.0 };
        wx * wy * h * h
    }
}

// ---------------------------------------------------------------------------
// pointwise fields

/// `Δ̄u` on the grid of `log`, with the outer radial flux taken from `bc`.
fn log_laplacian(log: &LogField, bc: Option<&BoundaryCondition>) -> Vec<f64> {
    match log {
        LogField::Radial { r, u } => radial_laplacian(r, u, outer_flux(r, u, bc)),
        LogField::Planar { nx, ny, spacing, u } => planar_laplacian(u, *nx, *ny, *spacing),
    }
}

/// `R = -e^{-u} Δ̄u` computed from a log-conformal field.
pub fn scalar_curvature_from_log(log: &LogField, bc: Option<&BoundaryCondition>) -> Vec<f64> {
    let lap = log_laplacian(log, bc);
    log.values()
        .iter()
        .zip(lap)
        .map(|(u, l)| -(-u).exp() * l)
        .collect()
}

/// `|Du|² = e^{-u} |∇̄u|²` computed from a log-conformal field.
pub fn gradient_norm_sq_from_log(log: &LogField, bc: Option<&BoundaryCondition>) -> Vec<f64> {
    let g2 = match log {
        LogField::Radial { r, u } => {
            let g = radial_gradient(r, u, outer_flux(r, u, bc));
            g.iter().map(|x| x * x).collect::<Vec<_>>()
        }
        LogField::Planar { nx, ny, spacing, u } => planar_grad_sq(u, *nx, *ny, *spacing),
    };
    log.values()
        .iter()
        .zip(g2)
        .map(|(u, g)| (-u).exp() * g)
        .collect()
}

/// Nodewise scalar curvature `R = -Δ̄(ln v) / v`.
pub fn scalar_curvature(state: &FlowState) -> Result<Vec<f64>> {
    let log = u_from_v(&state.field)?;
    let lap = log_laplacian(&log, Some(&state.bc));
    Ok(state
        .field
        .values()
        .iter()
        .zip(lap)
        .map(|(v, l)| -l / v)
        .collect())
}

/// Nodewise `|Du|² = |∇̄v|² / v³`.
pub fn gradient_norm_sq(state: &FlowState) -> Result<Vec<f64>> {
    let log = u_from_v(&state.field)?;
    Ok(gradient_norm_sq_from_log(&log, Some(&state.bc)))
}

/// Nodewise `h = R + |Du|²`.
pub fn h_quantity(state: &FlowState) -> Result<Vec<f64>> {
    let r = scalar_curvature(state)?;
    let g = gradient_norm_sq(state)?;
    Ok(r.iter().zip(&g).map(|(a, b)| a + b).collect())
}

// ---------------------------------------------------------------------------
// integral invariants

/// Region over which integrals and asymptotic estimates are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureWindow {
    /// The whole grid (radial) or the largest inscribed disk (planar).
    #[default]
    GridEdge,
    /// Disk of radius `s(t)·radius`, `s = v(0,t)^{-1/2}` the gauge scale,
    /// clamped to the grid. It follows a fixed region of the cigar flow.
    Comoving { radius: f64 },
}

impl MeasureWindow {
    /// Euclidean evaluation radius for `state`.
    pub fn radius(&self, state: &FlowState) -> f64 {
        let edge = match &state.field {
            Field::Radial(p) => p.r_max(),
            Field::Planar(p) => p.inscribed_radius(),
        };
        match *self {
            MeasureWindow::GridEdge => edge,
            MeasureWindow::Comoving { radius } => {
                (radius / state.field.origin_value().sqrt()).min(edge)
            }
        }
    }
}

/// `∫ R dμ` over the disk of radius `radius`, with `dμ = v dx dy`.
pub fn total_curvature_within(state: &FlowState, radius: f64) -> Result<f64> {
    let log = u_from_v(&state.field)?;
    let lap = log_laplacian(&log, Some(&state.bc));
    // R dμ = -Δ̄u dx dy
    let integrand: Vec<f64> = lap.iter().map(|l| -l).collect();
    Ok(euclidean_integral(&state.field, &integrand, radius))
}

/// Truncated total curvature over the whole grid, with the truncation radius.
pub fn total_curvature(state: &FlowState) -> Result<(f64, f64)> {
    let radius = MeasureWindow::GridEdge.radius(state);
    Ok((total_curvature_within(state, radius)?, radius))
}

/// `∫ R₋ dμ`, `R₋ = max{-R, 0}`, over the disk of radius `radius`.
pub fn negative_curvature_within(state: &FlowState, radius: f64) -> Result<f64> {
    let log = u_from_v(&state.field)?;
    let lap = log_laplacian(&log, Some(&state.bc));
    // R₋ dμ = max{Δ̄u, 0} dx dy
    let integrand: Vec<f64> = lap.iter().map(|l| l.max(0.0)).collect();
    Ok(euclidean_integral(&state.field, &integrand, radius))
}

pub fn negative_curvature_integral(state: &FlowState) -> Result<f64> {
    negative_curvature_within(state, MeasureWindow::GridEdge.radius(state))
}

/// Integral of a nodal density against `dx dy`.
///
/// The planar chart integrates over the whole square when `radius` reaches the
/// inscribed radius, otherwise over nodes inside the disk.
fn euclidean_integral(field: &Field, f: &[f64], radius: f64) -> f64 {
    match field {
        Field::Radial(p) => disk_integral(p.r(), f, radius),
        Field::Planar(p) => {
            let (nx, ny) = (p.nx(), p.ny());
            let w = planar_weights(nx, ny, p.spacing());
            let whole = radius >= p.inscribed_radius();
            let mut acc = 0.0;
            for j in 0..ny {
                for i in 0..nx {
                    let (x, y) = p.coords(i, j);
                    if whole || x.hypot(y) <= radius {
                        acc += w(i, j) * f[j * nx + i];
                    }
                }
            }
            acc
        }
    }
}

// ---------------------------------------------------------------------------
// asymptotic invariants

/// Tail class from the fitted exponent `p` of `v ~ r^{-p}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CircumferenceClass {
    /// `p < 2`: circles grow without bound.
    Infinite,
    /// `p = 2`: cylinder-like end.
    Finite,
    /// `p > 2`: circles shrink to zero; the end closes up.
    ZeroCusp,
}

impl CircumferenceClass {
    pub fn from_exponent(p: f64) -> Self {
        if p < 2.0 - TAIL_TOLERANCE {
            CircumferenceClass::Infinite
        } else if p <= 2.0 + TAIL_TOLERANCE {
            CircumferenceClass::Finite
        } else {
            CircumferenceClass::ZeroCusp
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApertureClass {
    /// `p < 2`: cone-like end with limit `1 - p/2`.
    Positive,
    /// `p ≥ 2`: the ratio decays to zero (logarithmically for `p = 2`).
    Decaying,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircumferenceEstimate {
    /// `2π r √v(r)` at the evaluation radius.
    pub value: f64,
    pub radius: f64,
    pub tail_exponent: f64,
    pub class: CircumferenceClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApertureEstimate {
    /// `r √v(r) / ∫₀^r √v dρ` at the evaluation radius.
    pub value: f64,
    pub radius: f64,
    pub tail_exponent: f64,
    pub class: ApertureClass,
}

/// Least-squares slope of `ln v` against `ln r` over the outer quarter of
/// the nodes inside `radius`, returned as `p` with `v ~ r^{-p}`.
pub fn tail_exponent(profile: &RadialProfile, radius: f64) -> Result<f64> {
    let r = profile.r();
    let inside = r.partition_point(|&x| x <= radius * (1.0 + 1e-12));
    let take = ((inside as f64 * TAIL_FRACTION).round() as usize).min(inside.saturating_sub(1));
    if take < MIN_TAIL_NODES {
        return Err(FlowError::Estimation(format!(
            "tail fit needs at least {MIN_TAIL_NODES} nodes, only {take} available inside r = {radius}"
        )));
    }
    let pts: Vec<(f64, f64)> = (inside - take..inside)
        .map(|i| (r[i].ln(), profile.v()[i].ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx <= 0.0 {
        return Err(FlowError::Estimation("degenerate tail abscissae".into()));
    }
    Ok(-sxy / sxx)
}

/// Number of angular samples for the planar radial surrogate.
const ANGULAR_SAMPLES: usize = 256;

/// Radial surrogate of a planar field: `v̄(r) = (mean_θ √v(r, θ))²`, so that
/// `2π r √v̄` is the length of the circle of radius `r`.
pub fn angular_profile(field: &PlanarField) -> Result<RadialProfile> {
    let h = field.spacing();
    let nr = field.nx().min(field.ny()) / 2 + 1;
    let r: Vec<f64> = (0..nr).map(|k| k as f64 * h).collect();
    let v = r
        .iter()
        .map(|&rad| {
            let mean = (0..ANGULAR_SAMPLES)
                .map(|k| {
                    let th = 2.0 * PI * k as f64 / ANGULAR_SAMPLES as f64;
                    field.log_interp(rad * th.cos(), rad * th.sin()).sqrt()
                })
                .sum::<f64>()
                / ANGULAR_SAMPLES as f64;
            mean * mean
        })
        .collect();
    RadialProfile::new(r, v)
}

pub(crate) fn radial_view(field: &Field) -> Result<std::borrow::Cow<'_, RadialProfile>> {
    Ok(match field {
        Field::Radial(p) => std::borrow::Cow::Borrowed(p),
        Field::Planar(p) => std::borrow::Cow::Owned(angular_profile(p)?),
    })
}

pub fn circumference_within(state: &FlowState, radius: f64) -> Result<CircumferenceEstimate> {
    let prof = radial_view(&state.field)?;
    let radius = radius.min(prof.r_max());
    let p = tail_exponent(&prof, radius)?;
    Ok(CircumferenceEstimate {
        value: 2.0 * PI * radius * prof.log_interp(radius).sqrt(),
        radius,
        tail_exponent: p,
        class: CircumferenceClass::from_exponent(p),
    })
}

/// Estimate of the circumference at infinity at the grid edge.
pub fn circumference_at_infinity(state: &FlowState) -> Result<CircumferenceEstimate> {
    circumference_within(state, MeasureWindow::GridEdge.radius(state))
}

pub fn aperture_within(state: &FlowState, radius: f64) -> Result<ApertureEstimate> {
    let prof = radial_view(&state.field)?;
    let radius = radius.min(prof.r_max());
    let p = tail_exponent(&prof, radius)?;
    let sqrt_v: Vec<f64> = prof.v().iter().map(|v| v.sqrt()).collect();
    let geodesic_radius = line_integral(prof.r(), &sqrt_v, radius);
    let value = radius * prof.log_interp(radius).sqrt() / geodesic_radius;
    let class = if p < 2.0 - TAIL_TOLERANCE {
        ApertureClass::Positive
    } else {
        ApertureClass::Decaying
    };
    Ok(ApertureEstimate {
        value,
        radius,
        tail_exponent: p,
        class,
    })
}

/// Estimate of the aperture (circle length over 2π times geodesic radius) at the grid edge.
pub fn aperture(state: &FlowState) -> Result<ApertureEstimate> {
    aperture_within(state, MeasureWindow::GridEdge.radius(state))
}

// ---------------------------------------------------------------------------
// admissibility

/// Outcome of one hypothesis check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Pass,
    Fail,
    Inconclusive,
}

impl Check {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Check::Pass
        } else {
            Check::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Check::Pass
    }
}

/// Numbers behind the hypotheses on the initial conformal factor, and the
/// verdict for each. Serialized as a flat JSON object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub bound: f64,
    pub tail_exponent: Option<f64>,
    pub complete: Check,
    pub sup_abs_curvature: f64,
    pub sup_curvature: f64,
    pub inf_curvature: f64,
    pub sup_grad: f64,
    pub negative_curvature_integral: f64,
    pub circumference: Option<f64>,
    pub circumference_class: Option<CircumferenceClass>,
    pub aperture: Option<f64>,
    /// Completeness: `v > 0` and `∫ √v dr = ∞`.
    pub cond_4: Check,
    /// `|R| ≤ C`.
    pub cond_5: Check,
    /// `0 < R ≤ C`.
    pub cond_5_prime: Check,
    /// `|Du| ≤ C`.
    pub cond_6: Check,
    /// `∫ R₋ dμ ≤ C`.
    pub cond_7: Check,
    /// `C∞ > 0`.
    pub cond_8: Check,
}

impl AdmissibilityReport {
    /// Hypotheses required to start a flow: completeness, bounded curvature, bounded gradient.
    pub fn flow_hypotheses_hold(&self) -> bool {
        self.cond_4.passed() && self.cond_5.passed() && self.cond_6.passed()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_else(|| "n/a".into());
        let mut lines = vec![
            format!("bound C                 {}", fmt_f64(self.bound)),
            format!("tail exponent p         {}", opt(self.tail_exponent)),
            format!(
                "sup |R|                 {}",
                fmt_f64(self.sup_abs_curvature)
            ),
            format!(
                "inf R / sup R           {} / {}",
                fmt_f64(self.inf_curvature),
                fmt_f64(self.sup_curvature)
            ),
            format!("sup |Du|                {}", fmt_f64(self.sup_grad)),
            format!(
                "int R_- dmu             {}",
                fmt_f64(self.negative_curvature_integral)
            ),
            format!(
                "C_inf estimate          {} ({})",
                opt(self.circumference),
                self.circumference_class
                    .map_or("n/a".to_string(), |c| format!("{c:?}").to_lowercase())
            ),
            format!("aperture estimate       {}", opt(self.aperture)),
        ];
        for (name, c) in [
            ("(4)  complete", self.cond_4),
            ("(5)  |R| <= C", self.cond_5),
            ("(5') 0 < R <= C", self.cond_5_prime),
            ("(6)  |Du| <= C", self.cond_6),
            ("(7)  int R_- <= C", self.cond_7),
            ("(8)  C_inf > 0", self.cond_8),
        ] {
            lines.push(format!("{name:<24}{c:?}"));
        }
        lines.join("\n")
    }
}

pub fn check_admissibility(state: &FlowState, bound: f64) -> Result<AdmissibilityReport> {
    let curv = scalar_curvature(state)?;
    let grad2 = gradient_norm_sq(state)?;
    let sup_r = curv.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let inf_r = curv.iter().cloned().fold(f64::INFINITY, f64::min);
    let sup_abs = curv.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let sup_grad = grad2.iter().cloned().fold(0.0, f64::max).sqrt();
    let neg = negative_curvature_integral(state)?;

    let circ = circumference_at_infinity(state).ok();
    let ap = aperture(state).ok();
    let p = circ.map(|c| c.tail_exponent);

    // positivity is structural (the field constructor rejects v <= 0)
    let complete = match p {
        Some(p) => Check::from_bool(p <= 2.0 + TAIL_TOLERANCE),
        None => Check::Inconclusive,
    };
    let cond_8 = match circ {
        Some(c) => Check::from_bool(c.class != CircumferenceClass::ZeroCusp && c.value > 0.0),
        None => Check::Inconclusive,
    };
    Ok(AdmissibilityReport {
        bound,
        tail_exponent: p,
        complete,
        sup_abs_curvature: sup_abs,
        sup_curvature: sup_r,
        inf_curvature: inf_r,
        sup_grad,
        negative_curvature_integral: neg,
        circumference: circ.map(|c| c.value),
        circumference_class: circ.map(|c| c.class),
        aperture: ap.map(|a| a.value),
        cond_4: complete,
        cond_5: Check::from_bool(sup_abs <= bound),
        cond_5_prime: Check::from_bool(inf_r > 0.0 && sup_r <= bound),
        cond_6: Check::from_bool(sup_grad <= bound),
        cond_7: Check::from_bool(neg <= bound),
        cond_8,
    })
}

// ---------------------------------------------------------------------------
// diagnostics

/// Column order of the diagnostics CSV.
pub const DIAGNOSTICS_HEADER: &str =
    "t,v0,R0,supR,infR,supGrad2,supH,totalCurv,negCurv,Cinf,aperture,dt";

/// Geometric functionals of one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub v0: f64,
    pub r0: f64,
    pub sup_r: f64,
    pub inf_r: f64,
    pub sup_grad2: f64,
    pub sup_h: f64,
    pub total_curvature: f64,
    pub negative_curvature: f64,
    pub c_inf: f64,
    pub aperture: f64,
    /// Step size that produced the state (0 for the initial state).
    pub dt: f64,
}

impl DiagnosticsRow {
    pub fn columns(&self) -> [f64; 12] {
        [
            self.t,
            self.v0,
            self.r0,
            self.sup_r,
            self.inf_r,
            self.sup_grad2,
            self.sup_h,
            self.total_curvature,
            self.negative_curvature,
            self.c_inf,
            self.aperture,
            self.dt,
        ]
    }

    pub fn to_csv(&self) -> String {
        self.columns()
            .iter()
            .map(|x| fmt_f64(*x))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn from_csv(line: &str) -> Result<Self> {
        let c = line
            .trim()
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| FlowError::Parse {
                line: 0,
                message: e.to_string(),
            })?;
        if c.len() != 12 {
            return Err(FlowError::Parse {
                line: 0,
                message: format!("expected 12 columns, got {}", c.len()),
            });
        }
        Ok(Self {
            t: c[0],
            v0: c[1],
            r0: c[2],
            sup_r: c[3],
            inf_r: c[4],
            sup_grad2: c[5],
            sup_h: c[6],
            total_curvature: c[7],
            negative_curvature: c[8],
            c_inf: c[9],
            aperture: c[10],
            dt: c[11],
        })
    }
}

/// Compute all diagnostics of `state`, integrals and asymptotic estimates
/// restricted to `window`.
pub fn diagnostics(state: &FlowState, window: MeasureWindow, dt: f64) -> Result<DiagnosticsRow> {
    let log = u_from_v(&state.field)?;
    let lap = log_laplacian(&log, Some(&state.bc));
    let v = state.field.values();
    let curv: Vec<f64> = v.iter().zip(&lap).map(|(v, l)| -l / v).collect();
    let grad2 = gradient_norm_sq_from_log(&log, Some(&state.bc));
    let origin = match &state.field {
        Field::Radial(_) => 0,
        Field::Planar(p) => {
            let (i, j) = p.origin_index();
            j * p.nx() + i
        }
    };
    let radius = window.radius(state);
    let total: Vec<f64> = lap.iter().map(|l| -l).collect();
    let neg: Vec<f64> = lap.iter().map(|l| l.max(0.0)).collect();
    let circ = circumference_within(state, radius)?;
    let ap = aperture_within(state, radius)?;
    Ok(DiagnosticsRow {
        t: state.t,
        v0: v[origin],
        r0: curv[origin],
        sup_r: curv.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        inf_r: curv.iter().cloned().fold(f64::INFINITY, f64::min),
        sup_grad2: grad2.iter().cloned().fold(0.0, f64::max),
        sup_h: curv
            .iter()
            .zip(&grad2)
            .map(|(a, b)| a + b)
            .fold(f64::NEG_INFINITY, f64::max),
        total_curvature: euclidean_integral(&state.field, &total, radius),
        negative_curvature: euclidean_integral(&state.field, &neg, radius),
        c_inf: circ.value,
        aperture: ap.value,
        dt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{
        build_initial, build_initial_with, GridSpec, InitialDataSpec, PlanarGrid, RadialGrid,
    };
    use crate::solver::BoundaryKind;

    fn radial(spec: InitialDataSpec, r_max: f64, n: usize) -> FlowState {
        build_initial_with(
            &spec,
            &GridSpec::Radial(RadialGrid::uniform(r_max, n)),
            BoundaryKind::DirichletInitial,
        )
        .unwrap()
    }

    fn node(state: &FlowState, r: f64) -> usize {
        let p = state.field.as_radial().unwrap();
        p.r().iter().position(|&x| (x - r).abs() < 1e-9).unwrap()
    }

    #[test]
    fn flat_functionals_are_exactly_zero() {
        for state in [
            radial(InitialDataSpec::Flat, 10.0, 101),
            build_initial(
                &InitialDataSpec::Flat,
                &GridSpec::Cartesian(PlanarGrid {
                    half_width: 2.0,
                    nodes_per_axis: 21,
                }),
            )
            .unwrap(),
        ] {
            assert!(scalar_curvature(&state).unwrap().iter().all(|&x| x == 0.0));
            assert!(gradient_norm_sq(&state).unwrap().iter().all(|&x| x == 0.0));
            assert!(h_quantity(&state).unwrap().iter().all(|&x| x == 0.0));
            assert_eq!(total_curvature(&state).unwrap().0, 0.0);
            assert_eq!(negative_curvature_integral(&state).unwrap(), 0.0);
        }
    }

    #[test]
    fn cigar_curvature_spot_values() {
        let s = radial(InitialDataSpec::Cigar, 10.0, 1001);
        let curv = scalar_curvature(&s).unwrap();
        assert!((curv[0] - 4.0).abs() < 1e-3, "{}", curv[0]);
        assert!((curv[node(&s, 1.0)] - 2.0).abs() < 1e-3);
        let g = gradient_norm_sq(&s).unwrap();
        assert!((g[node(&s, 1.0)] - 2.0).abs() < 1e-3);
        assert_eq!(g[0], 0.0);
    }

    #[test]
    fn origin_curvature_converges_at_second_order() {
        let errs: Vec<f64> = [101, 201, 401, 801]
            .iter()
            .map(|&n| {
                (scalar_curvature(&radial(InitialDataSpec::Cigar, 10.0, n)).unwrap()[0] - 4.0).abs()
            })
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((order - 2.0).abs() < 0.1, "{errs:?}");
        }
    }

    #[test]
    fn cigar_h_is_constant() {
        let mut spreads = Vec::new();
        for n in [201, 401, 801] {
            let s = radial(InitialDataSpec::Cigar, 10.0, n);
            let h = h_quantity(&s).unwrap();
            let h = &h[..n - 1];
            let (lo, hi) = h
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
                    (a.min(x), b.max(x))
                });
            let step = 10.0 / (n - 1) as f64;
            spreads.push((hi - lo) / (step * step));
            assert!((lo - 4.0).abs() < 0.05 && (hi - 4.0).abs() < 0.05);
        }
        // max - min <= K h² with K stable under refinement
        assert!(spreads[2] < 1.2 * spreads[0], "{spreads:?}");
    }

    #[test]
    fn gradient_sup_stays_below_four() {
        let r_max = 10.0;
        let s = radial(InitialDataSpec::Cigar, r_max, 1001);
        let sup = gradient_norm_sq(&s)
            .unwrap()
            .into_iter()
            .fold(0.0, f64::max);
        let bound = 4.0 * r_max * r_max / (1.0 + r_max * r_max);
        assert!(
            sup < 4.0 && (sup - bound).abs() < 1e-2 * bound,
            "{sup} vs {bound}"
        );
    }

    #[test]
    fn curvature_commutes_with_log_transform() {
        let s = radial(
            InitialDataSpec::PerturbedCigar {
                epsilon: 0.3,
                bump_inner: 1.0,
                bump_outer: 3.0,
            },
            10.0,
            301,
        );
        let log = u_from_v(&s.field).unwrap();
        let a = scalar_curvature(&s).unwrap();
        let b = scalar_curvature_from_log(&log, Some(&s.bc));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
        let a = gradient_norm_sq(&s).unwrap();
        let b = gradient_norm_sq_from_log(&log, Some(&s.bc));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn cigar_total_curvature_truncated() {
        let r_max = 40.0;
        let s = radial(InitialDataSpec::Cigar, r_max, 2001);
        let (tc, radius) = total_curvature(&s).unwrap();
        let exact = 4.0 * PI * (1.0 - 1.0 / (1.0 + r_max * r_max));
        assert_eq!(radius, r_max);
        assert!((tc - exact).abs() < 1e-3 * exact, "{tc} vs {exact}");
        assert_eq!(negative_curvature_integral(&s).unwrap(), 0.0);
    }

    #[test]
    fn negative_part_is_non_negative() {
        let s = radial(InitialDataSpec::PowerLaw { alpha: 0.3 }, 10.0, 201);
        assert!(negative_curvature_integral(&s).unwrap() >= 0.0);
        let s = FlowState::initial(
            Field::Radial(
                RadialProfile::from_fn(RadialGrid::uniform(5.0, 201).points().unwrap(), |r| {
                    1.0 + r * r
                })
                .unwrap(),
            ),
            BoundaryKind::DirichletInitial,
        )
        .unwrap();
        assert!(negative_curvature_integral(&s).unwrap() > 0.0);
    }

    #[test]
    fn circumference_of_cigar_family() {
        let s = radial(InitialDataSpec::Cigar, 40.0, 2001);
        let c = circumference_at_infinity(&s).unwrap();
        assert!((c.value - 2.0 * PI).abs() < 0.02 * 2.0 * PI);
        assert_eq!(c.class, CircumferenceClass::Finite);

        let r = RadialGrid::uniform(40.0, 2001).points().unwrap();
        let s4 = FlowState::initial(
            Field::Radial(RadialProfile::from_fn(r, |x| 4.0 / (4.0 + x * x)).unwrap()),
            BoundaryKind::DirichletInitial,
        )
        .unwrap();
        let c = circumference_at_infinity(&s4).unwrap();
        assert!((c.value - 4.0 * PI).abs() < 0.02 * 4.0 * PI, "{}", c.value);
        assert_eq!(c.class, CircumferenceClass::Finite);

        let flat = radial(InitialDataSpec::Flat, 40.0, 401);
        let c = circumference_at_infinity(&flat).unwrap();
        assert_eq!(c.tail_exponent, 0.0);
        assert_eq!(c.class, CircumferenceClass::Infinite);
    }

    #[test]
    fn too_few_tail_nodes() {
        let s = radial(InitialDataSpec::Cigar, 4.0, 21);
        assert!(matches!(
            circumference_at_infinity(&s),
            Err(FlowError::Estimation(_))
        ));
        assert!(matches!(aperture(&s), Err(FlowError::Estimation(_))));
    }

    #[test]
    fn aperture_values() {
        let flat = radial(InitialDataSpec::Flat, 40.0, 401);
        let a = aperture(&flat).unwrap();
        assert!((a.value - 1.0).abs() < 1e-12);
        assert_eq!(a.class, ApertureClass::Positive);

        // decays like 1/ln R for the cigar
        let a40 = aperture(&radial(InitialDataSpec::Cigar, 40.0, 2001)).unwrap();
        let a400 = aperture(&radial(InitialDataSpec::Cigar, 400.0, 20001)).unwrap();
        assert_eq!(a40.class, ApertureClass::Decaying);
        assert!(a400.value < a40.value);
        assert!((a40.value * (40f64).asinh() - 1.0).abs() < 1e-2);
    }

    #[test]
    fn admissibility_cigar() {
        let s = radial(InitialDataSpec::Cigar, 40.0, 2001);
        let rep = check_admissibility(&s, 4.0).unwrap();
        assert!(rep.cond_4.passed() && rep.cond_5.passed() && rep.cond_5_prime.passed());
        assert!(rep.cond_6.passed() && rep.cond_7.passed() && rep.cond_8.passed());
        assert!(rep.sup_grad < 2.0);
        assert!((rep.sup_curvature - 4.0).abs() < 1e-3);
        assert_eq!(rep.negative_curvature_integral, 0.0);
        assert_eq!(rep.circumference_class, Some(CircumferenceClass::Finite));
        let json: serde_json::Value = serde_json::from_str(&rep.to_json()).unwrap();
        assert!(json
            .as_object()
            .unwrap()
            .values()
            .all(|v| !v.is_object() && !v.is_array()));
    }

    #[test]
    fn admissibility_flat() {
        let s = radial(InitialDataSpec::Flat, 40.0, 401);
        let rep = check_admissibility(&s, 4.0).unwrap();
        assert!(rep.cond_4.passed() && rep.cond_5.passed() && rep.cond_6.passed());
        assert_eq!(rep.cond_5_prime, Check::Fail);
        assert!((rep.aperture.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn admissibility_growing_factor() {
        let r = RadialGrid::uniform(20.0, 801).points().unwrap();
        let s = FlowState::initial(
            Field::Radial(RadialProfile::from_fn(r, |x| 1.0 + x * x).unwrap()),
            BoundaryKind::DirichletInitial,
        )
        .unwrap();
        let rep = check_admissibility(&s, 10.0).unwrap();
        assert!(rep.tail_exponent.unwrap() < -1.9);
        assert!(rep.cond_4.passed());
        assert_eq!(rep.cond_5_prime, Check::Fail);
        assert!(rep.inf_curvature < 0.0);
    }

    #[test]
    fn planar_cigar_matches_radial_values() {
        let g = PlanarGrid {
            half_width: 5.0,
            nodes_per_axis: 201,
        };
        let s = build_initial_with(
            &InitialDataSpec::Cigar,
            &GridSpec::Cartesian(g),
            BoundaryKind::DirichletInitial,
        )
        .unwrap();
        let curv = scalar_curvature(&s).unwrap();
        let p = s.field.as_planar().unwrap();
        let (ci, cj) = p.origin_index();
        assert!((curv[cj * p.nx() + ci] - 4.0).abs() < 1e-2);
        // node (x, y) = (1, 0)
        assert!((curv[cj * p.nx() + ci + 20] - 2.0).abs() < 1e-2);
        let h = h_quantity(&s).unwrap();
        assert!(h.iter().all(|x| (x - 4.0).abs() < 0.05));
        let c = circumference_at_infinity(&s).unwrap();
        let expect = 2.0 * PI * 5.0 / (26.0f64).sqrt();
        assert!(
            (c.value - expect).abs() < 1e-3 * expect,
            "{} {}",
            c.value,
            expect
        );
    }

    #[test]
    fn diagnostics_row_csv_round_trip() {
        let s = radial(InitialDataSpec::Cigar, 40.0, 2001);
        let row = diagnostics(&s, MeasureWindow::GridEdge, 0.0).unwrap();
        assert!(row.sup_r >= row.r0 && row.r0 >= row.inf_r);
        assert!(row.negative_curvature >= 0.0);
        assert_eq!(DiagnosticsRow::from_csv(&row.to_csv()).unwrap(), row);
        assert_eq!(DIAGNOSTICS_HEADER.split(',').count(), row.columns().len());
    }
}
