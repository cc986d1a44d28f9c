//! Gauge rescaling, cigar fitting and classification of the long-time limit.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};
use crate::geometry::{
    aperture, circumference_at_infinity, radial_view, ApertureEstimate, CircumferenceClass,
    CircumferenceEstimate,
};
use crate::metric::FlowState;

pub const DEFAULT_WINDOW: f64 = 10.0;
pub const DEFAULT_WINDOW_NODES: usize = 512;
/// Number of trailing snapshots the classifier inspects.
pub const TAIL_PROFILES: usize = 4;

/// Gauge scale `s = v(0, t)^{-1/2}` of the homothety `x ↦ s·x` normalizing
/// the conformal factor to 1 at the origin.
pub fn gauge_scale(state: &FlowState) -> Result<f64> {
    let v0 = state.field.origin_value();
    if !(v0 > 0.0 && v0.is_finite()) {
        return Err(FlowError::Domain(format!("v(0) = {v0} is not positive")));
    }
    Ok(1.0 / v0.sqrt())
}

/// `ṽ(ρ) = s² v(sρ)` on a uniform grid of `[0, window]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaledProfile {
    pub rho: Vec<f64>,
    pub v: Vec<f64>,
    pub scale: f64,
    pub t: f64,
}

impl RescaledProfile {
    pub fn window(&self) -> f64 {
        *self.rho.last().expect("non-empty profile")
    }
}

/// Largest window whose preimage `[0, s·P]` lies inside the grid.
pub fn max_window(state: &FlowState) -> Result<f64> {
    let prof = radial_view(&state.field)?;
    Ok(prof.r_max() / gauge_scale(state)?)
}

/// Rescale `state` onto `[0, window]` with `nodes` uniform nodes,
/// interpolating `ln v` linearly in `r`.
pub fn rescaled_profile(state: &FlowState, window: f64, nodes: usize) -> Result<RescaledProfile> {
    if !(window > 0.0) || nodes < 2 {
        return Err(FlowError::InvalidParameter(format!(
            "window {window} with {nodes} nodes"
        )));
    }
    let s = gauge_scale(state)?;
    let prof = radial_view(&state.field)?;
    let max_admissible = prof.r_max() / s;
    if window > max_admissible * (1.0 + 1e-12) {
        return Err(FlowError::WindowTooLarge {
            requested: window,
            max_admissible,
        });
    }
    let rho: Vec<f64> = (0..nodes)
        .map(|k| window * k as f64 / (nodes - 1) as f64)
        .collect();
    let v = rho
        .iter()
        .map(|&x| s * s * prof.log_interp((s * x).min(prof.r_max())))
        .collect();
    Ok(RescaledProfile {
        rho,
        v,
        scale: s,
        t: state.t,
    })
}

/// Least-squares member `c/(c + ρ²)` of the cigar family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CigarFit {
    pub c: f64,
    /// Root mean square of `ṽ(ρᵢ) - c/(c + ρᵢ²)`.
    pub rms: f64,
    /// The minimizer sits on the upper bound `c = window²`.
    pub at_bound: bool,
}

struct FitSums {
    s: f64,
    ds: f64,
    d2s: f64,
}

fn fit_sums(p: &RescaledProfile, c: f64) -> FitSums {
    let mut out = FitSums {
        s: 0.0,
        ds: 0.0,
        d2s: 0.0,
    };
    for (&r, &v) in p.rho.iter().zip(&p.v) {
        let r2 = r * r;
        let d = c + r2;
        let g = c / d;
        let g1 = r2 / (d * d);
        let g2 = -2.0 * r2 / (d * d * d);
        let e = v - g;
        out.s += e * e;
        out.ds += -2.0 * e * g1;
        out.d2s += 2.0 * (g1 * g1 - e * g2);
    }
    out
}

/// Fit the cigar family over `0 < c ≤ window²`.
///
/// Starts from `c = 4/R̃(0)` (the family has `R(0) = 4/c`), brackets a sign
/// change of `dS/dc` by geometric steps, then refines by safeguarded Newton.
/// The bound keeps nearly constant profiles from drifting to `c → ∞`.
pub fn fit_cigar(p: &RescaledProfile) -> Result<CigarFit> {
    if p.rho.len() < 3 || p.v.iter().any(|v| !(*v > 0.0)) {
        return Err(FlowError::Estimation(
            "cigar fit needs at least 3 positive samples".into(),
        ));
    }
    let c_max = p.window() * p.window();
    let c_min = 1e-6 * p.rho[1] * p.rho[1];
    let rms = |c: f64| (fit_sums(p, c).s / p.rho.len() as f64).sqrt();
    let r0 = -4.0 * (p.v[1] / p.v[0]).ln() / (p.rho[1] * p.rho[1]) / p.v[0];
    let guess = if r0 > 0.0 {
        (4.0 / r0).clamp(c_min, c_max)
    } else {
        c_max
    };

    let grad = |c: f64| fit_sums(p, c).ds;
    let (mut lo, mut hi) = (guess, guess);
    while grad(lo) > 0.0 {
        if lo <= c_min {
            return Ok(CigarFit {
                c: c_min,
                rms: rms(c_min),
                at_bound: false,
            });
        }
        hi = lo;
        lo = (lo / 4.0).max(c_min);
    }
    while grad(hi) < 0.0 {
        if hi >= c_max {
            return Ok(CigarFit {
                c: c_max,
                rms: rms(c_max),
                at_bound: true,
            });
        }
        lo = hi;
        hi = (hi * 4.0).min(c_max);
    }
    let mut c = guess.clamp(lo, hi);
    for _ in 0..200 {
        let f = fit_sums(p, c);
        if f.ds == 0.0 {
            return Ok(CigarFit {
                c,
                rms: rms(c),
                at_bound: false,
            });
        }
        if f.ds < 0.0 {
            lo = c;
        } else {
            hi = c;
        }
        let newton = c - f.ds / f.d2s;
        let next = if f.d2s > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - c).abs() <= 1e-13 * c || (hi - lo) <= 1e-13 * hi {
            c = next;
            return Ok(CigarFit {
                c,
                rms: rms(c),
                at_bound: false,
            });
        }
        c = next;
    }
    if (hi - lo) <= 1e-10 * hi {
        return Ok(CigarFit {
            c,
            rms: rms(c),
            at_bound: false,
        });
    }
    Err(FlowError::Estimation(format!(
        "cigar fit did not converge (bracket [{lo:e}, {hi:e}])"
    )))
}

/// Sup-norm distance between the last two profiles.
pub fn stationarity_residual(profiles: &[RescaledProfile]) -> Result<f64> {
    if profiles.len() < 2 {
        return Err(FlowError::Estimation(
            "stationarity needs at least two rescaled profiles".into(),
        ));
    }
    profile_gap(&profiles[profiles.len() - 2], &profiles[profiles.len() - 1])
}

/// Sup-norm distance between two profiles on the same window.
pub fn profile_gap(a: &RescaledProfile, b: &RescaledProfile) -> Result<f64> {
    if a.rho != b.rho {
        return Err(FlowError::Incompatible(
            "rescaled profiles live on different windows".into(),
        ));
    }
    Ok(a.v
        .iter()
        .zip(&b.v)
        .fold(0.0, |m, (x, y)| m.max((x - y).abs())))
}

/// Root mean square deviation of `ṽ` from the constant 1.
pub fn flatness_residual(p: &RescaledProfile) -> f64 {
    (p.v.iter().map(|v| (v - 1.0) * (v - 1.0)).sum::<f64>() / p.v.len() as f64).sqrt()
}

fn default_stationarity() -> f64 {
    1e-2
}
fn default_fit() -> f64 {
    1e-2
}
fn default_aperture() -> f64 {
    0.05
}
fn default_circumference() -> f64 {
    0.02
}
fn default_window() -> f64 {
    DEFAULT_WINDOW
}
fn default_window_nodes() -> usize {
    DEFAULT_WINDOW_NODES
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolitonThresholds {
    /// θ_stat: bound on the sup gap of the last two rescaled profiles.
    #[serde(default = "default_stationarity")]
    pub stationarity: f64,
    /// θ_fit: rms bound for the cigar fit and for flatness.
    #[serde(default = "default_fit")]
    pub fit: f64,
    /// θ_A: aperture above which the initial end counts as cone-like.
    #[serde(default = "default_aperture")]
    pub aperture: f64,
    /// Relative slack of `2π√c ≤ C∞(initial)`.
    #[serde(default = "default_circumference")]
    pub circumference: f64,
    #[serde(default = "default_window")]
    pub window: f64,
    #[serde(default = "default_window_nodes")]
    pub window_nodes: usize,
}

impl Default for SolitonThresholds {
    fn default() -> Self {
        Self {
            stationarity: default_stationarity(),
            fit: default_fit(),
            aperture: default_aperture(),
            circumference: default_circumference(),
            window: default_window(),
            window_nodes: default_window_nodes(),
        }
    }
}

impl SolitonThresholds {
    pub fn validate(&self) -> Result<()> {
        let ok = [
            self.stationarity,
            self.fit,
            self.aperture,
            self.circumference,
            self.window,
        ]
        .iter()
        .all(|x| *x > 0.0 && x.is_finite())
            && self.window_nodes >= 3;
        if ok {
            Ok(())
        } else {
            Err(FlowError::InvalidParameter(format!(
                "invalid soliton thresholds {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitTag {
    Cigar,
    Flat,
    Undetermined,
    NotConverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitClassification {
    pub tag: LimitTag,
    /// Fitted cigar parameter (reported for every tag when the fit converged).
    pub c: Option<f64>,
    /// `2π√c`.
    pub circumference: Option<f64>,
    pub fit_residual: Option<f64>,
    pub flatness_residual: f64,
    /// Sup gap of the last two rescaled profiles.
    pub stationarity_residual: f64,
    /// Sup gaps of consecutive profiles over the inspected tail, oldest first.
    pub stationarity_history: Vec<f64>,
    pub initial_circumference: CircumferenceEstimate,
    pub initial_aperture: ApertureEstimate,
    /// Window actually used (smaller than configured when the grid is too small).
    pub window: f64,
    pub thresholds: SolitonThresholds,
    pub caveats: Vec<String>,
}

impl LimitClassification {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("classification serializes")
    }
}

/// Decide the limit from the initial state and the recorded snapshots.
///
/// Uses the last [`TAIL_PROFILES`] snapshots, rescaled onto a common window
/// `min(P, smallest admissible window)`. In order: stationarity gap above
/// θ_stat gives `NotConverged`; finite initial circumference with a cigar fit
/// below θ_fit and `2π√c` within the circumference bound gives `Cigar`;
/// initial aperture above θ_A with a profile constant to θ_fit gives `Flat`;
/// anything else is `Undetermined`.
pub fn classify_limit(
    initial: &FlowState,
    snapshots: &[FlowState],
    th: &SolitonThresholds,
) -> Result<LimitClassification> {
    th.validate()?;
    if snapshots.len() < TAIL_PROFILES {
        return Err(FlowError::Estimation(format!(
            "classification needs at least {TAIL_PROFILES} snapshots, got {}",
            snapshots.len()
        )));
    }
    let tail = &snapshots[snapshots.len() - TAIL_PROFILES..];
    let mut caveats = vec![
        "convergence is tested on the recorded tail only; subsequential and full convergence are not distinguished"
            .to_string(),
    ];
    let mut window = th.window;
    for s in tail {
        window = window.min(max_window(s)?);
    }
    if window < th.window {
        caveats.push(format!(
            "window reduced from {} to {} to stay inside the grid",
            th.window, window
        ));
    }
    let profiles = tail
        .iter()
        .map(|s| rescaled_profile(s, window, th.window_nodes))
        .collect::<Result<Vec<_>>>()?;
    let history = profiles
        .windows(2)
        .map(|w| profile_gap(&w[0], &w[1]))
        .collect::<Result<Vec<_>>>()?;
    let stationarity = *history.last().expect("tail has at least two profiles");
    let last = profiles.last().expect("non-empty tail");
    let fit = fit_cigar(last);
    if let Err(e) = &fit {
        caveats.push(format!("cigar fit failed: {e}"));
    }
    let fit = fit.ok();
    let flatness = flatness_residual(last);
    let init_c = circumference_at_infinity(initial)?;
    let init_a = aperture(initial)?;

    let cigar_ok = |f: &CigarFit| {
        f.rms < th.fit
            && !f.at_bound
            && 2.0 * PI * f.c.sqrt() <= (1.0 + th.circumference) * init_c.value
    };
    let tag = if !(stationarity <= th.stationarity) {
        LimitTag::NotConverged
    } else if init_c.class == CircumferenceClass::Finite && fit.as_ref().is_some_and(cigar_ok) {
        LimitTag::Cigar
    } else if init_a.value > th.aperture && flatness < th.fit {
        LimitTag::Flat
    } else {
        LimitTag::Undetermined
    };
    if let Some(f) = &fit {
        if init_c.class == CircumferenceClass::Finite
            && f.rms < th.fit
            && 2.0 * PI * f.c.sqrt() > (1.0 + th.circumference) * init_c.value
        {
            caveats.push("cigar fit exceeds the initial circumference bound".to_string());
        }
    }
    Ok(LimitClassification {
        tag,
        c: fit.map(|f| f.c),
        circumference: fit.map(|f| 2.0 * PI * f.c.sqrt()),
        fit_residual: fit.map(|f| f.rms),
        flatness_residual: flatness,
        stationarity_residual: stationarity,
        stationarity_history: history,
        initial_circumference: init_c,
        initial_aperture: init_a,
        window,
        thresholds: *th,
        caveats,
    })
}
