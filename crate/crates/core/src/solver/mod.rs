//! Time integration of `v_t = Δ̄ ln v`, equivalently `u_t = e^{-u} Δ̄u`.

mod boundary;
mod planar;
mod radial;

use serde::{Deserialize, Serialize};

pub use boundary::{
    apply_boundary, edge_nodes, measure_log_slope, BoundaryCondition, BoundaryKind,
};
pub use planar::{cfl_bound, step_planar_explicit};
pub use radial::{step_radial_implicit, step_radial_implicit_vform};

use crate::error::{FlowError, Result};
use crate::geometry::{
    check_admissibility, diagnostics, scalar_curvature, DiagnosticsRow, MeasureWindow,
};
use crate::metric::{Chart, FlowState};

fn default_dt_init() -> f64 {
    1e-3
}
fn default_dt_min() -> f64 {
    1e-8
}
fn default_dt_max() -> f64 {
    1e-2
}
fn default_curvature_safety() -> f64 {
    0.1
}
fn default_newton_tol() -> f64 {
    1e-10
}
fn default_newton_max_iter() -> usize {
    30
}
fn default_cfl_safety() -> f64 {
    0.9
}
fn default_blowup_ceiling() -> f64 {
    1e6
}

/// Step-size policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepController {
    #[serde(default = "default_dt_init")]
    pub dt_init: f64,
    #[serde(default = "default_dt_min")]
    pub dt_min: f64,
    #[serde(default = "default_dt_max")]
    pub dt_max: f64,
    /// κ in `dt ≤ κ / sup|R|`.
    #[serde(default = "default_curvature_safety")]
    pub curvature_safety: f64,
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_newton_max_iter")]
    pub newton_max_iter: usize,
    #[serde(default = "default_cfl_safety")]
    pub cfl_safety: f64,
    /// `sup|R|` at or above this value ends the run as a blowup.
    #[serde(default = "default_blowup_ceiling")]
    pub blowup_ceiling: f64,
}

impl Default for StepController {
    fn default() -> Self {
        Self {
            dt_init: default_dt_init(),
            dt_min: default_dt_min(),
            dt_max: default_dt_max(),
            curvature_safety: default_curvature_safety(),
            newton_tol: default_newton_tol(),
            newton_max_iter: default_newton_max_iter(),
            cfl_safety: default_cfl_safety(),
            blowup_ceiling: default_blowup_ceiling(),
        }
    }
}

impl StepController {
    /// Fixed step `dt` (curvature clock still applies if it is tighter).
    pub fn fixed(dt: f64) -> Self {
        Self {
            dt_init: dt,
            dt_min: dt,
            dt_max: dt,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.dt_min > 0.0
            && self.dt_min <= self.dt_init
            && self.dt_init <= self.dt_max
            && self.curvature_safety > 0.0
            && self.newton_tol > 0.0
            && self.newton_max_iter > 0
            && self.cfl_safety > 0.0
            && self.blowup_ceiling > 0.0;
        if ok {
            Ok(())
        } else {
            Err(FlowError::InvalidParameter(format!(
                "invalid step controller {self:?}"
            )))
        }
    }
}

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Implicit, log gauge (radial chart).
    #[default]
    Implicit,
    /// Implicit with `v` as the unknown (radial chart).
    ImplicitVForm,
    /// Forward Euler (Cartesian chart).
    Explicit,
}

impl Scheme {
    pub fn default_for(chart: Chart) -> Self {
        match chart {
            Chart::Radial => Scheme::Implicit,
            Chart::Cartesian => Scheme::Explicit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TerminationStatus {
    ReachedEnd,
    Blowup { t: f64, reason: String },
    NewtonFailure { t: f64, reason: String },
}

impl TerminationStatus {
    pub fn is_success(&self) -> bool {
        *self == TerminationStatus::ReachedEnd
    }
}

/// Recorded run: one diagnostics row and one snapshot per scheduled time.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub rows: Vec<DiagnosticsRow>,
    pub snapshots: Vec<FlowState>,
    pub status: TerminationStatus,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

/// Options of [`evolve`] other than the step controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub scheme: Scheme,
    pub window: MeasureWindow,
    /// Bound `C` for the curvature and gradient hypotheses.
    pub bound: f64,
    /// Run even if the hypotheses fail (they are still reported by the caller).
    pub allow_inadmissible: bool,
}

impl EvolveOptions {
    pub fn for_chart(chart: Chart) -> Self {
        Self {
            scheme: Scheme::default_for(chart),
            window: MeasureWindow::GridEdge,
            bound: 10.0,
            allow_inadmissible: false,
        }
    }
}

/// Advance one step with the scheme.
pub fn step(
    state: &FlowState,
    dt: f64,
    scheme: Scheme,
    ctrl: &StepController,
) -> Result<FlowState> {
    match scheme {
        Scheme::Implicit => step_radial_implicit(state, dt, ctrl),
        Scheme::ImplicitVForm => step_radial_implicit_vform(state, dt, ctrl),
        Scheme::Explicit => step_planar_explicit(state, dt, ctrl.cfl_safety),
    }
}

fn sup_abs_curvature(state: &FlowState) -> Result<f64> {
    Ok(scalar_curvature(state)?
        .iter()
        .fold(0.0, |m, x| m.max(x.abs())))
}

/// Integrate to `t_end`, recording diagnostics and snapshots at each time of
/// `schedule` (times outside `[t, t_end]` are ignored).
///
/// Steps obey `dt ≤ dt_max`, `dt ≤ κ / sup|R|` and, for the explicit scheme,
/// the CFL bound. A failed Newton solve halves `dt` down to `dt_min`; after
/// a success the nominal step doubles again up to the caps.
pub fn evolve(
    initial: &FlowState,
    t_end: f64,
    ctrl: &StepController,
    schedule: &[f64],
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    ctrl.validate()?;
    if !(t_end > initial.t) {
        return Err(FlowError::InvalidParameter(format!(
            "t_end = {t_end} must exceed the initial time {}",
            initial.t
        )));
    }
    match (opts.scheme, initial.chart()) {
        (Scheme::Explicit, Chart::Cartesian)
        | (Scheme::Implicit | Scheme::ImplicitVForm, Chart::Radial) => {}
        (s, c) => {
            return Err(FlowError::Incompatible(format!(
                "scheme {s:?} cannot integrate the {c:?} chart"
            )))
        }
    }
    let report = check_admissibility(initial, opts.bound)?;
    if !report.flow_hypotheses_hold() && !opts.allow_inadmissible {
        return Err(FlowError::InvalidParameter(
            "initial data fail the completeness/curvature/gradient hypotheses (set allow_inadmissible to override)"
                .into(),
        ));
    }

    let mut targets: Vec<f64> = schedule
        .iter()
        .cloned()
        .filter(|&s| s >= initial.t && s <= t_end)
        .collect();
    targets.sort_by(|a, b| a.partial_cmp(b).expect("finite schedule"));
    targets.dedup();

    let mut traj = Trajectory {
        rows: Vec::new(),
        snapshots: Vec::new(),
        status: TerminationStatus::ReachedEnd,
        accepted_steps: 0,
        rejected_steps: 0,
    };
    let mut state = initial.clone();
    let mut nominal = ctrl.dt_init;
    let mut last_dt = 0.0;
    let mut stops = targets.clone();
    if stops.last().is_none_or(|&l| l < t_end) {
        stops.push(t_end);
    }

    'outer: for &stop in &stops {
        while state.t < stop {
            let remaining = stop - state.t;
            if remaining <= 1e-13 * stop.abs().max(1.0) {
                state.t = stop;
                break;
            }
            let sup_r = sup_abs_curvature(&state)?;
            if !(sup_r < ctrl.blowup_ceiling) {
                traj.status = TerminationStatus::Blowup {
                    t: state.t,
                    reason: format!(
                        "sup|R| = {sup_r:e} reached the ceiling {:e}",
                        ctrl.blowup_ceiling
                    ),
                };
                break 'outer;
            }
            let mut dt = nominal.min(ctrl.dt_max);
            if sup_r > 0.0 {
                dt = dt.min(ctrl.curvature_safety / sup_r);
            }
            if let Some(p) = state.field.as_planar() {
                dt = dt.min(cfl_bound(p, ctrl.cfl_safety));
            }
            loop {
                let snapped = remaining <= dt * (1.0 + 1e-9);
                let this_dt = if snapped { remaining } else { dt };
                match step(&state, this_dt, opts.scheme, ctrl) {
                    Ok(mut next) => {
                        if snapped {
                            next.t = stop;
                        }
                        state = next;
                        traj.accepted_steps += 1;
                        last_dt = this_dt;
                        nominal = (2.0 * dt).min(ctrl.dt_max);
                        break;
                    }
                    Err(FlowError::NewtonFailure {
                        iterations,
                        residual,
                    }) => {
                        traj.rejected_steps += 1;
                        dt *= 0.5;
                        if dt < ctrl.dt_min * (1.0 - 1e-12) {
                            traj.status = TerminationStatus::NewtonFailure {
                                t: state.t,
                                reason: format!(
                                    "no convergence down to dt_min = {:e} ({iterations} iterations, residual {residual:e})",
                                    ctrl.dt_min
                                ),
                            };
                            break 'outer;
                        }
                    }
                    Err(FlowError::Domain(reason)) => {
                        traj.status = TerminationStatus::Blowup { t: state.t, reason };
                        break 'outer;
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        if targets.contains(&stop) {
            traj.rows.push(diagnostics(&state, opts.window, last_dt)?);
            traj.snapshots.push(state.clone());
        }
    }
    Ok(traj)
}
