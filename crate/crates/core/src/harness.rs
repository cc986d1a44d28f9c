//! Scenario configuration, end-to-end runs, artifacts and verification reports.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};
use crate::geometry::{
    check_admissibility, disk_integral, AdmissibilityReport, DiagnosticsRow, MeasureWindow,
    DIAGNOSTICS_HEADER,
};
use crate::metric::{
    build_initial_with, exact_cigar_flow, fmt_f64, format_table, parse_table, Chart, Field,
    FlowState, GridSpec, InitialDataSpec,
};
use crate::soliton::{classify_limit, LimitClassification, SolitonThresholds};
use crate::solver::{
    evolve, BoundaryKind, EvolveOptions, Scheme, StepController, TerminationStatus, Trajectory,
};

/// Smallest resolvable grid (radial nodes or nodes per axis).
pub const MIN_NODES: usize = 64;

pub const CONFIG_FILE: &str = "config.toml";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const CLASSIFICATION_FILE: &str = "classification.json";
pub const ADMISSIBILITY_FILE: &str = "admissibility.json";
pub const REPORT_FILE: &str = "report.txt";

/// Output times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Schedule {
    /// `samples` equally spaced times from 0 to `t_end` inclusive.
    Uniform {
        samples: usize,
    },
    Times {
        times: Vec<f64>,
    },
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule::Uniform { samples: 11 }
    }
}

impl Schedule {
    pub fn times(&self, t_end: f64) -> Vec<f64> {
        match self {
            Schedule::Uniform { samples } => match *samples {
                0 => Vec::new(),
                1 => vec![t_end],
                n => (0..n).map(|k| t_end * k as f64 / (n - 1) as f64).collect(),
            },
            Schedule::Times { times } => times.clone(),
        }
    }
}

fn default_bound() -> f64 {
    10.0
}
fn default_verify_dt() -> f64 {
    1e-3
}
fn default_max_rel_error() -> f64 {
    1e-2
}
fn default_ratio_min() -> f64 {
    1.6
}
fn default_ratio_max() -> f64 {
    2.4
}

/// Ceilings of the exact-solution verification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifySettings {
    #[serde(default = "default_verify_dt")]
    pub dt: f64,
    #[serde(default = "default_max_rel_error")]
    pub max_rel_error: f64,
    /// Accepted band for `error(dt) / error(dt/2)`.
    #[serde(default = "default_ratio_min")]
    pub ratio_min: f64,
    #[serde(default = "default_ratio_max")]
    pub ratio_max: f64,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self {
            dt: default_verify_dt(),
            max_rel_error: default_max_rel_error(),
            ratio_min: default_ratio_min(),
            ratio_max: default_ratio_max(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub t_end: f64,
    #[serde(default)]
    pub boundary: BoundaryKind,
    /// Defaults to the implicit scheme on the radial chart and the explicit
    /// scheme on the Cartesian chart.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<Scheme>,
    /// Bound `C` of the curvature and gradient hypotheses.
    #[serde(default = "default_bound")]
    pub admissibility_bound: f64,
    #[serde(default)]
    pub allow_inadmissible: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub schedule: Schedule,
    pub initial: InitialDataSpec,
    pub grid: GridSpec,
    #[serde(default)]
    pub window: MeasureWindow,
    #[serde(default)]
    pub controller: StepController,
    #[serde(default)]
    pub thresholds: SolitonThresholds,
    #[serde(default)]
    pub verify: VerifySettings,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)
            .map_err(|e| FlowError::InvalidParameter(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::from_toml(&fs::read_to_string(path)?)?;
        // custom tables are resolved relative to the config file
        if let InitialDataSpec::Custom { path: table } = &mut cfg.initial {
            if table.is_relative() {
                if let Some(dir) = path.parent() {
                    *table = dir.join(&*table);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
            .unwrap_or_else(|| Scheme::default_for(self.grid.chart()))
    }

    pub fn sample_times(&self) -> Vec<f64> {
        self.schedule.times(self.t_end)
    }

    /// Configured output directory, or `runs/<name>`.
    pub fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .unwrap_or_else(|| Path::new("runs").join(&self.name))
    }

    pub fn evolve_options(&self) -> EvolveOptions {
        EvolveOptions {
            scheme: self.scheme(),
            window: self.window,
            bound: self.admissibility_bound,
            allow_inadmissible: self.allow_inadmissible,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(FlowError::InvalidParameter(m));
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return bad(format!(
                "scenario name {:?} must be a non-empty file name",
                self.name
            ));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        let nodes = match &self.grid {
            GridSpec::Radial(g) => {
                g.validate()?;
                g.nodes
            }
            GridSpec::Cartesian(g) => {
                g.validate()?;
                g.nodes_per_axis
            }
        };
        if nodes < MIN_NODES {
            return Err(FlowError::InvalidGrid(format!(
                "grid needs at least {MIN_NODES} nodes, got {nodes}"
            )));
        }
        if let Some(t) = self
            .sample_times()
            .iter()
            .find(|t| !(**t >= 0.0 && **t <= self.t_end))
        {
            return bad(format!("sample time {t} lies outside [0, {}]", self.t_end));
        }
        match (self.scheme(), self.grid.chart()) {
            (Scheme::Explicit, Chart::Cartesian)
            | (Scheme::Implicit | Scheme::ImplicitVForm, Chart::Radial) => {}
            (s, c) => {
                return Err(FlowError::Incompatible(format!(
                    "scheme {s:?} cannot integrate the {c:?} chart"
                )))
            }
        }
        if self.boundary == BoundaryKind::ExactCigar && self.initial != InitialDataSpec::Cigar {
            return bad("exact_cigar boundary condition requires cigar initial data".into());
        }
        if !(self.admissibility_bound > 0.0) {
            return bad(format!(
                "admissibility_bound must be positive, got {}",
                self.admissibility_bound
            ));
        }
        self.initial.validate()?;
        self.controller.validate()?;
        self.thresholds.validate()?;
        Ok(())
    }

    pub fn initial_state(&self) -> Result<FlowState> {
        build_initial_with(&self.initial, &self.grid, self.boundary)
    }
}

/// Paths written by [`run_scenario`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub config: PathBuf,
    pub admissibility: PathBuf,
    pub diagnostics: PathBuf,
    pub snapshots: Vec<PathBuf>,
    pub classification: Option<PathBuf>,
    pub report: PathBuf,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub artifacts: RunArtifacts,
    pub initial: FlowState,
    pub admissibility: AdmissibilityReport,
    pub trajectory: Trajectory,
    pub classification: Option<LimitClassification>,
    /// Why no classification was produced.
    pub classification_note: Option<String>,
}

impl RunOutcome {
    pub fn succeeded(&self) -> bool {
        self.trajectory.status.is_success()
    }
}

pub fn snapshot_name(k: usize) -> String {
    format!("snapshot_{k:04}.dat")
}

/// Check admissibility, evolve, classify, and write all artifacts to `dir`.
///
/// A solver failure is not an error: the artifacts of the recorded part of the
/// trajectory are written and the status is carried in the outcome.
pub fn run_scenario(config: &ScenarioConfig, dir: &Path) -> Result<RunOutcome> {
    config.validate()?;
    let initial = config.initial_state()?;
    let admissibility = check_admissibility(&initial, config.admissibility_bound)?;
    fs::create_dir_all(dir)?;
    let config_path = dir.join(CONFIG_FILE);
    fs::write(&config_path, config.to_toml())?;
    let adm_path = dir.join(ADMISSIBILITY_FILE);
    fs::write(&adm_path, admissibility.to_json() + "\n")?;

    let trajectory = evolve(
        &initial,
        config.t_end,
        &config.controller,
        &config.sample_times(),
        &config.evolve_options(),
    )?;

    let diag_path = dir.join(DIAGNOSTICS_FILE);
    fs::write(&diag_path, diagnostics_csv(&trajectory.rows))?;
    let mut snapshots = Vec::with_capacity(trajectory.snapshots.len());
    for (k, s) in trajectory.snapshots.iter().enumerate() {
        let p = dir.join(snapshot_name(k));
        fs::write(&p, format_table(&s.field, s.t))?;
        snapshots.push(p);
    }

    let (classification, note) = if !trajectory.status.is_success() {
        (None, Some("run did not reach t_end".to_string()))
    } else {
        match classify_limit(&initial, &trajectory.snapshots, &config.thresholds) {
            Ok(c) => (Some(c), None),
            Err(e) => (None, Some(e.to_string())),
        }
    };
    let class_path = match &classification {
        Some(c) => {
            let p = dir.join(CLASSIFICATION_FILE);
            fs::write(&p, c.to_json() + "\n")?;
            Some(p)
        }
        None => None,
    };
    let report_path = dir.join(REPORT_FILE);
    let outcome = RunOutcome {
        artifacts: RunArtifacts {
            dir: dir.to_path_buf(),
            config: config_path,
            admissibility: adm_path,
            diagnostics: diag_path,
            snapshots,
            classification: class_path,
            report: report_path.clone(),
        },
        initial,
        admissibility,
        trajectory,
        classification,
        classification_note: note,
    };
    fs::write(&report_path, run_report(config, &outcome))?;
    Ok(outcome)
}

pub fn diagnostics_csv(rows: &[DiagnosticsRow]) -> String {
    let mut out = String::from(DIAGNOSTICS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv());
        out.push('\n');
    }
    out
}

pub fn parse_diagnostics(text: &str) -> Result<Vec<DiagnosticsRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == DIAGNOSTICS_HEADER => {}
        _ => {
            return Err(FlowError::Parse {
                line: 1,
                message: "missing diagnostics header".into(),
            })
        }
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(DiagnosticsRow::from_csv)
        .collect()
}

fn boundary_note(kind: BoundaryKind) -> &'static str {
    match kind {
        BoundaryKind::ExactCigar => "exact cigar values at the outer edge",
        BoundaryKind::FrozenLogSlope => {
            "frozen logarithmic slope at the outer edge (a truncation surrogate for the complete plane)"
        }
        BoundaryKind::DirichletInitial => "outer values pinned to the initial data",
    }
}

fn run_report(config: &ScenarioConfig, o: &RunOutcome) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "scenario: {}", config.name);
    let _ = writeln!(s, "initial data: {:?}", config.initial);
    let _ = writeln!(s, "grid: {:?}", config.grid);
    let _ = writeln!(s, "scheme: {:?}", config.scheme());
    let _ = writeln!(s, "boundary: {}", boundary_note(config.boundary));
    let _ = writeln!(s, "t_end: {}", fmt_f64(config.t_end));
    let status = match &o.trajectory.status {
        TerminationStatus::ReachedEnd => "reached t_end".to_string(),
        TerminationStatus::Blowup { t, reason } => {
            format!("blowup at t = {}: {reason}", fmt_f64(*t))
        }
        TerminationStatus::NewtonFailure { t, reason } => {
            format!("Newton failure at t = {}: {reason}", fmt_f64(*t))
        }
    };
    let _ = writeln!(s, "status: {status}");
    let _ = writeln!(
        s,
        "steps: {} accepted, {} rejected",
        o.trajectory.accepted_steps, o.trajectory.rejected_steps
    );
    let _ = writeln!(
        s,
        "\n[admissibility]\n{}",
        o.admissibility.to_text().trim_end()
    );
    if let (Some(first), Some(last)) = (o.trajectory.rows.first(), o.trajectory.rows.last()) {
        let _ = writeln!(s, "\n[diagnostics]");
        let names: Vec<&str> = DIAGNOSTICS_HEADER.split(',').collect();
        let _ = writeln!(s, "{:<10} {:>24} {:>24}", "column", "first", "last");
        for ((name, a), b) in names.iter().zip(first.columns()).zip(last.columns()) {
            let _ = writeln!(s, "{name:<10} {:>24} {:>24}", fmt_f64(a), fmt_f64(b));
        }
    }
    let _ = writeln!(s, "\n[classification]");
    match (&o.classification, &o.classification_note) {
        (Some(c), _) => {
            let _ = writeln!(s, "tag: {:?}", c.tag);
            if let (Some(cc), Some(circ), Some(fit)) = (c.c, c.circumference, c.fit_residual) {
                let _ = writeln!(
                    s,
                    "cigar fit: c = {}, 2pi sqrt(c) = {}, rms = {}",
                    fmt_f64(cc),
                    fmt_f64(circ),
                    fmt_f64(fit)
                );
            }
            let _ = writeln!(s, "flatness residual: {}", fmt_f64(c.flatness_residual));
            let _ = writeln!(
                s,
                "stationarity residual: {}",
                fmt_f64(c.stationarity_residual)
            );
            let _ = writeln!(s, "window: {}", fmt_f64(c.window));
            for cav in &c.caveats {
                let _ = writeln!(s, "caveat: {cav}");
            }
        }
        (None, Some(note)) => {
            let _ = writeln!(s, "not classified: {note}");
        }
        (None, None) => {}
    }
    s
}

// ---------------------------------------------------------------------------
// exact-solution verification

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub t: f64,
    pub max_rel_error: f64,
    /// `‖v - v_exact‖ / ‖v_exact‖` in `L²(dx dy)` over the grid disk.
    pub l2_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub dt: f64,
    pub rows: Vec<ErrorRow>,
    /// Error rows of the run at `dt / 2`.
    pub refined_rows: Vec<ErrorRow>,
    pub max_error: f64,
    pub refined_max_error: f64,
    /// `max_error / refined_max_error`; 2 for a first-order scheme.
    pub ratio: f64,
    pub order: f64,
    pub settings: VerifySettings,
    pub passed: bool,
}

impl VerifyReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "dt = {}", fmt_f64(self.dt));
        let _ = writeln!(
            s,
            "{:>24} {:>24} {:>24}",
            "t", "max_rel_error", "l2_rel_error"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:>24} {:>24} {:>24}",
                fmt_f64(r.t),
                fmt_f64(r.max_rel_error),
                fmt_f64(r.l2_rel_error)
            );
        }
        let _ = writeln!(s, "max error at dt:   {}", fmt_f64(self.max_error));
        let _ = writeln!(s, "max error at dt/2: {}", fmt_f64(self.refined_max_error));
        let _ = writeln!(
            s,
            "ratio {} (accepted [{}, {}]), observed order {}",
            fmt_f64(self.ratio),
            self.settings.ratio_min,
            self.settings.ratio_max,
            fmt_f64(self.order)
        );
        let _ = writeln!(
            s,
            "ceiling {}: {}",
            self.settings.max_rel_error,
            if self.passed { "PASS" } else { "FAIL" }
        );
        s
    }
}

/// Errors of one state against the exact cigar flow.
pub fn exact_errors(state: &FlowState) -> Result<ErrorRow> {
    let p = state.field.as_radial().ok_or_else(|| {
        FlowError::Incompatible("exact verification runs on the radial chart".into())
    })?;
    let exact: Vec<f64> = p
        .r()
        .iter()
        .map(|&r| exact_cigar_flow(r, state.t))
        .collect();
    let max_rel = p
        .v()
        .iter()
        .zip(&exact)
        .fold(0.0f64, |m, (v, e)| m.max(((v - e) / e).abs()));
    let diff2: Vec<f64> = p
        .v()
        .iter()
        .zip(&exact)
        .map(|(v, e)| (v - e) * (v - e))
        .collect();
    let ex2: Vec<f64> = exact.iter().map(|e| e * e).collect();
    let l2 =
        (disk_integral(p.r(), &diff2, p.r_max()) / disk_integral(p.r(), &ex2, p.r_max())).sqrt();
    Ok(ErrorRow {
        t: state.t,
        max_rel_error: max_rel,
        l2_rel_error: l2,
    })
}

fn exact_run(config: &ScenarioConfig, dt: f64) -> Result<Vec<ErrorRow>> {
    let ctrl = StepController {
        dt_init: dt,
        dt_min: dt,
        dt_max: dt,
        ..config.controller
    };
    let initial = config.initial_state()?;
    let mut times = config.sample_times();
    if !times.contains(&0.0) {
        times.insert(0, 0.0);
    }
    let traj = evolve(
        &initial,
        config.t_end,
        &ctrl,
        &times,
        &config.evolve_options(),
    )?;
    if let TerminationStatus::Blowup { reason, .. }
    | TerminationStatus::NewtonFailure { reason, .. } = &traj.status
    {
        return Err(FlowError::StepRejected(format!(
            "verification run failed: {reason}"
        )));
    }
    traj.snapshots.iter().map(exact_errors).collect()
}

/// Errors against `1/(e^{4t} + r²)` at `dt` and `dt/2`, with the observed order.
pub fn verify_exact(config: &ScenarioConfig) -> Result<VerifyReport> {
    config.validate()?;
    if config.initial != InitialDataSpec::Cigar || config.boundary != BoundaryKind::ExactCigar {
        return Err(FlowError::Incompatible(
            "exact verification needs cigar initial data with the exact_cigar boundary condition"
                .into(),
        ));
    }
    if config.grid.chart() != Chart::Radial {
        return Err(FlowError::Incompatible(
            "exact verification runs on the radial chart".into(),
        ));
    }
    let set = config.verify;
    let rows = exact_run(config, set.dt)?;
    let refined_rows = exact_run(config, 0.5 * set.dt)?;
    let max_of = |rows: &[ErrorRow]| rows.iter().fold(0.0f64, |m, r| m.max(r.max_rel_error));
    let (max_error, refined_max_error) = (max_of(&rows), max_of(&refined_rows));
    let ratio = max_error / refined_max_error;
    let passed = max_error <= set.max_rel_error && ratio >= set.ratio_min && ratio <= set.ratio_max;
    Ok(VerifyReport {
        dt: set.dt,
        rows,
        refined_rows,
        max_error,
        refined_max_error,
        ratio,
        order: ratio.log2(),
        settings: set,
        passed,
    })
}

// ---------------------------------------------------------------------------
// run comparison

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnGap {
    pub column: String,
    pub max_abs_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub final_t: f64,
    /// Sup-norm gap of the final snapshots on the coarser of the two grids.
    pub snapshot_gap: f64,
    pub rows_compared: usize,
    pub column_gaps: Vec<ColumnGap>,
}

impl CompareReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "final t: {}", fmt_f64(self.final_t));
        let _ = writeln!(s, "final snapshot sup gap: {}", fmt_f64(self.snapshot_gap));
        let _ = writeln!(s, "diagnostic rows compared: {}", self.rows_compared);
        for g in &self.column_gaps {
            let _ = writeln!(s, "{:<10} {}", g.column, fmt_f64(g.max_abs_gap));
        }
        s
    }
}

/// Sup-norm gap of two fields of the same chart, on the coarser grid and
/// within the common extent, interpolating `ln v` linearly.
pub fn field_gap(a: &Field, b: &Field) -> Result<f64> {
    match (a, b) {
        (Field::Radial(p), Field::Radial(q)) => {
            let (coarse, fine) = if p.len() <= q.len() { (p, q) } else { (q, p) };
            let reach = fine.r_max();
            Ok(coarse
                .r()
                .iter()
                .zip(coarse.v())
                .filter(|(r, _)| **r <= reach)
                .fold(0.0, |m, (r, v)| m.max((v - fine.log_interp(*r)).abs())))
        }
        (Field::Planar(p), Field::Planar(q)) => {
            let (coarse, fine) = if p.v().len() <= q.v().len() {
                (p, q)
            } else {
                (q, p)
            };
            let (fx, fy) = fine.coords(fine.nx() - 1, fine.ny() - 1);
            let mut gap = 0.0f64;
            for j in 0..coarse.ny() {
                for i in 0..coarse.nx() {
                    let (x, y) = coarse.coords(i, j);
                    if x.abs() <= fx && y.abs() <= fy {
                        gap = gap.max((coarse.at(i, j) - fine.log_interp(x, y)).abs());
                    }
                }
            }
            Ok(gap)
        }
        _ => Err(FlowError::Incompatible(
            "cannot compare fields on different charts".into(),
        )),
    }
}

fn load_run(dir: &Path) -> Result<(ScenarioConfig, Vec<DiagnosticsRow>, Field)> {
    let cfg = ScenarioConfig::from_toml(&fs::read_to_string(dir.join(CONFIG_FILE))?)?;
    let rows = parse_diagnostics(&fs::read_to_string(dir.join(DIAGNOSTICS_FILE))?)?;
    let last = rows
        .len()
        .checked_sub(1)
        .ok_or_else(|| FlowError::Incompatible(format!("{} has no snapshots", dir.display())))?;
    let table = parse_table(&fs::read_to_string(dir.join(snapshot_name(last)))?)?;
    let field = table.on_grid(&cfg.grid)?;
    Ok((cfg, rows, field))
}

/// Compare the artifacts of two runs of the same scenario.
pub fn compare_runs(a: &Path, b: &Path) -> Result<CompareReport> {
    let (ca, ra, fa) = load_run(a)?;
    let (cb, rb, fb) = load_run(b)?;
    if ca.initial != cb.initial || ca.grid.chart() != cb.grid.chart() || ca.boundary != cb.boundary
    {
        return Err(FlowError::Incompatible(
            "runs differ in initial data, chart or boundary condition".into(),
        ));
    }
    let (ta, tb) = (ra.last().map(|r| r.t), rb.last().map(|r| r.t));
    if ta != tb {
        return Err(FlowError::Incompatible(format!(
            "final times differ: {ta:?} vs {tb:?}"
        )));
    }
    let snapshot_gap = field_gap(&fa, &fb)?;
    let names: Vec<&str> = DIAGNOSTICS_HEADER.split(',').collect();
    let mut gaps = vec![0.0f64; names.len()];
    let mut rows_compared = 0;
    for x in &ra {
        if let Some(y) = rb.iter().find(|y| y.t == x.t) {
            rows_compared += 1;
            for (g, (p, q)) in gaps.iter_mut().zip(x.columns().iter().zip(y.columns())) {
                *g = g.max((p - q).abs());
            }
        }
    }
    // time and step size are not diagnostics of the state
    let column_gaps = names
        .iter()
        .zip(gaps)
        .filter(|(n, _)| **n != "t" && **n != "dt")
        .map(|(n, g)| ColumnGap {
            column: n.to_string(),
            max_abs_gap: g,
        })
        .collect();
    Ok(CompareReport {
        final_t: ta.unwrap_or(0.0),
        snapshot_gap,
        rows_compared,
        column_gaps,
    })
}

/// Admissibility of the configured initial data.
pub fn check_initial(config: &ScenarioConfig) -> Result<AdmissibilityReport> {
    config.validate()?;
    check_admissibility(&config.initial_state()?, config.admissibility_bound)
}
