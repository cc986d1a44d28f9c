//! Conformal metrics on the plane.
//!
//! A metric is stored through its conformal factor `v > 0`, either as a
//! radial profile (`ds² = v(r)(dr² + r²dθ²)`) or on a centred Cartesian grid
//! (`ds² = v(x, y)(dx² + dy²)`). The log gauge `u = ln v` is used wherever
//! positivity has to be structural.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};
use crate::solver::{BoundaryCondition, BoundaryKind};

/// Coordinate chart of a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chart {
    Radial,
    Cartesian,
}

/// Radial node layout on `[0, r_max]`.
///
/// With `stretch = 0` the nodes are uniform. A positive stretch uses
/// `r_i = r_max sinh(β i/(n-1)) / sinh(β)`, which is nearly uniform near the
/// origin, geometric in the tail, and odd in the index so the origin stencil
/// keeps its symmetry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub r_max: f64,
    pub nodes: usize,
    #[serde(default)]
    pub stretch: f64,
}

impl RadialGrid {
    pub fn uniform(r_max: f64, nodes: usize) -> Self {
        Self {
            r_max,
            nodes,
            stretch: 0.0,
        }
    }

    pub fn stretched(r_max: f64, nodes: usize, stretch: f64) -> Self {
        Self {
            r_max,
            nodes,
            stretch,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_max.is_finite() && self.r_max > 0.0) {
            return Err(FlowError::InvalidGrid(format!(
                "r_max must be positive, got {}",
                self.r_max
            )));
        }
        if self.nodes < 3 {
            return Err(FlowError::InvalidGrid(format!(
                "need at least 3 radial nodes, got {}",
                self.nodes
            )));
        }
        if !(self.stretch.is_finite() && self.stretch >= 0.0) {
            return Err(FlowError::InvalidGrid(format!(
                "stretch must be non-negative, got {}",
                self.stretch
            )));
        }
        Ok(())
    }

    pub fn points(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let last = (self.nodes - 1) as f64;
        let pts = (0..self.nodes)
            .map(|i| {
                if i == self.nodes - 1 {
                    return self.r_max;
                }
                let xi = i as f64 / last;
                if self.stretch == 0.0 {
                    self.r_max * xi
                } else {
                    self.r_max * (self.stretch * xi).sinh() / self.stretch.sinh()
                }
            })
            .collect::<Vec<_>>();
        if pts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(FlowError::InvalidGrid(
                "stretch too large: nodes collapse near the origin".into(),
            ));
        }
        Ok(pts)
    }
}

/// Square Cartesian grid `[-half_width, half_width]²` with an odd node count per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarGrid {
    pub half_width: f64,
    pub nodes_per_axis: usize,
}

impl PlanarGrid {
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.nodes_per_axis - 1) as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_width.is_finite() && self.half_width > 0.0) {
            return Err(FlowError::InvalidGrid(format!(
                "half_width must be positive, got {}",
                self.half_width
            )));
        }
        if self.nodes_per_axis < 3 || self.nodes_per_axis.is_multiple_of(2) {
            return Err(FlowError::InvalidGrid(format!(
                "nodes_per_axis must be odd and >= 3, got {}",
                self.nodes_per_axis
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "chart", rename_all = "snake_case")]
pub enum GridSpec {
    Radial(RadialGrid),
    Cartesian(PlanarGrid),
}

impl GridSpec {
    pub fn chart(&self) -> Chart {
        match self {
            GridSpec::Radial(_) => Chart::Radial,
            GridSpec::Cartesian(_) => Chart::Cartesian,
        }
    }
}

fn check_positive(v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !(x.is_finite() && *x > 0.0)) {
        Some(i) => Err(FlowError::Domain(format!(
            "conformal factor must be a positive function, v[{i}] = {}",
            v[i]
        ))),
        None => Ok(()),
    }
}

/// Conformal factor sampled on a radial grid starting at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    r: Vec<f64>,
    v: Vec<f64>,
}

impl RadialProfile {
    pub fn new(r: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        check_radial_nodes(&r)?;
        if r.len() != v.len() {
            return Err(FlowError::InvalidGrid(format!(
                "grid has {} nodes but {} values were given",
                r.len(),
                v.len()
            )));
        }
        check_positive(&v)?;
        Ok(Self { r, v })
    }

    pub fn from_fn(r: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let v = r.iter().map(|&x| f(x)).collect();
        Self::new(r, v)
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn r_max(&self) -> f64 {
        *self.r.last().expect("profile has at least 3 nodes")
    }

    /// Value at `radius`, interpolating `ln v` linearly in `r`.
    ///
    /// Radii beyond the grid are clamped to the outermost node.
    pub fn log_interp(&self, radius: f64) -> f64 {
        log_interp(&self.r, &self.v, radius)
    }
}

pub(crate) fn check_radial_nodes(r: &[f64]) -> Result<()> {
    if r.len() < 3 {
        return Err(FlowError::InvalidGrid(format!(
            "need at least 3 radial nodes, got {}",
            r.len()
        )));
    }
    if r[0] != 0.0 {
        return Err(FlowError::InvalidGrid(format!(
            "radial grid must start at r = 0, got {}",
            r[0]
        )));
    }
    if r.windows(2).any(|w| !(w[1] > w[0])) || !r.iter().all(|x| x.is_finite()) {
        return Err(FlowError::InvalidGrid(
            "radial grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

pub(crate) fn log_interp(r: &[f64], v: &[f64], radius: f64) -> f64 {
    let n = r.len();
    if radius <= r[0] {
        return v[0];
    }
    if radius >= r[n - 1] {
        return v[n - 1];
    }
    let k = r.partition_point(|&x| x <= radius).max(1) - 1;
    let w = (radius - r[k]) / (r[k + 1] - r[k]);
    ((1.0 - w) * v[k].ln() + w * v[k + 1].ln()).exp()
}

/// Conformal factor on a centred uniform Cartesian grid, stored row-major
/// (`v[j * nx + i]` at `x = (i - nx/2) h`, `y = (j - ny/2) h`).
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarField {
    nx: usize,
    ny: usize,
    spacing: f64,
    v: Vec<f64>,
}

impl PlanarField {
    pub fn new(nx: usize, ny: usize, spacing: f64, v: Vec<f64>) -> Result<Self> {
        if nx < 3 || ny < 3 || nx.is_multiple_of(2) || ny.is_multiple_of(2) {
            return Err(FlowError::InvalidGrid(format!(
                "planar grid must have odd node counts >= 3 per axis, got {nx}x{ny}"
            )));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(FlowError::InvalidGrid(format!(
                "spacing must be positive, got {spacing}"
            )));
        }
        if v.len() != nx * ny {
            return Err(FlowError::InvalidGrid(format!(
                "expected {} values, got {}",
                nx * ny,
                v.len()
            )));
        }
        check_positive(&v)?;
        Ok(Self { nx, ny, spacing, v })
    }

    pub fn from_fn(grid: &PlanarGrid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        grid.validate()?;
        let n = grid.nodes_per_axis;
        let h = grid.spacing();
        let c = (n / 2) as f64;
        let mut v = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                v.push(f((i as f64 - c) * h, (j as f64 - c) * h));
            }
        }
        Self::new(n, n, h, v)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn origin_index(&self) -> (usize, usize) {
        (self.nx / 2, self.ny / 2)
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.v[j * self.nx + i]
    }

    pub fn coords(&self, i: usize, j: usize) -> (f64, f64) {
        let (ci, cj) = self.origin_index();
        (
            (i as f64 - ci as f64) * self.spacing,
            (j as f64 - cj as f64) * self.spacing,
        )
    }

    /// Radius of the largest circle about the origin inside the grid.
    pub fn inscribed_radius(&self) -> f64 {
        (self.nx.min(self.ny) / 2) as f64 * self.spacing
    }

    /// Bilinear interpolation of `ln v` at `(x, y)`; the point must lie inside the grid.
    pub fn log_interp(&self, x: f64, y: f64) -> f64 {
        let (ci, cj) = self.origin_index();
        let fx = (x / self.spacing + ci as f64).clamp(0.0, (self.nx - 1) as f64);
        let fy = (y / self.spacing + cj as f64).clamp(0.0, (self.ny - 1) as f64);
        let i = (fx.floor() as usize).min(self.nx - 2);
        let j = (fy.floor() as usize).min(self.ny - 2);
        let (a, b) = (fx - i as f64, fy - j as f64);
        let l = |i: usize, j: usize| self.at(i, j).ln();
        let u = (1.0 - a) * (1.0 - b) * l(i, j)
            + a * (1.0 - b) * l(i + 1, j)
            + (1.0 - a) * b * l(i, j + 1)
            + a * b * l(i + 1, j + 1);
        u.exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Radial(RadialProfile),
    Planar(PlanarField),
}

impl Field {
    pub fn chart(&self) -> Chart {
        match self {
            Field::Radial(_) => Chart::Radial,
            Field::Planar(_) => Chart::Cartesian,
        }
    }

    pub fn values(&self) -> &[f64] {
        match self {
            Field::Radial(p) => p.v(),
            Field::Planar(p) => p.v(),
        }
    }

    /// Conformal factor at the origin node.
    pub fn origin_value(&self) -> f64 {
        match self {
            Field::Radial(p) => p.v()[0],
            Field::Planar(p) => {
                let (i, j) = p.origin_index();
                p.at(i, j)
            }
        }
    }

    /// Same grid, new values. Positivity is re-checked.
    pub fn with_values(&self, v: Vec<f64>) -> Result<Field> {
        Ok(match self {
            Field::Radial(p) => Field::Radial(RadialProfile::new(p.r.clone(), v)?),
            Field::Planar(p) => Field::Planar(PlanarField::new(p.nx, p.ny, p.spacing, v)?),
        })
    }

    pub fn as_radial(&self) -> Option<&RadialProfile> {
        match self {
            Field::Radial(p) => Some(p),
            Field::Planar(_) => None,
        }
    }

    pub fn as_planar(&self) -> Option<&PlanarField> {
        match self {
            Field::Planar(p) => Some(p),
            Field::Radial(_) => None,
        }
    }
}

/// The log-conformal field `u = ln v` on the grid of a [`Field`].
#[derive(Debug, Clone, PartialEq)]
pub enum LogField {
    Radial {
        r: Vec<f64>,
        u: Vec<f64>,
    },
    Planar {
        nx: usize,
        ny: usize,
        spacing: f64,
        u: Vec<f64>,
    },
}

impl LogField {
    pub fn values(&self) -> &[f64] {
        match self {
            LogField::Radial { u, .. } | LogField::Planar { u, .. } => u,
        }
    }
}

pub fn u_from_v(field: &Field) -> Result<LogField> {
    check_positive(field.values())?;
    let log = |v: &[f64]| v.iter().map(|x| x.ln()).collect::<Vec<_>>();
    Ok(match field {
        Field::Radial(p) => LogField::Radial {
            r: p.r.clone(),
            u: log(&p.v),
        },
        Field::Planar(p) => LogField::Planar {
            nx: p.nx,
            ny: p.ny,
            spacing: p.spacing,
            u: log(&p.v),
        },
    })
}

pub fn v_from_u(field: &LogField) -> Result<Field> {
    let exp = |u: &[f64]| u.iter().map(|x| x.exp()).collect::<Vec<_>>();
    match field {
        LogField::Radial { r, u } => Ok(Field::Radial(RadialProfile::new(r.clone(), exp(u))?)),
        LogField::Planar { nx, ny, spacing, u } => {
            Ok(Field::Planar(PlanarField::new(*nx, *ny, *spacing, exp(u))?))
        }
    }
}

/// Exact flow from the unit cigar: `v(r, t) = 1 / (e^{4t} + r²)`.
pub fn exact_cigar_flow(r: f64, t: f64) -> f64 {
    1.0 / ((4.0 * t).exp() + r * r)
}

/// Cigar soliton of homothety scale `c`, normalised so that `v(0) = 1`:
/// `v = c / (c + r²)`. Its circumference at infinity is `2π√c`.
pub fn cigar_profile(c: f64, r: f64) -> Result<f64> {
    if !(c.is_finite() && c > 0.0) {
        return Err(FlowError::Domain(format!(
            "cigar scale must be positive, got {c}"
        )));
    }
    Ok(c / (c + r * r))
}

/// Time orbit of [`cigar_profile`] under the flow: `v(r, t) = c / (c e^{4t/c} + r²)`.
pub fn cigar_orbit(c: f64, r: f64, t: f64) -> Result<f64> {
    if !(c.is_finite() && c > 0.0) {
        return Err(FlowError::Domain(format!(
            "cigar scale must be positive, got {c}"
        )));
    }
    Ok(c / (c * (4.0 * t / c).exp() + r * r))
}

/// Smooth bump supported on `[inner, outer]`, peak 1 at the midpoint,
/// value and first two derivatives vanishing at both ends.
pub fn bump(r: f64, inner: f64, outer: f64) -> f64 {
    let mid = 0.5 * (inner + outer);
    let half = 0.5 * (outer - inner);
    let xi = (r - mid) / half;
    if xi.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - xi * xi).powi(3)
    }
}

fn default_bump_inner() -> f64 {
    1.0
}

fn default_bump_outer() -> f64 {
    3.0
}

/// Admissible initial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialDataSpec {
    /// The unit cigar `1/(1 + r²)`.
    Cigar,
    Flat,
    /// Cigar multiplied by `1 + ε·bump(r)`.
    PerturbedCigar {
        epsilon: f64,
        #[serde(default = "default_bump_inner")]
        bump_inner: f64,
        #[serde(default = "default_bump_outer")]
        bump_outer: f64,
    },
    /// `(1 + r²)^{-α}`, a cone-like end of aperture `1 - α`.
    PowerLaw {
        alpha: f64,
    },
    /// Two- or three-column table given on exactly the solver's grid.
    Custom {
        path: std::path::PathBuf,
    },
}

impl InitialDataSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            InitialDataSpec::PowerLaw { alpha } if !(alpha > 0.0 && alpha < 1.0) => {
                Err(FlowError::InvalidParameter(format!(
                    "power_law requires 0 < alpha < 1, got {alpha}"
                )))
            }
            InitialDataSpec::PerturbedCigar {
                epsilon,
                bump_inner,
                bump_outer,
            } => {
                if !(epsilon.abs() < 1.0) {
                    return Err(FlowError::InvalidParameter(format!(
                        "perturbed_cigar requires |epsilon| < 1 to keep v positive, got {epsilon}"
                    )));
                }
                if !(bump_inner >= 0.0 && bump_outer > bump_inner) {
                    return Err(FlowError::InvalidParameter(format!(
                        "bump support [{bump_inner}, {bump_outer}] is empty"
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Radial profile function for the analytic kinds.
    fn radial_fn(&self) -> Option<Box<dyn Fn(f64) -> f64>> {
        match *self {
            InitialDataSpec::Cigar => Some(Box::new(|r| 1.0 / (1.0 + r * r))),
            InitialDataSpec::Flat => Some(Box::new(|_| 1.0)),
            InitialDataSpec::PerturbedCigar {
                epsilon,
                bump_inner,
                bump_outer,
            } => Some(Box::new(move |r| {
                (1.0 + epsilon * bump(r, bump_inner, bump_outer)) / (1.0 + r * r)
            })),
            InitialDataSpec::PowerLaw { alpha } => {
                Some(Box::new(move |r| (1.0 + r * r).powf(-alpha)))
            }
            InitialDataSpec::Custom { .. } => None,
        }
    }
}

/// A field together with its flow time and boundary condition.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub field: Field,
    pub t: f64,
    pub bc: BoundaryCondition,
}

impl FlowState {
    /// State at `t = 0` with the boundary condition of `kind` resolved
    /// against this field.
    pub fn initial(field: Field, kind: BoundaryKind) -> Result<Self> {
        let bc = BoundaryCondition::resolve(kind, &field)?;
        Ok(Self { field, t: 0.0, bc })
    }

    pub fn chart(&self) -> Chart {
        self.field.chart()
    }

    /// Re-resolve the boundary condition, keeping field and time.
    pub fn with_boundary(mut self, kind: BoundaryKind) -> Result<Self> {
        self.bc = BoundaryCondition::resolve(kind, &self.field)?;
        Ok(self)
    }
}

/// Instantiate initial data on a grid, with the default frozen-slope boundary.
pub fn build_initial(spec: &InitialDataSpec, grid: &GridSpec) -> Result<FlowState> {
    build_initial_with(spec, grid, BoundaryKind::FrozenLogSlope)
}

pub fn build_initial_with(
    spec: &InitialDataSpec,
    grid: &GridSpec,
    bc: BoundaryKind,
) -> Result<FlowState> {
    spec.validate()?;
    let field = match (spec, grid) {
        (InitialDataSpec::Custom { path }, _) => {
            let table = read_table(path)?;
            table.on_grid(grid)?
        }
        (_, GridSpec::Radial(g)) => {
            let f = spec.radial_fn().expect("analytic kind");
            Field::Radial(RadialProfile::from_fn(g.points()?, f)?)
        }
        (_, GridSpec::Cartesian(g)) => {
            let f = spec.radial_fn().expect("analytic kind");
            Field::Planar(PlanarField::from_fn(g, |x, y| f(x.hypot(y)))?)
        }
    };
    if bc == BoundaryKind::ExactCigar && *spec != InitialDataSpec::Cigar {
        return Err(FlowError::InvalidParameter(
            "exact_cigar boundary condition requires cigar initial data".into(),
        ));
    }
    FlowState::initial(field, bc)
}

/// Parsed node table: `(r, v)` or `(x, y, v)` rows.
#[derive(Debug, Clone, PartialEq)]
pub enum Table {
    Radial(Vec<[f64; 2]>),
    Planar(Vec<[f64; 3]>),
}

/// Parse a whitespace-separated table with `#` comments.
pub fn parse_table(text: &str) -> Result<Table> {
    let mut two = Vec::new();
    let mut three = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cols = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| FlowError::Parse {
                line: lineno + 1,
                message: e.to_string(),
            })?;
        match cols.len() {
            2 if three.is_empty() => two.push([cols[0], cols[1]]),
            3 if two.is_empty() => three.push([cols[0], cols[1], cols[2]]),
            n => {
                return Err(FlowError::Parse {
                    line: lineno + 1,
                    message: format!(
                        "expected a consistent 2- or 3-column table, found {n} columns"
                    ),
                })
            }
        }
    }
    match (two.is_empty(), three.is_empty()) {
        (false, true) => Ok(Table::Radial(two)),
        (true, false) => Ok(Table::Planar(three)),
        _ => Err(FlowError::Parse {
            line: 0,
            message: "table has no data rows".into(),
        }),
    }
}

pub fn read_table(path: &Path) -> Result<Table> {
    parse_table(&std::fs::read_to_string(path)?)
}

impl Table {
    /// Field on `grid`, provided the table nodes coincide with the grid nodes.
    pub fn on_grid(&self, grid: &GridSpec) -> Result<Field> {
        const TOL: f64 = 1e-9;
        let close = |a: f64, b: f64| (a - b).abs() <= TOL * (1.0 + a.abs().max(b.abs()));
        match (self, grid) {
            (Table::Radial(rows), GridSpec::Radial(g)) => {
                let pts = g.points()?;
                if pts.len() != rows.len()
                    || !pts.iter().zip(rows).all(|(p, row)| close(*p, row[0]))
                {
                    return Err(FlowError::InvalidGrid(
                        "custom table nodes do not coincide with the solver grid (no resampling is done)".into(),
                    ));
                }
                Ok(Field::Radial(RadialProfile::new(
                    pts,
                    rows.iter().map(|row| row[1]).collect(),
                )?))
            }
            (Table::Planar(rows), GridSpec::Cartesian(g)) => {
                g.validate()?;
                let n = g.nodes_per_axis;
                if rows.len() != n * n {
                    return Err(FlowError::InvalidGrid(format!(
                        "custom table has {} rows, grid has {} nodes",
                        rows.len(),
                        n * n
                    )));
                }
                let probe = PlanarField::from_fn(g, |_, _| 1.0)?;
                let mut v = Vec::with_capacity(n * n);
                for j in 0..n {
                    for i in 0..n {
                        let row = rows[j * n + i];
                        let (x, y) = probe.coords(i, j);
                        if !close(x, row[0]) || !close(y, row[1]) {
                            return Err(FlowError::InvalidGrid(format!(
                                "custom table row {} at ({}, {}) does not match grid node ({x}, {y})",
                                j * n + i + 1,
                                row[0],
                                row[1]
                            )));
                        }
                        v.push(row[2]);
                    }
                }
                Ok(Field::Planar(PlanarField::new(n, n, g.spacing(), v)?))
            }
            _ => Err(FlowError::InvalidGrid(
                "table column count does not match the grid chart".into(),
            )),
        }
    }
}

/// Format a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serialize a field in the two- or three-column table format.
pub fn format_table(field: &Field, t: f64) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# t = {}", fmt_f64(t));
    match field {
        Field::Radial(p) => {
            let _ = writeln!(out, "# r v");
            for (r, v) in p.r().iter().zip(p.v()) {
                let _ = writeln!(out, "{} {}", fmt_f64(*r), fmt_f64(*v));
            }
        }
        Field::Planar(p) => {
            let _ = writeln!(out, "# x y v");
            for j in 0..p.ny() {
                for i in 0..p.nx() {
                    let (x, y) = p.coords(i, j);
                    let _ = writeln!(out, "{} {} {}", fmt_f64(x), fmt_f64(y), fmt_f64(p.at(i, j)));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_has_zero_log() {
        let f = Field::Radial(
            RadialProfile::from_fn(RadialGrid::uniform(5.0, 11).points().unwrap(), |_| 1.0)
                .unwrap(),
        );
        let u = u_from_v(&f).unwrap();
        assert!(u.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn cigar_log_is_minus_log_one_plus_r2() {
        let r = RadialGrid::uniform(10.0, 101).points().unwrap();
        let f = Field::Radial(RadialProfile::from_fn(r.clone(), |x| 1.0 / (1.0 + x * x)).unwrap());
        let u = u_from_v(&f).unwrap();
        for (x, ux) in r.iter().zip(u.values()) {
            assert!((ux + (1.0 + x * x).ln()).abs() < 1e-14);
        }
    }

    #[test]
    fn non_positive_values_are_rejected() {
        let r = vec![0.0, 1.0, 2.0];
        assert!(matches!(
            RadialProfile::new(r.clone(), vec![1.0, 0.0, 1.0]),
            Err(FlowError::Domain(_))
        ));
        assert!(matches!(
            RadialProfile::new(r, vec![1.0, -1.0, 1.0]),
            Err(FlowError::Domain(_))
        ));
    }

    #[test]
    fn radial_grid_invariants() {
        assert!(RadialProfile::new(vec![0.1, 1.0, 2.0], vec![1.0; 3]).is_err());
        assert!(RadialProfile::new(vec![0.0, 1.0, 1.0], vec![1.0; 3]).is_err());
        assert!(RadialProfile::new(vec![0.0, 1.0], vec![1.0; 2]).is_err());
        assert!(RadialProfile::new(vec![0.0, 1.0, 2.0], vec![1.0; 2]).is_err());
        let s = RadialGrid::stretched(1e4, 200, 8.0).points().unwrap();
        assert_eq!(s[0], 0.0);
        assert_eq!(*s.last().unwrap(), 1e4);
        assert!(s.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn exact_flow_values() {
        assert_eq!(exact_cigar_flow(0.0, 0.0), 1.0);
        for t in [0.1, 0.5, 1.0, 2.0] {
            assert!((exact_cigar_flow(0.0, t) - (-4.0 * t).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn cigar_profile_normalised() {
        assert!((cigar_profile(1.0, 0.7).unwrap() - 1.0 / 1.49).abs() < 1e-15);
        for c in [0.01, 0.5, 1.0, 4.0, 1e3] {
            assert_eq!(cigar_profile(c, 0.0).unwrap(), 1.0);
        }
        assert!(cigar_profile(0.0, 1.0).is_err());
        assert!(cigar_profile(-1.0, 1.0).is_err());
    }

    /// Residual of v_t = v_rr + v_r/r ... written for ln v, by 4th-order central differences.
    fn pde_residual(f: impl Fn(f64, f64) -> f64, r: f64, t: f64, h: f64) -> f64 {
        let d1 = |g: &dyn Fn(f64) -> f64, x: f64| {
            (-g(x + 2.0 * h) + 8.0 * g(x + h) - 8.0 * g(x - h) + g(x - 2.0 * h)) / (12.0 * h)
        };
        let d2 = |g: &dyn Fn(f64) -> f64, x: f64| {
            (-g(x + 2.0 * h) + 16.0 * g(x + h) - 30.0 * g(x) + 16.0 * g(x - h) - g(x - 2.0 * h))
                / (12.0 * h * h)
        };
        let vt = d1(&|s| f(r, s), t);
        let lnv = |x: f64| f(x, t).ln();
        let lap = d2(&lnv, r) + d1(&lnv, r) / r;
        vt - lap
    }

    #[test]
    fn exact_flow_satisfies_log_diffusion() {
        let res = pde_residual(exact_cigar_flow, 1.0, 0.3, 1e-3);
        assert!(res.abs() < 1e-6, "residual {res}");
    }

    #[test]
    fn exact_flow_residual_converges_at_fourth_order() {
        let r1 = pde_residual(exact_cigar_flow, 1.0, 0.3, 4e-2).abs();
        let r2 = pde_residual(exact_cigar_flow, 1.0, 0.3, 2e-2).abs();
        let r3 = pde_residual(exact_cigar_flow, 1.0, 0.3, 1e-2).abs();
        assert!(r1 / r2 > 12.0 && r2 / r3 > 12.0, "{r1} {r2} {r3}");
    }

    #[test]
    fn cigar_orbit_satisfies_log_diffusion() {
        for c in [0.5, 1.0, 4.0] {
            for (r, t) in [(0.5, 0.1), (1.0, 0.3), (2.5, 1.0)] {
                let res = pde_residual(|r, t| cigar_orbit(c, r, t).unwrap(), r, t, 1e-3);
                assert!(res.abs() < 1e-6, "c={c} r={r} t={t}: {res}");
            }
        }
        assert_eq!(
            cigar_orbit(1.0, 0.3, 0.2).unwrap(),
            exact_cigar_flow(0.3, 0.2)
        );
    }

    #[test]
    fn build_initial_kinds() {
        let grid = GridSpec::Radial(RadialGrid::uniform(10.0, 101));
        let flat = build_initial(&InitialDataSpec::Flat, &grid).unwrap();
        assert!(flat.field.values().iter().all(|&v| v == 1.0));

        let cigar = build_initial(&InitialDataSpec::Cigar, &grid).unwrap();
        let p = cigar.field.as_radial().unwrap();
        assert_eq!(p.r()[10], 1.0);
        assert!((p.v()[10] - 0.5).abs() < 1e-15);
        for (r, v) in p.r().iter().zip(p.v()) {
            assert_eq!(*v, cigar_profile(1.0, *r).unwrap());
        }

        let pl = build_initial(&InitialDataSpec::PowerLaw { alpha: 0.5 }, &grid).unwrap();
        assert_eq!(pl.field.origin_value(), 1.0);
        assert_eq!(cigar.t, 0.0);
    }

    #[test]
    fn build_initial_rejects_bad_parameters() {
        let grid = GridSpec::Radial(RadialGrid::uniform(10.0, 101));
        for alpha in [0.0, 1.0, -0.5, 1.5] {
            assert!(build_initial(&InitialDataSpec::PowerLaw { alpha }, &grid).is_err());
        }
        let bad = InitialDataSpec::PerturbedCigar {
            epsilon: 1.0,
            bump_inner: 1.0,
            bump_outer: 3.0,
        };
        assert!(build_initial(&bad, &grid).is_err());
        assert!(
            build_initial_with(&InitialDataSpec::Flat, &grid, BoundaryKind::ExactCigar).is_err()
        );
    }

    #[test]
    fn perturbation_keeps_tail() {
        let grid = GridSpec::Radial(RadialGrid::uniform(10.0, 201));
        let spec = InitialDataSpec::PerturbedCigar {
            epsilon: 0.1,
            bump_inner: 1.0,
            bump_outer: 3.0,
        };
        let s = build_initial(&spec, &grid).unwrap();
        let p = s.field.as_radial().unwrap();
        for (r, v) in p.r().iter().zip(p.v()) {
            let base = 1.0 / (1.0 + r * r);
            if *r <= 1.0 || *r >= 3.0 {
                assert_eq!(*v, base);
            }
        }
        assert!((p.log_interp(2.0) - 1.1 / 5.0).abs() < 1e-12);
    }

    #[test]
    fn bump_is_c2_at_support_ends() {
        let h = 1e-4;
        for end in [1.0, 3.0] {
            let d1 = (bump(end + h, 1.0, 3.0) - bump(end - h, 1.0, 3.0)) / (2.0 * h);
            let d2 = (bump(end + h, 1.0, 3.0) - 2.0 * bump(end, 1.0, 3.0)
                + bump(end - h, 1.0, 3.0))
                / (h * h);
            assert!(d1.abs() < 1e-6 && d2.abs() < 1e-3, "{d1} {d2}");
        }
    }

    #[test]
    fn table_parsing() {
        let t = parse_table("# r v\n0 1\n1.0 0.5 # mid\n\n2 0.2\n").unwrap();
        assert_eq!(t, Table::Radial(vec![[0.0, 1.0], [1.0, 0.5], [2.0, 0.2]]));
        let t = parse_table("0 0 1\n1 0 2\n").unwrap();
        assert_eq!(t, Table::Planar(vec![[0.0, 0.0, 1.0], [1.0, 0.0, 2.0]]));
        assert!(parse_table("0 1\n1 2 3\n").is_err());
        assert!(parse_table("0 x\n").is_err());
        assert!(parse_table("# nothing\n").is_err());
    }

    #[test]
    fn table_zero_entry_rejected() {
        let grid = GridSpec::Radial(RadialGrid::uniform(2.0, 3));
        let t = parse_table("0 1\n1 0\n2 0.2\n").unwrap();
        let err = t.on_grid(&grid).unwrap_err();
        assert!(err.to_string().contains("positive function"), "{err}");
    }

    #[test]
    fn table_must_match_grid() {
        let grid = GridSpec::Radial(RadialGrid::uniform(2.0, 3));
        let t = parse_table("0 1\n1.5 0.5\n2 0.2\n").unwrap();
        assert!(t.on_grid(&grid).is_err());
    }

    #[test]
    fn planar_table_round_trip() {
        let g = PlanarGrid {
            half_width: 1.0,
            nodes_per_axis: 5,
        };
        let f =
            Field::Planar(PlanarField::from_fn(&g, |x, y| 1.0 / (1.0 + x * x + y * y)).unwrap());
        let text = format_table(&f, 0.0);
        let back = parse_table(&text)
            .unwrap()
            .on_grid(&GridSpec::Cartesian(g))
            .unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn log_interp_exact_on_exponentials() {
        let r = RadialGrid::uniform(4.0, 5).points().unwrap();
        let p = RadialProfile::from_fn(r, |x| (-0.5 * x).exp()).unwrap();
        assert!((p.log_interp(1.3) - (-0.65f64).exp()).abs() < 1e-14);
        assert_eq!(p.log_interp(10.0), p.v()[4]);
    }

    proptest::proptest! {
        #[test]
        fn log_round_trip(vals in proptest::collection::vec(1e-12f64..1e12, 3..64)) {
            let r: Vec<f64> = (0..vals.len()).map(|i| i as f64).collect();
            let f = Field::Radial(RadialProfile::new(r, vals.clone()).unwrap());
            let back = v_from_u(&u_from_v(&f).unwrap()).unwrap();
            for (a, b) in back.values().iter().zip(&vals) {
                // ln v carries an absolute error of order |ln v|·ε, which exp turns into a relative one
                proptest::prop_assert!(((a - b) / b).abs() <= (2.0 + b.ln().abs()) * 2.0 * f64::EPSILON);
            }
        }
    }
}
