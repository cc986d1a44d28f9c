use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};
use crate::metric::{exact_cigar_flow, Field, FlowState, PlanarField, RadialProfile};

/// Boundary condition as configured, before it is measured against initial data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    /// Outer nodes follow `1/(e^{4t} + r²)`; only meaningful for cigar data.
    ExactCigar,
    /// Logarithmic slope `d ln v / d ln r` at the outer edge frozen at its initial value.
    #[default]
    FrozenLogSlope,
    /// Outer nodes pinned to their initial values.
    DirichletInitial,
}

/// Resolved boundary condition.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryCondition {
    ExactCigar,
    /// `q0` is the radial flux `r u_r` at the outer node. On the planar chart
    /// each edge node instead keeps its initial log-offset from its inward
    /// neighbour (`log_offsets`, in [`edge_nodes`] order).
    FrozenLogSlope {
        q0: f64,
        log_offsets: Vec<f64>,
    },
    /// Initial values of the outer nodes, in [`edge_nodes`] order (one value on the radial chart).
    DirichletInitial {
        values: Vec<f64>,
    },
}

impl BoundaryCondition {
    pub fn kind(&self) -> BoundaryKind {
        match self {
            BoundaryCondition::ExactCigar => BoundaryKind::ExactCigar,
            BoundaryCondition::FrozenLogSlope { .. } => BoundaryKind::FrozenLogSlope,
            BoundaryCondition::DirichletInitial { .. } => BoundaryKind::DirichletInitial,
        }
    }

    /// Measure the data a boundary kind needs from the initial field.
    pub fn resolve(kind: BoundaryKind, field: &Field) -> Result<Self> {
        Ok(match (kind, field) {
            (BoundaryKind::ExactCigar, _) => BoundaryCondition::ExactCigar,
            (BoundaryKind::FrozenLogSlope, Field::Radial(p)) => BoundaryCondition::FrozenLogSlope {
                q0: measure_log_slope(p),
                log_offsets: Vec::new(),
            },
            (BoundaryKind::FrozenLogSlope, Field::Planar(p)) => {
                let log_offsets = edge_nodes(p.nx(), p.ny())
                    .into_iter()
                    .map(|(b, n)| p.v()[b].ln() - p.v()[n].ln())
                    .collect();
                let q0 = crate::geometry::tail_exponent(
                    &crate::geometry::angular_profile(p)?,
                    p.inscribed_radius(),
                )
                .map(|p| -p)
                .unwrap_or(f64::NAN);
                BoundaryCondition::FrozenLogSlope { q0, log_offsets }
            }
            (BoundaryKind::DirichletInitial, Field::Radial(p)) => {
                BoundaryCondition::DirichletInitial {
                    values: vec![p.v()[p.len() - 1]],
                }
            }
            (BoundaryKind::DirichletInitial, Field::Planar(p)) => {
                BoundaryCondition::DirichletInitial {
                    values: edge_nodes(p.nx(), p.ny())
                        .into_iter()
                        .map(|(b, _)| p.v()[b])
                        .collect(),
                }
            }
        })
    }

    /// Outer value of `ln v` on the radial chart at time `t`, when the condition pins it.
    pub(crate) fn radial_dirichlet_log(&self, r_max: f64, t: f64) -> Option<f64> {
        match self {
            BoundaryCondition::ExactCigar => Some(exact_cigar_flow(r_max, t).ln()),
            BoundaryCondition::DirichletInitial { values } => Some(values[0].ln()),
            BoundaryCondition::FrozenLogSlope { .. } => None,
        }
    }

    /// Prescribed outer flux `r u_r` on the radial chart.
    pub(crate) fn radial_flux(&self) -> Option<f64> {
        match self {
            BoundaryCondition::FrozenLogSlope { q0, .. } => Some(*q0),
            _ => None,
        }
    }
}

/// `d ln v / d ln r` at the outer node, from the three outermost nodes.
pub fn measure_log_slope(p: &RadialProfile) -> f64 {
    let r = p.r();
    let n = r.len();
    let (x0, x1, x2) = (r[n - 3], r[n - 2], r[n - 1]);
    let (f0, f1, f2) = (p.v()[n - 3].ln(), p.v()[n - 2].ln(), p.v()[n - 1].ln());
    let du = f0 * (x2 - x1) / ((x0 - x1) * (x0 - x2))
        + f1 * (x2 - x0) / ((x1 - x0) * (x1 - x2))
        + f2 * (2.0 * x2 - x0 - x1) / ((x2 - x0) * (x2 - x1));
    x2 * du
}

/// Edge nodes of an `nx × ny` grid paired with their inward neighbour
/// (diagonal for corners), in a fixed order.
pub fn edge_nodes(nx: usize, ny: usize) -> Vec<(usize, usize)> {
    let idx = |i: usize, j: usize| j * nx + i;
    let mut out = Vec::with_capacity(2 * (nx + ny));
    for j in 0..ny {
        for i in 0..nx {
            if i != 0 && j != 0 && i != nx - 1 && j != ny - 1 {
                continue;
            }
            let ii = if i == 0 {
                1
            } else if i == nx - 1 {
                nx - 2
            } else {
                i
            };
            let jj = if j == 0 {
                1
            } else if j == ny - 1 {
                ny - 2
            } else {
                j
            };
            out.push((idx(i, j), idx(ii, jj)));
        }
    }
    out
}

/// Impose `bc` on the planar edge at time `t`, in place.
pub(crate) fn impose_planar(v: &mut [f64], field: &PlanarField, bc: &BoundaryCondition, t: f64) {
    let edges = edge_nodes(field.nx(), field.ny());
    match bc {
        BoundaryCondition::ExactCigar => {
            for (b, _) in edges {
                let (x, y) = field.coords(b % field.nx(), b / field.nx());
                v[b] = exact_cigar_flow(x.hypot(y), t);
            }
        }
        BoundaryCondition::DirichletInitial { values } => {
            for ((b, _), val) in edges.into_iter().zip(values) {
                v[b] = *val;
            }
        }
        BoundaryCondition::FrozenLogSlope { log_offsets, .. } => {
            for ((b, n), off) in edges.into_iter().zip(log_offsets) {
                v[b] = (v[n].ln() + off).exp();
            }
        }
    }
}

/// Impose the state's boundary condition at its current time.
///
/// On the radial chart a frozen log-slope acts through the outer flux of the
/// stepper and leaves the nodes untouched.
pub fn apply_boundary(state: &FlowState, bc: &BoundaryCondition) -> Result<FlowState> {
    let field = match &state.field {
        Field::Radial(p) => {
            let mut v = p.v().to_vec();
            if let Some(u) = bc.radial_dirichlet_log(p.r_max(), state.t) {
                let last = v.len() - 1;
                v[last] = u.exp();
            }
            state.field.with_values(v)?
        }
        Field::Planar(p) => {
            let n = p.nx() * p.ny();
            let expected = edge_nodes(p.nx(), p.ny()).len();
            let len = match bc {
                BoundaryCondition::DirichletInitial { values } => values.len(),
                BoundaryCondition::FrozenLogSlope { log_offsets, .. } => log_offsets.len(),
                BoundaryCondition::ExactCigar => expected,
            };
            if len != expected {
                return Err(FlowError::Incompatible(format!(
                    "boundary data has {len} entries, grid of {n} nodes has {expected} edge nodes"
                )));
            }
            let mut v = p.v().to_vec();
            impose_planar(&mut v, p, bc, state.t);
            state.field.with_values(v)?
        }
    };
    Ok(FlowState {
        field,
        t: state.t,
        bc: bc.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{build_initial_with, GridSpec, InitialDataSpec, PlanarGrid, RadialGrid};

    #[test]
    fn frozen_slope_measures_cigar_tail() {
        let g = GridSpec::Radial(RadialGrid::uniform(40.0, 2000));
        let s =
            build_initial_with(&InitialDataSpec::Cigar, &g, BoundaryKind::FrozenLogSlope).unwrap();
        match s.bc {
            BoundaryCondition::FrozenLogSlope { q0, .. } => {
                assert!((q0 + 2.0).abs() < 0.02, "{q0}")
            }
            _ => unreachable!(),
        }
        let s =
            build_initial_with(&InitialDataSpec::Flat, &g, BoundaryKind::FrozenLogSlope).unwrap();
        assert_eq!(
            s.bc,
            BoundaryCondition::FrozenLogSlope {
                q0: 0.0,
                log_offsets: vec![]
            }
        );
    }

    #[test]
    fn exact_boundary_consistent_at_t0() {
        let g = GridSpec::Radial(RadialGrid::uniform(40.0, 2000));
        let s = build_initial_with(&InitialDataSpec::Cigar, &g, BoundaryKind::ExactCigar).unwrap();
        let after = apply_boundary(&s, &s.bc).unwrap();
        let a = s.field.values().last().unwrap();
        let b = after.field.values().last().unwrap();
        assert!((a - b).abs() <= 1e-15 * a);
    }

    #[test]
    fn planar_boundaries_are_stationary_at_t0() {
        let g = GridSpec::Cartesian(PlanarGrid {
            half_width: 2.0,
            nodes_per_axis: 21,
        });
        for kind in [
            BoundaryKind::ExactCigar,
            BoundaryKind::DirichletInitial,
            BoundaryKind::FrozenLogSlope,
        ] {
            let s = build_initial_with(&InitialDataSpec::Cigar, &g, kind).unwrap();
            let after = apply_boundary(&s, &s.bc).unwrap();
            for (a, b) in s.field.values().iter().zip(after.field.values()) {
                assert!((a - b).abs() <= 1e-14 * a, "{kind:?}");
            }
        }
    }

    #[test]
    fn edge_node_count() {
        assert_eq!(edge_nodes(5, 7).len(), 2 * 5 + 2 * 7 - 4);
        let e = edge_nodes(3, 3);
        assert_eq!(e[0], (0, 4));
        assert!(e.iter().all(|&(_, n)| n == 4));
    }
}
