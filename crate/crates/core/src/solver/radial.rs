//! Backward-Euler steppers on the radial chart.
//!
//! Both forms discretize the same finite-volume operator
//! `L w = (1/r)(r w_r)_r` and solve the implicit system by Newton iteration
//! with tridiagonal Jacobians.

use crate::error::{FlowError, Result};
use crate::metric::{Field, FlowState, RadialProfile};
use crate::solver::StepController;

/// Coefficients of `L w_i = lower_i w_{i-1} + diag_i w_i + upper_i w_{i+1} + source_i`.
#[derive(Debug, Clone)]
pub(crate) struct RadialOperator {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    source: Vec<f64>,
}

impl RadialOperator {
    /// Operator on `r`; `outer_flux` is the prescribed `r w_r` at the last node
    /// (ignored when the last node is pinned).
    pub(crate) fn new(r: &[f64], outer_flux: Option<f64>) -> Self {
        let n = r.len();
        let vol = crate::geometry::radial_volumes(r);
        let k: Vec<f64> = (0..n - 1)
            .map(|i| 0.5 * (r[i] + r[i + 1]) / (r[i + 1] - r[i]))
            .collect();
        let mut lower = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut source = vec![0.0; n];
        for i in 0..n {
            if i > 0 {
                lower[i] = k[i - 1] / vol[i];
            }
            if i < n - 1 {
                upper[i] = k[i] / vol[i];
            }
        }
        if let Some(q) = outer_flux {
            source[n - 1] = q / vol[n - 1];
        }
        let diag = lower.iter().zip(&upper).map(|(a, c)| -(a + c)).collect();
        Self {
            lower,
            diag,
            upper,
            source,
        }
    }

    /// Rounding error bound for `apply(w)` at node `i`.
    fn rounding(&self, w: &[f64], i: usize) -> f64 {
        let mut acc = (self.diag[i] * w[i]).abs() + self.source[i].abs();
        if i > 0 {
            acc += (self.lower[i] * w[i - 1]).abs();
        }
        if i + 1 < w.len() {
            acc += (self.upper[i] * w[i + 1]).abs();
        }
        4.0 * f64::EPSILON * acc
    }

    pub(crate) fn apply(&self, w: &[f64]) -> Vec<f64> {
        let n = w.len();
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * w[i] + self.source[i];
                if i > 0 {
                    acc += self.lower[i] * w[i - 1];
                }
                if i < n - 1 {
                    acc += self.upper[i] * w[i + 1];
                }
                acc
            })
            .collect()
    }
}

/// Solve a tridiagonal system in place (Thomas algorithm). `rhs` becomes the solution.
pub(crate) fn solve_tridiagonal(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &mut [f64],
) -> Result<()> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    if beta == 0.0 || !beta.is_finite() {
        return Err(FlowError::StepRejected(
            "singular tridiagonal system".into(),
        ));
    }
    rhs[0] /= beta;
    for i in 1..n {
        c[i - 1] = upper[i - 1] / beta;
        beta = diag[i] - lower[i] * c[i - 1];
        if beta == 0.0 || !beta.is_finite() {
            return Err(FlowError::StepRejected(
                "singular tridiagonal system".into(),
            ));
        }
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
    Ok(())
}

fn sup_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn radial_parts(state: &FlowState) -> Result<&RadialProfile> {
    state
        .field
        .as_radial()
        .ok_or_else(|| FlowError::Incompatible("radial stepper needs a radial state".into()))
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(FlowError::StepRejected(format!(
            "time step must be positive, got {dt}"
        )));
    }
    Ok(())
}

const MAX_BACKTRACK: usize = 30;

/// One backward-Euler step of `u_t = e^{-u} Δ̄u` in the log gauge.
///
/// Positivity of `v = e^u` is automatic.
pub fn step_radial_implicit(
    state: &FlowState,
    dt: f64,
    ctrl: &StepController,
) -> Result<FlowState> {
    check_dt(dt)?;
    let prof = radial_parts(state)?;
    let r = prof.r();
    let n = r.len();
    let t_new = state.t + dt;
    let pinned = state.bc.radial_dirichlet_log(prof.r_max(), t_new);
    let op = RadialOperator::new(r, state.bc.radial_flux());
    let u_old: Vec<f64> = prof.v().iter().map(|v| v.ln()).collect();

    let residual = |u: &[f64]| -> Vec<f64> {
        let lu = op.apply(u);
        let mut f: Vec<f64> = (0..n)
            .map(|i| u[i] - u_old[i] - dt * (-u[i]).exp() * lu[i])
            .collect();
        if let Some(ub) = pinned {
            f[n - 1] = u[n - 1] - ub;
        }
        f
    };

    let mut u = u_old.clone();
    if let Some(ub) = pinned {
        u[n - 1] = ub;
    }
    // below this the residual is rounding noise of dt e^{-u} L(u)
    let floor = |u: &[f64]| -> f64 {
        (0..n).fold(0.0, |m: f64, i| {
            m.max(dt * (-u[i]).exp() * op.rounding(u, i) + 2.0 * f64::EPSILON * u[i].abs())
        })
    };
    let mut f = residual(&u);
    let mut norm = sup_norm(&f);
    let mut iter = 0;
    while norm >= ctrl.newton_tol.max(4.0 * floor(&u)) {
        if iter == ctrl.newton_max_iter || !norm.is_finite() {
            return Err(FlowError::NewtonFailure {
                iterations: iter,
                residual: norm,
            });
        }
        iter += 1;
        let lu = op.apply(&u);
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for i in 0..n {
            let e = dt * (-u[i]).exp();
            lower[i] = -e * op.lower[i];
            upper[i] = -e * op.upper[i];
            diag[i] = 1.0 - e * op.diag[i] + e * lu[i];
        }
        if pinned.is_some() {
            lower[n - 1] = 0.0;
            diag[n - 1] = 1.0;
        }
        let mut delta: Vec<f64> = f.iter().map(|x| -x).collect();
        solve_tridiagonal(&lower, &diag, &upper, &mut delta)?;
        // the residual floor is set by roundoff in e^{-u} L(u); a negligible
        // full update also counts as convergence
        if sup_norm(&delta) < ctrl.newton_tol {
            u.iter_mut().zip(&delta).for_each(|(a, d)| *a += d);
            break;
        }

        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_BACKTRACK {
            let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a + lambda * d).collect();
            let ft = residual(&trial);
            let nt = sup_norm(&ft);
            if nt.is_finite() && (nt < norm || nt < ctrl.newton_tol) {
                u = trial;
                f = ft;
                norm = nt;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(FlowError::NewtonFailure {
                iterations: iter,
                residual: norm,
            });
        }
    }
    let v = u.iter().map(|x| x.exp()).collect();
    Ok(FlowState {
        field: Field::Radial(RadialProfile::new(r.to_vec(), v)?),
        t: t_new,
        bc: state.bc.clone(),
    })
}

/// One backward-Euler step of `v_t = Δ̄ ln v` with `v` as the unknown.
///
/// Convergence is measured on the residual relative to the old `v`, which is
/// comparable to the log-gauge residual. Newton updates that would make any
/// node non-positive are halved until positive.
pub fn step_radial_implicit_vform(
    state: &FlowState,
    dt: f64,
    ctrl: &StepController,
) -> Result<FlowState> {
    check_dt(dt)?;
    let prof = radial_parts(state)?;
    let r = prof.r();
    let n = r.len();
    let t_new = state.t + dt;
    let pinned = state
        .bc
        .radial_dirichlet_log(prof.r_max(), t_new)
        .map(f64::exp);
    let op = RadialOperator::new(r, state.bc.radial_flux());
    let v_old = prof.v().to_vec();

    let residual = |v: &[f64]| -> Vec<f64> {
        let w: Vec<f64> = v.iter().map(|x| x.ln()).collect();
        let lw = op.apply(&w);
        let mut f: Vec<f64> = (0..n)
            .map(|i| (v[i] - v_old[i] - dt * lw[i]) / v_old[i])
            .collect();
        if let Some(vb) = pinned {
            f[n - 1] = (v[n - 1] - vb) / v_old[n - 1];
        }
        f
    };

    let mut v = v_old.clone();
    if let Some(vb) = pinned {
        v[n - 1] = vb;
    }
    let floor = |v: &[f64]| -> f64 {
        let w: Vec<f64> = v.iter().map(|x| x.ln()).collect();
        (0..n).fold(0.0, |m: f64, i| {
            m.max((dt * op.rounding(&w, i) + 2.0 * f64::EPSILON * (v[i] + v_old[i])) / v_old[i])
        })
    };
    let mut f = residual(&v);
    let mut norm = sup_norm(&f);
    let mut iter = 0;
    while norm >= ctrl.newton_tol.max(4.0 * floor(&v)) {
        if iter == ctrl.newton_max_iter || !norm.is_finite() {
            return Err(FlowError::NewtonFailure {
                iterations: iter,
                residual: norm,
            });
        }
        iter += 1;
        // Jacobian of the scaled residual: (δ_ij - dt L_ij / v_j) / v_old_i
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for i in 0..n {
            let s = 1.0 / v_old[i];
            diag[i] = s * (1.0 - dt * op.diag[i] / v[i]);
            if i > 0 {
                lower[i] = -s * dt * op.lower[i] / v[i - 1];
            }
            if i < n - 1 {
                upper[i] = -s * dt * op.upper[i] / v[i + 1];
            }
        }
        if pinned.is_some() {
            lower[n - 1] = 0.0;
            diag[n - 1] = 1.0 / v_old[n - 1];
        }
        let mut delta: Vec<f64> = f.iter().map(|x| -x).collect();
        solve_tridiagonal(&lower, &diag, &upper, &mut delta)?;
        if delta
            .iter()
            .zip(&v)
            .all(|(d, x)| d.abs() < ctrl.newton_tol * x)
        {
            v.iter_mut().zip(&delta).for_each(|(a, d)| *a += d);
            break;
        }

        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_BACKTRACK {
            let trial: Vec<f64> = v.iter().zip(&delta).map(|(a, d)| a + lambda * d).collect();
            if trial.iter().all(|x| *x > 0.0) {
                let ft = residual(&trial);
                let nt = sup_norm(&ft);
                if nt.is_finite() && (nt < norm || nt < ctrl.newton_tol) {
                    v = trial;
                    f = ft;
                    norm = nt;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(FlowError::NewtonFailure {
                iterations: iter,
                residual: norm,
            });
        }
    }
    Ok(FlowState {
        field: Field::Radial(RadialProfile::new(r.to_vec(), v)?),
        t: t_new,
        bc: state.bc.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{
        build_initial_with, exact_cigar_flow, GridSpec, InitialDataSpec, RadialGrid,
    };
    use crate::solver::BoundaryKind;

    #[test]
    fn thomas_matches_dense_solution() {
        let lower = [0.0, 1.0, 2.0, 1.0];
        let diag = [4.0, 5.0, 6.0, 4.0];
        let upper = [1.0, 1.0, 1.0, 0.0];
        let x = [1.0, -2.0, 3.0, 0.5];
        let mut b: Vec<f64> = (0..4)
            .map(|i| {
                diag[i] * x[i]
                    + if i > 0 { lower[i] * x[i - 1] } else { 0.0 }
                    + if i < 3 { upper[i] * x[i + 1] } else { 0.0 }
            })
            .collect();
        solve_tridiagonal(&lower, &diag, &upper, &mut b).unwrap();
        for (a, e) in b.iter().zip(&x) {
            assert!((a - e).abs() < 1e-14);
        }
    }

    #[test]
    fn operator_is_conservative() {
        let r = RadialGrid::stretched(50.0, 300, 3.0).points().unwrap();
        let w: Vec<f64> = r.iter().map(|x| (-x * x / 10.0).exp()).collect();
        let q = -0.7;
        let op = RadialOperator::new(&r, Some(q));
        let vol = crate::geometry::radial_volumes(&r);
        let total: f64 = op.apply(&w).iter().zip(&vol).map(|(l, v)| l * v).sum();
        assert!((total - q).abs() < 1e-12, "{total}");
    }

    #[test]
    fn flat_is_a_fixed_point() {
        let ctrl = StepController::default();
        for kind in [BoundaryKind::FrozenLogSlope, BoundaryKind::DirichletInitial] {
            let g = GridSpec::Radial(RadialGrid::uniform(10.0, 101));
            let s = build_initial_with(&InitialDataSpec::Flat, &g, kind).unwrap();
            for dt in [1e-4, 0.1, 10.0] {
                let a = step_radial_implicit(&s, dt, &ctrl).unwrap();
                let b = step_radial_implicit_vform(&s, dt, &ctrl).unwrap();
                assert_eq!(a.field, s.field);
                assert_eq!(b.field, s.field);
                assert_eq!(a.t, dt);
            }
        }
    }

    #[test]
    fn short_cigar_run_tracks_exact_solution() {
        let ctrl = StepController::default();
        let g = GridSpec::Radial(RadialGrid::uniform(20.0, 401));
        let mut s =
            build_initial_with(&InitialDataSpec::Cigar, &g, BoundaryKind::ExactCigar).unwrap();
        for _ in 0..20 {
            s = step_radial_implicit(&s, 5e-3, &ctrl).unwrap();
        }
        let p = s.field.as_radial().unwrap();
        let err = p
            .r()
            .iter()
            .zip(p.v())
            .map(|(r, v)| ((v - exact_cigar_flow(*r, s.t)) / exact_cigar_flow(*r, s.t)).abs())
            .fold(0.0, f64::max);
        assert!(err < 5e-3, "{err}");
    }

    #[test]
    fn wrong_chart_or_dt_is_rejected() {
        let ctrl = StepController::default();
        let g = GridSpec::Radial(RadialGrid::uniform(10.0, 101));
        let s =
            build_initial_with(&InitialDataSpec::Flat, &g, BoundaryKind::FrozenLogSlope).unwrap();
        assert!(step_radial_implicit(&s, 0.0, &ctrl).is_err());
        assert!(step_radial_implicit_vform(&s, -1.0, &ctrl).is_err());
        let p = GridSpec::Cartesian(crate::metric::PlanarGrid {
            half_width: 1.0,
            nodes_per_axis: 5,
        });
        let s =
            build_initial_with(&InitialDataSpec::Flat, &p, BoundaryKind::FrozenLogSlope).unwrap();
        assert!(matches!(
            step_radial_implicit(&s, 0.1, &ctrl),
            Err(FlowError::Incompatible(_))
        ));
    }

    #[test]
    fn newton_failure_is_reported() {
        let ctrl = StepController {
            newton_max_iter: 1,
            newton_tol: 1e-14,
            ..StepController::default()
        };
        let g = GridSpec::Radial(RadialGrid::uniform(40.0, 401));
        let s = build_initial_with(&InitialDataSpec::Cigar, &g, BoundaryKind::ExactCigar).unwrap();
        assert!(matches!(
            step_radial_implicit(&s, 0.5, &ctrl),
            Err(FlowError::NewtonFailure { .. })
        ));
    }
}
