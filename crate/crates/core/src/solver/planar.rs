use crate::error::{FlowError, Result};
use crate::metric::{Field, FlowState, PlanarField};
use crate::solver::boundary::impose_planar;

/// Largest forward-Euler step for the linearized diffusivity `1/v`:
/// `safety · h² · min(v) / 4`.
pub fn cfl_bound(field: &PlanarField, safety: f64) -> f64 {
    let vmin = field.v().iter().cloned().fold(f64::INFINITY, f64::min);
    safety * field.spacing() * field.spacing() * vmin / 4.0
}

/// One forward-Euler step of `v_t = Δ̄ ln v` with the five-point Laplacian;
/// edge nodes follow the boundary condition.
pub fn step_planar_explicit(state: &FlowState, dt: f64, cfl_safety: f64) -> Result<FlowState> {
    let field = state
        .field
        .as_planar()
        .ok_or_else(|| FlowError::Incompatible("planar stepper needs a Cartesian state".into()))?;
    let bound = cfl_bound(field, cfl_safety);
    if !(dt > 0.0) || dt > bound {
        return Err(FlowError::StepRejected(format!(
            "dt = {dt:e} violates the CFL bound {bound:e}"
        )));
    }
    let (nx, ny) = (field.nx(), field.ny());
    let h2 = field.spacing() * field.spacing();
    let u: Vec<f64> = field.v().iter().map(|v| v.ln()).collect();
    let mut v = field.v().to_vec();
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            let k = j * nx + i;
            let lap = (u[k - 1] + u[k + 1] + u[k - nx] + u[k + nx] - 4.0 * u[k]) / h2;
            v[k] += dt * lap;
        }
    }
    let t_new = state.t + dt;
    impose_planar(&mut v, field, &state.bc, t_new);
    if let Some(k) = v.iter().position(|x| !(*x > 0.0 && x.is_finite())) {
        return Err(FlowError::Domain(format!(
            "positivity lost at node {k} (v = {})",
            v[k]
        )));
    }
    Ok(FlowState {
        field: Field::Planar(PlanarField::new(nx, ny, field.spacing(), v)?),
        t: t_new,
        bc: state.bc.clone(),
    })
}
