use super::mna::{assemble_into, LinearSystem};
use super::state::{SystemState, TimeContext};
use crate::circuit::Elaborated;
use crate::error::{Error, Result};

/// Largest node-voltage change applied in one Newton update.
const MAX_NEWTON_DV: f64 = 0.3;
const MAX_BACKTRACKS: usize = 6;

/// Residual norm with branch (voltage) rows weighted as 1 mV ≙ 1 µA.
fn merit(sys: &LinearSystem, n_nodes: usize) -> f64 {
    sys.residual.iter().enumerate().map(|(i, r)| if i < n_nodes { r * r } else { 1e-6 * r * r }).sum()
}

/// Runs damped Newton–Raphson at fixed PTM states. Returns the iteration
/// count on convergence; `x` is left at the last iterate either way.
pub(crate) fn newton(elab: &Elaborated, x: &mut SystemState, ctx: &TimeContext<'_>) -> Result<usize> {
    let opts = &elab.circuit.options;
    let n_nodes = elab.node_count();
    let dim = elab.dimension();
    if dim == 0 {
        return Ok(0);
    }
    let mut sys = LinearSystem::zeros(dim);
    let mut trial = LinearSystem::zeros(dim);
    let mut step_small = false;
    for iter in 0..=opts.max_newton_iters {
        assemble_into(&mut sys, elab, x, ctx);
        if step_small && residual_small(&sys, n_nodes, opts.abstol_current, opts.reltol, opts.vntol) {
            return Ok(iter);
        }
        if iter == opts.max_newton_iters {
            break;
        }
        let rhs = -&sys.residual;
        let Some(delta) = sys.jacobian.clone().lu().solve(&rhs) else {
            return Err(Error::NewtonDivergence { time: ctx.time() });
        };
        if delta.iter().any(|d| !d.is_finite()) {
            return Err(Error::NewtonDivergence { time: ctx.time() });
        }
        let max_dv = delta.rows(0, n_nodes).amax();
        let mut factor = if max_dv > MAX_NEWTON_DV { MAX_NEWTON_DV / max_dv } else { 1.0 };
        // Backtracking on the residual norm breaks the limit cycles Newton
        // falls into around regenerative (latch) feedback.
        let within_tol = factor == 1.0 && step_within_tolerance(elab, x, &delta);
        let r0 = merit(&sys, n_nodes);
        let base = x.clone();
        let backtracks = if within_tol { 0 } else { MAX_BACKTRACKS };
        for attempt in 0..=backtracks {
            *x = base.clone();
            x.add_update(&delta, factor);
            if attempt == backtracks {
                break;
            }
            assemble_into(&mut trial, elab, x, ctx);
            if merit(&trial, n_nodes) < r0 {
                break;
            }
            factor *= 0.5;
        }

        step_small = factor == 1.0 && step_within_tolerance(elab, x, &delta);
    }
    Err(Error::NewtonDivergence { time: ctx.time() })
}

/// Whether an update `delta` (already applied to `x`) is below the
/// voltage and branch-current tolerances.
fn step_within_tolerance(elab: &Elaborated, x: &SystemState, delta: &nalgebra::DVector<f64>) -> bool {
    let opts = &elab.circuit.options;
    let n_nodes = elab.node_count();
    (0..n_nodes).all(|i| delta[i].abs() <= opts.reltol * x.node_voltages[i].abs() + opts.vntol)
        && (0..elab.vsource_count())
            .all(|b| delta[n_nodes + b].abs() <= opts.reltol * x.branch_currents[b].abs() + opts.abstol_current)
}

fn residual_small(sys: &LinearSystem, n_nodes: usize, abstol: f64, reltol: f64, vntol: f64) -> bool {
    sys.residual.iter().zip(sys.scale.iter()).enumerate().all(|(i, (r, s))| {
        let tol = if i < n_nodes { abstol + reltol * s } else { vntol + reltol * s };
        r.abs() <= tol
    })
}

/// DC Newton with two fallbacks: pseudo-transient continuation (every node
/// anchored to the previous iterate through a shrinking conductance), then
/// source stepping (all independent sources ramped from zero in ten
/// increments).
pub(crate) fn converge_dc(elab: &Elaborated, x: &mut SystemState, time: f64) -> Result<()> {
    let dc = TimeContext::Dc { time, source_scale: 1.0 };
    let mut trial = x.clone();
    if newton(elab, &mut trial, &dc).is_ok() {
        *x = trial;
        return Ok(());
    }
    let mut trial = x.clone();
    if continuation(elab, &mut trial, time).is_ok() {
        *x = trial;
        return Ok(());
    }
    let mut ramp = x.clone();
    ramp.node_voltages.fill(0.0);
    ramp.branch_currents.fill(0.0);
    for step in 1..=10 {
        let ctx = TimeContext::Dc { time, source_scale: f64::from(step) / 10.0 };
        newton(elab, &mut ramp, &ctx).map_err(|_| Error::NewtonDivergence { time })?;
    }
    *x = ramp;
    Ok(())
}

/// Pseudo-transient homotopy from `x`. Each solve anchors the nodes to the
/// last accepted point; the anchor conductance shrinks after successes and
/// grows after failures until it drops below gmin.
fn continuation(elab: &Elaborated, x: &mut SystemState, time: f64) -> Result<()> {
    const G_START: f64 = 1e-3;
    const G_END: f64 = 1e-13;
    let mut g = G_START;
    for _ in 0..MAX_CONTINUATION_STEPS {
        let anchor = x.clone();
        let mut trial = x.clone();
        match newton(elab, &mut trial, &TimeContext::Anchored { time, g, anchor: &anchor }) {
            Ok(iters) => {
                *x = trial;
                if g < G_END {
                    return newton(elab, x, &TimeContext::Dc { time, source_scale: 1.0 }).map(|_| ());
                }
                g *= if iters <= 5 { 0.1 } else { 0.5 };
            }
            Err(_) => {
                g *= 4.0;
                if g > 1e3 {
                    break;
                }
            }
        }
    }
    Err(Error::NewtonDivergence { time })
}

const MAX_CONTINUATION_STEPS: usize = 200;
