use super::mna::ptm_operating_points;
use super::newton::{converge_dc, newton};
use super::state::{SystemState, TimeContext};
use crate::circuit::{Elaborated, Stamp};
use crate::device::{ptm_next_state, PtmState};
use crate::error::{Error, Result};

/// PTM slots whose transition condition fires at `x`, with their next state.
pub fn pending_transitions(elab: &Elaborated, x: &SystemState) -> Vec<(usize, PtmState)> {
    let ops = ptm_operating_points(elab, x);
    elab.stamps
        .iter()
        .filter_map(|s| match *s {
            Stamp::Ptm { params, slot, .. } => {
                let (v, i) = ops[slot];
                let current = x.ptm_states[slot];
                let next = ptm_next_state(&params, current, v, i);
                (next != current).then_some((slot, next))
            }
            _ => None,
        })
        .collect()
}

/// Applies PTM transitions at a converged point and re-solves with the new
/// stamps until no condition fires.
///
/// Returns [`Error::StateChatter`] when the states are still changing after
/// `max_state_resolution_iters` re-solves.
pub fn resolve_device_states(elab: &Elaborated, converged: &SystemState, ctx: &TimeContext<'_>) -> Result<SystemState> {
    let budget = elab.circuit.options.max_state_resolution_iters;
    let mut x = converged.clone();
    for _ in 0..budget {
        let flips = pending_transitions(elab, &x);
        if flips.is_empty() {
            return Ok(x);
        }
        for (slot, next) in flips {
            x.ptm_states[slot] = next;
        }
        match *ctx {
            TimeContext::Dc { time, .. } | TimeContext::Anchored { time, .. } => converge_dc(elab, &mut x, time)?,
            TimeContext::Transient { .. } => {
                newton(elab, &mut x, ctx)?;
            }
        }
    }
    if pending_transitions(elab, &x).is_empty() {
        Ok(x)
    } else {
        Err(Error::StateChatter)
    }
}

/// DC operating point with sources at their `t = 0` values and every PTM in
/// a self-consistent state.
pub fn solve_dc(elab: &Elaborated, initial: &SystemState) -> Result<SystemState> {
    if !initial.matches(elab) {
        return Err(Error::InvalidParams("initial state does not match the circuit".into()));
    }
    let mut x = initial.clone();
    x.time = 0.0;
    converge_dc(elab, &mut x, 0.0)?;
    let mut out = resolve_device_states(elab, &x, &TimeContext::dc()).map_err(|e| match e {
        Error::StateChatter => Error::NoConsistentState,
        other => other,
    })?;
    out.capacitor_currents.fill(0.0);
    Ok(out)
}
