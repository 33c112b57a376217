//! Nonlinear circuit engine: MNA assembly, DC operating point and implicit
//! transient analysis with hysteretic PTM state resolution.

mod dc;
mod mna;
mod newton;
mod state;
mod transient;

pub use dc::{pending_transitions, resolve_device_states, solve_dc};
pub use mna::{assemble_system, element_powers, gmin_power, ptm_operating_points, LinearSystem};
pub use state::{SystemState, TimeContext};
pub use transient::{run_transient, run_transient_from, step_transient, PtmEvent, TransientResult};

use crate::circuit::{Circuit, Elaborated};
use crate::error::Result;

/// Elaborates `circuit` and solves its DC operating point from the default
/// initial state.
pub fn operating_point(circuit: &Circuit) -> Result<(Elaborated, SystemState)> {
    let elab = circuit.elaborate()?;
    let op = solve_dc(&elab, &SystemState::initial(&elab))?;
    Ok((elab, op))
}
