//! Compact device models: FinFET, bulk PTM and the composite Hyper-FET.

mod finfet;
mod hyperfet;
mod ptm;

pub use finfet::{diode_voltage, finfet_current, FinFetEval, FinFetParams, Polarity, THERMAL_VOLTAGE};
pub use hyperfet::{hyperfet_branch_solve, HyperFetSolution};
pub use ptm::{ptm_next_state, ptm_resistance, PtmParams, PtmState, NOMINAL_AREA, NOMINAL_LENGTH};
