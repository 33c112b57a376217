//! SPICE-like netlist text format and parametric topology builders.
//!
//! The grammar is documented in `docs/netlist.md`.

mod parse;
mod print;
mod schedule;
mod topology;

pub use parse::{parse_netlist, parse_number};
pub use print::{format_number, print_netlist};
pub use schedule::{CellKind, CellState, CellStimulus, ControlSignal, StimulusSchedule, Timing};
pub use topology::{
    build_topology, build_with_schedule, default_fins, default_schedule, device_labels, schedule_for, TopologyKind,
    TopologyParams,
};
