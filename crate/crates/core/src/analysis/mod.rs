//! Studies built on the solver: hysteretic DC sweeps, transition-voltage
//! and mirror-window extraction, sensing runs with metric extraction, and
//! parameter sweeps over those.

mod sense;
mod study;
mod sweep;
mod transitions;

pub use sense::{extract_metrics, run_sense, LogicOutcome, SenseMetrics, SenseRun};
pub use study::{sweep_study, StudyKind, StudyRow, StudySpec, StudyTable};
pub use sweep::{dc_sweep_hysteretic, dc_sweep_hysteretic_probe, Direction, SweepResult, SweepTransition};
pub use transitions::{find_transition_voltages, mirror_window, Bracket, MirrorWindow, TransitionVoltages};
