//! Simulation and analysis toolkit for sense amplifiers built around
//! phase-transition-material (PTM) devices.
//!
//! The crate is organised bottom-up:
//!
//! * [`device`] — FinFET, bulk PTM and Hyper-FET compact models.
//! * [`circuit`] and [`solver`] — a small modified-nodal-analysis engine with
//!   DC and implicit transient analyses that keeps every PTM in a
//!   self-consistent discrete state.
//! * [`netlist`] — SPICE-like text format and parametric builders for the
//!   sense-amplifier topologies and device test fixtures.
//! * [`analysis`] — hysteretic sweeps, transition-voltage and mirror-window
//!   extraction, sensing runs and metric extraction.
//! * [`montecarlo`] — seeded, order-independent process-variation batches.
//! * [`formats`] — CSV and JSON emitters shared with the command-line tool.
//!
//! The guide in `book/` walks through each layer; its code listings are
//! compiled as doc-tests of this crate.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod circuit;
pub mod device;
pub mod error;
pub mod formats;
pub mod montecarlo;
pub mod netlist;
pub mod solver;

pub use circuit::{Circuit, Element, ElementKind, IntegrationMethod, SolverOptions, Waveform};
pub use error::{Error, ParseError, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/devices.md")]
    mod devices {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/netlist.md")]
    mod netlist {}
    #[doc = include_str!("../../../book/src/topologies.md")]
    mod topologies {}
    #[doc = include_str!("../../../book/src/analysis.md")]
    mod analysis {}
    #[doc = include_str!("../../../book/src/montecarlo.md")]
    mod montecarlo {}
}
