use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::circuit::{Elaborated, ElementKind, IntegrationMethod};
use crate::device::PtmState;

/// Unknowns and discrete device state of one solution point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    /// One entry per non-ground node, in elaboration order.
    pub node_voltages: Vec<f64>,
    /// One entry per voltage source; current entering the `+` terminal.
    pub branch_currents: Vec<f64>,
    /// One entry per PTM element.
    pub ptm_states: Vec<PtmState>,
    /// Capacitor currents carried between trapezoidal steps.
    pub capacitor_currents: Vec<f64>,
    pub time: f64,
}

impl SystemState {
    /// Zero voltages (or `.ic`/nodeset guesses) and each PTM's declared
    /// initial state.
    pub fn initial(elab: &Elaborated) -> Self {
        let mut node_voltages = vec![0.0; elab.node_count()];
        for (name, v) in &elab.circuit.nodeset {
            if let Some(i) = elab.node(name) {
                node_voltages[i] = *v;
            }
        }
        let ptm_states = elab
            .ptm_elements
            .iter()
            .map(|&k| match elab.circuit.elements[k].kind {
                ElementKind::Ptm { initial_state, .. } => initial_state,
                _ => unreachable!("ptm table points at a non-PTM element"),
            })
            .collect();
        Self {
            node_voltages,
            branch_currents: vec![0.0; elab.vsource_count()],
            ptm_states,
            capacitor_currents: vec![0.0; elab.capacitor_count],
            time: 0.0,
        }
    }

    pub fn matches(&self, elab: &Elaborated) -> bool {
        self.node_voltages.len() == elab.node_count()
            && self.branch_currents.len() == elab.vsource_count()
            && self.ptm_states.len() == elab.ptm_count()
            && self.capacitor_currents.len() == elab.capacitor_count
    }

    pub fn voltage(&self, elab: &Elaborated, node: &str) -> Option<f64> {
        if node == crate::circuit::GROUND {
            return Some(0.0);
        }
        elab.node(node).map(|i| self.node_voltages[i])
    }

    pub fn ptm_state(&self, elab: &Elaborated, name: &str) -> Option<PtmState> {
        elab.ptm_slot(name).map(|i| self.ptm_states[i])
    }

    pub fn with_ptm_state(mut self, slot: usize, state: PtmState) -> Self {
        self.ptm_states[slot] = state;
        self
    }

    pub(crate) fn add_update(&mut self, delta: &DVector<f64>, factor: f64) {
        let n = self.node_voltages.len();
        for (i, v) in self.node_voltages.iter_mut().enumerate() {
            *v += factor * delta[i];
        }
        for (i, c) in self.branch_currents.iter_mut().enumerate() {
            *c += factor * delta[n + i];
        }
    }
}

/// Where in an analysis an assembly happens.
#[derive(Debug, Clone, Copy)]
pub enum TimeContext<'a> {
    /// Capacitors open; independent sources evaluated at `time` and scaled
    /// by `source_scale` (source stepping).
    Dc { time: f64, source_scale: f64 },
    /// Implicit step ending at `time` from `previous`.
    Transient { time: f64, dt: f64, method: IntegrationMethod, previous: &'a SystemState },
    /// DC continuation: every node is tied to `anchor` through conductance
    /// `g` (pseudo-transient homotopy).
    Anchored { time: f64, g: f64, anchor: &'a SystemState },
}

impl TimeContext<'_> {
    pub fn dc() -> Self {
        TimeContext::Dc { time: 0.0, source_scale: 1.0 }
    }

    pub fn time(&self) -> f64 {
        match *self {
            TimeContext::Dc { time, .. } | TimeContext::Transient { time, .. } | TimeContext::Anchored { time, .. } => {
                time
            }
        }
    }

    pub(crate) fn source_scale(&self) -> f64 {
        match *self {
            TimeContext::Dc { source_scale, .. } => source_scale,
            TimeContext::Transient { .. } | TimeContext::Anchored { .. } => 1.0,
        }
    }
}
