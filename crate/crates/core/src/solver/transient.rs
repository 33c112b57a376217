//! Implicit transient integration with PTM event localization.
//!
//! A step is first converged with every PTM state frozen. When the converged
//! point fires a transition, the step is rejected and halved until it is no
//! longer than `dt_min`; only then is the flip applied and the step re-solved
//! with the new resistance. Event times are therefore resolved to `dt_min`
//! without root-finding on the event function.

use serde::{Deserialize, Serialize};

use super::dc::{pending_transitions, resolve_device_states, solve_dc};
use super::mna::{capacitor_currents, element_powers, ptm_operating_points};
use super::newton::newton;
use super::state::{SystemState, TimeContext};
use crate::circuit::{Elaborated, ElementKind};
use crate::device::PtmState;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PtmEvent {
    pub time: f64,
    pub element: String,
    pub from: PtmState,
    pub to: PtmState,
}

impl PtmEvent {
    pub fn is_imt(&self) -> bool {
        self.to == PtmState::Metallic
    }
}

/// Sampled waveforms at every accepted step.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TransientResult {
    pub time: Vec<f64>,
    pub node_names: Vec<String>,
    /// `node_voltages[node][sample]`.
    pub node_voltages: Vec<Vec<f64>>,
    /// Voltage sources, current sources and PTMs, in element order.
    pub branch_names: Vec<String>,
    /// `branch_currents[branch][sample]`; for sources the current entering
    /// the `+` terminal, for PTMs the current from first to second terminal.
    pub branch_currents: Vec<Vec<f64>>,
    /// Independent source names, in element order.
    pub source_names: Vec<String>,
    /// `source_power[source][sample]`, power delivered by the source.
    pub source_power: Vec<Vec<f64>>,
    pub ptm_names: Vec<String>,
    /// `ptm_states[ptm][sample]`.
    pub ptm_states: Vec<Vec<PtmState>>,
    pub events: Vec<PtmEvent>,
}

impl TransientResult {
    fn new(elab: &Elaborated) -> Self {
        let mut branch_names = Vec::new();
        let mut source_names = Vec::new();
        for e in &elab.circuit.elements {
            match e.kind {
                ElementKind::VoltageSource { .. } | ElementKind::CurrentSource { .. } => {
                    branch_names.push(e.name.clone());
                    source_names.push(e.name.clone());
                }
                ElementKind::Ptm { .. } => branch_names.push(e.name.clone()),
                _ => {}
            }
        }
        let ptm_names: Vec<String> = elab.ptm_names().map(str::to_string).collect();
        Self {
            node_names: elab.node_names.clone(),
            node_voltages: vec![Vec::new(); elab.node_count()],
            branch_currents: vec![Vec::new(); branch_names.len()],
            source_power: vec![Vec::new(); source_names.len()],
            ptm_states: vec![Vec::new(); ptm_names.len()],
            branch_names,
            source_names,
            ptm_names,
            ..Self::default()
        }
    }

    fn record(&mut self, elab: &Elaborated, x: &SystemState, ctx: &TimeContext<'_>) {
        self.time.push(x.time);
        for (series, v) in self.node_voltages.iter_mut().zip(&x.node_voltages) {
            series.push(*v);
        }
        let ptm_ops = ptm_operating_points(elab, x);
        let powers = element_powers(elab, x, ctx);
        let (mut b, mut s) = (0, 0);
        let (mut vs, mut ptm) = (0, 0);
        for (k, e) in elab.circuit.elements.iter().enumerate() {
            match e.kind {
                ElementKind::VoltageSource { .. } => {
                    self.branch_currents[b].push(x.branch_currents[vs]);
                    self.source_power[s].push(powers[k]);
                    vs += 1;
                    b += 1;
                    s += 1;
                }
                ElementKind::CurrentSource { ref wave } => {
                    self.branch_currents[b].push(wave.value(x.time));
                    self.source_power[s].push(powers[k]);
                    b += 1;
                    s += 1;
                }
                ElementKind::Ptm { .. } => {
                    self.branch_currents[b].push(ptm_ops[ptm].1);
                    ptm += 1;
                    b += 1;
                }
                _ => {}
            }
        }
        for (series, st) in self.ptm_states.iter_mut().zip(&x.ptm_states) {
            series.push(*st);
        }
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn voltage(&self, node: &str) -> Option<&[f64]> {
        self.node_names.iter().position(|n| n == node).map(|i| self.node_voltages[i].as_slice())
    }

    pub fn current(&self, branch: &str) -> Option<&[f64]> {
        self.branch_names
            .iter()
            .position(|n| n.eq_ignore_ascii_case(branch))
            .map(|i| self.branch_currents[i].as_slice())
    }

    pub fn power(&self, source: &str) -> Option<&[f64]> {
        self.source_names.iter().position(|n| n.eq_ignore_ascii_case(source)).map(|i| self.source_power[i].as_slice())
    }

    pub fn final_time(&self) -> f64 {
        self.time.last().copied().unwrap_or(0.0)
    }
}

/// One implicit step of length `dt` from a converged `state`, with PTM
/// states resolved at the new point.
///
/// Newton or state-resolution failures are returned as-is so the caller can
/// retry with a smaller step.
pub fn step_transient(elab: &Elaborated, state: &SystemState, dt: f64) -> Result<SystemState> {
    let opts = &elab.circuit.options;
    if dt < opts.dt_min {
        return Err(Error::StepFailure { time: state.time });
    }
    let ctx = TimeContext::Transient { time: state.time + dt, dt, method: opts.integration_method, previous: state };
    let mut y = state.clone();
    y.time = state.time + dt;
    newton(elab, &mut y, &ctx)?;
    let mut y = resolve_device_states(elab, &y, &ctx)?;
    y.capacitor_currents = capacitor_currents(elab, &y, &ctx);
    Ok(y)
}

/// Transient analysis from the DC operating point at `t = 0`.
pub fn run_transient(elab: &Elaborated, t_end: f64) -> Result<TransientResult> {
    let op = solve_dc(elab, &SystemState::initial(elab))?;
    run_transient_from(elab, &op, t_end)
}

/// Transient analysis from an arbitrary converged starting point.
pub fn run_transient_from(elab: &Elaborated, initial: &SystemState, t_end: f64) -> Result<TransientResult> {
    if !(t_end > initial.time) {
        return Err(Error::InvalidParams("t_end must be after the start time".into()));
    }
    let opts = elab.circuit.options;
    let method = opts.integration_method;
    let mut result = TransientResult::new(elab);
    let mut x = initial.clone();
    result.record(elab, &x, &TimeContext::Dc { time: x.time, source_scale: 1.0 });

    let breakpoints = elab.breakpoints_after(x.time);
    let mut next_bp = 0;
    let mut dt = opts.dt_initial;
    let mut hunting = false;
    // Times closer than this are treated as equal.
    let eps = 1e-6 * opts.dt_min;

    while x.time < t_end - eps {
        while next_bp < breakpoints.len() && breakpoints[next_bp] <= x.time + eps {
            next_bp += 1;
        }
        let mut h = dt.min(opts.dt_max).min(t_end - x.time);
        let mut target = x.time + h;
        if let Some(&bp) = breakpoints.get(next_bp) {
            if target >= bp - eps {
                h = bp - x.time;
                target = bp;
            }
        }
        if x.time + h >= t_end - eps {
            target = t_end;
            h = t_end - x.time;
        }
        let can_halve = h / 2.0 >= opts.dt_min;

        let ctx = TimeContext::Transient { time: target, dt: h, method, previous: &x };
        let mut y = x.clone();
        y.time = target;
        let iters = match newton(elab, &mut y, &ctx) {
            Ok(n) => n,
            Err(_) if can_halve => {
                dt = h / 2.0;
                continue;
            }
            Err(_) => return Err(Error::StepFailure { time: x.time }),
        };

        let dv = y.node_voltages.iter().zip(&x.node_voltages).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if dv > opts.max_step_dv && can_halve {
            dt = h / 2.0;
            continue;
        }

        if !pending_transitions(elab, &y).is_empty() {
            if can_halve {
                dt = h / 2.0;
                hunting = true;
                continue;
            }
            y = match resolve_device_states(elab, &y, &ctx) {
                Ok(r) => r,
                Err(_) => return Err(Error::StepFailure { time: x.time }),
            };
            for (slot, name) in elab.ptm_names().enumerate() {
                if y.ptm_states[slot] != x.ptm_states[slot] {
                    result.events.push(PtmEvent {
                        time: target,
                        element: name.to_string(),
                        from: x.ptm_states[slot],
                        to: y.ptm_states[slot],
                    });
                }
            }
            hunting = false;
            dt = opts.dt_initial;
        } else if !hunting {
            dt = if iters <= 4 && dv < 0.5 * opts.max_step_dv { (2.0 * h).min(opts.dt_max) } else { h.max(dt) };
        } else {
            dt = h;
        }

        y.capacitor_currents = capacitor_currents(elab, &y, &ctx);
        let rec_ctx = TimeContext::Transient { time: target, dt: h, method, previous: &x };
        result.record(elab, &y, &rec_ctx);
        x = y;
    }
    Ok(result)
}
