use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, ElementKind, Waveform};
use crate::device::PtmState;
use crate::error::{Error, Result};
use crate::solver::{ptm_operating_points, solve_dc, SystemState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// `lo → hi`, the first leg.
    Up,
    /// `hi → lo`, the return leg.
    Down,
}

/// A PTM state change seen between two consecutive sweep points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTransition {
    pub direction: Direction,
    /// First sweep value at which the new state was observed.
    pub value: f64,
    pub element: String,
    pub to: PtmState,
}

/// Both legs of a hysteretic sweep, indexed by axis position: `down_*[k]`
/// is the return-leg value at `axis[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub source: String,
    /// Element whose current and voltage are recorded.
    pub probe: String,
    pub axis: Vec<f64>,
    pub up_current: Vec<f64>,
    pub down_current: Vec<f64>,
    pub up_voltage: Vec<f64>,
    pub down_voltage: Vec<f64>,
    /// Probe PTM state per point (empty when the probe is not a PTM).
    pub up_states: Vec<PtmState>,
    pub down_states: Vec<PtmState>,
    pub transitions: Vec<SweepTransition>,
}

/// Sweeps the DC value of `source` from `lo` to `hi` and back in `n_points`
/// uniform steps per leg, carrying every PTM state from one point to the
/// next. `lo > hi` sweeps downward first.
///
/// The probe is the first PTM in the circuit, or the swept source itself
/// (delivered current, terminal voltage) when there is none.
pub fn dc_sweep_hysteretic(circuit: &Circuit, source: &str, lo: f64, hi: f64, n_points: usize) -> Result<SweepResult> {
    let probe = circuit
        .elements
        .iter()
        .find(|e| matches!(e.kind, ElementKind::Ptm { .. }))
        .map(|e| e.name.clone())
        .unwrap_or_else(|| source.to_string());
    dc_sweep_hysteretic_probe(circuit, source, &probe, lo, hi, n_points)
}

/// [`dc_sweep_hysteretic`] with an explicit probe element (a PTM or an
/// independent source).
pub fn dc_sweep_hysteretic_probe(
    circuit: &Circuit,
    source: &str,
    probe: &str,
    lo: f64,
    hi: f64,
    n_points: usize,
) -> Result<SweepResult> {
    if n_points < 3 {
        return Err(Error::InvalidParams("a sweep needs at least 3 points".into()));
    }
    if !(lo.is_finite() && hi.is_finite()) || lo == hi {
        return Err(Error::InvalidParams("sweep bounds must be finite and distinct".into()));
    }
    let k_src = circuit
        .elements
        .iter()
        .position(|e| e.name.eq_ignore_ascii_case(source) && e.is_source())
        .ok_or_else(|| Error::UnknownSource(source.to_string()))?;
    let mut elab = circuit.elaborate()?;
    let probe_ix = elab.circuit.elements.iter().position(|e| e.name.eq_ignore_ascii_case(probe));
    let probe = match probe_ix.map(|k| &elab.circuit.elements[k].kind) {
        Some(ElementKind::Ptm { .. }) => Probe::Ptm(elab.ptm_slot(probe).expect("ptm slot")),
        Some(ElementKind::VoltageSource { .. } | ElementKind::CurrentSource { .. }) => Probe::Source(probe_ix.unwrap()),
        _ => return Err(Error::InvalidParams(format!("probe '{probe}' must be a PTM or a source"))),
    };
    let probe_name = elab.circuit.elements[probe_ix.unwrap()].name.clone();

    let axis: Vec<f64> = (0..n_points).map(|k| lo + (hi - lo) * k as f64 / (n_points - 1) as f64).collect();
    let n = n_points;
    let mut out = SweepResult {
        source: elab.circuit.elements[k_src].name.clone(),
        probe: probe_name,
        axis: axis.clone(),
        up_current: vec![0.0; n],
        down_current: vec![0.0; n],
        up_voltage: vec![0.0; n],
        down_voltage: vec![0.0; n],
        up_states: Vec::new(),
        down_states: Vec::new(),
        transitions: Vec::new(),
    };
    if let Probe::Ptm(_) = probe {
        out.up_states = vec![PtmState::Insulating; n];
        out.down_states = vec![PtmState::Insulating; n];
    }

    let mut x = SystemState::initial(&elab);
    let legs = [(Direction::Up, (0..n).collect::<Vec<_>>()), (Direction::Down, (0..n).rev().collect())];
    for (direction, order) in legs {
        for k in order {
            let value = axis[k];
            set_dc(&mut elab.circuit.elements[k_src].kind, value);
            let before = x.ptm_states.clone();
            x = solve_dc(&elab, &x).map_err(|e| Error::Sweep { value, source: Box::new(e) })?;
            for (slot, (a, b)) in before.iter().zip(&x.ptm_states).enumerate() {
                if a != b {
                    let element = elab.ptm_names().nth(slot).unwrap_or_default().to_string();
                    out.transitions.push(SweepTransition { direction, value, element, to: *b });
                }
            }
            let (v, i, state) = probe.read(&elab, &x);
            let (cur, volt, states) = match direction {
                Direction::Up => (&mut out.up_current, &mut out.up_voltage, &mut out.up_states),
                Direction::Down => (&mut out.down_current, &mut out.down_voltage, &mut out.down_states),
            };
            cur[k] = i;
            volt[k] = v;
            if let Some(s) = state {
                states[k] = s;
            }
        }
    }
    Ok(out)
}

fn set_dc(kind: &mut ElementKind, value: f64) {
    match kind {
        ElementKind::VoltageSource { wave } | ElementKind::CurrentSource { wave } => *wave = Waveform::Dc(value),
        _ => unreachable!("sweep source is checked to be independent"),
    }
}

enum Probe {
    Ptm(usize),
    Source(usize),
}

impl Probe {
    /// `(voltage, current, state)` of the probe at `x`.
    fn read(&self, elab: &crate::circuit::Elaborated, x: &SystemState) -> (f64, f64, Option<PtmState>) {
        match *self {
            Probe::Ptm(slot) => {
                let (v, i) = ptm_operating_points(elab, x)[slot];
                (v, i, Some(x.ptm_states[slot]))
            }
            Probe::Source(k) => {
                let e = &elab.circuit.elements[k];
                let node = |n: &str| x.voltage(elab, n).unwrap_or(0.0);
                let v = node(&e.nodes[0]) - node(&e.nodes[1]);
                let i = match &e.kind {
                    ElementKind::VoltageSource { .. } => {
                        let b = elab.vsource_branch(&e.name).expect("branch");
                        -x.branch_currents[b]
                    }
                    ElementKind::CurrentSource { wave } => wave.value(0.0),
                    _ => unreachable!(),
                };
                (v, i, None)
            }
        }
    }
}
