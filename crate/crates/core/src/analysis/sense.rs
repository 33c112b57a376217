use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netlist::{build_with_schedule, CellKind, CellState, StimulusSchedule, TopologyKind, TopologyParams};
use crate::solver::{run_transient_from, solve_dc, PtmEvent, SystemState, TransientResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogicOutcome {
    High,
    Low,
    Indeterminate,
}

impl LogicOutcome {
    /// High above 90% of the rail, low below 10%.
    pub fn classify(v: f64, vdd: f64) -> Self {
        if v > 0.9 * vdd {
            LogicOutcome::High
        } else if v < 0.1 * vdd {
            LogicOutcome::Low
        } else {
            LogicOutcome::Indeterminate
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SenseMetrics {
    /// Reset release to output decision, both at 50%. `None` when the
    /// output never crosses after the release.
    pub delay: Option<f64>,
    /// Source-delivered energy over the cycle divided by the cycle length.
    pub sensing_power: f64,
    /// `delay * sensing_power`.
    pub pdp: Option<f64>,
    pub logic_outcome: LogicOutcome,
    pub final_output: f64,
    pub events: Vec<PtmEvent>,
}

impl SenseMetrics {
    pub fn delay(&self) -> Result<f64> {
        self.delay.ok_or(Error::NoCrossing)
    }
}

#[derive(Debug, Clone)]
pub struct SenseRun {
    pub kind: TopologyKind,
    pub cell: CellState,
    pub result: TransientResult,
    pub metrics: SenseMetrics,
}

/// Builds `kind` for `cell`, solves the reset-phase operating point and
/// integrates one full cycle.
pub fn run_sense(
    kind: TopologyKind,
    cell: CellState,
    params: &TopologyParams,
    schedule: &StimulusSchedule,
) -> Result<SenseRun> {
    if !kind.is_sense_amp() {
        return Err(Error::InvalidParams(format!("{kind} is not a sense amplifier")));
    }
    let params = params.clone().with_cell(cell);
    let circuit = build_with_schedule(kind, &params, schedule)?;
    let elab = circuit.elaborate()?;
    let mut op = solve_dc(&elab, &SystemState::initial(&elab))?;
    if kind == TopologyKind::ConvVsa {
        // The bitline is left at its previous level by the last access and
        // is restored by this cycle's precharge.
        if let Some(i) = elab.node("bl") {
            op.node_voltages[i] = params.v_bl_start;
        }
    }
    let result = run_transient_from(&elab, &op, schedule.timing.cycle)?;
    let metrics = extract_metrics(&result, schedule, kind)?;
    Ok(SenseRun { kind, cell, result, metrics })
}

/// First time after `from` at which `v` crosses `level`, by linear
/// interpolation between samples.
fn crossing(time: &[f64], v: &[f64], level: f64, from: f64) -> Option<f64> {
    (1..time.len()).filter(|&k| time[k] >= from).find_map(|k| {
        let (a, b) = (v[k - 1] - level, v[k] - level);
        if a == 0.0 && time[k - 1] >= from {
            return Some(time[k - 1]);
        }
        if a * b < 0.0 || (b == 0.0 && a != 0.0) {
            let t = time[k - 1] + (time[k] - time[k - 1]) * a / (a - b);
            return (t >= from).then_some(t);
        }
        None
    })
}

/// Delay, power and outcome of one sensing cycle.
///
/// Power sums every voltage source except a voltage-mode cell stimulus;
/// ideal current-source cells are excluded because their branch is
/// supplied, and therefore counted, through the rail.
pub fn extract_metrics(
    result: &TransientResult,
    schedule: &StimulusSchedule,
    kind: TopologyKind,
) -> Result<SenseMetrics> {
    if !kind.is_sense_amp() {
        return Err(Error::InvalidParams(format!("{kind} is not a sense amplifier")));
    }
    if result.len() < 2 {
        return Err(Error::InvalidParams("transient result has fewer than two samples".into()));
    }
    let reset = schedule.reset()?;
    let release = reset.release_at.ok_or_else(|| Error::InvalidParams("reset signal never releases".into()))?;
    let node_wave =
        |node: &str| result.voltage(node).ok_or_else(|| Error::InvalidParams(format!("result has no node '{node}'")));
    let reset_v = node_wave(&reset.node)?;
    let out_v = node_wave(&schedule.output)?;
    let t_reset = crossing(&result.time, reset_v, reset.midpoint(), release);
    let t_out = t_reset.and_then(|t| crossing(&result.time, out_v, 0.5 * schedule.vdd, t));
    let delay = match (t_reset, t_out) {
        (Some(a), Some(b)) => Some(b - a),
        _ => None,
    };

    let excluded = |name: &str| {
        (schedule.cell.kind == CellKind::Voltage && name.eq_ignore_ascii_case(&schedule.cell.element))
            || is_current_source(name)
    };
    let mut energy = 0.0;
    for (j, name) in result.source_names.iter().enumerate() {
        if excluded(name) {
            continue;
        }
        let p = &result.source_power[j];
        energy +=
            (1..result.len()).map(|k| 0.5 * (p[k] + p[k - 1]) * (result.time[k] - result.time[k - 1])).sum::<f64>();
    }
    let sensing_power = energy / schedule.timing.cycle;
    let final_output = *out_v.last().expect("non-empty");
    Ok(SenseMetrics {
        delay,
        sensing_power,
        pdp: delay.map(|d| d * sensing_power),
        logic_outcome: LogicOutcome::classify(final_output, schedule.vdd),
        final_output,
        events: result.events.clone(),
    })
}

/// Element names carry their card letter, so current sources start with `I`.
fn is_current_source(name: &str) -> bool {
    name.starts_with(['I', 'i'])
}
