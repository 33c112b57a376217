//! CSV tables and versioned JSON documents.
//!
//! CSV files have one header line and RFC 4180 quoting. Numbers use the
//! shortest representation that parses back to the same `f64`; missing
//! values are empty fields. Waveform tables start with `time_s`.
//!
//! JSON documents carry `schema_version` and `kind` at the top level; the
//! schemas live in `docs/schemas/`.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::{MirrorWindow, SenseMetrics, StudyTable, SweepResult, TransitionVoltages};
use crate::circuit::Elaborated;
use crate::device::PtmState;
use crate::error::Result;
use crate::montecarlo::{McConfig, McSample, McSummary};
use crate::netlist::{format_number, CellState, TopologyKind};
use crate::solver::{SystemState, TransientResult};

/// Version of every JSON document layout emitted here.
pub const SCHEMA_VERSION: u32 = 1;

fn num(v: f64) -> String {
    format_number(v)
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn state(s: PtmState) -> &'static str {
    match s {
        PtmState::Insulating => "insulating",
        PtmState::Metallic => "metallic",
    }
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(w)
}

/// Waveforms: `time_s`, then `v(node)`, `i(branch)`, `p(source)` and
/// `state(ptm)` columns.
pub fn write_waveforms_csv<W: Write>(w: W, r: &TransientResult) -> Result<()> {
    let mut out = writer(w);
    let mut header = vec!["time_s".to_string()];
    header.extend(r.node_names.iter().map(|n| format!("v({n})")));
    header.extend(r.branch_names.iter().map(|n| format!("i({n})")));
    header.extend(r.source_names.iter().map(|n| format!("p({n})")));
    header.extend(r.ptm_names.iter().map(|n| format!("state({n})")));
    out.write_record(&header)?;
    for k in 0..r.len() {
        let mut row = vec![num(r.time[k])];
        row.extend(r.node_voltages.iter().map(|s| num(s[k])));
        row.extend(r.branch_currents.iter().map(|s| num(s[k])));
        row.extend(r.source_power.iter().map(|s| num(s[k])));
        row.extend(r.ptm_states.iter().map(|s| state(s[k]).to_string()));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// One row per axis point with both sweep legs side by side.
pub fn write_sweep_csv<W: Write>(w: W, s: &SweepResult) -> Result<()> {
    let mut out = writer(w);
    out.write_record([
        "value",
        "up_current_a",
        "down_current_a",
        "up_voltage_v",
        "down_voltage_v",
        "up_state",
        "down_state",
    ])?;
    for k in 0..s.axis.len() {
        let st = |v: &[PtmState]| v.get(k).map(|x| state(*x).to_string()).unwrap_or_default();
        out.write_record([
            num(s.axis[k]),
            num(s.up_current[k]),
            num(s.down_current[k]),
            num(s.up_voltage[k]),
            num(s.down_voltage[k]),
            st(&s.up_states),
            st(&s.down_states),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_study_csv<W: Write>(w: W, t: &StudyTable) -> Result<()> {
    let mut out = writer(w);
    let mut header = vec![t.axis_name.clone(), "n_fin".into()];
    header.extend(t.columns.iter().cloned());
    header.push("error".into());
    out.write_record(&header)?;
    for r in &t.rows {
        let mut row = vec![num(r.axis), r.n_fin.to_string()];
        row.extend(r.values.iter().map(|v| opt(*v)));
        row.push(r.error.clone().unwrap_or_default());
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

fn outcome(m: Option<crate::analysis::LogicOutcome>) -> String {
    m.map(|o| serde_json::to_value(o).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default())
        .unwrap_or_default()
}

/// Per-sample table: draws, LRS metrics, both outcomes and the error tag.
pub fn write_mc_csv<W: Write>(w: W, samples: &[McSample]) -> Result<()> {
    let mut out = writer(w);
    let labels: Vec<String> = {
        let mut set = std::collections::BTreeSet::new();
        for s in samples {
            set.extend(s.draw.delta_v_th.keys().cloned());
        }
        set.into_iter().collect()
    };
    let mut header: Vec<String> = vec!["index".into(), "v_c_imt_v".into(), "l_ptm_m".into()];
    header.extend(labels.iter().map(|l| format!("dvth_{l}_v")));
    header.extend(
        ["delay_s", "sensing_power_w", "pdp_j", "lrs_outcome", "hrs_outcome", "imt_time_s", "error"].map(String::from),
    );
    out.write_record(&header)?;
    for s in samples {
        let mut row = vec![s.index.to_string(), opt(s.draw.v_c_imt), opt(s.draw.l_ptm)];
        row.extend(labels.iter().map(|l| opt(s.draw.delta_v_th.get(l).copied())));
        let m = s.metrics.as_ref();
        row.push(opt(m.and_then(|m| m.delay)));
        row.push(opt(m.map(|m| m.sensing_power)));
        row.push(opt(m.and_then(|m| m.pdp)));
        row.push(outcome(m.map(|m| m.logic_outcome)));
        row.push(outcome(s.hrs_outcome));
        row.push(opt(m.and_then(|m| m.events.iter().find(|e| e.is_imt())).map(|e| e.time)));
        row.push(s.error.clone().unwrap_or_default());
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// `{schema_version, kind, ...fields}`.
pub fn document(kind: &str, fields: impl Serialize) -> Result<Value> {
    let mut doc = json!({ "schema_version": SCHEMA_VERSION, "kind": kind });
    if let Value::Object(extra) = serde_json::to_value(fields)? {
        doc.as_object_mut().expect("object").extend(extra);
    }
    Ok(doc)
}

/// Operating point: node voltages, source branch currents and PTM states.
pub fn dc_json(elab: &Elaborated, x: &SystemState) -> Result<Value> {
    let nodes: BTreeMap<&str, f64> =
        elab.node_names().iter().map(String::as_str).zip(x.node_voltages.iter().copied()).collect();
    let currents: BTreeMap<&str, f64> = elab.vsource_names().zip(x.branch_currents.iter().copied()).collect();
    let states: BTreeMap<&str, &str> = elab.ptm_names().zip(x.ptm_states.iter().map(|s| state(*s))).collect();
    document("dc", json!({ "nodes": nodes, "source_currents": currents, "ptm_states": states }))
}

pub fn sense_json(topology: TopologyKind, cell: CellState, m: &SenseMetrics) -> Result<Value> {
    document("sense", json!({ "topology": topology, "cell": cell, "metrics": m }))
}

pub fn transitions_json(t: &TransitionVoltages, vdd: f64, tol: f64) -> Result<Value> {
    document("transitions", json!({ "vdd": vdd, "tol": tol, "voltages": t }))
}

pub fn window_json(w: &MirrorWindow) -> Result<Value> {
    document("window", w)
}

pub fn mc_summary_json(topology: TopologyKind, config: &McConfig, s: &McSummary) -> Result<Value> {
    document("mc-summary", json!({ "topology": topology, "config": config, "summary": s }))
}

/// Pretty JSON text with a trailing newline.
pub fn to_json_string(v: &Value) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}
