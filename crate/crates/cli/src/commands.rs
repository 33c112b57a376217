//! Subcommand bodies. Every command returns the files it wrote.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ptmsa::analysis::{
    dc_sweep_hysteretic, find_transition_voltages, mirror_window, run_sense, sweep_study, StudySpec,
};
use ptmsa::device::{FinFetParams, Polarity};
use ptmsa::formats;
use ptmsa::montecarlo::{run_mc, summarize, Family, McConfig, McMode};
use ptmsa::netlist::{build_topology, parse_netlist, schedule_for, TopologyKind, TopologyParams};
use ptmsa::solver::{operating_point, run_transient};
use ptmsa::{Circuit, Error, IntegrationMethod};

use crate::overrides;
use crate::{Command, Common, DeviceArgs, Method, PolarityArg, Vary};

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn user(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self { code: if e.is_solver_error() { 2 } else { 1 }, message: e.to_string() }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

/// Overrides split by target.
#[derive(Default)]
struct Sets {
    params: Vec<(String, String)>,
    mc: Vec<(String, String)>,
    study: Vec<(String, String)>,
}

fn route(common: &Common) -> Outcome<Sets> {
    let mut sets = Sets::default();
    for raw in &common.sets {
        let (key, value) = overrides::split(raw).map_err(Failure::user)?;
        if let Some(rest) = key.strip_prefix("mc.") {
            sets.mc.push((rest.to_string(), value));
        } else if let Some(rest) = key.strip_prefix("study.") {
            sets.study.push((rest.to_string(), value));
        } else {
            sets.params.push((key, value));
        }
    }
    Ok(sets)
}

fn method(m: Method) -> IntegrationMethod {
    match m {
        Method::Be => IntegrationMethod::BackwardEuler,
        Method::Trap => IntegrationMethod::Trapezoidal,
    }
}

fn topology_params(kind: TopologyKind, common: &Common, sets: &Sets) -> Outcome<TopologyParams> {
    if !sets.mc.is_empty() || !sets.study.is_empty() {
        return Err(Failure::user("mc.* and study.* overrides only apply to `mc` and `sweep --study`"));
    }
    let mut params = overrides::apply(&TopologyParams::default(), &sets.params).map_err(Failure::user)?;
    if let Some(m) = common.method {
        params.options.integration_method = method(m);
    }
    params.validate(kind)?;
    Ok(params)
}

fn load_netlist(path: &Path, common: &Common, sets: &Sets) -> Outcome<Circuit> {
    let text = fs::read_to_string(path).map_err(|e| Failure::user(format!("{}: {e}", path.display())))?;
    let mut circuit = parse_netlist(&text).map_err(|e| Failure::user(format!("{}: {e}", path.display())))?;
    let mut opts = Vec::new();
    for (key, value) in sets.params.iter().chain(&sets.mc).chain(&sets.study) {
        match key.strip_prefix("options.") {
            Some(rest) => opts.push((rest.to_string(), value.clone())),
            None => return Err(Failure::user(format!("'{key}' cannot be set on a netlist; only options.* can"))),
        }
    }
    circuit.options = overrides::apply(&circuit.options, &opts).map_err(Failure::user)?;
    if let Some(m) = common.method {
        circuit.options.integration_method = method(m);
    }
    Ok(circuit)
}

/// Renders into memory, then replaces `dir/name` in one rename so readers
/// never see a partial file.
fn write_atomic(dir: &Path, name: &str, render: impl FnOnce(&mut Vec<u8>) -> ptmsa::Result<()>) -> Outcome<PathBuf> {
    let mut buf = Vec::new();
    render(&mut buf)?;
    let io = |e: std::io::Error| Failure::user(format!("{}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(&buf).map_err(io)?;
    let path = dir.join(name);
    tmp.persist(&path).map_err(|e| io(e.error))?;
    Ok(path)
}

fn write_json(dir: &Path, name: &str, doc: ptmsa::Result<serde_json::Value>) -> Outcome<PathBuf> {
    let text = formats::to_json_string(&doc?)?;
    write_atomic(dir, name, |buf| {
        buf.extend_from_slice(text.as_bytes());
        Ok(())
    })
}

pub fn execute(command: Command) -> Outcome<Vec<PathBuf>> {
    match command {
        Command::Dc(input) => {
            let sets = route(&input.common)?;
            let circuit = match (input.source.topology, &input.source.netlist) {
                (Some(kind), _) => build_topology(kind, &topology_params(kind, &input.common, &sets)?)?.0,
                (None, Some(path)) => load_netlist(path, &input.common, &sets)?,
                (None, None) => unreachable!("clap requires one input"),
            };
            let (elab, x) = operating_point(&circuit)?;
            Ok(vec![write_json(&input.common.out, "dc.json", formats::dc_json(&elab, &x))?])
        }
        Command::Tran { input, t_end, cell } => {
            let sets = route(&input.common)?;
            let result = match (input.source.topology, &input.source.netlist, t_end) {
                (Some(kind), _, None) if kind.is_sense_amp() => {
                    let params = topology_params(kind, &input.common, &sets)?;
                    run_sense(kind, cell, &params, &schedule_for(kind, &params)?)?.result
                }
                (_, _, None) => return Err(Failure::user("--t-end is required unless simulating a sense amplifier")),
                (Some(kind), _, Some(t)) => {
                    let params = topology_params(kind, &input.common, &sets)?.with_cell(cell);
                    run_transient(&build_topology(kind, &params)?.0.elaborate()?, t)?
                }
                (None, Some(path), Some(t)) => {
                    run_transient(&load_netlist(path, &input.common, &sets)?.elaborate()?, t)?
                }
                (None, None, _) => unreachable!("clap requires one input"),
            };
            Ok(vec![write_atomic(&input.common.out, "tran.csv", |b| formats::write_waveforms_csv(b, &result))?])
        }
        Command::Sweep { input, source, from, to, points } => {
            let sets = route(&input.common)?;
            let out = &input.common.out;
            if let Some(study) = input.source.study {
                if source.is_some() || from.is_some() || to.is_some() {
                    return Err(Failure::user("--source/--from/--to do not apply to --study"));
                }
                // Plain keys are accepted as well as the `study.` prefix.
                let keys: Vec<_> = sets.study.iter().chain(&sets.params).chain(&sets.mc).cloned().collect();
                if !sets.mc.is_empty() {
                    return Err(Failure::user("mc.* overrides do not apply to a study"));
                }
                let spec = overrides::apply(&StudySpec::new(study), &keys).map_err(Failure::user)?;
                let table = sweep_study(&spec)?;
                return Ok(vec![write_atomic(out, "study.csv", |b| formats::write_study_csv(b, &table))?]);
            }
            let (circuit, defaults) = match (input.source.topology, &input.source.netlist) {
                (Some(kind), _) => {
                    let params = topology_params(kind, &input.common, &sets)?;
                    let defaults = match kind {
                        TopologyKind::BulkPtmFixture => Some(("VSRC", 0.0, params.vdd)),
                        TopologyKind::HyperfetFixture => Some(match params.fixture_polarity {
                            Polarity::N => ("VG", 0.0, params.vdd),
                            Polarity::P => ("VG", params.vdd, 0.0),
                        }),
                        _ => None,
                    };
                    (build_topology(kind, &params)?.0, defaults)
                }
                (None, Some(path)) => (load_netlist(path, &input.common, &sets)?, None),
                (None, None) => unreachable!("clap requires one input"),
            };
            let pick = |given: Option<f64>, default: Option<f64>, flag: &str| {
                given.or(default).ok_or_else(|| Failure::user(format!("{flag} is required for this circuit")))
            };
            let source = match source {
                Some(s) => s,
                None => defaults
                    .map(|d| d.0.to_string())
                    .ok_or_else(|| Failure::user("--source is required for this circuit"))?,
            };
            let lo = pick(from, defaults.map(|d| d.1), "--from")?;
            let hi = pick(to, defaults.map(|d| d.2), "--to")?;
            let sweep = dc_sweep_hysteretic(&circuit, &source, lo, hi, points)?;
            Ok(vec![write_atomic(out, "sweep.csv", |b| formats::write_sweep_csv(b, &sweep))?])
        }
        Command::Sense { topology, cell, common } => {
            if !topology.is_sense_amp() {
                return Err(Failure::user(format!("{topology} is not a sense amplifier")));
            }
            let sets = route(&common)?;
            let params = topology_params(topology, &common, &sets)?;
            let run = run_sense(topology, cell, &params, &schedule_for(topology, &params)?)?;
            Ok(vec![
                write_atomic(&common.out, "sense.csv", |b| formats::write_waveforms_csv(b, &run.result))?,
                write_json(&common.out, "sense.json", formats::sense_json(topology, cell, &run.metrics))?,
            ])
        }
        Command::Transitions { device } => {
            let (fet, params) = device_under_test(&device, "2")?;
            let t = find_transition_voltages(&fet, &params.ptm, params.vdd, device.tol)?;
            Ok(vec![write_json(
                &device.common.out,
                "transitions.json",
                formats::transitions_json(&t, params.vdd, device.tol),
            )?])
        }
        Command::Window { device } => {
            let (fet, params) = device_under_test(&device, "1")?;
            let w = mirror_window(&fet, params.i_lrs, params.i_hrs, params.vdd, device.tol)?;
            Ok(vec![write_json(&device.common.out, "window.json", formats::window_json(&w))?])
        }
        Command::Mc { topology, samples, seed, workers, vary, common } => {
            if !topology.is_sense_amp() {
                return Err(Failure::user(format!("{topology} is not a sense amplifier")));
            }
            let mut sets = route(&common)?;
            let mc_sets = std::mem::take(&mut sets.mc);
            let params = topology_params(topology, &common, &sets)?;
            let mode = match vary {
                Vary::All => McMode::All,
                Vary::VcImt => McMode::Only(Family::VcImt),
                Vary::LPtm => McMode::Only(Family::LPtm),
                Vary::Vth => McMode::Only(Family::Vth),
            };
            let base = McConfig { n_samples: samples, master_seed: seed, mode, ..McConfig::default() };
            let mut config = overrides::apply(&base, &mc_sets).map_err(Failure::user)?;
            config.workers = workers;
            config.validate()?;
            let results = run_mc(topology, &config, &params)?;
            let csv = write_atomic(&common.out, "mc.csv", |b| formats::write_mc_csv(b, &results))?;
            let summary = summarize(&results)?;
            let json =
                write_json(&common.out, "mc_summary.json", formats::mc_summary_json(topology, &config, &summary))?;
            Ok(vec![csv, json])
        }
    }
}

/// The device a `transitions`/`window` run characterises: the host
/// (`suffix` "2") or mirror ("1") of a proposed topology, or a bare device
/// of the requested polarity and fin count.
fn device_under_test(device: &DeviceArgs, suffix: &str) -> Outcome<(FinFetParams, TopologyParams)> {
    if !(device.tol > 0.0) {
        return Err(Failure::user("--tol must be positive"));
    }
    let sets = route(&device.common)?;
    match device.topology {
        Some(kind) => {
            let polarity = kind
                .host_polarity()
                .filter(|_| kind.is_proposed())
                .ok_or_else(|| Failure::user(format!("{kind} has no Hyper-FET; use --polarity/--fins")))?;
            let params = topology_params(kind, &device.common, &sets)?;
            let label = format!("{}{suffix}", if polarity == Polarity::P { "P" } else { "N" });
            Ok((params.device(kind, &label, polarity), params))
        }
        None => {
            if device.fins == 0 {
                return Err(Failure::user("--fins must be at least 1"));
            }
            let params = topology_params(TopologyKind::HyperfetFixture, &device.common, &sets)?;
            let (polarity, base) = match device.polarity {
                PolarityArg::N => (Polarity::N, params.nmos),
                PolarityArg::P => (Polarity::P, params.pmos),
            };
            Ok((FinFetParams { polarity, n_fin: device.fins, ..base }, params))
        }
    }
}
