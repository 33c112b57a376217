//! Parametric builders for the sense-amplifier topologies and device
//! fixtures.
//!
//! Wiring is documented with schematics in `docs/topologies.md`. All node
//! names are lower case so built circuits round-trip through the netlist
//! printer unchanged.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::schedule::{CellKind, CellState, CellStimulus, ControlSignal, StimulusSchedule, Timing};
use crate::circuit::{Circuit, Element, SolverOptions, Waveform, GROUND};
use crate::device::{diode_voltage, FinFetParams, Polarity, PtmParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TopologyKind {
    ConvVsa,
    ConvCsa,
    HpCsa,
    HpVsa,
    HnCsa,
    HnVsa,
    BulkPtmFixture,
    HyperfetFixture,
}

impl TopologyKind {
    pub const ALL: [TopologyKind; 8] = [
        TopologyKind::ConvVsa,
        TopologyKind::ConvCsa,
        TopologyKind::HpCsa,
        TopologyKind::HpVsa,
        TopologyKind::HnCsa,
        TopologyKind::HnVsa,
        TopologyKind::BulkPtmFixture,
        TopologyKind::HyperfetFixture,
    ];

    /// The six sense amplifiers.
    pub const SENSE_AMPS: [TopologyKind; 6] = [
        TopologyKind::ConvVsa,
        TopologyKind::ConvCsa,
        TopologyKind::HpCsa,
        TopologyKind::HpVsa,
        TopologyKind::HnCsa,
        TopologyKind::HnVsa,
    ];

    /// The four PTM-augmented amplifiers.
    pub const PROPOSED: [TopologyKind; 4] =
        [TopologyKind::HpCsa, TopologyKind::HpVsa, TopologyKind::HnCsa, TopologyKind::HnVsa];

    pub fn as_str(self) -> &'static str {
        match self {
            TopologyKind::ConvVsa => "conv-vsa",
            TopologyKind::ConvCsa => "conv-csa",
            TopologyKind::HpCsa => "hp-csa",
            TopologyKind::HpVsa => "hp-vsa",
            TopologyKind::HnCsa => "hn-csa",
            TopologyKind::HnVsa => "hn-vsa",
            TopologyKind::BulkPtmFixture => "bulk-ptm-fixture",
            TopologyKind::HyperfetFixture => "hyperfet-fixture",
        }
    }

    pub fn is_sense_amp(self) -> bool {
        !matches!(self, TopologyKind::BulkPtmFixture | TopologyKind::HyperfetFixture)
    }

    pub fn is_proposed(self) -> bool {
        Self::PROPOSED.contains(&self)
    }

    pub fn is_conventional(self) -> bool {
        matches!(self, TopologyKind::ConvVsa | TopologyKind::ConvCsa)
    }

    pub fn is_current_mode(self) -> bool {
        matches!(self, TopologyKind::ConvCsa | TopologyKind::HpCsa | TopologyKind::HnCsa)
    }

    /// Polarity of the Hyper-FET host for the proposed amplifiers.
    pub fn host_polarity(self) -> Option<Polarity> {
        match self {
            TopologyKind::HpCsa | TopologyKind::HpVsa => Some(Polarity::P),
            TopologyKind::HnCsa | TopologyKind::HnVsa => Some(Polarity::N),
            _ => None,
        }
    }

    /// Conventional baseline a proposed amplifier is compared against.
    pub fn baseline(self) -> Option<TopologyKind> {
        match self {
            TopologyKind::HpCsa | TopologyKind::HnCsa => Some(TopologyKind::ConvCsa),
            TopologyKind::HpVsa | TopologyKind::HnVsa => Some(TopologyKind::ConvVsa),
            _ => None,
        }
    }

    /// Output level expected after sensing `cell`: `true` for high.
    pub fn expected_high(self, cell: CellState) -> Option<bool> {
        let lrs = cell == CellState::Lrs;
        match self {
            TopologyKind::HpCsa | TopologyKind::HpVsa => Some(!lrs),
            TopologyKind::HnCsa | TopologyKind::HnVsa => Some(lrs),
            TopologyKind::ConvCsa | TopologyKind::ConvVsa => Some(lrs),
            _ => None,
        }
    }
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TopologyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParams(format!("unknown topology '{s}'")))
    }
}

/// Sizing, device models, loads and stimulus levels for a build.
///
/// Fin counts and threshold shifts are keyed by device label (`P1`, `N3`,
/// `T1`, ...). Labels missing from `fins` take the per-topology default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologyParams {
    pub vdd: f64,
    pub cell: CellState,
    pub fins: BTreeMap<String, u32>,
    pub delta_v_th: BTreeMap<String, f64>,
    /// Base n-type model; polarity and fin count are set per device.
    pub nmos: FinFetParams,
    pub pmos: FinFetParams,
    pub ptm: PtmParams,
    pub c_x: f64,
    pub c_y: f64,
    pub c_bl: f64,
    pub t1: bool,
    pub t2: bool,
    pub i_lrs: f64,
    pub i_hrs: f64,
    /// Gate-node voltages for voltage-mode sensing; derived from the mirror
    /// when absent.
    pub v_lrs: Option<f64>,
    pub v_hrs: Option<f64>,
    /// Comparator reference of the conventional VSA.
    pub v_ref: f64,
    /// Reference current of the conventional CSA; midpoint when absent.
    pub i_ref: Option<f64>,
    /// Gate drive of the latch keeper in the proposed amplifiers.
    pub v_keep: f64,
    /// Tail bias of the conventional CSA differential pair.
    pub v_bias: f64,
    /// Bitline level left by the previous access (conventional VSA).
    pub v_bl_start: f64,
    /// Series resistor of the bulk PTM fixture.
    pub r_series: f64,
    /// Device type of the Hyper-FET fixture.
    pub fixture_polarity: Polarity,
    pub timing: Timing,
    pub options: SolverOptions,
}

impl Default for TopologyParams {
    fn default() -> Self {
        Self {
            vdd: crate::circuit::DEFAULT_VDD,
            cell: CellState::Lrs,
            fins: BTreeMap::new(),
            delta_v_th: BTreeMap::new(),
            nmos: FinFetParams::nmos(1),
            pmos: FinFetParams::pmos(1),
            ptm: PtmParams::default(),
            c_x: 1e-15,
            c_y: 1e-15,
            c_bl: 20e-15,
            t1: false,
            t2: false,
            i_lrs: 120e-6,
            i_hrs: 12e-6,
            v_lrs: None,
            v_hrs: None,
            v_ref: 0.4,
            i_ref: None,
            v_keep: 0.35,
            v_bias: 0.45,
            v_bl_start: 0.0,
            r_series: 6.6e3,
            fixture_polarity: Polarity::N,
            timing: Timing::default(),
            options: SolverOptions::default(),
        }
    }
}

/// Default fin count of `label` in `kind`.
pub fn default_fins(kind: TopologyKind, label: &str) -> Option<u32> {
    fin_table(kind).iter().find(|(l, _)| *l == label).map(|(_, n)| *n)
}

/// Labels of every transistor `kind` can contain (tuning devices included).
pub fn device_labels(kind: TopologyKind) -> Vec<&'static str> {
    let mut labels: Vec<&str> = fin_table(kind).iter().map(|(l, _)| *l).collect();
    labels.sort_unstable();
    labels
}

fn fin_table(kind: TopologyKind) -> &'static [(&'static str, u32)] {
    use TopologyKind::*;
    match kind {
        HpCsa | HpVsa => {
            &[("P1", 6), ("P2", 6), ("P3", 2), ("P4", 2), ("N1", 2), ("N2", 2), ("N3", 2), ("T1", 1), ("T2", 2)]
        }
        HnCsa | HnVsa => {
            &[("N1", 6), ("N2", 6), ("N3", 2), ("N4", 2), ("P1", 2), ("P2", 2), ("P3", 2), ("T1", 1), ("T2", 2)]
        }
        ConvCsa => &[
            ("P1", 6),
            ("P2", 6),
            ("P3", 6),
            ("P4", 6),
            ("N1", 6),
            ("N2", 6),
            ("N3", 2),
            ("N4", 2),
            ("N5", 2),
            ("P5", 2),
            ("P6", 2),
            ("N6", 2),
            ("P7", 2),
            ("N7", 2),
            ("P8", 2),
            ("N8", 2),
        ],
        ConvVsa => &[
            ("P1", 8),
            ("N1", 4),
            ("N2", 2),
            ("N3", 2),
            ("N4", 2),
            ("N5", 2),
            ("N6", 2),
            ("P2", 2),
            ("P3", 2),
            ("P4", 1),
            ("P5", 1),
            ("P6", 1),
            ("P7", 1),
            ("P8", 2),
            ("N7", 2),
        ],
        BulkPtmFixture => &[],
        HyperfetFixture => &[("N1", 1), ("P1", 1)],
    }
}

impl TopologyParams {
    pub fn with_cell(mut self, cell: CellState) -> Self {
        self.cell = cell;
        self
    }

    pub fn fins_of(&self, kind: TopologyKind, label: &str) -> u32 {
        self.fins.get(label).copied().or_else(|| default_fins(kind, label)).unwrap_or(1)
    }

    /// Device model for `label` with its fin count and threshold shift.
    pub fn device(&self, kind: TopologyKind, label: &str, polarity: Polarity) -> FinFetParams {
        let base = match polarity {
            Polarity::N => self.nmos,
            Polarity::P => self.pmos,
        };
        FinFetParams {
            polarity,
            n_fin: self.fins_of(kind, label),
            delta_v_th: base.delta_v_th + self.delta_v_th.get(label).copied().unwrap_or(0.0),
            ..base
        }
    }

    pub fn i_ref(&self) -> f64 {
        self.i_ref.unwrap_or(0.5 * (self.i_lrs + self.i_hrs))
    }

    /// Gate-node voltages `(V_LRS, V_HRS)` produced by the mirror device of
    /// `kind` for the two cell currents.
    pub fn cell_gate_voltages(&self, kind: TopologyKind) -> Result<(f64, f64)> {
        let polarity = kind.host_polarity().unwrap_or(Polarity::P);
        let mirror = self.device(kind, mirror_label(polarity), polarity);
        let gate = |i: f64| -> Result<f64> {
            let v = diode_voltage(&mirror, i, self.vdd, 1e-9)?;
            Ok(match polarity {
                Polarity::P => self.vdd - v,
                Polarity::N => v,
            })
        };
        let lrs = match self.v_lrs {
            Some(v) => v,
            None => gate(self.i_lrs)?,
        };
        let hrs = match self.v_hrs {
            Some(v) => v,
            None => gate(self.i_hrs)?,
        };
        Ok((lrs, hrs))
    }

    pub fn validate(&self, kind: TopologyKind) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.to_string()));
        if !(self.vdd > 0.0) {
            return bad("vdd must be positive");
        }
        if let Some((label, _)) = self.fins.iter().find(|(_, n)| **n == 0) {
            return Err(Error::InvalidParams(format!("device {label} needs at least one fin")));
        }
        if !(self.i_lrs > self.i_hrs && self.i_hrs > 0.0) {
            return bad("cell currents must satisfy I_LRS > I_HRS > 0");
        }
        for v in [self.v_lrs, self.v_hrs].into_iter().flatten().chain([
            self.v_ref,
            self.v_keep,
            self.v_bias,
            self.v_bl_start,
        ]) {
            if !(0.0..=self.vdd).contains(&v) {
                return bad("voltage levels must lie within [0, V_DD]");
            }
        }
        if !(self.c_x >= 0.0 && self.c_y >= 0.0 && self.c_bl > 0.0) {
            return bad("load capacitances must be non-negative");
        }
        if !(self.r_series > 0.0) {
            return bad("series resistance must be positive");
        }
        if let Some(i) = self.i_ref {
            if !(i > 0.0) {
                return bad("reference current must be positive");
            }
        }
        self.nmos.validate()?;
        self.pmos.validate()?;
        self.ptm.validate()?;
        self.options.validate()?;
        if kind.is_sense_amp() {
            self.timing.validate()?;
        }
        Ok(())
    }
}

fn mirror_label(p: Polarity) -> &'static str {
    match p {
        Polarity::P => "P1",
        Polarity::N => "N1",
    }
}

/// Circuit under construction.
struct Builder<'a> {
    kind: TopologyKind,
    params: &'a TopologyParams,
    circuit: Circuit,
}

impl<'a> Builder<'a> {
    fn new(kind: TopologyKind, params: &'a TopologyParams) -> Self {
        let mut circuit = Circuit::new(params.vdd);
        circuit.options = params.options;
        Self { kind, params, circuit }
    }

    fn fet(&mut self, label: &str, polarity: Polarity, d: &str, g: &str, s: &str) {
        let p = self.params.device(self.kind, label, polarity);
        self.circuit.add(Element::finfet(&format!("M{label}"), d, g, s, p));
    }

    fn add(&mut self, e: Element) {
        self.circuit.add(e);
    }

    fn dc(&mut self, name: &str, p: &str, v: f64) {
        self.circuit.add(Element::vsource(name, p, GROUND, Waveform::Dc(v)));
    }
}

/// Rail names seen from a host of the given polarity: `(source rail, far rail)`.
fn rails(p: Polarity) -> (&'static str, &'static str) {
    match p {
        Polarity::P => ("vdd", GROUND),
        Polarity::N => (GROUND, "vdd"),
    }
}

/// Label of the complementary device (`P3` ↔ `N3`); `T` labels unchanged.
fn swap_label(label: &str, host: Polarity) -> String {
    if host == Polarity::P {
        return label.to_string();
    }
    match label.as_bytes()[0] {
        b'P' => format!("N{}", &label[1..]),
        b'N' => format!("P{}", &label[1..]),
        _ => label.to_string(),
    }
}

/// Default schedule for `kind` with default parameters.
pub fn default_schedule(kind: TopologyKind) -> Result<StimulusSchedule> {
    schedule_for(kind, &TopologyParams::default())
}

/// Schedule for `kind` with the levels and timing in `params`.
pub fn schedule_for(kind: TopologyKind, params: &TopologyParams) -> Result<StimulusSchedule> {
    let t = params.timing;
    let vdd = params.vdd;
    let signal =
        |name: &str, source: &str, node: &str, idle: f64, active: f64, at: f64, release: Option<f64>| ControlSignal {
            name: name.into(),
            source: source.into(),
            node: node.into(),
            idle,
            active,
            assert_at: at,
            release_at: release,
        };
    let current_cell =
        |lrs: f64, hrs: f64| CellStimulus { kind: CellKind::Current, element: "ICELL".into(), off: 0.0, lrs, hrs };
    let schedule = match kind {
        TopologyKind::HpCsa | TopologyKind::HpVsa | TopologyKind::HnCsa | TopologyKind::HnVsa => {
            let host = kind.host_polarity().unwrap();
            let (reset, latch) = match host {
                Polarity::P => (
                    signal("D_EN", "VDEN", "den", 0.0, vdd, 0.0, Some(t.reset_end)),
                    signal("L_EN", "VLEN", "len", 0.0, params.v_keep, t.latch_at, None),
                ),
                Polarity::N => (
                    signal("C_EN", "VCEN", "cen", vdd, 0.0, 0.0, Some(t.reset_end)),
                    signal("L_EN", "VLEN", "len", vdd, vdd - params.v_keep, t.latch_at, None),
                ),
            };
            let cell = if kind.is_current_mode() {
                current_cell(params.i_lrs, params.i_hrs)
            } else {
                let (lrs, hrs) = params.cell_gate_voltages(kind)?;
                // Off level holds the host gate at its source rail.
                let off = match host {
                    Polarity::P => vdd,
                    Polarity::N => 0.0,
                };
                CellStimulus { kind: CellKind::Voltage, element: "VCELL".into(), off, lrs, hrs }
            };
            StimulusSchedule {
                vdd,
                timing: t,
                reset_signal: reset.name.clone(),
                signals: vec![reset, latch],
                cell,
                output: "y".into(),
            }
        }
        TopologyKind::ConvCsa => StimulusSchedule {
            vdd,
            timing: t,
            signals: vec![signal("PRE", "VPRE", "pre", 0.0, vdd, 0.0, Some(t.reset_end))],
            reset_signal: "PRE".into(),
            cell: current_cell(params.i_lrs, params.i_hrs),
            output: "y".into(),
        },
        TopologyKind::ConvVsa => StimulusSchedule {
            vdd,
            timing: t,
            signals: vec![
                signal("PRE", "VPRE", "preb", vdd, 0.0, t.access_at, Some(t.reset_end)),
                signal("WL", "VWL", "wl", 0.0, vdd, t.reset_end, None),
                signal("L_EN", "VLEN", "len", 0.0, vdd, t.latch_at, None),
            ],
            reset_signal: "PRE".into(),
            cell: CellStimulus {
                kind: CellKind::Resistor,
                element: "RCELL".into(),
                off: 0.0,
                lrs: vdd / params.i_lrs,
                hrs: vdd / params.i_hrs,
            },
            output: "y".into(),
        },
        _ => return Err(Error::InvalidParams(format!("{kind} has no sensing schedule"))),
    };
    schedule.validate()?;
    Ok(schedule)
}

/// Builds `kind` with its default schedule derived from `params`.
pub fn build_topology(kind: TopologyKind, params: &TopologyParams) -> Result<(Circuit, Option<StimulusSchedule>)> {
    if kind.is_sense_amp() {
        let schedule = schedule_for(kind, params)?;
        let circuit = build_with_schedule(kind, params, &schedule)?;
        Ok((circuit, Some(schedule)))
    } else {
        params.validate(kind)?;
        let circuit = match kind {
            TopologyKind::BulkPtmFixture => bulk_fixture(params),
            _ => hyperfet_fixture(params),
        };
        circuit.validate()?;
        Ok((circuit, None))
    }
}

/// Builds a sense amplifier driven by an explicit schedule.
pub fn build_with_schedule(
    kind: TopologyKind,
    params: &TopologyParams,
    schedule: &StimulusSchedule,
) -> Result<Circuit> {
    params.validate(kind)?;
    schedule.validate()?;
    let expected = match kind {
        TopologyKind::ConvVsa => CellKind::Resistor,
        k if k.is_current_mode() => CellKind::Current,
        TopologyKind::HpVsa | TopologyKind::HnVsa => CellKind::Voltage,
        _ => return Err(Error::InvalidParams(format!("{kind} is not a sense amplifier"))),
    };
    if schedule.cell.kind != expected {
        return Err(Error::InvalidParams(format!(
            "{kind} needs a {expected:?} cell stimulus, got {:?}",
            schedule.cell.kind
        )));
    }
    let mut b = Builder::new(kind, params);
    b.dc("VDD", "vdd", params.vdd);
    for s in &schedule.signals {
        let wave = s.waveform(schedule.timing.rise, schedule.timing.fall);
        b.add(Element::vsource(&s.source, &s.node, GROUND, wave));
    }
    match kind {
        TopologyKind::ConvCsa => conv_csa(&mut b, schedule),
        TopologyKind::ConvVsa => conv_vsa(&mut b, schedule),
        _ => hyper_sa(&mut b, schedule),
    }
    b.circuit.validate()?;
    Ok(b.circuit)
}

/// Hyper-PMOS and Hyper-NMOS amplifiers. Written for the PMOS host; the NMOS
/// variant is the exact complement (labels swapped, rails exchanged).
fn hyper_sa(b: &mut Builder<'_>, schedule: &StimulusSchedule) {
    let host = b.kind.host_polarity().unwrap();
    let other = host.flipped();
    let (src, far) = rails(host);
    let l = |s: &str| swap_label(s, host);
    let cell = b.params.cell;
    let timing = schedule.timing;

    if b.kind.is_current_mode() {
        // Diode-connected mirror input; the cell pulls current out of it.
        b.fet(&l("P1"), host, "g", "g", src);
        let wave = schedule.cell.waveform(cell, &timing);
        let (p, n) = if host == Polarity::P { ("g", GROUND) } else { ("vdd", "g") };
        b.add(Element::isource(&schedule.cell.element, p, n, wave));
    } else {
        b.add(Element::vsource(&schedule.cell.element, "g", GROUND, schedule.cell.waveform(cell, &timing)));
    }

    // Hyper-FET: PTM between the source rail and the host's source.
    b.add(Element::ptm("PTM1", src, "s2", b.params.ptm));
    let host_source = if b.params.t2 {
        // Series tuning device, gate tied to the far rail so it is fully on.
        b.fet("T2", host, "s3", far, "s2");
        "s3"
    } else {
        "s2"
    };
    b.fet(&l("P2"), host, "x", "g", host_source);
    if b.params.t1 {
        b.fet("T1", host, "x", "g", host_source);
    }

    // Reset device, keeper, feedback and output inverter.
    b.fet(&l("N1"), other, "x", &schedule.signals[0].node, far);
    b.fet(&l("N2"), other, "x", &schedule.signals[1].node, far);
    b.fet(&l("P3"), host, "x", "y", src);
    b.fet(&l("P4"), host, "y", "x", src);
    b.fet(&l("N3"), other, "y", "x", far);
    b.add(Element::capacitor("C_X", "x", far, b.params.c_x));
    b.add(Element::capacitor("C_Y", "y", far, b.params.c_y));
}

/// Current-mirror CSA: cell and reference mirrors into NMOS loads, a
/// differential pair with a mirror load, output reset and a two-stage buffer.
fn conv_csa(b: &mut Builder<'_>, schedule: &StimulusSchedule) {
    use Polarity::{N, P};
    let wave = schedule.cell.waveform(b.params.cell, &schedule.timing);
    b.add(Element::isource(&schedule.cell.element, "gc", GROUND, wave));
    b.add(Element::isource("IREF", "gr", GROUND, Waveform::Dc(b.params.i_ref())));
    b.dc("VBIAS", "bias", b.params.v_bias);

    b.fet("P1", P, "gc", "gc", "vdd");
    b.fet("P2", P, "vc", "gc", "vdd");
    b.fet("N1", N, "vc", "vc", GROUND);
    b.fet("P3", P, "gr", "gr", "vdd");
    b.fet("P4", P, "vr", "gr", "vdd");
    b.fet("N2", N, "vr", "vr", GROUND);

    b.fet("N3", N, "o1", "vc", "t");
    b.fet("N4", N, "out", "vr", "t");
    b.fet("N5", N, "t", "bias", GROUND);
    b.fet("P5", P, "o1", "o1", "vdd");
    b.fet("P6", P, "out", "o1", "vdd");
    b.fet("N6", N, "out", &schedule.signals[0].node, GROUND);

    b.fet("P7", P, "ob", "out", "vdd");
    b.fet("N7", N, "ob", "out", GROUND);
    b.fet("P8", P, "y", "ob", "vdd");
    b.fet("N8", N, "y", "ob", GROUND);
    b.add(Element::capacitor("C_X", "out", GROUND, b.params.c_x));
    b.add(Element::capacitor("C_Y", "y", GROUND, b.params.c_y));
}

/// Precharged-bitline VSA with a clocked regenerative latch.
fn conv_vsa(b: &mut Builder<'_>, schedule: &StimulusSchedule) {
    use Polarity::{N, P};
    let node = |name: &str| schedule.signal(name).map(|s| s.node.clone()).unwrap();
    let (preb, wl, len) = (node("PRE"), node("WL"), node("L_EN"));
    b.dc("VREF", "vref", b.params.v_ref);

    b.fet("P1", P, "bl", &preb, "vdd");
    b.add(Element::capacitor("C_BL", "bl", GROUND, b.params.c_bl));
    b.fet("N1", N, "bl", &wl, "c");
    b.add(Element::resistor(&schedule.cell.element, "c", GROUND, schedule.cell.level(b.params.cell)));

    b.fet("N2", N, "p", "bl", "t");
    b.fet("N3", N, "q", "vref", "t");
    b.fet("N4", N, "t", &len, GROUND);
    b.fet("N5", N, "on", "op", "p");
    b.fet("N6", N, "op", "on", "q");
    b.fet("P2", P, "on", "op", "vdd");
    b.fet("P3", P, "op", "on", "vdd");
    b.fet("P4", P, "on", &len, "vdd");
    b.fet("P5", P, "op", &len, "vdd");
    b.fet("P6", P, "p", &len, "vdd");
    b.fet("P7", P, "q", &len, "vdd");
    b.fet("P8", P, "y", "op", "vdd");
    b.fet("N7", N, "y", "op", GROUND);
    b.add(Element::capacitor("C_X", "on", GROUND, b.params.c_x));
    b.add(Element::capacitor("C_XB", "op", GROUND, b.params.c_x));
    b.add(Element::capacitor("C_Y", "y", GROUND, b.params.c_y));
}

/// DC source, series resistor and a bulk PTM.
fn bulk_fixture(params: &TopologyParams) -> Circuit {
    let mut c = Circuit::new(params.vdd);
    c.options = params.options;
    c.add(Element::vsource("VSRC", "in", GROUND, Waveform::Dc(0.0)));
    c.add(Element::resistor("RS", "in", "a", params.r_series));
    c.add(Element::ptm("PTM1", "a", GROUND, params.ptm));
    c
}

/// Hyper-FET with drain at the far rail's complement and a swept gate
/// source `VG`. The PTM sits between the device source and its rail.
fn hyperfet_fixture(params: &TopologyParams) -> Circuit {
    let kind = TopologyKind::HyperfetFixture;
    let mut c = Circuit::new(params.vdd);
    c.options = params.options;
    let p = params.fixture_polarity;
    let label = mirror_label(p);
    let dev = params.device(kind, label, p);
    c.add(Element::vsource("VDD", "vdd", GROUND, Waveform::Dc(params.vdd)));
    let gate0 = match p {
        Polarity::N => 0.0,
        Polarity::P => params.vdd,
    };
    c.add(Element::vsource("VG", "g", GROUND, Waveform::Dc(gate0)));
    let (src, far) = rails(p);
    c.add(Element::ptm("PTM1", src, "s", params.ptm));
    c.add(Element::finfet(&format!("M{label}"), far, "g", "s", dev));
    c
}
