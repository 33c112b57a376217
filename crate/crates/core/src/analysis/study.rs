use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::transitions::{find_transition_voltages, mirror_window, Bracket};
use crate::device::{FinFetParams, Polarity, PtmParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyKind {
    /// Mirror window against threshold shift.
    WindowVsDvth,
    /// IMT gate voltage against threshold shift.
    ImtVsDvth,
    /// MIT gate voltage against threshold shift.
    MitVsDvth,
    /// IMT drain voltage (full gate drive) against threshold shift.
    VdsImtVsDvth,
    /// IMT gate voltage against an insulating-resistivity factor.
    ImtVsRhoins,
}

impl StudyKind {
    pub const ALL: [StudyKind; 5] = [
        StudyKind::WindowVsDvth,
        StudyKind::ImtVsDvth,
        StudyKind::MitVsDvth,
        StudyKind::VdsImtVsDvth,
        StudyKind::ImtVsRhoins,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StudyKind::WindowVsDvth => "window-vs-dvth",
            StudyKind::ImtVsDvth => "imt-vs-dvth",
            StudyKind::MitVsDvth => "mit-vs-dvth",
            StudyKind::VdsImtVsDvth => "vds-imt-vs-dvth",
            StudyKind::ImtVsRhoins => "imt-vs-rhoins",
        }
    }

    /// Name of the swept quantity.
    pub fn axis_name(self) -> &'static str {
        match self {
            StudyKind::ImtVsRhoins => "rho_ins_factor",
            _ => "delta_v_th",
        }
    }

    pub fn columns(self) -> Vec<String> {
        let cols: &[&str] = match self {
            StudyKind::WindowVsDvth => &["v_gs_lrs", "v_gs_hrs", "center", "size"],
            StudyKind::ImtVsDvth | StudyKind::ImtVsRhoins => &["v_gs_imt", "width"],
            StudyKind::MitVsDvth => &["v_gs_mit", "width"],
            StudyKind::VdsImtVsDvth => &["v_ds_imt", "width"],
        };
        cols.iter().map(|c| c.to_string()).collect()
    }

    /// Default grid: ±0.1 V in 25 mV steps, or ×0.1 … ×1.25 for ρ_INS.
    /// Larger factors push V_C_IMT past the supply and are unreachable.
    pub fn default_axis(self) -> Vec<f64> {
        match self {
            StudyKind::ImtVsRhoins => vec![0.1, 0.25, 0.5, 0.75, 1.0, 1.25],
            _ => (-4..=4).map(|k| f64::from(k) / 40.0).collect(),
        }
    }
}

impl fmt::Display for StudyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StudyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StudyKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParams(format!("unknown study '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySpec {
    pub kind: StudyKind,
    pub axis: Vec<f64>,
    pub n_fins: Vec<u32>,
    /// Device type under study; the base model comes from `nmos`/`pmos`.
    pub polarity: Polarity,
    pub nmos: FinFetParams,
    pub pmos: FinFetParams,
    pub ptm: PtmParams,
    pub vdd: f64,
    pub i_lrs: f64,
    pub i_hrs: f64,
    /// Bisection tolerance, volts.
    pub tol: f64,
}

impl StudySpec {
    pub fn new(kind: StudyKind) -> Self {
        Self {
            kind,
            axis: kind.default_axis(),
            n_fins: vec![2, 6],
            polarity: Polarity::N,
            nmos: FinFetParams::nmos(1),
            pmos: FinFetParams::pmos(1),
            ptm: PtmParams::default(),
            vdd: crate::circuit::DEFAULT_VDD,
            // A 2-fin mirror cannot sink 120 µA at the supply; the study
            // keeps the 10:1 cell ratio at currents every fin count reaches.
            i_lrs: 40e-6,
            i_hrs: 4e-6,
            tol: 1e-6,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.to_string()));
        if self.axis.is_empty() || self.n_fins.is_empty() {
            return bad("study grid must not be empty");
        }
        if self.axis.iter().any(|v| !v.is_finite()) {
            return bad("study grid must be finite");
        }
        let up = self.axis.windows(2).all(|w| w[1] > w[0]);
        let down = self.axis.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return bad("study grid must be strictly monotone");
        }
        if self.kind == StudyKind::ImtVsRhoins && self.axis.iter().any(|v| *v <= 0.0) {
            return bad("resistivity factors must be positive");
        }
        if self.n_fins.contains(&0) {
            return bad("fin counts must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub axis: f64,
    pub n_fin: u32,
    /// One entry per table column; `None` where the point failed.
    pub values: Vec<Option<f64>>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyTable {
    pub kind: StudyKind,
    pub axis_name: String,
    pub columns: Vec<String>,
    pub rows: Vec<StudyRow>,
}

/// Evaluates a study on every `(n_fin, axis)` pair, n_fin-major. Point
/// failures are recorded in their row and never abort the study.
pub fn sweep_study(spec: &StudySpec) -> Result<StudyTable> {
    spec.validate()?;
    let columns = spec.kind.columns();
    let mut rows = Vec::with_capacity(spec.axis.len() * spec.n_fins.len());
    for &n_fin in &spec.n_fins {
        for &a in &spec.axis {
            let (values, error) = match evaluate(spec, n_fin, a) {
                Ok(v) => (v.into_iter().map(Some).collect(), None),
                Err(e) => (vec![None; columns.len()], Some(e.to_string())),
            };
            rows.push(StudyRow { axis: a, n_fin, values, error });
        }
    }
    Ok(StudyTable { kind: spec.kind, axis_name: spec.kind.axis_name().into(), columns, rows })
}

fn evaluate(spec: &StudySpec, n_fin: u32, a: f64) -> Result<Vec<f64>> {
    let base = match spec.polarity {
        Polarity::N => spec.nmos,
        Polarity::P => spec.pmos,
    };
    let fet = FinFetParams { polarity: spec.polarity, n_fin, ..base };
    let bracket = |b: Option<Bracket>, what: &str| -> Result<Vec<f64>> {
        let b = b.ok_or_else(|| Error::NotReachable(what.into()))?;
        Ok(vec![b.value, b.width])
    };
    match spec.kind {
        StudyKind::WindowVsDvth => {
            let w = mirror_window(&fet.with_delta_v_th(a), spec.i_lrs, spec.i_hrs, spec.vdd, spec.tol)?;
            Ok(vec![w.v_gs_lrs, w.v_gs_hrs, w.center, w.size])
        }
        StudyKind::ImtVsRhoins => {
            let ptm = spec.ptm.with_rho_ins_factor(a);
            bracket(find_transition_voltages(&fet, &ptm, spec.vdd, spec.tol)?.v_gs_imt, "V_GS_IMT")
        }
        kind => {
            let tv = find_transition_voltages(&fet.with_delta_v_th(a), &spec.ptm, spec.vdd, spec.tol)?;
            match kind {
                StudyKind::ImtVsDvth => bracket(tv.v_gs_imt, "V_GS_IMT"),
                StudyKind::MitVsDvth => bracket(tv.v_gs_mit, "V_GS_MIT"),
                _ => bracket(tv.v_ds_imt, "V_DS_IMT"),
            }
        }
    }
}
