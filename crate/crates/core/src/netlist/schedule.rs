use serde::{Deserialize, Serialize};

use crate::circuit::Waveform;
use crate::error::{Error, Result};

/// Which stored state the cell presents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellState {
    #[default]
    Lrs,
    Hrs,
}

impl CellState {
    pub const ALL: [CellState; 2] = [CellState::Lrs, CellState::Hrs];

    pub fn as_str(self) -> &'static str {
        match self {
            CellState::Lrs => "lrs",
            CellState::Hrs => "hrs",
        }
    }
}

impl std::str::FromStr for CellState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lrs" => Ok(CellState::Lrs),
            "hrs" => Ok(CellState::Hrs),
            _ => Err(Error::InvalidParams(format!("unknown cell state '{s}' (expected lrs or hrs)"))),
        }
    }
}

/// Cycle timing shared by every sense-amplifier topology.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Timing {
    pub cycle: f64,
    pub rise: f64,
    pub fall: f64,
    /// Start of the reset de-asserting edge (end of phase 1).
    pub reset_end: f64,
    /// Start of the latch-enable edge (phase 3).
    pub latch_at: f64,
    /// Start of the cell access ramp.
    pub access_at: f64,
}

impl Default for Timing {
    fn default() -> Self {
        Self { cycle: 500e-12, rise: 2e-12, fall: 2e-12, reset_end: 150e-12, latch_at: 350e-12, access_at: 20e-12 }
    }
}

impl Timing {
    pub fn validate(&self) -> Result<()> {
        if !(self.rise > 0.0 && self.fall > 0.0) {
            return Err(Error::InvalidParams("rise and fall times must be positive".into()));
        }
        let edges = [0.0, self.access_at, self.reset_end, self.latch_at, self.cycle];
        if edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParams("cycle edges must be strictly ordered".into()));
        }
        Ok(())
    }
}

/// A digital control line: idle level, asserted level and the interval it
/// is asserted for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSignal {
    /// Signal name, e.g. `D_EN`.
    pub name: String,
    /// Voltage source driving it.
    pub source: String,
    pub node: String,
    pub idle: f64,
    pub active: f64,
    /// Asserted from this time (0 means asserted at the start).
    pub assert_at: f64,
    /// De-asserting edge start, if any.
    pub release_at: Option<f64>,
}

impl ControlSignal {
    pub fn waveform(&self, rise: f64, fall: f64) -> Waveform {
        let edge = |from: f64, to: f64| if to > from { rise } else { fall };
        let mut pts = Vec::new();
        if self.assert_at <= 0.0 {
            pts.push((0.0, self.active));
        } else {
            pts.push((0.0, self.idle));
            pts.push((self.assert_at, self.idle));
            pts.push((self.assert_at + edge(self.idle, self.active), self.active));
        }
        if let Some(t) = self.release_at {
            pts.push((t, self.active));
            pts.push((t + edge(self.active, self.idle), self.idle));
        }
        Waveform::Pwl(pts)
    }

    /// 50% level between idle and active.
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.idle + self.active)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    /// Ideal current source (current-mode sensing).
    Current,
    /// Ideal voltage source on the sensing gate (voltage-mode sensing).
    Voltage,
    /// Resistor behind an access switch on a precharged bitline.
    Resistor,
}

/// Cell stimulus. Levels are amperes, volts or ohms depending on `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStimulus {
    pub kind: CellKind,
    /// Element realizing the cell.
    pub element: String,
    /// Level before `access_at`.
    pub off: f64,
    pub lrs: f64,
    pub hrs: f64,
}

impl CellStimulus {
    pub fn level(&self, cell: CellState) -> f64 {
        match cell {
            CellState::Lrs => self.lrs,
            CellState::Hrs => self.hrs,
        }
    }

    pub fn waveform(&self, cell: CellState, timing: &Timing) -> Waveform {
        let on = self.level(cell);
        let edge = if on > self.off { timing.rise } else { timing.fall };
        Waveform::Pwl(vec![(0.0, self.off), (timing.access_at, self.off), (timing.access_at + edge, on)])
    }
}

/// Control waveforms and cell stimulus for one sensing cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusSchedule {
    /// Supply the levels were generated for; output thresholds derive from it.
    pub vdd: f64,
    pub timing: Timing,
    pub signals: Vec<ControlSignal>,
    /// Name of the signal whose de-assertion starts the sense phase.
    pub reset_signal: String,
    pub cell: CellStimulus,
    /// Node whose final level is the sensed logic value.
    pub output: String,
}

impl StimulusSchedule {
    pub fn signal(&self, name: &str) -> Option<&ControlSignal> {
        self.signals.iter().find(|s| s.name.eq_ignore_ascii_case(name))
    }

    pub fn reset(&self) -> Result<&ControlSignal> {
        self.signal(&self.reset_signal)
            .ok_or_else(|| Error::InvalidParams(format!("schedule has no signal '{}'", self.reset_signal)))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.vdd > 0.0) {
            return Err(Error::InvalidParams("schedule vdd must be positive".into()));
        }
        self.timing.validate()?;
        for s in &self.signals {
            if let Some(r) = s.release_at {
                if !(r > s.assert_at) {
                    return Err(Error::InvalidParams(format!("signal {} releases before it asserts", s.name)));
                }
                if r > self.timing.cycle {
                    return Err(Error::InvalidParams(format!("signal {} releases after the cycle", s.name)));
                }
            }
        }
        self.reset()?.release_at.ok_or_else(|| Error::InvalidParams("reset signal never releases".into()))?;
        Ok(())
    }
}
