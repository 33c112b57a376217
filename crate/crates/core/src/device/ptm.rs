//! Two-state hysteretic phase-transition-material resistor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PtmState {
    #[default]
    Insulating,
    Metallic,
}

impl PtmState {
    pub fn is_metallic(self) -> bool {
        self == PtmState::Metallic
    }
}

/// Bulk PTM geometry and transition thresholds.
///
/// Resistances are derived as `ρ · L / A`. The metal-to-insulator trigger is
/// current based; [`PtmParams::v_c_mit`] is the equivalent voltage on the
/// metallic branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PtmParams {
    /// Insulating-state resistivity, Ω·m.
    pub rho_ins: f64,
    /// Metallic-state resistivity, Ω·m.
    pub rho_met: f64,
    /// Film length, m.
    pub length: f64,
    /// Cross-sectional area, m².
    pub area: f64,
    /// Insulator-to-metal critical voltage.
    pub v_c_imt: f64,
    /// Metal-to-insulator critical current.
    pub i_c_mit: f64,
}

/// Nominal film length and area: `L / A = 2e6 m⁻¹`.
pub const NOMINAL_LENGTH: f64 = 20e-9;
pub const NOMINAL_AREA: f64 = 1e-14;

impl Default for PtmParams {
    fn default() -> Self {
        // R_INS = 330 kΩ and R_MET = 6.6 kΩ at the nominal geometry.
        Self {
            rho_ins: 0.165,
            rho_met: 0.0033,
            length: NOMINAL_LENGTH,
            area: NOMINAL_AREA,
            v_c_imt: 0.336,
            i_c_mit: 5e-6,
        }
    }
}

impl PtmParams {
    pub fn r_ins(&self) -> f64 {
        self.rho_ins * self.length / self.area
    }

    pub fn r_met(&self) -> f64 {
        self.rho_met * self.length / self.area
    }

    pub fn v_c_mit(&self) -> f64 {
        self.i_c_mit * self.r_met()
    }

    pub fn resistance(&self, state: PtmState) -> f64 {
        match state {
            PtmState::Insulating => self.r_ins(),
            PtmState::Metallic => self.r_met(),
        }
    }

    /// Scales the insulating resistivity by `factor`. The IMT critical voltage
    /// scales with it so that the critical current through the insulating
    /// film stays fixed; the metallic branch is untouched.
    pub fn with_rho_ins_factor(mut self, factor: f64) -> Self {
        self.rho_ins *= factor;
        self.v_c_imt *= factor;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParams(format!("ptm: {what}")));
        if !(self.rho_met > 0.0) || !(self.rho_ins > self.rho_met) {
            return bad("require rho_ins > rho_met > 0");
        }
        if !(self.length > 0.0) || !(self.area > 0.0) {
            return bad("length and area must be positive");
        }
        if !(self.v_c_imt > 0.0) || !(self.i_c_mit > 0.0) {
            return bad("transition thresholds must be positive");
        }
        if !(self.v_c_mit() < self.v_c_imt) {
            return bad("hysteresis requires V_C_MIT < V_C_IMT");
        }
        Ok(())
    }
}

pub fn ptm_resistance(params: &PtmParams, state: PtmState) -> f64 {
    params.resistance(state)
}

/// Applies the transition rule at a converged operating point. A state only
/// changes when its own trigger fires.
pub fn ptm_next_state(params: &PtmParams, state: PtmState, v_ptm: f64, i_ptm: f64) -> PtmState {
    match state {
        PtmState::Insulating if v_ptm.abs() >= params.v_c_imt => PtmState::Metallic,
        PtmState::Metallic if i_ptm.abs() <= params.i_c_mit => PtmState::Insulating,
        s => s,
    }
}
