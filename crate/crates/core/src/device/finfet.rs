//! Smooth single-expression FinFET compact model.
//!
//! The n-type drain current for `V_DS >= 0` is
//!
//! ```text
//! I_D  = n_fin · k · V_ov² · tanh(α · V_DS / max(V_ov, φ_t)) · (1 + λ · V_DS)
//! V_ov = 2 n φ_t · ln(1 + exp((V_GS − V_th − ΔV_th) / (2 n φ_t)))
//! ```
//!
//! `V_ov` is a softplus that tends to `V_GS − V_th` in strong inversion and to
//! an exponential below threshold. The factor of two inside the softplus makes
//! `V_ov²` fall by one decade per `n · φ_t · ln 10` volts of gate drive.
//!
//! Negative `V_DS` swaps the roles of drain and source. A p-type device is the
//! n-type expression evaluated on negated terminal voltages, with the current
//! negated again, so `I_D` is always the current flowing into the drain.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Thermal voltage at 300 K.
pub const THERMAL_VOLTAGE: f64 = 0.02585;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    N,
    P,
}

impl Polarity {
    pub fn flipped(self) -> Self {
        match self {
            Polarity::N => Polarity::P,
            Polarity::P => Polarity::N,
        }
    }

    /// `+1` for n-type, `-1` for p-type.
    pub fn sign(self) -> f64 {
        match self {
            Polarity::N => 1.0,
            Polarity::P => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FinFetParams {
    pub polarity: Polarity,
    /// Threshold magnitude in volts.
    pub v_th: f64,
    /// Additive threshold shift (volts) used by window and variation studies.
    pub delta_v_th: f64,
    pub n_fin: u32,
    /// Transconductance scale per fin, A/V².
    pub k: f64,
    pub n_ss: f64,
    pub phi_t: f64,
    pub alpha_sat: f64,
    /// Channel-length modulation, 1/V.
    pub lambda_clm: f64,
}

impl Default for FinFetParams {
    fn default() -> Self {
        Self {
            polarity: Polarity::N,
            v_th: 0.2,
            delta_v_th: 0.0,
            n_fin: 1,
            k: 111e-6,
            n_ss: 1.2,
            phi_t: THERMAL_VOLTAGE,
            alpha_sat: 2.0,
            lambda_clm: 0.1,
        }
    }
}

impl FinFetParams {
    pub fn nmos(n_fin: u32) -> Self {
        Self { n_fin, ..Self::default() }
    }

    pub fn pmos(n_fin: u32) -> Self {
        Self { polarity: Polarity::P, n_fin, ..Self::default() }
    }

    pub fn with_delta_v_th(mut self, delta_v_th: f64) -> Self {
        self.delta_v_th = delta_v_th;
        self
    }

    pub fn effective_v_th(&self) -> f64 {
        self.v_th + self.delta_v_th
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParams(format!("finfet: {what}")));
        if self.n_fin < 1 {
            return bad("n_fin must be at least 1");
        }
        if !(self.k > 0.0) {
            return bad("k must be positive");
        }
        if !(self.n_ss >= 1.0) {
            return bad("n_ss must be >= 1");
        }
        if !(self.lambda_clm >= 0.0) {
            return bad("lambda_clm must be non-negative");
        }
        if !(self.phi_t > 0.0) || !(self.alpha_sat > 0.0) {
            return bad("phi_t and alpha_sat must be positive");
        }
        if !self.v_th.is_finite() || !self.delta_v_th.is_finite() {
            return bad("threshold must be finite");
        }
        Ok(())
    }
}

/// Drain current and its partial derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FinFetEval {
    pub i_d: f64,
    pub di_dvgs: f64,
    pub di_dvds: f64,
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// n-type expression for `vds >= 0`.
fn forward(p: &FinFetParams, vgs: f64, vds: f64) -> FinFetEval {
    let scale = 2.0 * p.n_ss * p.phi_t;
    let x = (vgs - p.effective_v_th()) / scale;
    let v_ov = scale * softplus(x);
    let dvov = sigmoid(x);

    let (m, dm) = if v_ov > p.phi_t { (v_ov, dvov) } else { (p.phi_t, 0.0) };
    let u = p.alpha_sat * vds / m;
    let t = u.tanh();
    let sech2 = 1.0 - t * t;
    let clm = 1.0 + p.lambda_clm * vds;
    let beta = f64::from(p.n_fin) * p.k;

    let i_d = beta * v_ov * v_ov * t * clm;
    let di_dvgs = beta * clm * (2.0 * v_ov * dvov * t - v_ov * v_ov * sech2 * u / m * dm);
    let di_dvds = beta * v_ov * v_ov * (sech2 * p.alpha_sat / m * clm + t * p.lambda_clm);
    FinFetEval { i_d, di_dvgs, di_dvds }
}

fn n_type(p: &FinFetParams, vgs: f64, vds: f64) -> FinFetEval {
    if vds >= 0.0 {
        forward(p, vgs, vds)
    } else {
        // Drain and source exchange roles: I = -g(vgs - vds, -vds).
        let r = forward(p, vgs - vds, -vds);
        FinFetEval { i_d: -r.i_d, di_dvgs: -r.di_dvgs, di_dvds: r.di_dvgs + r.di_dvds }
    }
}

/// Drain current (into the drain terminal) with analytic derivatives.
pub fn finfet_current(params: &FinFetParams, v_gs: f64, v_ds: f64) -> FinFetEval {
    match params.polarity {
        Polarity::N => n_type(params, v_gs, v_ds),
        Polarity::P => {
            let r = n_type(params, -v_gs, -v_ds);
            FinFetEval { i_d: -r.i_d, di_dvgs: r.di_dvgs, di_dvds: r.di_dvds }
        }
    }
}

/// Gate-source magnitude at which a diode-connected device (`V_DS = V_GS`)
/// carries `current`, found by bisection on `[0, v_max]` to within `tol`.
pub fn diode_voltage(params: &FinFetParams, current: f64, v_max: f64, tol: f64) -> Result<f64> {
    let current = current.abs();
    let n = FinFetParams { polarity: Polarity::N, ..*params };
    let at = |v: f64| n_type(&n, v, v).i_d;
    if at(v_max) < current {
        return Err(Error::OutOfRange { current });
    }
    let (mut lo, mut hi) = (0.0, v_max);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if at(mid) < current {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
