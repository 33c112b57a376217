use serde::{Deserialize, Serialize};

use crate::device::{diode_voltage, hyperfet_branch_solve, FinFetParams, Polarity, PtmParams, PtmState};
use crate::error::{Error, Result};

/// A bisection result: `value` is the bracket midpoint, `width` its size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub value: f64,
    pub width: f64,
}

/// Bias magnitudes at which a Hyper-FET switches. `None` means the
/// condition never fires within `[0, V_DD]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionVoltages {
    /// Smallest |V_GS| that drives the insulating film into IMT at |V_DS| = V_DD.
    pub v_gs_imt: Option<Bracket>,
    /// Largest |V_GS| at which the metallic film relaxes (MIT) at |V_DS| = V_DD.
    pub v_gs_mit: Option<Bracket>,
    /// Smallest |V_DS| that triggers IMT with |V_GS| = V_DD.
    pub v_ds_imt: Option<Bracket>,
}

impl TransitionVoltages {
    fn get(b: Option<Bracket>, what: &str) -> Result<f64> {
        b.map(|b| b.value).ok_or_else(|| Error::NotReachable(what.into()))
    }

    pub fn v_gs_imt(&self) -> Result<f64> {
        Self::get(self.v_gs_imt, "V_GS_IMT")
    }

    pub fn v_gs_mit(&self) -> Result<f64> {
        Self::get(self.v_gs_mit, "V_GS_MIT")
    }

    pub fn v_ds_imt(&self) -> Result<f64> {
        Self::get(self.v_ds_imt, "V_DS_IMT")
    }
}

/// Branch operating point `(V_PTM, I)` at gate and drain magnitudes
/// `v_gs`, `v_ds`, with the film between the source and its rail.
fn branch(fet: &FinFetParams, ptm: &PtmParams, state: PtmState, vdd: f64, v_gs: f64, v_ds: f64) -> Result<(f64, f64)> {
    let (v_g, v_d, v_s) = match fet.polarity {
        Polarity::N => (v_gs, v_ds, 0.0),
        Polarity::P => (vdd - v_gs, vdd - v_ds, vdd),
    };
    let s = hyperfet_branch_solve(fet, ptm, state, v_g, v_d, v_s, 1e-16)?;
    Ok((s.v_ptm(v_s).abs(), s.current.abs()))
}

/// Bisects a monotone predicate on `[0, top]`. `rising` means false below
/// the switch point and true above; the bracket straddles the switch.
fn bisect(top: f64, tol: f64, rising: bool, fires: impl Fn(f64) -> Result<bool>) -> Result<Option<Bracket>> {
    let (f0, f1) = (fires(0.0)?, fires(top)?);
    let (mut lo, mut hi) = (0.0, top);
    if rising {
        if !f1 {
            return Ok(None);
        }
        if f0 {
            return Ok(Some(Bracket { value: 0.0, width: 0.0 }));
        }
    } else {
        if !f0 {
            return Ok(None);
        }
        if f1 {
            return Ok(Some(Bracket { value: top, width: 0.0 }));
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if fires(mid)? == rising {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(Bracket { value: 0.5 * (lo + hi), width: hi - lo }))
}

/// Extracts the three switching voltages of a FET with `ptm` at its source,
/// each bracketed by bisection to `tol`. Values are magnitudes, so n- and
/// p-type devices are directly comparable.
pub fn find_transition_voltages(fet: &FinFetParams, ptm: &PtmParams, vdd: f64, tol: f64) -> Result<TransitionVoltages> {
    if !(tol > 0.0) || !(vdd > 0.0) {
        return Err(Error::InvalidParams("tolerance and V_DD must be positive".into()));
    }
    fet.validate()?;
    ptm.validate()?;
    let imt = |v: (f64, f64)| v.0 >= ptm.v_c_imt;
    let v_gs_imt = bisect(vdd, tol, true, |g| Ok(imt(branch(fet, ptm, PtmState::Insulating, vdd, g, vdd)?)))?;
    let v_gs_mit =
        bisect(vdd, tol, false, |g| Ok(branch(fet, ptm, PtmState::Metallic, vdd, g, vdd)?.1 <= ptm.i_c_mit))?;
    let v_ds_imt = bisect(vdd, tol, true, |d| Ok(imt(branch(fet, ptm, PtmState::Insulating, vdd, vdd, d)?)))?;
    Ok(TransitionVoltages { v_gs_imt, v_gs_mit, v_ds_imt })
}

/// Gate voltages a diode-connected mirror device settles to for the two
/// cell currents.
///
/// `v_gs_lrs`/`v_gs_hrs` are gate-node voltages: `|V_GS|` for an n-type
/// mirror referenced to ground, `V_DD − |V_GS|` for a p-type mirror
/// referenced to the supply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MirrorWindow {
    pub polarity: Polarity,
    pub vdd: f64,
    pub v_gs_lrs: f64,
    pub v_gs_hrs: f64,
    pub center: f64,
    pub size: f64,
}

impl MirrorWindow {
    /// `(|V_GS|_LRS, |V_GS|_HRS)`.
    pub fn magnitudes(&self) -> (f64, f64) {
        match self.polarity {
            Polarity::N => (self.v_gs_lrs, self.v_gs_hrs),
            Polarity::P => (self.vdd - self.v_gs_lrs, self.vdd - self.v_gs_hrs),
        }
    }
}

pub fn mirror_window(mirror: &FinFetParams, i_lrs: f64, i_hrs: f64, vdd: f64, tol: f64) -> Result<MirrorWindow> {
    if !(i_lrs >= i_hrs && i_hrs > 0.0) {
        return Err(Error::InvalidParams("mirror window needs I_LRS >= I_HRS > 0".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParams("tolerance must be positive".into()));
    }
    mirror.validate()?;
    let node = |i: f64| -> Result<f64> {
        let v = diode_voltage(mirror, i, vdd, tol)?;
        Ok(match mirror.polarity {
            Polarity::N => v,
            Polarity::P => vdd - v,
        })
    };
    let (v_gs_lrs, v_gs_hrs) = (node(i_lrs)?, node(i_hrs)?);
    Ok(MirrorWindow {
        polarity: mirror.polarity,
        vdd,
        v_gs_lrs,
        v_gs_hrs,
        center: 0.5 * (v_gs_lrs + v_gs_hrs),
        size: (v_gs_lrs - v_gs_hrs).abs(),
    })
}
