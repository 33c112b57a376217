//! A FinFET with a PTM film in series at its source.

use super::finfet::{finfet_current, FinFetParams};
use super::ptm::{PtmParams, PtmState};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperFetSolution {
    /// Drain current of the host transistor, equal to the current leaving the
    /// internal node through the PTM toward the external source terminal.
    pub current: f64,
    /// Voltage of the node between the host source and the PTM.
    pub v_internal: f64,
}

impl HyperFetSolution {
    /// Voltage across the film, internal node relative to the external source.
    pub fn v_ptm(&self, v_sext: f64) -> f64 {
        self.v_internal - v_sext
    }
}

/// Solves the series FET + PTM branch for its internal node with the film
/// state frozen.
///
/// The KCL residual `I_D(V_G − v, V_D − v) − (v − V_Sext)/R` is strictly
/// decreasing in `v` for either polarity, so a root always lies between the
/// two external terminals. Newton steps are taken when they stay inside the
/// shrinking bracket and bisection otherwise.
pub fn hyperfet_branch_solve(
    fet: &FinFetParams,
    ptm: &PtmParams,
    state: PtmState,
    v_g: f64,
    v_d: f64,
    v_sext: f64,
    abstol: f64,
) -> Result<HyperFetSolution> {
    let r = ptm.resistance(state);
    let f = |v: f64| {
        let e = finfet_current(fet, v_g - v, v_d - v);
        let res = e.i_d - (v - v_sext) / r;
        let dres = -(e.di_dvgs + e.di_dvds) - 1.0 / r;
        (res, dres)
    };

    let (mut lo, mut hi) = if v_d >= v_sext { (v_sext, v_d) } else { (v_d, v_sext) };
    let (f_lo, _) = f(lo);
    let (f_hi, _) = f(hi);
    if f_lo.abs() <= abstol {
        return Ok(HyperFetSolution { current: (lo - v_sext) / r, v_internal: lo });
    }
    if f_hi.abs() <= abstol {
        return Ok(HyperFetSolution { current: (hi - v_sext) / r, v_internal: hi });
    }
    if f_lo < 0.0 || f_hi > 0.0 {
        return Err(Error::BracketFailure(format!(
            "residual does not change sign on [{lo}, {hi}] ({f_lo:e}, {f_hi:e})"
        )));
    }

    let mut v = 0.5 * (lo + hi);
    for _ in 0..300 {
        let (res, dres) = f(v);
        if res.abs() <= abstol {
            return Ok(HyperFetSolution { current: (v - v_sext) / r, v_internal: v });
        }
        // Residual decreases with v: positive means the root is above.
        if res > 0.0 {
            lo = v;
        } else {
            hi = v;
        }
        if hi - lo <= f64::EPSILON * hi.abs().max(lo.abs()).max(1.0) {
            return Ok(HyperFetSolution { current: (v - v_sext) / r, v_internal: v });
        }
        let newton = v - res / dres;
        v = if dres < 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
    }
    Err(Error::BracketFailure("iteration budget exhausted".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    #[test]
    fn zero_gate_drive_leaves_branch_nearly_off() {
        let fet = FinFetParams::nmos(1);
        let ptm = PtmParams::default();
        let s = hyperfet_branch_solve(&fet, &ptm, PtmState::Insulating, 0.0, 0.8, 0.0, TOL).unwrap();
        assert!(s.current.abs() < 1e-9, "{}", s.current);
        assert!(s.v_internal.abs() < 1e-3);
    }

    #[test]
    fn metallic_branch_tracks_bare_device_at_low_current() {
        // Near threshold gm/I·R_MET·I stays below 0.1, so the source
        // degeneration costs less than 10% of the bare current.
        let fet = FinFetParams::nmos(1);
        let ptm = PtmParams::default();
        let s = hyperfet_branch_solve(&fet, &ptm, PtmState::Metallic, 0.25, 0.8, 0.0, TOL).unwrap();
        let bare = finfet_current(&fet, 0.25, 0.8);
        let bound = bare.di_dvgs * ptm.r_met();
        assert!(bound < 0.1);
        assert!((s.current - bare.i_d).abs() <= 0.1 * bare.i_d);
    }

    #[test]
    fn pmos_orientation_mirrors_nmos() {
        let ptm = PtmParams::default();
        let n = hyperfet_branch_solve(&FinFetParams::nmos(2), &ptm, PtmState::Metallic, 0.6, 0.8, 0.0, TOL).unwrap();
        let p = hyperfet_branch_solve(&FinFetParams::pmos(2), &ptm, PtmState::Metallic, 0.2, 0.0, 0.8, TOL).unwrap();
        assert!((n.current + p.current).abs() < 1e-11);
        assert!((n.v_internal - (0.8 - p.v_internal)).abs() < 1e-9);
    }

    #[test]
    fn residual_is_within_tolerance() {
        let fet = FinFetParams::nmos(6);
        let ptm = PtmParams::default();
        for state in [PtmState::Insulating, PtmState::Metallic] {
            for vg in [0.1, 0.3, 0.5, 0.8] {
                let s = hyperfet_branch_solve(&fet, &ptm, state, vg, 0.8, 0.0, TOL).unwrap();
                let i = finfet_current(&fet, vg - s.v_internal, 0.8 - s.v_internal).i_d;
                assert!((i - s.current).abs() <= 2.0 * TOL);
            }
        }
    }
}
