//! Modified nodal analysis assembly.
//!
//! Unknowns are the non-ground node voltages followed by one branch current
//! per voltage source. Node rows hold the sum of currents leaving the node;
//! branch rows hold `V(n+) − V(n−) − E`.

use nalgebra::{DMatrix, DVector};

use super::state::{SystemState, TimeContext};
use crate::circuit::{Elaborated, ElementKind, IntegrationMethod, NodeIx, Stamp};
use crate::device::finfet_current;

/// Newton system at a guess: `jacobian · Δ = −residual`.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub jacobian: DMatrix<f64>,
    pub residual: DVector<f64>,
    /// Per-row magnitude of the largest contribution, used for relative
    /// convergence tests.
    pub scale: DVector<f64>,
}

impl LinearSystem {
    pub fn zeros(n: usize) -> Self {
        Self { jacobian: DMatrix::zeros(n, n), residual: DVector::zeros(n), scale: DVector::zeros(n) }
    }

    fn clear(&mut self) {
        self.jacobian.fill(0.0);
        self.residual.fill(0.0);
        self.scale.fill(0.0);
    }

    fn add_current(&mut self, node: NodeIx, i: f64) {
        if let Some(n) = node {
            self.residual[n] += i;
            self.scale[n] = self.scale[n].max(i.abs());
        }
    }

    fn add_jac(&mut self, row: NodeIx, col: NodeIx, g: f64) {
        if let (Some(r), Some(c)) = (row, col) {
            self.jacobian[(r, c)] += g;
        }
    }

    /// Two-terminal branch carrying `i` from `a` to `b` with `di/d(va − vb) = g`.
    fn branch(&mut self, a: NodeIx, b: NodeIx, i: f64, g: f64) {
        self.add_current(a, i);
        self.add_current(b, -i);
        self.add_jac(a, a, g);
        self.add_jac(b, b, g);
        self.add_jac(a, b, -g);
        self.add_jac(b, a, -g);
    }
}

fn volt(x: &SystemState, n: NodeIx) -> f64 {
    n.map_or(0.0, |i| x.node_voltages[i])
}

/// Companion conductance and current of a capacitor at voltage `v`.
pub(crate) fn capacitor_companion(
    c: f64,
    v: f64,
    slot: usize,
    a: NodeIx,
    b: NodeIx,
    ctx: &TimeContext<'_>,
) -> Option<(f64, f64)> {
    match *ctx {
        TimeContext::Dc { .. } | TimeContext::Anchored { .. } => None,
        TimeContext::Transient { dt, method, previous, .. } => {
            let v_prev = volt(previous, a) - volt(previous, b);
            Some(match method {
                IntegrationMethod::BackwardEuler => {
                    let g = c / dt;
                    (g, g * (v - v_prev))
                }
                IntegrationMethod::Trapezoidal => {
                    let g = 2.0 * c / dt;
                    (g, g * (v - v_prev) - previous.capacitor_currents[slot])
                }
            })
        }
    }
}

pub(crate) fn assemble_into(sys: &mut LinearSystem, elab: &Elaborated, x: &SystemState, ctx: &TimeContext<'_>) {
    sys.clear();
    let n_nodes = elab.node_count();
    let t = ctx.time();
    let scale = ctx.source_scale();
    let gmin = elab.circuit.options.gmin;

    for i in 0..n_nodes {
        let v = x.node_voltages[i];
        sys.residual[i] += gmin * v;
        sys.jacobian[(i, i)] += gmin;
    }
    if let TimeContext::Anchored { g, anchor, .. } = *ctx {
        for i in 0..n_nodes {
            sys.residual[i] += g * (x.node_voltages[i] - anchor.node_voltages[i]);
            sys.jacobian[(i, i)] += g;
        }
    }

    for (k, stamp) in elab.stamps.iter().enumerate() {
        match *stamp {
            Stamp::Conductance { a, b, g } => {
                let v = volt(x, a) - volt(x, b);
                sys.branch(a, b, g * v, g);
            }
            Stamp::Ptm { a, b, params, slot } => {
                let g = 1.0 / params.resistance(x.ptm_states[slot]);
                let v = volt(x, a) - volt(x, b);
                sys.branch(a, b, g * v, g);
            }
            Stamp::Capacitor { a, b, c, slot } => {
                let v = volt(x, a) - volt(x, b);
                if let Some((g, i)) = capacitor_companion(c, v, slot, a, b, ctx) {
                    sys.branch(a, b, i, g);
                }
            }
            Stamp::ISource { p, n } => {
                let ElementKind::CurrentSource { wave } = &elab.circuit.elements[k].kind else { unreachable!() };
                let i = scale * wave.value(t);
                sys.add_current(p, i);
                sys.add_current(n, -i);
            }
            Stamp::VSource { p, n, branch } => {
                let ElementKind::VoltageSource { wave } = &elab.circuit.elements[k].kind else { unreachable!() };
                let row = n_nodes + branch;
                let i = x.branch_currents[branch];
                sys.add_current(p, i);
                sys.add_current(n, -i);
                sys.add_jac(p, Some(row), 1.0);
                sys.add_jac(n, Some(row), -1.0);
                let e = scale * wave.value(t);
                sys.residual[row] = volt(x, p) - volt(x, n) - e;
                sys.scale[row] = e.abs();
                sys.add_jac(Some(row), p, 1.0);
                sys.add_jac(Some(row), n, -1.0);
            }
            Stamp::FinFet { d, g, s, ref params } => {
                let (vd, vg, vs) = (volt(x, d), volt(x, g), volt(x, s));
                let e = finfet_current(params, vg - vs, vd - vs);
                sys.add_current(d, e.i_d);
                sys.add_current(s, -e.i_d);
                let (gm, gds) = (e.di_dvgs, e.di_dvds);
                sys.add_jac(d, d, gds);
                sys.add_jac(d, g, gm);
                sys.add_jac(d, s, -gm - gds);
                sys.add_jac(s, d, -gds);
                sys.add_jac(s, g, -gm);
                sys.add_jac(s, s, gm + gds);
            }
        }
    }
}

/// Builds the Newton system (Jacobian and residual) at `guess`.
///
/// PTM elements are stamped as linear resistors of their frozen state.
pub fn assemble_system(elab: &Elaborated, guess: &SystemState, ctx: &TimeContext<'_>) -> LinearSystem {
    let mut sys = LinearSystem::zeros(elab.dimension());
    assemble_into(&mut sys, elab, guess, ctx);
    sys
}

/// Current through each capacitor at a converged transient point.
pub(crate) fn capacitor_currents(elab: &Elaborated, x: &SystemState, ctx: &TimeContext<'_>) -> Vec<f64> {
    let mut out = vec![0.0; elab.capacitor_count];
    for stamp in &elab.stamps {
        if let Stamp::Capacitor { a, b, c, slot } = *stamp {
            let v = volt(x, a) - volt(x, b);
            out[slot] = capacitor_companion(c, v, slot, a, b, ctx).map_or(0.0, |(_, i)| i);
        }
    }
    out
}

/// Voltage across and current through every PTM (from its first to its
/// second terminal) at `x`.
pub fn ptm_operating_points(elab: &Elaborated, x: &SystemState) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(elab.ptm_count());
    for stamp in &elab.stamps {
        if let Stamp::Ptm { a, b, params, slot } = *stamp {
            let v = volt(x, a) - volt(x, b);
            out.push((v, v / params.resistance(x.ptm_states[slot])));
        }
    }
    out
}

/// Power delivered by each element at `x` (positive when the element
/// supplies energy to the rest of the circuit). Keyed by element index.
pub fn element_powers(elab: &Elaborated, x: &SystemState, ctx: &TimeContext<'_>) -> Vec<f64> {
    let t = ctx.time();
    let scale = ctx.source_scale();
    let mut out = vec![0.0; elab.stamps.len()];
    for (k, stamp) in elab.stamps.iter().enumerate() {
        out[k] = match *stamp {
            Stamp::Conductance { a, b, g } => {
                let v = volt(x, a) - volt(x, b);
                -g * v * v
            }
            Stamp::Ptm { a, b, params, slot } => {
                let v = volt(x, a) - volt(x, b);
                -v * v / params.resistance(x.ptm_states[slot])
            }
            Stamp::Capacitor { a, b, c, slot } => {
                let v = volt(x, a) - volt(x, b);
                -v * capacitor_companion(c, v, slot, a, b, ctx).map_or(0.0, |(_, i)| i)
            }
            Stamp::ISource { p, n } => {
                let ElementKind::CurrentSource { wave } = &elab.circuit.elements[k].kind else { unreachable!() };
                (volt(x, n) - volt(x, p)) * scale * wave.value(t)
            }
            Stamp::VSource { p, n, branch } => -(volt(x, p) - volt(x, n)) * x.branch_currents[branch],
            Stamp::FinFet { d, g, s, ref params } => {
                let (vd, vg, vs) = (volt(x, d), volt(x, g), volt(x, s));
                -(vd - vs) * finfet_current(params, vg - vs, vd - vs).i_d
            }
        };
    }
    out
}

/// Total shunt (gmin) power drawn at `x`.
pub fn gmin_power(elab: &Elaborated, x: &SystemState) -> f64 {
    let g = elab.circuit.options.gmin;
    x.node_voltages.iter().map(|v| g * v * v).sum()
}
