use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ptmsa::device::{finfet_current, FinFetParams, PtmParams, PtmState};
use ptmsa::solver::{
    assemble_system, element_powers, gmin_power, operating_point, resolve_device_states, run_transient,
    run_transient_from, solve_dc, step_transient, SystemState, TimeContext,
};
use ptmsa::{Circuit, Element, Error, IntegrationMethod, Waveform};

fn divider(v: f64, r_top: f64, r_bot: f64) -> Circuit {
    Circuit::default()
        .with(Element::vsource("V1", "in", "0", Waveform::Dc(v)))
        .with(Element::resistor("R1", "in", "out", r_top))
        .with(Element::resistor("R2", "out", "0", r_bot))
}

fn ptm_series(v: f64, r_ser: f64) -> Circuit {
    Circuit::default()
        .with(Element::vsource("V1", "in", "0", Waveform::Dc(v)))
        .with(Element::resistor("R1", "in", "mid", r_ser))
        .with(Element::ptm("PTM1", "mid", "0", PtmParams::default()))
}

#[test]
fn divider_residual_vanishes_at_exact_solution() {
    let c = divider(1.0, 1e3, 1e3);
    let elab = c.elaborate().unwrap();
    assert_eq!(elab.dimension(), 2 + 1);
    let mut x = SystemState::initial(&elab);
    x.node_voltages[elab.node("in").unwrap()] = 1.0;
    x.node_voltages[elab.node("out").unwrap()] = 0.5;
    // Source current entering `+`: the supply delivers 0.5 mA.
    x.branch_currents[0] = -0.5e-3;
    let sys = assemble_system(&elab, &x, &TimeContext::dc());
    // Only gmin shunts remain.
    assert!(sys.residual.amax() < 1e-11, "{}", sys.residual);
}

#[test]
fn insulating_ptm_stamps_as_its_resistance() {
    let c = ptm_series(0.6, 330e3);
    let (elab, op) = operating_point(&c).unwrap();
    let v = op.voltage(&elab, "mid").unwrap();
    assert!((v - 0.3).abs() < 1e-6, "{v}");
    assert_eq!(op.ptm_state(&elab, "PTM1"), Some(PtmState::Insulating));
}

#[test]
fn divider_dc() {
    let (elab, op) = operating_point(&divider(1.0, 1e3, 1e3)).unwrap();
    assert!((op.voltage(&elab, "out").unwrap() - 0.5).abs() < 1e-9);
}

#[test]
fn two_state_examples() {
    let (elab, op) = operating_point(&ptm_series(0.4, 330e3)).unwrap();
    assert_eq!(op.ptm_state(&elab, "PTM1"), Some(PtmState::Insulating));
    assert!((op.voltage(&elab, "mid").unwrap() - 0.2).abs() < 1e-6);

    let (elab, op) = operating_point(&ptm_series(0.8, 6.6e3)).unwrap();
    assert_eq!(op.ptm_state(&elab, "PTM1"), Some(PtmState::Metallic));
    let v = op.voltage(&elab, "mid").unwrap();
    assert!((v - 0.4).abs() < 1e-6);
    assert!((v / 6.6e3 - 60.6e-6).abs() < 0.1e-6);
}

#[test]
fn two_state_consistency_sweep() {
    let p = PtmParams::default();
    let r_ser = 100e3;
    for k in 0..50 {
        let v = k as f64 / 49.0;
        let v_ins = v * p.r_ins() / (p.r_ins() + r_ser);
        let i_met = v / (p.r_met() + r_ser);
        let ins_ok = v_ins < p.v_c_imt;
        let met_ok = i_met > p.i_c_mit;
        let res = operating_point(&ptm_series(v, r_ser));
        match (ins_ok, met_ok) {
            (true, _) => {
                let (elab, op) = res.unwrap();
                assert_eq!(op.ptm_state(&elab, "PTM1"), Some(PtmState::Insulating), "v={v}");
            }
            (false, true) => {
                let (elab, op) = res.unwrap();
                assert_eq!(op.ptm_state(&elab, "PTM1"), Some(PtmState::Metallic), "v={v}");
            }
            (false, false) => assert!(matches!(res, Err(Error::NoConsistentState)), "v={v}: {res:?}"),
        }
    }
}

fn rc(method: IntegrationMethod, gmin: f64) -> Circuit {
    let mut c =
        Circuit::default().with(Element::resistor("R1", "n", "0", 1e3)).with(Element::capacitor("C1", "n", "0", 1e-12));
    c.options.gmin = gmin;
    c.options.integration_method = method;
    c
}

fn charged(elab: &ptmsa::circuit::Elaborated) -> SystemState {
    let mut x = SystemState::initial(elab);
    x.node_voltages[elab.node("n").unwrap()] = 1.0;
    x.capacitor_currents[0] = -1e-3;
    x
}

#[test]
fn one_step_rc() {
    let tau = 1e-9;
    let elab = rc(IntegrationMethod::BackwardEuler, 0.0).elaborate().unwrap();
    let y = step_transient(&elab, &charged(&elab), tau / 100.0).unwrap();
    assert!((y.node_voltages[0] - 1.0 / 1.01).abs() < 1e-12);

    let elab = rc(IntegrationMethod::Trapezoidal, 0.0).elaborate().unwrap();
    let y = step_transient(&elab, &charged(&elab), tau / 100.0).unwrap();
    assert!((y.node_voltages[0] - 0.995 / 1.005).abs() < 1e-12);
}

#[test]
fn trapezoidal_rc_discharge_matches_exponential() {
    let tau = 1e-9;
    let mut c = rc(IntegrationMethod::Trapezoidal, 0.0);
    c.options = c.options.fixed_step(tau / 100.0);
    let elab = c.elaborate().unwrap();
    let r = run_transient_from(&elab, &charged(&elab), 5.0 * tau).unwrap();
    let v = r.voltage("n").unwrap();
    for (t, v) in r.time.iter().zip(v) {
        let exact = (-t / tau).exp();
        assert!((v - exact).abs() <= 5e-3 * exact, "t={t} v={v} exact={exact}");
    }
    assert!((r.final_time() - 5.0 * tau).abs() < 1e-18);
}

fn rc_final(method: IntegrationMethod, dt: f64) -> f64 {
    let mut c = rc(method, 0.0);
    c.options = c.options.fixed_step(dt);
    let elab = c.elaborate().unwrap();
    let r = run_transient_from(&elab, &charged(&elab), 1e-9).unwrap();
    *r.voltage("n").unwrap().last().unwrap()
}

#[test]
fn integration_order() {
    let dt = 50e-12;
    for (method, min_ratio) in [(IntegrationMethod::BackwardEuler, 1.8), (IntegrationMethod::Trapezoidal, 3.5)] {
        let reference = rc_final(method, dt / 4.0);
        let e1 = (rc_final(method, dt) - reference).abs();
        let e2 = (rc_final(method, dt / 2.0) - reference).abs();
        assert!(e1 / e2 >= min_ratio, "{method:?}: {e1} / {e2}");
    }
}

#[test]
fn linear_networks_match_dense_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let n = rng.random_range(3..9);
        let mut c = Circuit::default();
        c.options.gmin = 0.0;
        let name = |i: usize| if i == 0 { "0".to_string() } else { format!("n{i}") };
        let mut k = 0;
        // A ring through ground keeps every node connected.
        for i in 0..=n {
            let j = (i + 1) % (n + 1);
            k += 1;
            c.add(Element::resistor(&format!("R{k}"), &name(i), &name(j), rng.random_range(1e2..1e5)));
        }
        for _ in 0..n {
            let (a, b) = (rng.random_range(0..=n), rng.random_range(0..=n));
            if a != b {
                k += 1;
                c.add(Element::resistor(&format!("R{k}"), &name(a), &name(b), rng.random_range(1e2..1e5)));
            }
        }
        c.add(Element::vsource("V1", "n1", "0", Waveform::Dc(rng.random_range(-1.0..1.0))));
        c.add(Element::isource("I1", &name(n), "0", Waveform::Dc(rng.random_range(-1e-4..1e-4))));

        // Direct MNA: [G B; B^T 0] [v; i] = [-i_src; E].
        let dim = n + 1;
        let mut a = DMatrix::<f64>::zeros(dim, dim);
        let mut rhs = DVector::<f64>::zeros(dim);
        let ix = |s: &str| if s == "0" { None } else { Some(s[1..].parse::<usize>().unwrap() - 1) };
        for e in &c.elements {
            let (p, q) = (ix(&e.nodes[0]), ix(&e.nodes[1]));
            match &e.kind {
                ptmsa::ElementKind::Resistor { ohms } => {
                    let g = 1.0 / ohms;
                    for (r, s, sign) in [(p, p, 1.0), (q, q, 1.0), (p, q, -1.0), (q, p, -1.0)] {
                        if let (Some(r), Some(s)) = (r, s) {
                            a[(r, s)] += sign * g;
                        }
                    }
                }
                ptmsa::ElementKind::VoltageSource { wave } => {
                    let p = p.unwrap();
                    a[(p, n)] += 1.0;
                    a[(n, p)] += 1.0;
                    rhs[n] = wave.value(0.0);
                }
                ptmsa::ElementKind::CurrentSource { wave } => {
                    // Current flows from `+` through the source to `-`.
                    if let Some(p) = p {
                        rhs[p] -= wave.value(0.0);
                    }
                }
                _ => unreachable!(),
            }
        }
        let exact = a.lu().solve(&rhs).unwrap();
        let (elab, op) = operating_point(&c).unwrap();
        for i in 0..n {
            let got = op.voltage(&elab, &name(i + 1)).unwrap();
            let want = exact[i];
            assert!((got - want).abs() <= 1e-12 * want.abs().max(1e-3), "node {i}: {got} vs {want}");
        }
    }
}

#[test]
fn dc_power_balance() {
    let mut c = ptm_series(0.8, 20e3);
    c.add(Element::finfet("MN1", "d", "in", "0", FinFetParams::nmos(2)));
    c.add(Element::resistor("RL", "in", "d", 10e3));
    c.add(Element::isource("I1", "in", "0", Waveform::Dc(1e-6)));
    let (elab, op) = operating_point(&c).unwrap();
    let total: f64 = element_powers(&elab, &op, &TimeContext::dc()).iter().sum();
    assert!((total - gmin_power(&elab, &op)).abs() <= 1e-12, "{total}");
}

#[test]
fn imt_event_in_transient() {
    // Source ramps 0 → 1 V over 100 ps into 20 kΩ + PTM.
    let mut c = Circuit::default()
        .with(Element::vsource("V1", "in", "0", Waveform::Pwl(vec![(0.0, 0.0), (100e-12, 1.0)])))
        .with(Element::resistor("R1", "in", "mid", 20e3))
        .with(Element::ptm("PTM1", "mid", "0", PtmParams::default()));
    c.options.gmin = 0.0;
    let elab = c.elaborate().unwrap();
    let r = run_transient(&elab, 200e-12).unwrap();
    assert_eq!(r.events.len(), 1);
    let ev = &r.events[0];
    assert!(ev.is_imt());

    // Quasi-static crossing of V_C_IMT on the divider.
    let p = PtmParams::default();
    let t_star = 100e-12 * p.v_c_imt * (p.r_ins() + 20e3) / p.r_ins();
    assert!((ev.time - t_star).abs() < 0.05e-12, "{} vs {t_star}", ev.time);

    // The recorded post-event point is the metallic solution at that time.
    let k = r.time.iter().position(|&t| t == ev.time).unwrap();
    let mid = r.voltage("mid").unwrap()[k];
    let v_src = ev.time / 100e-12;
    let v_met = v_src * p.r_met() / (p.r_met() + 20e3);
    assert!((mid - v_met).abs() < 1e-3, "{mid} vs {v_met}");
    assert_eq!(r.ptm_states[0][k], PtmState::Metallic);
    assert_eq!(r.ptm_states[0][k - 1], PtmState::Insulating);
}

#[test]
fn resolve_is_identity_without_transitions() {
    let c = ptm_series(0.3, 100e3);
    let elab = c.elaborate().unwrap();
    let op = solve_dc(&elab, &SystemState::initial(&elab)).unwrap();
    let again = resolve_device_states(&elab, &op, &TimeContext::dc()).unwrap();
    assert_eq!(op, again);
}

#[test]
fn finfet_derivatives_match_finite_differences() {
    for params in [FinFetParams::nmos(1), FinFetParams::pmos(3)] {
        let s = params.polarity.sign();
        for i in 0..20 {
            for j in 0..20 {
                let vgs = s * (-0.2 + 1.0 * i as f64 / 19.0);
                let vds = s * (-0.8 + 1.6 * j as f64 / 19.0) + 1e-4;
                let e = finfet_current(&params, vgs, vds);
                let h = 1e-6;
                let fg =
                    (finfet_current(&params, vgs + h, vds).i_d - finfet_current(&params, vgs - h, vds).i_d) / (2.0 * h);
                let fd =
                    (finfet_current(&params, vgs, vds + h).i_d - finfet_current(&params, vgs, vds - h).i_d) / (2.0 * h);
                assert!(
                    (fg - e.di_dvgs).abs() <= 1e-4 * e.di_dvgs.abs() + 1e-12,
                    "gs at {vgs},{vds}: {fg} {}",
                    e.di_dvgs
                );
                assert!(
                    (fd - e.di_dvds).abs() <= 1e-4 * e.di_dvds.abs() + 1e-12,
                    "ds at {vgs},{vds}: {fd} {}",
                    e.di_dvds
                );
            }
        }
    }
}

#[test]
fn finfet_monotone_and_selective() {
    let p = FinFetParams::nmos(1);
    let grid: Vec<f64> = (0..=40).map(|k| k as f64 * 0.02).collect();
    for &vds in &grid[1..] {
        for w in grid.windows(2) {
            assert!(finfet_current(&p, w[1], vds).i_d >= finfet_current(&p, w[0], vds).i_d);
            assert!(finfet_current(&p, vds, w[1]).i_d >= finfet_current(&p, vds, w[0]).i_d);
        }
    }
    let on = finfet_current(&p, 0.8, 0.8).i_d;
    let off = finfet_current(&p, 0.0, 0.8).i_d;
    assert!(on / off >= 1e4, "{on} / {off}");
}

#[test]
fn finfet_subthreshold_slope() {
    let p = FinFetParams::nmos(1);
    let (v1, v2) = (-0.25, -0.15);
    let i1 = finfet_current(&p, v1, 0.8).i_d;
    let i2 = finfet_current(&p, v2, 0.8).i_d;
    let slope = (v2 - v1) / (i2 / i1).log10();
    let ideal = p.n_ss * p.phi_t * std::f64::consts::LN_10;
    assert!((slope - ideal).abs() <= 0.05 * ideal, "{slope} vs {ideal}");
}
