use ptmsa::analysis::{
    dc_sweep_hysteretic, extract_metrics, find_transition_voltages, mirror_window, run_sense, sweep_study, Direction,
    LogicOutcome, StudyKind, StudySpec,
};
use ptmsa::circuit::{Circuit, Element, Waveform};
use ptmsa::device::{finfet_current, FinFetParams, Polarity, PtmParams, PtmState};
use ptmsa::netlist::{build_topology, default_schedule, CellState, TopologyKind, TopologyParams};
use ptmsa::solver::{PtmEvent, TransientResult};
use ptmsa::Error;

const VDD: f64 = 0.8;

// ---- hysteretic sweeps ------------------------------------------------------

#[test]
fn bulk_sweep_matches_two_resistor_algebra() {
    let params = TopologyParams::default();
    let (c, _) = build_topology(TopologyKind::BulkPtmFixture, &params).unwrap();
    let n = 801;
    let step = VDD / (n - 1) as f64;
    let s = dc_sweep_hysteretic(&c, "VSRC", 0.0, VDD, n).unwrap();
    assert_eq!((s.axis.len(), s.up_current.len(), s.down_current.len()), (n, n, n));
    assert!(s.axis.windows(2).all(|w| w[1] > w[0]));

    let ptm = params.ptm;
    let v_imt = ptm.v_c_imt * (ptm.r_ins() + params.r_series) / ptm.r_ins();
    let v_mit = ptm.i_c_mit * (ptm.r_met() + params.r_series);
    let up: Vec<_> = s.transitions.iter().filter(|t| t.direction == Direction::Up).collect();
    let down: Vec<_> = s.transitions.iter().filter(|t| t.direction == Direction::Down).collect();
    assert_eq!((up.len(), down.len()), (1, 1), "{:?}", s.transitions);
    assert_eq!(up[0].to, PtmState::Metallic);
    assert_eq!(down[0].to, PtmState::Insulating);
    assert!(up[0].value >= v_imt && up[0].value - v_imt <= step, "{} vs {v_imt}", up[0].value);
    assert!(down[0].value <= v_mit && v_mit - down[0].value <= step, "{} vs {v_mit}", down[0].value);

    // Between the flips the two branches are the two film resistances.
    let k = s.axis.iter().position(|v| (v - 0.2).abs() < 1e-12).unwrap();
    let r_up = s.up_voltage[k] / s.up_current[k];
    let r_down = s.down_voltage[k] / s.down_current[k];
    assert!((r_up / r_down - 50.0).abs() <= 1e-9 * 50.0, "{}", r_up / r_down);
    assert!((r_up - 330e3).abs() <= 1e-6 * 330e3);
}

#[test]
fn linear_circuit_has_no_hysteresis() {
    let c = Circuit::default()
        .with(Element::vsource("V1", "a", "0", Waveform::Dc(0.0)))
        .with(Element::resistor("R1", "a", "b", 1e3))
        .with(Element::resistor("R2", "b", "0", 3e3));
    let s = dc_sweep_hysteretic(&c, "V1", 0.0, 1.0, 11).unwrap();
    for (a, b) in s.up_current.iter().zip(&s.down_current) {
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-12), "{a} vs {b}");
    }
    assert!(s.transitions.is_empty());
    // Without a PTM the probe is the swept source's delivered current.
    assert!((s.up_current[10] - 1.0 / 4e3).abs() < 1e-8 / 4e3); // gmin leakage only
}

#[test]
fn sweep_rejects_bad_requests() {
    let (c, _) = build_topology(TopologyKind::BulkPtmFixture, &TopologyParams::default()).unwrap();
    assert!(matches!(dc_sweep_hysteretic(&c, "VNOPE", 0.0, 1.0, 11), Err(Error::UnknownSource(_))));
    assert!(matches!(dc_sweep_hysteretic(&c, "VSRC", 0.0, 1.0, 2), Err(Error::InvalidParams(_))));
}

#[test]
fn astable_bias_reports_the_sweep_value() {
    let c = Circuit::default()
        .with(Element::vsource("V1", "in", "0", Waveform::Dc(0.0)))
        .with(Element::resistor("R1", "in", "a", 330e3))
        .with(Element::ptm("P1", "a", "0", PtmParams::default()));
    // Insulating flips above 0.672 V; metallic relaxes below 1.683 V.
    match dc_sweep_hysteretic(&c, "V1", 0.0, 1.2, 121) {
        Err(Error::Sweep { value, source }) => {
            assert!(matches!(*source, Error::NoConsistentState), "{source}");
            assert!((0.672..0.672 + 0.01 + 1e-12).contains(&value), "{value}");
        }
        other => panic!("{other:?}"),
    }
}

fn fixture(polarity: Polarity) -> Circuit {
    let p = TopologyParams { fixture_polarity: polarity, ..TopologyParams::default() };
    build_topology(TopologyKind::HyperfetFixture, &p).unwrap().0
}

#[test]
fn hyperfet_gate_sweep_is_hysteretic_both_orientations() {
    for polarity in [Polarity::N, Polarity::P] {
        let c = fixture(polarity);
        // Sweep from the off gate level to the on level and back.
        let (off, on) = match polarity {
            Polarity::N => (0.0, VDD),
            Polarity::P => (VDD, 0.0),
        };
        let s = dc_sweep_hysteretic(&c, "VG", off, on, 161).unwrap();
        assert!(s.axis.windows(2).all(|w| (w[1] - w[0]) * (on - off) > 0.0));
        let imt = s.transitions.iter().find(|t| t.direction == Direction::Up).expect("IMT on the way up");
        let mit = s.transitions.iter().find(|t| t.direction == Direction::Down).expect("MIT on the way down");
        let (imt_mag, mit_mag) = ((imt.value - off).abs(), (mit.value - off).abs());
        assert!(mit_mag + 0.01 <= imt_mag, "{polarity:?}: MIT {mit_mag} IMT {imt_mag}");

        for k in 0..s.axis.len() {
            let g = (s.axis[k] - off).abs();
            let (a, b) = (s.up_current[k].abs(), s.down_current[k].abs());
            if g > mit_mag + 1e-9 && g < imt_mag - 1e-9 {
                assert!(b > 2.0 * a, "{polarity:?} at {g}: up {a:e} down {b:e}");
            } else if g < mit_mag - 1e-9 || g > imt_mag + 1e-9 {
                assert!((a - b).abs() <= 1e-6 * a.max(b) + 1e-15, "{polarity:?} at {g}: up {a:e} down {b:e}");
            }
        }
        let i_on = s.up_current.last().unwrap().abs();
        let i_off = s.up_current[0].abs();
        assert!(i_on / i_off >= 1e4, "{polarity:?}: selectivity {}", i_on / i_off);
    }
}

// ---- transition voltages ----------------------------------------------------

/// First grid point (as |V_GS| or |V_DS|) where `fires` holds, scanning
/// upward, or the last one when `from_top`.
fn dense_scan(fires: impl Fn(f64) -> bool, from_top: bool) -> Option<f64> {
    let n = 2000;
    let grid: Vec<f64> = (0..n).map(|k| VDD * k as f64 / (n - 1) as f64).collect();
    if from_top {
        grid.into_iter().rev().find(|&g| fires(g))
    } else {
        grid.into_iter().find(|&g| fires(g))
    }
}

fn branch(fet: &FinFetParams, ptm: &PtmParams, state: PtmState, v_gs: f64, v_ds: f64) -> (f64, f64) {
    // Independent orientation bookkeeping for the dense-grid oracle.
    let (v_g, v_d, v_s) = match fet.polarity {
        Polarity::N => (v_gs, v_ds, 0.0),
        Polarity::P => (VDD - v_gs, VDD - v_ds, VDD),
    };
    let s = ptmsa::device::hyperfet_branch_solve(fet, ptm, state, v_g, v_d, v_s, 1e-15).unwrap();
    (s.v_ptm(v_s), s.current)
}

#[test]
fn transition_voltages_match_dense_grid() {
    let cell = VDD / 1999.0;
    let tol = 1e-5;
    let ptm = PtmParams::default();
    for fet in [FinFetParams::nmos(1), FinFetParams::nmos(6), FinFetParams::pmos(2)] {
        let tv = find_transition_voltages(&fet, &ptm, VDD, tol).unwrap();
        let imt = dense_scan(|g| branch(&fet, &ptm, PtmState::Insulating, g, VDD).0.abs() >= ptm.v_c_imt, false);
        let mit = dense_scan(|g| branch(&fet, &ptm, PtmState::Metallic, g, VDD).1.abs() <= ptm.i_c_mit, true);
        let vds = dense_scan(|d| branch(&fet, &ptm, PtmState::Insulating, VDD, d).0.abs() >= ptm.v_c_imt, false);
        for (name, got, want) in [
            ("V_GS_IMT", tv.v_gs_imt().unwrap(), imt.unwrap()),
            ("V_GS_MIT", tv.v_gs_mit().unwrap(), mit.unwrap()),
            ("V_DS_IMT", tv.v_ds_imt().unwrap(), vds.unwrap()),
        ] {
            assert!((got - want).abs() <= cell + tol, "{fet:?} {name}: {got} vs grid {want}");
        }
        for b in [tv.v_gs_imt, tv.v_gs_mit, tv.v_ds_imt].into_iter().flatten() {
            assert!(b.width <= tol);
        }
        assert!(tv.v_gs_mit().unwrap() <= tv.v_gs_imt().unwrap());
    }
}

#[test]
fn transition_voltage_trends() {
    let ptm = PtmParams::default();
    let at = |fet: FinFetParams| find_transition_voltages(&fet, &ptm, VDD, 1e-6).unwrap().v_gs_imt().unwrap();
    assert!(at(FinFetParams::nmos(2).with_delta_v_th(0.05)) > at(FinFetParams::nmos(2)));
    assert!(at(FinFetParams::nmos(6)) < at(FinFetParams::nmos(2)));
}

#[test]
fn unreachable_imt_is_reported_per_component() {
    let ptm = PtmParams::default().with_rho_ins_factor(10.0);
    let tv = find_transition_voltages(&FinFetParams::nmos(2), &ptm, VDD, 1e-6).unwrap();
    assert!(tv.v_gs_imt.is_none());
    assert!(matches!(tv.v_gs_imt(), Err(Error::NotReachable(_))));
    assert!(tv.v_gs_mit.is_some());
    assert!(find_transition_voltages(&FinFetParams::nmos(2), &ptm, VDD, 0.0).is_err());
}

// ---- mirror window ----------------------------------------------------------

/// Newton on I_D(v, v) = I with the analytic derivative.
fn newton_invert(fet: &FinFetParams, current: f64) -> f64 {
    let n = FinFetParams { polarity: Polarity::N, ..*fet };
    let mut v = 0.5;
    for _ in 0..100 {
        let e = finfet_current(&n, v, v);
        let step = (e.i_d - current) / (e.di_dvgs + e.di_dvds);
        v -= step.clamp(-0.1, 0.1);
        if step.abs() < 1e-14 {
            break;
        }
    }
    v
}

#[test]
fn mirror_window_matches_newton_inversion() {
    for fet in [FinFetParams::nmos(6), FinFetParams::pmos(6), FinFetParams::nmos(4).with_delta_v_th(-0.07)] {
        let w = mirror_window(&fet, 120e-6, 12e-6, VDD, 1e-9).unwrap();
        let (lrs, hrs) = w.magnitudes();
        assert!((lrs - newton_invert(&fet, 120e-6)).abs() <= 1e-6, "{fet:?}");
        assert!((hrs - newton_invert(&fet, 12e-6)).abs() <= 1e-6, "{fet:?}");
        assert!((w.center - 0.5 * (w.v_gs_lrs + w.v_gs_hrs)).abs() < 1e-15);
        assert!((w.size - (w.v_gs_lrs - w.v_gs_hrs).abs()).abs() < 1e-15);
        assert!(w.size > 0.0 && lrs <= VDD && hrs >= 0.0);
    }
}

#[test]
fn mirror_window_edge_cases() {
    let w = mirror_window(&FinFetParams::nmos(6), 50e-6, 50e-6, VDD, 1e-9).unwrap();
    assert_eq!(w.size, 0.0);
    assert!(matches!(mirror_window(&FinFetParams::nmos(1), 1.0, 1e-6, VDD, 1e-9), Err(Error::OutOfRange { .. })));
    assert!(mirror_window(&FinFetParams::nmos(1), 1e-6, 2e-6, VDD, 1e-9).is_err());
}

#[test]
fn mirror_center_follows_threshold_shift() {
    let center = |fet: FinFetParams| mirror_window(&fet, 120e-6, 12e-6, VDD, 1e-9).unwrap().center;
    assert!(center(FinFetParams::nmos(6).with_delta_v_th(0.05)) > center(FinFetParams::nmos(6)));
    assert!(center(FinFetParams::pmos(6).with_delta_v_th(0.05)) < center(FinFetParams::pmos(6)));
}

#[test]
fn design_relation_holds_for_proposed_topologies() {
    let p = TopologyParams::default();
    for kind in TopologyKind::PROPOSED {
        let pol = kind.host_polarity().unwrap();
        let (mirror, host) = match pol {
            Polarity::P => ("P1", "P2"),
            Polarity::N => ("N1", "N2"),
        };
        let w = mirror_window(&p.device(kind, mirror, pol), p.i_lrs, p.i_hrs, p.vdd, 1e-9).unwrap();
        let tv = find_transition_voltages(&p.device(kind, host, pol), &p.ptm, p.vdd, 1e-9).unwrap();
        let (lrs, hrs) = w.magnitudes();
        let imt = tv.v_gs_imt().unwrap();
        assert!(hrs < imt && imt < lrs, "{kind}: {hrs} < {imt} < {lrs}");
    }
}

// ---- sensing ----------------------------------------------------------------

#[test]
fn sensing_truth_table() {
    for kind in TopologyKind::SENSE_AMPS {
        for cell in CellState::ALL {
            let params = TopologyParams::default();
            let schedule = default_schedule(kind).unwrap();
            let run = run_sense(kind, cell, &params, &schedule).unwrap_or_else(|e| panic!("{kind} {cell:?}: {e}"));
            let expected = if kind.expected_high(cell).unwrap() { LogicOutcome::High } else { LogicOutcome::Low };
            assert_eq!(run.metrics.logic_outcome, expected, "{kind} {cell:?}");
            if kind.is_proposed() {
                let imt = run.metrics.events.iter().any(PtmEvent::is_imt);
                assert_eq!(imt, cell == CellState::Lrs, "{kind} {cell:?}: {:?}", run.metrics.events);
            }
            if cell == CellState::Lrs {
                let d = run.metrics.delay().unwrap();
                assert!(d > 0.0);
                assert_eq!(run.metrics.pdp, Some(d * run.metrics.sensing_power));
            }
            assert!(run.metrics.sensing_power > 0.0, "{kind} {cell:?}");
        }
    }
}

#[test]
fn hp_csa_lrs_pulls_output_low_and_hrs_gives_no_crossing() {
    let params = TopologyParams::default();
    let schedule = default_schedule(TopologyKind::HpCsa).unwrap();
    let lrs = run_sense(TopologyKind::HpCsa, CellState::Lrs, &params, &schedule).unwrap();
    assert_eq!(lrs.metrics.logic_outcome, LogicOutcome::Low);
    let hrs = run_sense(TopologyKind::HpCsa, CellState::Hrs, &params, &schedule).unwrap();
    assert_eq!(hrs.metrics.logic_outcome, LogicOutcome::High);
    assert!(matches!(hrs.metrics.delay(), Err(Error::NoCrossing)));
    assert_eq!(hrs.metrics.pdp, None);
}

#[test]
fn run_sense_rejects_fixtures_and_mismatched_schedules() {
    let p = TopologyParams::default();
    let s = default_schedule(TopologyKind::HpCsa).unwrap();
    assert!(run_sense(TopologyKind::BulkPtmFixture, CellState::Lrs, &p, &s).is_err());
    assert!(run_sense(TopologyKind::HpVsa, CellState::Lrs, &p, &s).is_err());
}

fn synthetic() -> (TransientResult, ptmsa::netlist::StimulusSchedule) {
    let mut schedule = default_schedule(TopologyKind::HpCsa).unwrap();
    // Reset released (50% crossing) at 100 ps.
    let reset = schedule.signals.iter_mut().find(|s| s.name == "D_EN").unwrap();
    reset.release_at = Some(95e-12);
    let ps = |t: f64| t * 1e-12;
    let time = vec![0.0, ps(99.0), ps(101.0), ps(105.0), ps(115.0), ps(500.0)];
    let r = TransientResult {
        node_names: vec!["den".into(), "y".into()],
        node_voltages: vec![vec![0.8, 0.8, 0.0, 0.0, 0.0, 0.0], vec![0.8, 0.8, 0.8, 0.8, 0.0, 0.0]],
        source_names: vec!["VDD".into(), "ICELL".into()],
        source_power: vec![vec![50e-6; 6], vec![-1e-3; 6]],
        time,
        ..TransientResult::default()
    };
    (r, schedule)
}

#[test]
fn metric_definitions_on_synthetic_traces() {
    let (r, schedule) = synthetic();
    let m = extract_metrics(&r, &schedule, TopologyKind::HpCsa).unwrap();
    assert!((m.delay().unwrap() - 10e-12).abs() < 1e-24, "{:?}", m.delay);
    // Current sources are ideal cells: their power is not drawn from a rail.
    assert!((m.sensing_power - 50e-6).abs() < 1e-18, "{}", m.sensing_power);
    assert_eq!(m.pdp, Some(m.delay.unwrap() * m.sensing_power));
    assert!((m.pdp.unwrap() - 500e-6 * 1e-12).abs() < 1e-27);
    assert_eq!(m.logic_outcome, LogicOutcome::Low);
}

#[test]
fn flat_output_has_no_crossing() {
    let (mut r, schedule) = synthetic();
    r.node_voltages[1] = vec![0.8; 6];
    let m = extract_metrics(&r, &schedule, TopologyKind::HpCsa).unwrap();
    assert!(matches!(m.delay(), Err(Error::NoCrossing)));
    assert_eq!(m.logic_outcome, LogicOutcome::High);
    r.node_voltages[1] = vec![0.4; 6];
    let m = extract_metrics(&r, &schedule, TopologyKind::HpCsa).unwrap();
    assert_eq!(m.logic_outcome, LogicOutcome::Indeterminate);
}

// ---- studies ----------------------------------------------------------------

fn column(table: &ptmsa::analysis::StudyTable, name: &str, n_fin: u32) -> Vec<f64> {
    let c = table.columns.iter().position(|c| c == name).unwrap();
    table.rows.iter().filter(|r| r.n_fin == n_fin).map(|r| r.values[c].unwrap()).collect()
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

#[test]
fn imt_vs_dvth_is_increasing() {
    let t = sweep_study(&StudySpec::new(StudyKind::ImtVsDvth)).unwrap();
    assert!(t.rows.len() >= 10);
    for n in [2, 6] {
        let v = column(&t, "v_gs_imt", n);
        assert!(v.len() >= 5 && strictly_increasing(&v), "{n}: {v:?}");
    }
}

#[test]
fn imt_vs_rhoins_increases_and_drops_with_fins() {
    let t = sweep_study(&StudySpec::new(StudyKind::ImtVsRhoins)).unwrap();
    let (two, six) = (column(&t, "v_gs_imt", 2), column(&t, "v_gs_imt", 6));
    assert!(two.len() >= 5 && strictly_increasing(&two) && strictly_increasing(&six));
    assert!(two.iter().zip(&six).all(|(a, b)| b < a));
}

#[test]
fn window_size_is_insensitive_to_threshold() {
    for polarity in [Polarity::N, Polarity::P] {
        let spec = StudySpec { polarity, ..StudySpec::new(StudyKind::WindowVsDvth) };
        let t = sweep_study(&spec).unwrap();
        for n in [2, 6] {
            let size = column(&t, "size", n);
            let (lo, hi) = size.iter().fold((f64::MAX, f64::MIN), |(a, b), v| (a.min(*v), b.max(*v)));
            assert!((hi - lo) / lo < 0.10, "{polarity:?} {n}: {size:?}");
        }
    }
}

#[test]
fn study_records_errors_in_row() {
    let spec = StudySpec { axis: vec![0.5, 1.0, 10.0], ..StudySpec::new(StudyKind::ImtVsRhoins) };
    let t = sweep_study(&spec).unwrap();
    assert_eq!(t.rows.len(), 6);
    let last = t.rows.iter().find(|r| r.axis == 10.0).unwrap();
    assert!(last.error.as_deref().unwrap_or("").contains("not reachable"), "{:?}", last.error);
    assert!(last.values[0].is_none());
    // Exactly reproducible.
    assert_eq!(sweep_study(&spec).unwrap(), t);
    assert!(sweep_study(&StudySpec { axis: vec![], ..spec.clone() }).is_err());
    assert!(sweep_study(&StudySpec { axis: vec![0.5, 1.0, 0.7], ..spec }).is_err());
}
