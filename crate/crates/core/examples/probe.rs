use ptmsa::netlist::{build_topology, CellState, TopologyKind, TopologyParams};
use ptmsa::solver::{run_transient_from, solve_dc, SystemState};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let kinds: Vec<TopologyKind> = if args.len() > 1 {
        args[1..].iter().map(|s| s.parse().unwrap()).collect()
    } else {
        TopologyKind::SENSE_AMPS.to_vec()
    };
    for kind in kinds {
        for cell in CellState::ALL {
            let p = TopologyParams::default().with_cell(cell);
            let (c, sched) = build_topology(kind, &p).unwrap();
            let sched = sched.unwrap();
            let t0 = std::time::Instant::now();
            let elab = c.elaborate().unwrap();
            let mut op = match solve_dc(&elab, &SystemState::initial(&elab)) {
                Ok(op) => op,
                Err(e) => {
                    println!("{kind} {cell:?}: DC {e}");
                    continue;
                }
            };
            if kind == TopologyKind::ConvVsa {
                let i = elab.node("bl").unwrap();
                op.node_voltages[i] = p.v_bl_start;
            }
            let r = match run_transient_from(&elab, &op, sched.timing.cycle) {
                Ok(r) => r,
                Err(e) => {
                    println!("{kind} {cell:?}: TRAN {e}");
                    continue;
                }
            };
            let y = r.voltage("y").unwrap();
            let cross =
                r.time.iter().zip(y.windows(2)).find(|(_, w)| (w[0] - 0.4) * (w[1] - 0.4) < 0.0).map(|(t, _)| *t);
            let energy: f64 = (1..r.len())
                .map(|k| {
                    let dt = r.time[k] - r.time[k - 1];
                    r.source_names
                        .iter()
                        .enumerate()
                        .filter(|(_, n)| n.starts_with('V') && n.as_str() != "VCELL")
                        .map(|(j, _)| 0.5 * (r.source_power[j][k] + r.source_power[j][k - 1]) * dt)
                        .sum::<f64>()
                })
                .sum();
            let show = |n: &str| r.voltage(n).map(|v| format!("{n}={:.3}", v.last().unwrap())).unwrap_or_default();
            println!(
                "{kind:9} {:?}: y0={:.3} yend={:.3} cross={:?}ps P={:.2}uW steps={} ev={:?} {} {} {} {} {:.1}ms",
                cell,
                y[0],
                y.last().unwrap(),
                cross.map(|t| t * 1e12),
                energy / sched.timing.cycle * 1e6,
                r.len(),
                r.events
                    .iter()
                    .map(|e| format!("{}@{:.1}", if e.is_imt() { "IMT" } else { "MIT" }, e.time * 1e12))
                    .collect::<Vec<_>>(),
                show("x"),
                show("bl"),
                show("out"),
                show("g"),
                t0.elapsed().as_secs_f64() * 1e3
            );
        }
    }
}
