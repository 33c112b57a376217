use std::fmt::Write;

use crate::circuit::{Circuit, ElementKind, IntegrationMethod, SolverOptions, Waveform};
use crate::device::{FinFetParams, Polarity, PtmState};

/// Shortest text that parses back to exactly `v`.
pub fn format_number(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 {
        "0".to_string()
    } else if (1e-3..1e6).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn wave(out: &mut String, w: &Waveform) {
    match w {
        Waveform::Dc(v) => write!(out, " DC {}", format_number(*v)).unwrap(),
        Waveform::Pwl(points) => {
            out.push_str(" PWL(");
            let body: Vec<String> =
                points.iter().map(|(t, v)| format!("{} {}", format_number(*t), format_number(*v))).collect();
            out.push_str(&body.join(" "));
            out.push(')');
        }
    }
}

fn finfet(out: &mut String, p: &FinFetParams) {
    let d = FinFetParams::default();
    let ty = match p.polarity {
        Polarity::N => "n",
        Polarity::P => "p",
    };
    write!(out, " TYPE={ty} VTH={} NFIN={}", format_number(p.v_th), p.n_fin).unwrap();
    for (key, v, default) in [
        ("K", p.k, d.k),
        ("NSS", p.n_ss, d.n_ss),
        ("ALPHA", p.alpha_sat, d.alpha_sat),
        ("LAMBDA", p.lambda_clm, d.lambda_clm),
        ("DVTH", p.delta_v_th, d.delta_v_th),
        ("PHIT", p.phi_t, d.phi_t),
    ] {
        if v != default {
            write!(out, " {key}={}", format_number(v)).unwrap();
        }
    }
}

fn options(c: &Circuit) -> Option<String> {
    let o = &c.options;
    let d = SolverOptions::default();
    let mut items = Vec::new();
    if c.vdd != crate::circuit::DEFAULT_VDD {
        items.push(format!("VDD={}", format_number(c.vdd)));
    }
    for (key, v, default) in [
        ("ABSTOL", o.abstol_current, d.abstol_current),
        ("RELTOL", o.reltol, d.reltol),
        ("VNTOL", o.vntol, d.vntol),
        ("DTINIT", o.dt_initial, d.dt_initial),
        ("DTMIN", o.dt_min, d.dt_min),
        ("DTMAX", o.dt_max, d.dt_max),
        ("MAXDV", o.max_step_dv, d.max_step_dv),
        ("GMIN", o.gmin, d.gmin),
    ] {
        if v != default {
            items.push(format!("{key}={}", format_number(v)));
        }
    }
    if o.max_newton_iters != d.max_newton_iters {
        items.push(format!("ITL={}", o.max_newton_iters));
    }
    if o.max_state_resolution_iters != d.max_state_resolution_iters {
        items.push(format!("STATEITL={}", o.max_state_resolution_iters));
    }
    if o.integration_method != d.integration_method {
        let m = match o.integration_method {
            IntegrationMethod::BackwardEuler => "be",
            IntegrationMethod::Trapezoidal => "trap",
        };
        items.push(format!("METHOD={m}"));
    }
    (!items.is_empty()).then(|| format!(".options {}", items.join(" ")))
}

/// Canonical text form: elements sorted by name, then directives, then
/// `.end`. Numbers are printed in their shortest exact form.
pub fn print_netlist(circuit: &Circuit) -> String {
    let mut out = String::new();
    for e in circuit.sorted_elements() {
        out.push_str(&e.name);
        for n in &e.nodes {
            out.push(' ');
            out.push_str(n);
        }
        match &e.kind {
            ElementKind::Resistor { ohms } => write!(out, " {}", format_number(*ohms)).unwrap(),
            ElementKind::Capacitor { farads } => write!(out, " {}", format_number(*farads)).unwrap(),
            ElementKind::VoltageSource { wave: w } | ElementKind::CurrentSource { wave: w } => wave(&mut out, w),
            ElementKind::FinFet { params } => finfet(&mut out, params),
            ElementKind::Ptm { params: p, initial_state } => {
                write!(
                    out,
                    " RHOINS={} RHOMET={} L={} AREA={} VIMT={} IMIT={}",
                    format_number(p.rho_ins),
                    format_number(p.rho_met),
                    format_number(p.length),
                    format_number(p.area),
                    format_number(p.v_c_imt),
                    format_number(p.i_c_mit)
                )
                .unwrap();
                if *initial_state == PtmState::Metallic {
                    out.push_str(" STATE=met");
                }
            }
        }
        out.push('\n');
    }
    if let Some(line) = options(circuit) {
        out.push_str(&line);
        out.push('\n');
    }
    for (node, v) in &circuit.nodeset {
        writeln!(out, ".ic v({node})={}", format_number(*v)).unwrap();
    }
    out.push_str(".end\n");
    out
}
