use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const DIVIDER: &str = "* divider\nV1 in 0 DC 1\nR1 in a 1k\nR2 a 0 1k\n.end\n";
const ASTABLE: &str =
    "* astable\nV1 in 0 DC 0.9\nR1 in a 330k\nP1 a 0 RHOINS=0.165 RHOMET=0.0033 L=20n AREA=1e-14 VIMT=0.336 IMIT=5u\n.end\n";

fn ptmsa(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ptmsa"))
        .args(args)
        .current_dir(dir)
        .env_remove("PTMSA_OUT")
        .output()
        .expect("spawn ptmsa")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn netlist(dir: &TempDir, name: &str, text: &str) -> String {
    fs::write(dir.path().join(name), text).unwrap();
    name.to_string()
}

#[test]
fn divider_operating_point() {
    let dir = TempDir::new().unwrap();
    let file = netlist(&dir, "div.cir", DIVIDER);
    let o = ptmsa(dir.path(), &["dc", "--netlist", &file]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc = json(dir.path().join("dc.json"));
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["kind"], "dc");
    assert!((doc["nodes"]["a"].as_f64().unwrap() - 0.5).abs() < 1e-6);
}

#[test]
fn sense_reports_the_logic_outcome() {
    let dir = TempDir::new().unwrap();
    for (cell, expect) in [("lrs", "low"), ("hrs", "high")] {
        let out = format!("o-{cell}");
        let o = ptmsa(dir.path(), &["sense", "--topology", "hp-csa", "--cell", cell, "--out", &out]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let doc = json(dir.path().join(&out).join("sense.json"));
        assert_eq!(doc["metrics"]["logic_outcome"], expect, "{cell}");
        let csv = fs::read_to_string(dir.path().join(&out).join("sense.csv")).unwrap();
        assert!(csv.starts_with("time_s,"));
    }
}

#[test]
fn monte_carlo_is_byte_identical_across_runs_and_workers() {
    let dir = TempDir::new().unwrap();
    let run = |out: &str, workers: &str| {
        let o = ptmsa(
            dir.path(),
            &["mc", "--topology", "hp-vsa", "--samples", "10", "--seed", "7", "--workers", workers, "--out", out],
        );
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    };
    run("a", "1");
    run("b", "1");
    run("c", "4");
    for file in ["mc.csv", "mc_summary.json"] {
        let a = fs::read(dir.path().join("a").join(file)).unwrap();
        assert_eq!(a, fs::read(dir.path().join("b").join(file)).unwrap(), "{file}");
        assert_eq!(a, fs::read(dir.path().join("c").join(file)).unwrap(), "{file}");
    }
    let doc = json(dir.path().join("a/mc_summary.json"));
    assert_eq!(doc["summary"]["successes"], 10);
    assert_eq!(doc["config"]["master_seed"], 7);
    let rows = fs::read_to_string(dir.path().join("a/mc.csv")).unwrap();
    assert_eq!(rows.lines().count(), 11);
}

#[test]
fn usage_and_input_errors_exit_1() {
    let dir = TempDir::new().unwrap();
    let file = netlist(&dir, "div.cir", DIVIDER);
    let bad = netlist(&dir, "bad.cir", "V1 a 0 DC 1\nQ1 a b c\n.end\n");
    for args in [
        vec!["dc", "--bogus"],
        vec!["dc"],
        vec!["dc", "--netlist", &file, "--topology", "hp-csa"],
        vec!["dc", "--netlist", &bad],
        vec!["dc", "--netlist", "missing.cir"],
        vec!["dc", "--netlist", &file, "--set", "vdd=1"],
        vec!["dc", "--topology", "hp-csa", "--set", "ptm.v_c_imtt=0.3"],
        vec!["dc", "--topology", "hp-csa", "--set", "vdd"],
        vec!["sense", "--topology", "bulk-ptm-fixture"],
        vec!["tran", "--netlist", &file],
        vec!["sweep", "--netlist", &file],
        vec!["transitions", "--topology", "conv-csa"],
        vec!["mc", "--topology", "hp-csa", "--samples", "0"],
    ] {
        let o = ptmsa(dir.path(), &args);
        assert_eq!(code(&o), 1, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty(), "{args:?}");
    }
    let o = ptmsa(dir.path(), &["dc", "--netlist", &bad]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    assert_eq!(code(&ptmsa(dir.path(), &["--help"])), 0);
    assert_eq!(code(&ptmsa(dir.path(), &["--version"])), 0);
}

#[test]
fn solver_failures_exit_2() {
    let dir = TempDir::new().unwrap();
    let file = netlist(&dir, "astable.cir", ASTABLE);
    let o = ptmsa(dir.path(), &["dc", "--netlist", &file]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    let o = ptmsa(dir.path(), &["sweep", "--netlist", &file, "--source", "V1", "--from", "0", "--to", "1.2"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("at sweep value"));
    assert!(!dir.path().join("sweep.csv").exists());
}

#[test]
fn overrides_change_the_result() {
    let dir = TempDir::new().unwrap();
    let run = |out: &str, extra: &[&str]| {
        let mut args = vec!["transitions", "--polarity", "n", "--fins", "2", "--out", out];
        args.extend_from_slice(extra);
        let o = ptmsa(dir.path(), &args);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        json(dir.path().join(out).join("transitions.json"))["voltages"]["v_gs_imt"]["value"].as_f64().unwrap()
    };
    let nominal = run("a", &[]);
    let raised = run("b", &["--set", "nmos.delta_v_th=50m"]);
    assert!(raised > nominal + 0.01, "{nominal} {raised}");
    // Netlists accept solver options.
    let file = netlist(&dir, "div.cir", DIVIDER);
    let o = ptmsa(dir.path(), &["dc", "--netlist", &file, "--set", "options.gmin=1e-15"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn output_directory_from_environment() {
    let dir = TempDir::new().unwrap();
    let file = netlist(&dir, "div.cir", DIVIDER);
    let o = Command::new(env!("CARGO_BIN_EXE_ptmsa"))
        .args(["dc", "--netlist", &file])
        .current_dir(dir.path())
        .env("PTMSA_OUT", "from-env")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("from-env/dc.json").exists());
    // An explicit flag wins.
    let o = Command::new(env!("CARGO_BIN_EXE_ptmsa"))
        .args(["dc", "--netlist", &file, "--out", "flag"])
        .current_dir(dir.path())
        .env("PTMSA_OUT", "from-env")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("flag/dc.json").exists());
}

#[test]
fn sweep_outputs() {
    let dir = TempDir::new().unwrap();
    let o = ptmsa(dir.path(), &["sweep", "--topology", "bulk-ptm-fixture", "--points", "81"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(csv.starts_with("value,up_current_a,down_current_a,up_voltage_v,down_voltage_v,up_state,down_state\r\n"));
    assert_eq!(csv.lines().count(), 82);
    assert!(csv.contains("metallic"));

    let o = ptmsa(dir.path(), &["sweep", "--topology", "hyperfet-fixture", "--set", "fixture_polarity=p"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let o = ptmsa(dir.path(), &["sweep", "--study", "imt-vs-dvth", "--set", "study.n_fins=[2]"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("study.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("delta_v_th,n_fin,v_gs_imt,width,error"));
    assert_eq!(lines.count(), 9);
}

#[test]
fn window_and_transitions_for_topologies() {
    let dir = TempDir::new().unwrap();
    let o = ptmsa(dir.path(), &["window", "--topology", "hn-vsa"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let w = json(dir.path().join("window.json"));
    assert_eq!(w["polarity"], "n");
    let size = w["size"].as_f64().unwrap();
    assert!((w["v_gs_lrs"].as_f64().unwrap() - w["v_gs_hrs"].as_f64().unwrap() - size).abs() < 1e-12);

    let o = ptmsa(dir.path(), &["transitions", "--topology", "hp-csa", "--tol", "1u"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let t = json(dir.path().join("transitions.json"));
    let imt = t["voltages"]["v_gs_imt"]["value"].as_f64().unwrap();
    let mit = t["voltages"]["v_gs_mit"]["value"].as_f64().unwrap();
    assert!(mit < imt && imt < 0.8);
    // The window brackets V_GS_IMT for the proposed design.
    let o = ptmsa(dir.path(), &["window", "--topology", "hp-csa"]);
    assert_eq!(code(&o), 0);
    let w = json(dir.path().join("window.json"));
    let (lrs, hrs) = (0.8 - w["v_gs_lrs"].as_f64().unwrap(), 0.8 - w["v_gs_hrs"].as_f64().unwrap());
    assert!(hrs < imt && imt < lrs, "{hrs} {imt} {lrs}");
}

#[test]
fn tran_writes_waveforms() {
    let dir = TempDir::new().unwrap();
    let file = netlist(&dir, "div.cir", DIVIDER);
    let o = ptmsa(dir.path(), &["tran", "--netlist", &file, "--t-end", "10p", "--method", "trap"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("tran.csv")).unwrap();
    assert!(csv.starts_with("time_s,v(in),v(a),i(V1),p(V1)"), "{}", csv.lines().next().unwrap());
    let o = ptmsa(dir.path(), &["tran", "--topology", "conv-vsa", "--cell", "hrs", "--out", "vsa"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn json_outputs_match_published_schemas() {
    let schemas = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/schemas");
    let dir = TempDir::new().unwrap();
    let file = netlist(&dir, "div.cir", DIVIDER);
    let runs: [(&[&str], &str, &str); 6] = [
        (&["dc", "--netlist", &file], "dc.json", "dc"),
        (&["sense", "--topology", "hn-vsa", "--cell", "hrs"], "sense.json", "sense"),
        (&["sense", "--topology", "hp-csa"], "sense.json", "sense"),
        (
            &["transitions", "--polarity", "p", "--fins", "3", "--set", "ptm.rho_ins=1.65"],
            "transitions.json",
            "transitions",
        ),
        (&["window", "--topology", "hp-vsa"], "window.json", "window"),
        (&["mc", "--topology", "hn-csa", "--samples", "4", "--vary", "vth"], "mc_summary.json", "mc-summary"),
    ];
    for (args, out, schema) in runs {
        let o = ptmsa(dir.path(), args);
        assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        let schema = json(schemas.join(format!("{schema}.schema.json")));
        let validator = jsonschema::validator_for(&schema).unwrap();
        let doc = json(dir.path().join(out));
        let errors: Vec<String> = validator.iter_errors(&doc).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{args:?}: {errors:?}");
    }
}
