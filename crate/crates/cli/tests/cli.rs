//! End-to-end runs of the `cqed` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cqed_core::{Emitter, Scatterer, SystemParams, UnitTag};
use serde_json::{json, Value};
use tempfile::TempDir;

fn cqed(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cqed")).args(args).env_remove("CQED_THREADS").output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn run(cmd: &str, cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    cqed(&args)
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn csv_column(text: &str, name: &str) -> Vec<f64> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name} in {header:?}"));
    lines.map(|l| l.split(',').nth(k).unwrap().parse().unwrap()).collect()
}

fn two_emitter() -> Value {
    json!({
        "unit": "kappa_units",
        "system": {
            "omega_c": 0.0, "kappa_b": 0.5, "kappa_c": 0.5,
            "emitters": [
                { "omega": 0.4, "gamma": 0.02, "g": 0.3 },
                { "omega": 0.7, "gamma": 0.02, "g": 0.25 }
            ]
        },
        "omega_grid": { "min": -1.0, "max": 1.5, "points": 51 },
        "omega_l": 0.55,
        "tau_grid": { "max": 40.0, "points": 81 }
    })
}

#[test]
fn malformed_config_exits_2_without_output() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{ \"unit\": \"kappa_units\", ").unwrap();
    let out = dir.path().join("out.csv");
    let o = run("spectrum", &cfg, &out, &[]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(!out.exists());

    let mut v = two_emitter();
    v["colour"] = json!("blue");
    let cfg = write_config(dir.path(), "unknown.json", &v);
    let o = run("spectrum", &cfg, &out, &[]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("colour"));
    assert!(!out.exists());

    let mut v = two_emitter();
    v["omega_grid"] = json!({ "min": 1.0, "max": -1.0, "points": 5 });
    let cfg = write_config(dir.path(), "grid.json", &v);
    assert_eq!(code(&run("spectrum", &cfg, &out, &[])), 2);
    assert!(!out.exists());
}

#[test]
fn unwritable_output_and_bad_flags_exit_2() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", &two_emitter());
    let o = run("spectrum", &cfg, &dir.path().join("missing/out.csv"), &[]);
    assert_eq!(code(&o), 2);
    assert_eq!(code(&run("spectrum", &cfg, &dir.path().join("o.csv"), &["--threads", "0"])), 2);
    assert_eq!(code(&cqed(&["spectrum"])), 2);
    assert_eq!(code(&cqed(&["spectrum", "--config", cfg.to_str().unwrap(), "--format", "xml"])), 2);
}

#[test]
fn spectrum_csv_matches_library_and_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", &two_emitter());
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    assert_eq!(code(&run("spectrum", &cfg, &a, &[])), 0);
    assert_eq!(code(&run("spectrum", &cfg, &b, &["--threads", "3"])), 0);
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    assert!(text.starts_with("omega_L,T,g2_0\n"));

    let p = SystemParams::new(
        0.0,
        0.5,
        0.5,
        vec![Emitter { omega: 0.4, gamma: 0.02, g: 0.3 }, Emitter { omega: 0.7, gamma: 0.02, g: 0.25 }],
        UnitTag::KappaUnits,
    )
    .unwrap();
    let s = Scatterer::auto(p);
    let grid = cqed_core::scattering::linspace(-1.0, 1.5, 51);
    let want = s.spectrum(&grid).unwrap();
    // Shortest round-trip output parses back to the same bits.
    assert_eq!(csv_column(&text, "omega_L"), grid);
    assert_eq!(csv_column(&text, "T"), want.t);
    assert_eq!(csv_column(&text, "g2_0"), want.g2zero);
}

#[test]
fn json_output_round_trips_exactly() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", &two_emitter());
    let (j, c) = (dir.path().join("s.json"), dir.path().join("s.csv"));
    assert_eq!(code(&run("spectrum", &cfg, &j, &["--format", "json", "--contributions"])), 0);
    assert_eq!(code(&run("spectrum", &cfg, &c, &["--contributions"])), 0);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&j).unwrap()).unwrap();
    let csv = std::fs::read_to_string(&c).unwrap();
    let col = |k: &str| v[k].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect::<Vec<_>>();
    assert_eq!(col("T"), csv_column(&csv, "T"));
    assert_eq!(col("g2_0"), csv_column(&csv, "g2_0"));

    // Contributions reproduce g²(0) as |ΣΓ|².
    let rows = v["contributions"].as_array().unwrap();
    for (row, g2) in rows.iter().zip(col("g2_0")) {
        let (mut re, mut im) = (0.0, 0.0);
        for c in row.as_array().unwrap() {
            let (m, ph) = (c["magnitude"].as_f64().unwrap(), c["phase"].as_f64().unwrap());
            re += m * ph.cos();
            im += m * ph.sin();
        }
        assert!((re * re + im * im - g2).abs() <= 1e-9 * g2.max(1e-12));
    }
    let first = rows[0].as_array().unwrap()[0]["index"].as_u64().unwrap();
    assert!(csv.lines().next().unwrap().contains(&format!("gamma_abs_{first},gamma_arg_{first}")));

    let a = dir.path().join("g.json");
    assert_eq!(code(&run("g2tau", &cfg, &a, &["--format", "json"])), 0);
    let b = dir.path().join("g.csv");
    assert_eq!(code(&run("g2tau", &cfg, &b, &[])), 0);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&a).unwrap()).unwrap();
    let g2: Vec<f64> = serde_json::from_value(v["g2"].clone()).unwrap();
    assert_eq!(g2, csv_column(&std::fs::read_to_string(&b).unwrap(), "g2"));
    assert_eq!(v["settling_tol"], json!(0.05));
}

#[test]
fn empty_emitter_list_is_flat() {
    let dir = TempDir::new().unwrap();
    let v = json!({
        "system": { "omega_c": 0.0, "kappa_b": 0.3, "kappa_c": 0.7, "emitters": [] },
        "omega_grid": { "min": -2.0, "max": 2.0, "points": 41 }
    });
    let cfg = write_config(dir.path(), "c.json", &v);
    let out = dir.path().join("s.csv");
    assert_eq!(code(&run("spectrum", &cfg, &out, &[])), 0);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(csv_column(&text, "g2_0").iter().all(|g| (g - 1.0).abs() < 1e-12));
}

#[test]
fn g2tau_starts_at_equal_time_value() {
    let dir = TempDir::new().unwrap();
    let mut v = two_emitter();
    v["omega_grid"] = json!({ "min": 0.55, "max": 0.55, "points": 1 });
    v["tau_grid"] = json!({ "max": 2000.0, "points": 81 });
    let cfg = write_config(dir.path(), "c.json", &v);
    let (s, t) = (dir.path().join("s.csv"), dir.path().join("t.csv"));
    assert_eq!(code(&run("spectrum", &cfg, &s, &[])), 0);
    let o = run("g2tau", &cfg, &t, &[]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("settling time"));
    let g0 = csv_column(&std::fs::read_to_string(&s).unwrap(), "g2_0")[0];
    let text = std::fs::read_to_string(&t).unwrap();
    assert!(text.starts_with("tau,g2\n"));
    let g = csv_column(&text, "g2");
    assert!((g[0] - g0).abs() <= 1e-10 * g0);
    assert!((g[g.len() - 1] - 1.0).abs() < 1e-4);
    assert_eq!(csv_column(&text, "tau")[80], 2000.0);
}

#[test]
fn n_sweep_writes_one_file_per_n() {
    let dir = TempDir::new().unwrap();
    let v = json!({
        "system": {
            "omega_c": 0.0, "kappa_b": 0.5, "kappa_c": 0.5,
            "identical": { "n": 1, "omega": 0.8, "gamma": 0.01, "g": 0.2 }
        },
        "omega_grid": { "min": 0.3, "max": 0.79, "points": 491 },
        "omega_l": 0.6,
        "tau_grid": { "max": 10.0, "points": 11 },
        "n_sweep": [1, 2, 4, 8]
    });
    let cfg = write_config(dir.path(), "c.json", &v);
    let out = dir.path().join("fig.csv");
    let o = run("spectrum", &cfg, &out, &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(!out.exists());
    let mins: Vec<f64> = [1, 2, 4, 8]
        .iter()
        .map(|n| {
            let t = std::fs::read_to_string(dir.path().join(format!("fig_N{n}.csv"))).unwrap();
            csv_column(&t, "g2_0").into_iter().fold(f64::INFINITY, f64::min)
        })
        .collect();
    assert!(mins.windows(2).all(|w| w[1] < w[0]), "{mins:?}");

    let lim = dir.path().join("lim.csv");
    assert_eq!(code(&run("identical-limits", &cfg, &lim, &[])), 0);
    let t = std::fs::read_to_string(dir.path().join("lim_N8.csv")).unwrap();
    assert!(t.starts_with("omega_L,N2_T,N2_T_limit,g2_0,g2_0_limit\n"));
    assert_eq!(csv_column(&t, "g2_0").len(), 491);

    // A sweep has nowhere to go on stdout.
    assert_eq!(code(&cqed(&["g2tau", "--config", cfg.to_str().unwrap()])), 2);
}

#[test]
fn numerical_failure_exits_3() {
    // A lossless emitter makes the transmission vanish exactly at its frequency.
    let dir = TempDir::new().unwrap();
    let v = json!({
        "system": { "omega_c": 0.0, "kappa_b": 0.5, "kappa_c": 0.5, "emitters": [{ "omega": 0.5, "gamma": 0.0, "g": 0.2 }] },
        "omega_grid": { "min": 0.0, "max": 1.0, "points": 3 }
    });
    let cfg = write_config(dir.path(), "c.json", &v);
    let out = dir.path().join("s.csv");
    let o = run("spectrum", &cfg, &out, &[]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("omega_L = 0.5"));
    assert!(!out.exists());
}

#[test]
fn validate_two_emitter_ghz_system() {
    let dir = TempDir::new().unwrap();
    let v = json!({
        "unit": "ghz_2pi",
        "system": {
            "omega_c": 0.0, "kappa_b": 12.5, "kappa_c": 12.5,
            "emitters": [
                { "omega": 30.0, "gamma": 0.3, "g": 5.0 },
                { "omega": 35.0, "gamma": 0.3, "g": 5.0 }
            ]
        },
        "omega_grid": { "min": -25.0, "max": 62.5, "points": 36 },
        "omega_l": 26.25,
        "tau_grid": { "max": 0.2, "points": 41 }
    });
    let cfg = write_config(dir.path(), "c.json", &v);
    let out = dir.path().join("v.json");
    let o = run("validate", &cfg, &out, &["--format", "json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(r["pass"], json!(true));
    for k in ["T", "g2_0", "g2_tau"] {
        assert!(r[k]["max_rel"].as_f64().unwrap() < 0.02);
    }

    let o = run("validate", &cfg, &out, &["--corrupt-kappa-c", "1.5"]);
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("validation FAILED"));
    assert!(stderr(&o).contains("at omega_L = "));
}

#[test]
fn validate_bare_cavity() {
    let dir = TempDir::new().unwrap();
    let v = json!({
        "system": { "omega_c": 0.2, "kappa_b": 0.4, "kappa_c": 0.6, "emitters": [] },
        "omega_grid": { "min": -2.0, "max": 2.0, "points": 21 },
        "omega_l": 0.0,
        "tau_grid": { "max": 5.0, "points": 11 }
    });
    let cfg = write_config(dir.path(), "c.json", &v);
    let out = dir.path().join("v.json");
    let o = run("validate", &cfg, &out, &["--format", "json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    for k in ["T", "g2_0", "g2_tau"] {
        assert!(r[k]["max_rel"].as_f64().unwrap() < 1e-6, "{k}: {}", r[k]);
    }

    // The oracle refuses systems it cannot hold.
    let mut big = v.clone();
    big["system"]["emitters"] = json!(vec![json!({ "omega": 0.0, "gamma": 0.01, "g": 0.1 }); 9]);
    let cfg = write_config(dir.path(), "big.json", &big);
    assert_eq!(code(&run("validate", &cfg, &out, &[])), 2);
}

#[test]
fn mc_is_seeded_and_reproducible() {
    let dir = TempDir::new().unwrap();
    let v = json!({
        "mc": {
            "runs": 6, "n": 3, "mean_omega_e": 0.8, "sigma_inhom": 0.1,
            "omega_c": 0.0, "kappa_b": 0.5, "kappa_c": 0.5, "g": 0.2, "gamma": 0.012,
            "seed": 1, "grid": { "omega_min": -1.0, "omega_max": 2.0 }, "refine_tol": 1e-6
        }
    });
    let cfg = write_config(dir.path(), "c.json", &v);
    let (a, b, c) = (dir.path().join("a.json"), dir.path().join("b.json"), dir.path().join("c.json.out"));
    assert_eq!(code(&run("mc", &cfg, &a, &["--format", "json", "--threads", "1"])), 0);
    assert_eq!(code(&run("mc", &cfg, &b, &["--format", "json"])), 0);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(code(&run("mc", &cfg, &c, &["--format", "json", "--seed", "2"])), 0);
    let (va, vc): (Value, Value) = (
        serde_json::from_str(&std::fs::read_to_string(&a).unwrap()).unwrap(),
        serde_json::from_str(&std::fs::read_to_string(&c).unwrap()).unwrap(),
    );
    assert_eq!(va["provenance"]["seed"], json!(1));
    assert_eq!(vc["provenance"]["seed"], json!(2));
    assert_ne!(va["runs"], vc["runs"]);

    let h = dir.path().join("h.csv");
    assert_eq!(code(&run("mc", &cfg, &h, &[])), 0);
    assert!(std::fs::read_to_string(&h).unwrap().starts_with("class,quantity,bin_lo,bin_hi,count\n"));
}

#[test]
fn bench_reports_rows() {
    let dir = TempDir::new().unwrap();
    let v = json!({ "bench": { "ns": [2, 4, 6], "seed": 3, "min_seconds": 0.001, "samples": 1 } });
    let cfg = write_config(dir.path(), "c.json", &v);
    let out = dir.path().join("b.json");
    let o = run("bench", &cfg, &out, &["--format", "json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(r["rows"].as_array().unwrap().len(), 3);
    assert!(r["machine"]["threads"].as_u64().unwrap() >= 1);
    assert!(stderr(&o).contains("fitted exponents"));

    let v = json!({ "bench": { "ns": [4, 2], "seed": 3 } });
    let cfg = write_config(dir.path(), "bad.json", &v);
    assert_eq!(code(&run("bench", &cfg, &out, &[])), 2);
}
