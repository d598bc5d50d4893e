use std::path::PathBuf;
use std::process::{Command, Output};

fn chgoe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chgoe")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect()
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("chgoe-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn gap_grid_is_monotone() {
    let o = chgoe(&["gap", "--p", "10", "--k", "2", "--t-min", "1e-3", "--t-max", "3", "--points", "200"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.starts_with("t,value\n"));
    let r = rows(&s);
    assert_eq!(r.len(), 200);
    assert!(r.windows(2).all(|w| w[1][1] <= w[0][1]));
}

#[test]
fn smallest_density_integrates_to_one() {
    let o = chgoe(&["smallest", "--p", "10", "--k", "1", "--t-min", "0", "--t-max", "6", "--points", "2001"]);
    assert!(o.status.success());
    let r = rows(&stdout(&o));
    let trap: f64 = r.windows(2).map(|w| 0.5 * (w[1][0] - w[0][0]) * (w[1][1] + w[0][1])).sum();
    assert!((trap - 1.0).abs() < 1e-3, "{trap}");
}

#[test]
fn micro_point_values() {
    let o = chgoe(&["micro", "--quantity", "smallest", "--k", "0", "--u", "1"]);
    let r = rows(&stdout(&o));
    assert!((r[0][1] - 0.375 * (-0.625f64).exp()).abs() < 1e-15);
    assert!(stdout(&o).contains(",0.200723"));
    let o = chgoe(&["micro", "--quantity", "gap", "--k", "0", "--u", "0"]);
    assert_eq!(rows(&stdout(&o))[0][1], 1.0);
    let o = chgoe(&["micro", "--quantity", "density", "--nu", "2", "--u-min", "0.2", "--u-max", "60", "--points", "50"]);
    assert!(o.status.success());
    assert!(rows(&stdout(&o)).iter().all(|r| r[1] > 0.0));
}

#[test]
fn output_file_manifest_and_round_trip() {
    let d = scratch("out");
    let o = Command::new(env!("CARGO_BIN_EXE_chgoe"))
        .env("CHGOE_OUT_DIR", &d)
        .args(["gap", "--p", "7", "--k", "1", "--t-max", "2", "--points", "20", "--out", "g.csv"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let body = std::fs::read_to_string(d.join("g.csv")).unwrap();
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("g.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "gap");
    assert_eq!(manifest["parameters"]["p"], 7);
    // printed values read back to the same doubles the library computes
    for r in rows(&body) {
        let v = chgoe::distributions::gap_finite(chgoe::distributions::FiniteSpec::new(7, 1, r[0]).unwrap()).unwrap();
        assert_eq!(r[1], v);
    }
    // rerun is bit-identical
    let again = Command::new(env!("CARGO_BIN_EXE_chgoe"))
        .env("CHGOE_OUT_DIR", &d)
        .args(["gap", "--p", "7", "--k", "1", "--t-max", "2", "--points", "20", "--out", "g2.csv"])
        .output()
        .unwrap();
    assert!(again.status.success());
    assert_eq!(body, std::fs::read_to_string(d.join("g2.csv")).unwrap());
    std::fs::remove_dir_all(&d).ok();
}

#[test]
fn exit_codes() {
    assert_eq!(chgoe(&["mc", "--p", "3", "--nu", "2", "--samples", "0"]).status.code(), Some(2));
    assert_eq!(chgoe(&["gap", "--p", "0", "--k", "1", "--t", "1"]).status.code(), Some(2));
    assert_eq!(chgoe(&["gap", "--bogus"]).status.code(), Some(2));
    assert_eq!(chgoe(&["selftest", "--perturb", "kummer"]).status.code(), Some(3));
    let d = scratch("io");
    let bad = d.join("no-such-dir").join("x").join("y.csv");
    std::fs::write(d.join("no-such-dir"), "file, not a directory").unwrap();
    assert_eq!(chgoe(&["gap", "--p", "4", "--k", "0", "--t", "1", "--out", bad.to_str().unwrap()]).status.code(), Some(4));
    std::fs::remove_dir_all(&d).ok();
}

#[test]
fn bad_correlation_file_is_rejected() {
    let d = scratch("cfile");
    let f = d.join("c.csv");
    std::fs::write(&f, "1,0.9,0\n0.1,1,0\n0,0,1\n").unwrap();
    let o = chgoe(&["mc", "--p", "3", "--nu", "2", "--samples", "10", "--c-file", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("symmetric"));
    std::fs::remove_dir_all(&d).ok();
}

#[test]
fn mc_is_seeded_and_reports_ks() {
    let d = scratch("mc");
    let run = |name: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_chgoe"))
            .env("CHGOE_OUT_DIR", &d)
            .args(["--threads", "1", "mc", "--p", "6", "--nu", "2", "--samples", "400", "--seed", "9", "--out", name])
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read_to_string(d.join(name)).unwrap()
    };
    assert_eq!(run("a.csv"), run("b.csv"));
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("a.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seeds"][0], 9);
    assert!(m["summary"]["ks"].as_f64().unwrap() < 0.1);
    std::fs::remove_dir_all(&d).ok();
}

#[test]
fn expdecay_then_micro_comparison() {
    let d = scratch("exp");
    let c = d.join("c.csv");
    assert!(chgoe(&["expdecay", "--p", "20", "--out", c.to_str().unwrap()]).status.success());
    let m = chgoe::montecarlo::load_correlation_csv(&c).unwrap();
    assert!((chgoe::montecarlo::harmonic_scale(&m).unwrap() - 1.0).abs() < 1e-12);
    let o = chgoe(&[
        "mc", "--p", "20", "--nu", "0", "--samples", "300", "--c-file", c.to_str().unwrap(), "--compare", "micro", "--bins", "10",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(rows(&stdout(&o)).len(), 10);
    std::fs::remove_dir_all(&d).ok();
}

#[test]
fn converge_single_p_and_selftest() {
    let o = chgoe(&["converge", "--k", "1", "--p", "9", "--points", "20"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.starts_with("u,p9,limit\n"));
    assert_eq!(rows(&s).len(), 20);
    let o = chgoe(&["selftest"]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().all(|l| l.starts_with("PASS")));
}
