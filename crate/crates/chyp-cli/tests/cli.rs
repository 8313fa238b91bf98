use std::collections::BTreeSet;
use std::process::{Command, Output};

fn chyp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chyp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("valid JSON")
}

#[test]
fn certify_exit_codes() {
    let ok = chyp(&["certify", "3", "--t", "1"]);
    assert_eq!(ok.status.code(), Some(0));
    let v = json(&ok);
    assert_eq!(v["verdict"], "Certified");
    assert_eq!(v["k_bound"], 2);
    for key in ["n", "t", "entries", "tangency_residual", "min_margin", "witness"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }

    let failed = chyp(&["certify", "3", "--A", "0.9"]);
    assert_eq!(failed.status.code(), Some(2));
    let v = json(&failed);
    assert_eq!(v["wa_type"], "RegularElliptic");
    assert_eq!(v["witness"]["jprime"], 2);

    assert_eq!(chyp(&["certify", "5", "--t", "2"]).status.code(), Some(0));
    // A = π/3 puts n = 3 exactly on its threshold.
    assert_eq!(chyp(&["certify", "3", "--frac-pi", "1", "3"]).status.code(), Some(3));
}

#[test]
fn bad_parameters_exit_one() {
    assert_eq!(chyp(&["certify", "2", "--t", "1"]).status.code(), Some(1));
    assert_eq!(chyp(&["certify", "3", "--t", "-1"]).status.code(), Some(1));
    assert_eq!(chyp(&["certify", "3"]).status.code(), Some(1));
    assert_eq!(chyp(&["--tol", "0", "ford", "4"]).status.code(), Some(1));
    assert_eq!(chyp(&["--grid", "1", "foliation", "1", "2"]).status.code(), Some(1));
    let non_su = chyp(&["classify", "2", "0", "0", "0", "1", "0", "0", "0", "1"]);
    assert_eq!(non_su.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&non_su.stderr).contains("residual"));
}

#[test]
fn classify_examples() {
    let id = stdout(&chyp(&["classify", "1", "0", "0", "0", "1", "0", "0", "0", "1"]));
    assert!(id.lines().nth(1).unwrap().starts_with("Boundary,Identity,0"));
    let lox = stdout(&chyp(&["classify", "2", "0", "0", "0", "1", "0", "0", "0", "0.5"]));
    assert!(lox.lines().nth(1).unwrap().starts_with("Loxodromic,,0.5625"));
    let w = "0.8660254037844386";
    let ell = chyp(&[
        "--format", "json", "classify", "--form", "ball", "--",
        &format!("-0.5+{w}i"), "0", "0", "0", &format!("-0.5-{w}i"), "0", "0", "0", "1",
    ]);
    let v = json(&ell);
    assert_eq!(v["kind"], "RegularElliptic");
    assert!((v["f_value"].as_f64().unwrap() + 27.0).abs() < 1e-9);
}

#[test]
fn foliation_table() {
    let o = chyp(&["--grid", "32", "foliation", "pi/4", "3pi/2"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    let mut lines = s.lines();
    assert_eq!(lines.next().unwrap(), "theta3,eps,tau,sigma,psi1,psi2,X,Y,W,Q");
    let leaves: BTreeSet<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(leaves.len(), 32);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("32 leaves"));
}

#[test]
fn intersect3_has_four_endpoints() {
    let o = chyp(&["intersect3", "1.57", "3.14", "4.71"]);
    let s = stdout(&o);
    let rows: Vec<&str> = s.lines().collect();
    assert_eq!(rows[0], "X,Y,psi1,psi2,W,Q");
    assert_eq!(rows.len(), 5);
    for r in &rows[1..] {
        let f: Vec<f64> = r.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(f[4].abs() < 1e-8 && f[5].abs() < 1e-8);
    }
}

#[test]
fn ford_json() {
    let v = json(&chyp(&["ford", "6"]));
    assert_eq!(v["euler"], 2);
    assert_eq!(v["face_count"], 8);
    assert_eq!(v["edges"], 18);
    assert_eq!(v["vertices"], 12);
    assert!(v["ridge_cycles"].as_array().unwrap().iter().all(|c| c["trivial"] == true));
}

#[test]
fn sweep_is_deterministic() {
    let args = ["--grid", "500", "sweep", "4", "--t-min", "0.1", "--t-max", "3"];
    let a = chyp(&args);
    let b = chyp(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let s = stdout(&a);
    assert!(s.starts_with("n,t,jprime,j,k,rho\n"));
    // 500 grid points plus the inserted threshold, 3·3·2 - 1 margins each.
    assert_eq!(s.lines().count(), 1 + 501 * 17);
    assert!(s.contains(&format!(",{},", (std::f64::consts::PI / 8.0).tan())));
}

#[test]
fn out_flag_writes_file() {
    let path = std::env::temp_dir().join(format!("chyp-cli-test-{}.json", std::process::id()));
    let p = path.to_str().unwrap();
    let o = chyp(&["--out", p, "ford", "4"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["euler"], 2);
    std::fs::remove_file(path).ok();
}

#[test]
fn metric_commands() {
    let d = stdout(&chyp(&["cygan", "1+i", "0", "0", "0"]));
    let x: f64 = d.lines().nth(1).unwrap().parse().unwrap();
    assert!((x - 2f64.sqrt()).abs() < 1e-15);
    let w = stdout(&chyp(&["intersect2", "pi/2", "pi"]));
    assert!(w.starts_with("theta1,theta2,c22,c20,c02,c11,c00,singular_theta3"));
}
