use std::path::PathBuf;
use std::process::{Command, Output};

fn aplm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aplm")).args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("aplm-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn run_writes_csv_and_metadata() {
    let dir = scratch("run");
    let out = dir.join("riemann.csv");
    let o = aplm(&[
        "--output", out.to_str().unwrap(),
        "run", "--preset", "test2-riemann", "--epsilon", "1e-6", "--scheme", "bdf2",
        "--formulation", "ap-explicit", "--nx", "40",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,u,v"));
    assert_eq!(lines.count(), 40);
    let meta = std::fs::read_to_string(dir.join("riemann.csv.meta")).unwrap();
    for key in ["dt_used", "steps", "theta_max", "mass_drift_max_step", "initial = riemann"] {
        assert!(meta.contains(key), "missing {key}");
    }
    let _ = std::fs::remove_dir_all(dir);
}

#[test]
fn variable_alpha_run_adds_alpha_column() {
    let o = aplm(&["run", "--preset", "test4c-variable-alpha", "--profile", "single-transition", "--nx", "50"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = String::from_utf8(o.stdout).unwrap();
    assert!(csv.starts_with("x,u,v,alpha\n"));
    let alphas: Vec<f64> =
        csv.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert!(alphas[0] < 0.6 && *alphas.last().unwrap() > 0.9);
}

#[test]
fn config_file_then_flags() {
    let dir = scratch("cfg");
    let cfg = dir.join("case.cfg");
    std::fs::write(&cfg, "preset = test2-riemann\nnx = 30\nscheme = TVB33 # comment\n").unwrap();
    let o = aplm(&["--config", cfg.to_str().unwrap(), "run", "--nx", "20"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 21);
    let meta = String::from_utf8(o.stderr).unwrap();
    assert!(meta.contains("scheme = TVB33"));
    let _ = std::fs::remove_dir_all(dir);
}

#[test]
fn converge_emits_report() {
    let o = aplm(&["converge", "--schemes", "BDF2,BDF3", "--base-n", "32", "--levels", "3", "--eps-list", "1,0.1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = String::from_utf8(o.stdout).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("scheme,formulation,epsilon,alpha,N,err_u,rate_u,err_v,rate_v"));
    assert_eq!(lines.count(), 2 * 2 * 2);
}

#[test]
fn converge_accepts_verified_external_tableau() {
    let dir = scratch("tab");
    let good = dir.join("bdf2.tab");
    std::fs::write(&good, "name = MyBDF2\np = 2\na = -4/3, 1/3\nb = 4/3, -2/3\nc = 0, 0\nc_minus1 = 2/3\n").unwrap();
    let o = aplm(&["converge", "--tableau-file", good.to_str().unwrap(), "--base-n", "32"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8(o.stdout).unwrap().contains("MyBDF2,ap-explicit"));

    let bad = dir.join("bad.tab");
    std::fs::write(&bad, "name = Bad\np = 2\na = -4/3, 1/3\nb = 1, 0\nc = 0, 0\nc_minus1 = 2/3\n").unwrap();
    let o = aplm(&["converge", "--tableau-file", bad.to_str().unwrap(), "--base-n", "32"]);
    assert_eq!(o.status.code(), Some(1));
    let _ = std::fs::remove_dir_all(dir);
}

#[test]
fn stability_scan_and_assertion() {
    let o = aplm(&["stability", "--scheme", "bdf3", "--formulation", "ap-implicit", "--eps-alpha", "0.1,0.25,0.5", "--nr", "5", "--ni", "4"]);
    assert!(o.status.success());
    let csv = String::from_utf8(o.stdout).unwrap();
    assert_eq!(csv.lines().next(), Some("z_R,z_I,eps_alpha,max_modulus,stable"));
    assert_eq!(csv.lines().count(), 1 + 3 * 20);

    let o = aplm(&[
        "stability", "--scheme", "bdf2", "--formulation", "ap-implicit", "--eps-alpha", "0.4", "--zr-max", "5",
        "--assert-stable",
    ]);
    assert!(o.status.success());
    // large z_R reduces to extrapolated BDF2 on the imaginary axis, which is unstable
    let o = aplm(&["stability", "--scheme", "bdf2", "--formulation", "ap-implicit", "--eps-alpha", "0.4", "--assert-stable"]);
    assert_eq!(o.status.code(), Some(2));
    let o = aplm(&["stability", "--scheme", "bdf5", "--formulation", "ap-explicit", "--eps-alpha", "1", "--assert-stable"]);
    assert_eq!(o.status.code(), Some(2));
    let o = aplm(&["stability", "--scheme", "bdf2", "--eps-alpha", ""]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn tableaus_listing() {
    let o = aplm(&["tableaus"]);
    assert!(o.status.success());
    let csv = String::from_utf8(o.stdout).unwrap();
    assert_eq!(csv.lines().count(), 9);
    for line in csv.lines().skip(1) {
        let res: f64 = line.split(',').nth(4).unwrap().parse().unwrap();
        assert!(res <= 1e-12, "{line}");
    }
    assert_eq!(aplm(&["tableaus", "--name", "NOPE"]).status.code(), Some(1));
}

#[test]
fn usage_and_numerical_exit_codes() {
    assert_eq!(aplm(&[]).status.code(), Some(1));
    assert_eq!(aplm(&["run", "--preset", "missing"]).status.code(), Some(1));
    assert_eq!(aplm(&["converge", "--levels", "1"]).status.code(), Some(1));
    assert_eq!(aplm(&["--help"]).status.code(), Some(0));
    // a hyperbolic run far above the CFL limit under --strict-cfl
    let o = aplm(&["--strict-cfl", "run", "--preset", "test2-riemann", "--formulation", "ap-implicit", "--epsilon", "1", "--cfl", "5", "--nx", "40", "--t-final", "2"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}
