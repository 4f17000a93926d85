use std::path::Path;
use std::process::{Command, Output};

fn fsrk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fsrk"))
        .args(args)
        .env_remove("FSRK_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn csv_field(line: &str, i: usize) -> f64 {
    line.split(',').nth(i).unwrap().parse().unwrap()
}

#[test]
fn methods_lists_registry() {
    let o = fsrk(&["methods"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 7);
    for name in ["lie-trotter", "strang", "ruth", "aks3", "os437-minlem", "os437dr-minx"] {
        assert!(text.contains(&format!("\n{name},")), "{name}");
    }
}

#[test]
fn check_order_of_designed_method() {
    let o = fsrk(&["check-order", "--method", "os437dr-minx"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "satisfied_order,3");
}

#[test]
fn lem_all_matches_table() {
    let o = fsrk(&["lem", "--all"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    let expected = [("ruth", 0.36), ("aks3", 0.25), ("os437-minlem", 6.6e-8)];
    for (row, (name, value)) in rows.iter().zip(expected) {
        assert!(row.starts_with(name));
        let got = csv_field(row, 4);
        let rounded: f64 = format!("{got:.1e}").parse().unwrap();
        assert_eq!(rounded, value, "{row}");
    }
}

#[test]
fn xhat_single_row() {
    let o = fsrk(&["xhat", "--method", "ruth", "--ordering", "RD", "--ratio", "0.0015238", "--plan", "sdirk23:rk3"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "method,ordering,xhat");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("ruth,RD,"));
    assert!((csv_field(lines[1], 2) + 5.929).abs() < 1e-2, "{}", lines[1]);
}

#[test]
fn unknown_method_is_a_usage_error() {
    let o = fsrk(&["check-order", "--method", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("os437dr-minx") && err.contains("lie-trotter"), "{err}");
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(fsrk(&["xhat", "--method", "ruth", "--plan", "sdirk23"]).status.code(), Some(2));
    assert_eq!(fsrk(&["xhat", "--method", "ruth", "--ordering", "XY"]).status.code(), Some(2));
    assert_eq!(fsrk(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn stability_writes_and_refuses_to_overwrite() {
    let dir = tempfile::tempdir().unwrap();
    let run = |extra: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_fsrk"))
            .args(["stability", "--method", "ruth", "--ordering", "RD", "--nx", "41", "--ny", "31"])
            .args(extra)
            .env("FSRK_OUT_DIR", dir.path())
            .output()
            .unwrap()
    };
    let first = run(&[]);
    assert!(first.status.success(), "{}", stderr(&first));
    let svg = dir.path().join("ruth_RD.svg");
    let csv = std::fs::read_to_string(dir.path().join("ruth_RD.csv")).unwrap();
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
    assert!(csv.starts_with("re_z_lambdaR_dt,im_z_lambdaR_dt,abs_R"));
    assert_eq!(csv.lines().count(), 1 + 41 * 31);

    let again = run(&[]);
    assert_eq!(again.status.code(), Some(2));
    assert!(stderr(&again).contains("--force"));
    assert!(run(&["--force"]).status.success());
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn optimize_round_trip_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "design.txt", "name small-lem\nstages 3\norder 3\nobjective lem\nseeds 4\nrng 3\n");
    let mut files = Vec::new();
    for sub in ["a", "b"] {
        let out = dir.path().join(sub);
        let o = fsrk(&["optimize", &spec, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(stdout(&o).starts_with("method,objective,value"));
        let file = out.join("small-lem.method");
        let check = fsrk(&["check-order", "--method-file", file.to_str().unwrap(), "--max-order", "3"]);
        assert_eq!(stdout(&check).trim(), "satisfied_order,3");
        files.push(std::fs::read(file).unwrap());
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn optimize_two_stages_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "design.txt", "stages 2\nobjective lem\n");
    let o = fsrk(&["optimize", &spec, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn missing_input_file_is_a_usage_error() {
    assert_eq!(fsrk(&["optimize", "/nonexistent/design.txt"]).status.code(), Some(2));
}

#[test]
fn run_small_problem_and_blow_up() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "fhn.cfg", "problem fhn1d\nnx 21\nstim_indices 0 3\nt_end 2\nsamples 5\n");
    let out = dir.path().to_str().unwrap();
    let o = fsrk(&["run", "--method", "strang", "--config", &cfg, "--dt", "0.001", "--out", out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = stdout(&o);
    assert!(summary.contains("method,strang") && summary.contains("steps,2000"), "{summary}");
    let traj = std::fs::read_to_string(dir.path().join("run_strang_DR.csv")).unwrap();
    assert!(traj.starts_with("t,y_0,"));
    assert_eq!(traj.lines().count(), 6);

    let bad = fsrk(&["run", "--method", "ruth", "--config", &cfg, "--dt", "0.5", "--plan", "fe:fe", "--out", out, "--force"]);
    assert_eq!(bad.status.code(), Some(1), "{}", stderr(&bad));
}

#[test]
fn linear_convergence_slopes() {
    let dir = tempfile::tempdir().unwrap();
    let o = fsrk(&["convergence", "--linear", "--case", "strang", "--case", "ruth", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let slopes: Vec<f64> = text.lines().skip(1).map(|l| csv_field(l, 2)).collect();
    assert!((slopes[0] - 2.0).abs() < 0.1 && (slopes[1] - 3.0).abs() < 0.2, "{text}");
    assert!(dir.path().join("convergence_linear.csv").exists());
}
