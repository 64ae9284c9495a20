use isolevy::cli::output::{emit_plotdata, PlotPoint};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isolevy"))
        .args(args)
        .arg("--out")
        .arg(out.join("out"))
        .output()
        .unwrap()
}

fn csv(out: &Path, stem: &str) -> String {
    std::fs::read_to_string(out.join("out").join(format!("{stem}.csv"))).unwrap()
}

#[test]
fn pruitt_rows_for_brownian() {
    let dir = scratch("pruitt");
    let o = run(&dir, &["pruitt", "--set", "spec.family=brownian", "--set", "r=2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = csv(&dir, "pruitt");
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("r,K,L,sum,h"));
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(row[0], 2.0);
    assert!((row[1] - 0.75).abs() < 1e-12 && row[2] == 0.0);
}

#[test]
fn config_errors_carry_their_position() {
    let dir = scratch("config");
    let path = dir.join("run.ini");
    std::fs::write(&path, "[spec]\nfamily = stable\nalpha = one\n[task]\nkind = pruitt\n").unwrap();
    let o = run(&dir, &["--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3, column 9"), "{err}");

    std::fs::write(&path, "[spec]\nfamily = stable\nalpha = 1\nbeta = 2\n[task]\nkind = pruitt\n").unwrap();
    let o = run(&dir, &["--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown key `beta`"));
}

#[test]
fn missing_parameter_writes_nothing() {
    let dir = scratch("missing");
    let o = run(&dir, &["pruitt", "--set", "spec.family=stable"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha"));
    assert!(!dir.join("out").exists());
}

#[test]
fn unknown_task_is_a_usage_error() {
    let dir = scratch("usage");
    assert_eq!(run(&dir, &["no-such-task"]).status.code(), Some(3));
}

#[test]
fn brownian_return_rows_are_degenerate() {
    let dir = scratch("ret");
    let o = run(&dir, &["verify-bounds", "--theorem", "ret", "--set", "spec.family=brownian", "--set", "mc.n=2000"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = csv(&dir, "verify_bounds_ret");
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.starts_with("ret,") && r.ends_with(",degenerate")), "{text}");
}

#[test]
fn plot_data_files() {
    let dir = scratch("plot");
    let empty = dir.join("empty.csv");
    emit_plotdata(&empty, &[]).unwrap();
    assert_eq!(std::fs::read_to_string(&empty).unwrap(), "x,y,yerr\n");

    let one = dir.join("one.csv");
    emit_plotdata(&one, &[PlotPoint { x: 1.0, y: 2.5, yerr: Some(0.5) }]).unwrap();
    let text = std::fs::read_to_string(&one).unwrap();
    let fields: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(fields, vec![1.0, 2.5, 0.5]);

    let mixed = dir.join("mixed.csv");
    let pts = [PlotPoint { x: 1.0, y: 1.0, yerr: None }, PlotPoint { x: 2.0, y: 4.0, yerr: Some(0.25) }];
    emit_plotdata(&mixed, &pts).unwrap();
    let text = std::fs::read_to_string(&mixed).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].ends_with(',') && lines[1].split(',').count() == 3);
    assert!(!lines[2].ends_with(','));
}
