use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn axifem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_axifem"))
        .args(args)
        .env("AXIFEM_THREADS", "1")
        .output()
        .expect("run axifem")
}

fn stderr_line(o: &Output) -> String {
    let s = String::from_utf8_lossy(&o.stderr).to_string();
    assert_eq!(s.lines().count(), 1, "stderr: {s}");
    s.trim_end().to_string()
}

fn vtk_points(path: &Path) -> usize {
    let text = fs::read_to_string(path).unwrap();
    let line = text.lines().find(|l| l.starts_with("POINTS")).unwrap();
    line.split_whitespace().nth(1).unwrap().parse().unwrap()
}

#[test]
fn meshgen_reports_corner() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = axifem(&["meshgen", "--domain", "lshape", "--h", "0.1", "-o", out]);
    assert!(o.status.success());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("alpha=0.666667"), "{stdout}");
    let mesh = axifem::mesh::TriangleMesh::load(dir.path().join("mesh.txt")).unwrap();
    assert_eq!(vtk_points(&dir.path().join("mesh.vtk")), mesh.n_vertices());
    let corners = axifem::io::read_csv(dir.path().join("corners.csv")).unwrap();
    assert_eq!(corners.rows.len(), 1);
}

#[test]
fn singular_exports_components() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = axifem(&["singular", "--k", "1", "--field", "magnetic", "--h", "0.125", "-o", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let vtk = fs::read_to_string(dir.path().join("singular_k1_magnetic.vtk")).unwrap();
    for c in ["r", "theta", "z"] {
        for p in ["re", "im"] {
            assert!(vtk.contains(&format!("total_{c}_{p}")));
        }
    }
    let energy = axifem::io::read_csv(dir.path().join("singular_k1_magnetic_energy.csv")).unwrap();
    assert_eq!(energy.rows.len(), 3);
}

#[test]
fn solve_is_reproducible_single_threaded() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = a.path().join("run.cfg");
    fs::write(&cfg, "domain = lshape\nh = 0.125\nmodes = 3\nfield = electric\nrhs = band3\n").unwrap();
    for d in [&a, &b] {
        let o = axifem(&["solve", "--config", cfg.to_str().unwrap(), "-o", d.path().to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let sa = fs::read(a.path().join("summary.csv")).unwrap();
    let sb = fs::read(b.path().join("summary.csv")).unwrap();
    assert_eq!(sa, sb);
    let table = axifem::io::read_csv(a.path().join("summary.csv")).unwrap();
    assert_eq!(table.rows.len(), 7);
    for k in -3..=3 {
        assert!(a.path().join(format!("mode_{k}.vtk")).exists());
    }
}

#[test]
fn synthesize_writes_revolved_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = axifem(&["synthesize", "--theta-samples", "12", "-n", "1", "--h", "0.25", "-o", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("field_3d.vtk")).unwrap();
    assert!(text.contains("CELL_TYPES"));
    assert!(text.lines().any(|l| l == "13"));
}

#[test]
fn convergence_writes_rates() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = axifem(&["convergence", "--levels", "3", "--k", "-2", "--h", "0.2", "--field", "electric", "-o", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rates = axifem::io::read_csv(dir.path().join("rates.csv")).unwrap();
    let l2 = match rates.column("l2_rate").unwrap()[0] {
        axifem::io::Cell::Num(x) => *x,
        _ => panic!("rate is not numeric"),
    };
    assert!(l2 > 1.8);
    assert_eq!(axifem::io::read_csv(dir.path().join("convergence.csv")).unwrap().rows.len(), 3);
}

#[test]
fn verify_subset_passes() {
    let o = axifem(&["verify", "--only", "1", "--only", "11"]);
    assert!(o.status.success());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 2);
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        vec!["solve", "--bogus"],
        vec!["solve", "--h", "-1"],
        vec!["solve", "--field", "gravity"],
        vec!["solve", "--set", "nokey"],
        vec!["singular", "--k", "1", "--domain", "rectangle"],
        vec!["verify", "--only", "12"],
        vec![],
    ] {
        let o = axifem(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(stderr_line(&o).starts_with("error kind=usage msg=\""), "{args:?}");
    }
}

#[test]
fn help_and_version_exit_zero() {
    for args in [vec!["--help"], vec!["--version"], vec!["solve", "--help"]] {
        assert!(axifem(&args).status.success());
    }
    let help = String::from_utf8_lossy(&axifem(&["solve", "--help"]).stdout).to_string();
    for flag in ["--config", "--domain", "--h", "--modes", "--field", "--rhs", "--tol", "--output", "--set"] {
        assert!(help.contains(flag), "{flag}");
    }
}

#[test]
fn io_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain");
    fs::write(&file, "x").unwrap();
    let o = axifem(&["meshgen", "-o", file.join("sub").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr_line(&o).starts_with("error kind=io"));
    let o = axifem(&["solve", "--config", dir.path().join("missing.cfg").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn bad_thread_count_is_usage_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_axifem"))
        .args(["verify", "--only", "1"])
        .env("AXIFEM_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}
