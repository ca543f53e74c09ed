use std::path::Path;
use std::process::{Command, Output};

use compresslab::julia::parse_pgm;

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_compresslab"))
        .args(args)
        .current_dir(dir)
        .env_remove("COMPRESSLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn taylor_single_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["taylor", "--imax", "1", "--out", "t"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(dir.path().join("t/taylor.csv"));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "i,phi_i,linear_approx,difference");
    assert_eq!(lines.len(), 2);
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields[0], "1");
    assert!((fields[2].parse::<f64>().unwrap() - 1.0986825).abs() < 1e-7);
    assert!(dir.path().join("t/manifest.json").exists());
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["taylor", "--imax", "0"][..],
        &["theta", "--a", "1.5"],
        &["simulate", "--length", "6", "--steps", "2"],
        &["simulate", "--mode", "ordered", "--r", "0.3"],
        &["simulate", "--engine", "warp"],
        &["julia", "--bounds=1,-1,0,1"],
        &["density", "--radius", "-1"],
        &["nonsense"],
    ] {
        let o = run(args, dir.path());
        assert_eq!(
            code(&o),
            1,
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(!o.stderr.is_empty(), "{args:?} explains itself");
    }
}

#[test]
fn oversized_raster_is_a_capacity_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["julia", "--width", "100000", "--height", "100000"],
        dir.path(),
    );
    assert_eq!(code(&o), 3);
}

#[test]
fn simulation_outputs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let base = [
        "simulate",
        "--mode",
        "disordered",
        "--steps",
        "6",
        "--length",
        "65536",
        "--p",
        "0.7",
        "--replicas",
        "3",
        "--seed",
        "99",
    ];
    let mut outputs = Vec::new();
    for (name, threads) in [("a", "1"), ("b", "1"), ("c", "3")] {
        let mut args = base.to_vec();
        args.extend(["--out", name, "--threads", threads]);
        let o = run(&args, dir.path());
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(std::fs::read(dir.path().join(name).join("simulate.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
    let csv = String::from_utf8(outputs.remove(0)).unwrap();
    assert!(csv.starts_with("step,i,count,density,ratio,theory_ratio\n"));
}

#[test]
fn analytic_outputs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for (args, file) in [
        (&["taylor", "--imax", "12"][..], "taylor.csv"),
        (&["theta", "--grid", "200"], "theta.json"),
        (&["julia", "--width", "64", "--height", "64"], "julia.pgm"),
    ] {
        let mut first = args.to_vec();
        first.extend(["--out", "x"]);
        let mut second = args.to_vec();
        second.extend(["--out", "y"]);
        assert_eq!(code(&run(&first, dir.path())), 0);
        assert_eq!(code(&run(&second, dir.path())), 0);
        assert_eq!(
            read(dir.path().join("x").join(file)),
            read(dir.path().join("y").join(file)),
            "{args:?}"
        );
    }
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.toml"),
        "threads = 1\n[simulate]\nmode = \"disordered\"\nsteps = 3\nlength = 4096\nseed = 5\nformat = \"json\"\nout = \"from-file\"\n",
    )
    .unwrap();
    let o = run(
        &["--config", "run.toml", "simulate", "--seed", "6"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&read(dir.path().join("from-file/manifest.json"))).unwrap();
    let config = &manifest["parameters"]["config"];
    assert_eq!(config["seed"], 6);
    assert_eq!(config["steps"], 3);
    assert_eq!(config["mode"], "disordered");
    assert_eq!(manifest["threads"], 1);
    let report: serde_json::Value =
        serde_json::from_str(&read(dir.path().join("from-file/simulate.json"))).unwrap();
    assert_eq!(
        report["steps"].as_array().unwrap().len(),
        4,
        "initial state plus three steps"
    );
}

#[test]
fn malformed_config_and_thread_settings_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "[simulate]\nstepz = 3\n").unwrap();
    let o = run(&["--config", "bad.toml", "taylor"], dir.path());
    assert_eq!(code(&o), 1);
    let o = run(&["--config", "missing.toml", "taylor"], dir.path());
    assert_eq!(code(&o), 1);
    let o = Command::new(env!("CARGO_BIN_EXE_compresslab"))
        .args(["taylor", "--out", "t"])
        .current_dir(dir.path())
        .env("COMPRESSLAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
}

#[test]
fn theta_reports_extrema() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["theta", "--out", "th"], dir.path());
    assert_eq!(code(&o), 0);
    let v: serde_json::Value =
        serde_json::from_str(&read(dir.path().join("th/theta.json"))).unwrap();
    let min = v["theta_min"].as_f64().unwrap();
    let max = v["theta_max"].as_f64().unwrap();
    assert!(min < max && max - min < 1e-6);
    assert_eq!(v["a"], 0.5);
}

#[test]
fn density_and_sigma_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "density", "--points", "80", "--radius", "200", "--step", "0.01", "--out", "d",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(dir.path().join("d/density.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,rho_ordered,rho_disordered"));
    assert_eq!(lines.count(), 81);

    let o = run(
        &["sigma", "--points", "2", "--radius", "200", "--out", "s"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(read(dir.path().join("s/sigma.csv")).starts_with("x,sigma,delta\n"));
    let v: serde_json::Value =
        serde_json::from_str(&read(dir.path().join("s/sigma.json"))).unwrap();
    assert_eq!(v["average_by_method"].as_object().unwrap().len(), 4);
}

#[test]
fn julia_graymap_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["julia", "--width", "96", "--height", "64", "--out", "j"],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    let g = parse_pgm(&read(dir.path().join("j/julia.pgm"))).unwrap();
    assert_eq!((g.width, g.height), (96, 64));
    assert!(g
        .comments
        .iter()
        .any(|c| c.contains("bounds=-3.5,1.5,-2,2")));
    for row in 0..64 {
        for col in 0..96 {
            assert_eq!(g.pixels[row * 96 + col], g.pixels[(63 - row) * 96 + col]);
        }
    }
    let csv = read(dir.path().join("j/julia.csv"));
    assert_eq!(
        csv.lines().filter(|l| !l.starts_with('#')).count(),
        1 + 96 * 64
    );
}

#[test]
fn corrupted_tolerance_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("tol.toml"), "taylor = [1, 2\n").unwrap();
    let o = run(
        &["report", "--quick", "--tolerances", "tol.toml"],
        dir.path(),
    );
    assert_eq!(code(&o), 1);
}

#[test]
fn failing_tolerances_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    // no Taylor coefficient is reproduced to 1e-300
    std::fs::write(dir.path().join("tol.toml"), "taylor = 1e-300\n").unwrap();
    let o = run(
        &[
            "report",
            "--quick",
            "--tolerances",
            "tol.toml",
            "--out",
            "r",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&read(dir.path().join("r/report.json"))).unwrap();
    assert_eq!(v["all_pass"], false);
}
