use std::path::Path;
use std::process::{Command, Output};

use igk::geometry::shapes::{box_mesh, grid_mesh, sample_cube_surface};
use igk::geometry::{load_points, save_mesh, save_points, FileFormat, PointCloud};
use igk::gmmfit::GmmApprox;
use tempfile::TempDir;

fn igk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_igk")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

fn write_cloud(dir: &TempDir, name: &str, cloud: &PointCloud) -> String {
    let p = path(dir, name);
    save_points(cloud, Path::new(&p), FileFormat::Xyz).unwrap();
    p
}

fn read_cloud(p: &str) -> PointCloud {
    load_points(Path::new(p), FileFormat::Xyz).unwrap()
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(code(&igk(&["--help"])), 0);
    assert_eq!(code(&igk(&["--version"])), 0);
    assert_eq!(code(&igk(&["denoise-points", "--help"])), 0);
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&igk(&[])), 1);
    assert_eq!(code(&igk(&["no-such-command"])), 1);
    let dir = TempDir::new().unwrap();
    let input = write_cloud(&dir, "p.xyz", &sample_cube_surface(50, 1));
    let out = path(&dir, "q.xyz");
    assert_eq!(code(&igk(&["denoise-points", &input, &out, "--weighting", "bogus"])), 1);
    assert_eq!(code(&igk(&["denoise-points", &input, &out, "--mu", "0.7"])), 1);
    assert_eq!(code(&igk(&["denoise-points", &input, &out, "--h", "-1"])), 1);
}

#[test]
fn missing_input_exits_2() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "q.xyz");
    let missing = path(&dir, "missing.xyz");
    assert_eq!(code(&igk(&["denoise-points", &missing, &out])), 2);
}

#[test]
fn malformed_input_exits_2() {
    let dir = TempDir::new().unwrap();
    let bad = path(&dir, "bad.xyz");
    std::fs::write(&bad, "0 0 0\n1 oops 0\n").unwrap();
    assert_eq!(code(&igk(&["evaluate", "--metric", "regularity", &bad])), 2);
}

#[test]
fn empty_support_exits_3() {
    let dir = TempDir::new().unwrap();
    let data = write_cloud(&dir, "p.xyz", &PointCloud::new(3, vec![0.0, 0.0, 0.0, 0.1, 0.0, 0.0]).unwrap());
    let seeds = write_cloud(&dir, "s.xyz", &PointCloud::new(3, vec![50.0, 0.0, 0.0]).unwrap());
    let out = igk(&["--absolute-units", "mean-shift", &data, "--seeds", &seeds, "--h", "0.5"]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn zero_iterations_reproduce_input_bytes() {
    let dir = TempDir::new().unwrap();
    let input = write_cloud(&dir, "p.xyz", &sample_cube_surface(200, 3));
    let out = path(&dir, "q.xyz");
    let run = igk(&["denoise-points", &input, &out, "--iters", "0"]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(std::fs::read(&input).unwrap(), std::fs::read(&out).unwrap());
}

#[test]
fn projection_without_repulsion_matches_mean_shift() {
    let dir = TempDir::new().unwrap();
    let data = sample_cube_surface(300, 4);
    let input = write_cloud(&dir, "p.xyz", &data);
    let seeds: Vec<&[f64]> = data.points().step_by(10).collect();
    let seeds = write_cloud(&dir, "s.xyz", &PointCloud::from_points(3, &seeds).unwrap());
    let proj = path(&dir, "proj.xyz");
    let ms = path(&dir, "ms.xyz");
    let a = igk(&["denoise-points", &input, &proj, "--init", &seeds, "--mu", "0", "--iters", "5", "--h", "20"]);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    let b = igk(&[
        "mean-shift", &input, "--seeds", &seeds, "--h", "20", "--max-iters", "5", "--step-tol", "1e-300", "--out", &ms,
    ]);
    assert_eq!(code(&b), 0, "{}", String::from_utf8_lossy(&b.stderr));
    let (qa, qb) = (read_cloud(&proj), read_cloud(&ms));
    assert_eq!(qa.len(), qb.len());
    let dev = qa.coords().iter().zip(qb.coords()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(dev < 1e-12, "deviation {dev}");
}

#[test]
fn denoise_points_writes_diagnostics_with_config_header() {
    let dir = TempDir::new().unwrap();
    let input = write_cloud(&dir, "p.xyz", &sample_cube_surface(400, 5));
    let out = path(&dir, "q.xyz");
    let diag = path(&dir, "diag.csv");
    let run = igk(&[
        "--seed", "7", "denoise-points", &input, &out, "--iters", "3", "--weighting", "full", "--n-projections", "100",
        "--diagnostics", &diag,
    ]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(stdout.contains("cg_residual"));
    let text = std::fs::read_to_string(&diag).unwrap();
    assert!(text.contains("# seed = 7"));
    assert!(text.contains("# weighting = full"));
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "iteration,mean_step,sigma_q,seconds");
    assert_eq!(rows.len(), 1 + 4);
    assert_eq!(read_cloud(&out).len(), 100);
}

#[test]
fn fit_kernel_builtin_roundtrip() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "ours.txt");
    let report = path(&dir, "report.csv");
    let run = igk(&["fit-kernel", "--builtin", "ours", "--out", &out, "--report", &report]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let approx = GmmApprox::from_text(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(approx.weights()[0], 61.509);
    let text = std::fs::read_to_string(&report).unwrap();
    for key in ["linf", "std_ratio_d1", "std_ratio_dinf", "b_opt_d3"] {
        assert!(text.lines().any(|l| l.starts_with(&format!("{key},"))), "missing {key}");
    }
}

#[test]
fn evaluate_regularity_of_a_grid_is_zero() {
    let dir = TempDir::new().unwrap();
    let grid = grid_mesh(6, 6, 0.5).to_point_cloud();
    let input = write_cloud(&dir, "g.xyz", &grid);
    let run = igk(&["evaluate", "--metric", "regularity", &input]);
    assert_eq!(code(&run), 0);
    let stdout = String::from_utf8_lossy(&run.stdout);
    let row = stdout.lines().find(|l| l.starts_with("sigma_q,")).unwrap();
    let value: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert!(value.abs() < 1e-12);
    assert_eq!(code(&igk(&["evaluate", "--metric", "surface", &input])), 1);
}

#[test]
fn corrupt_and_denoise_mesh() {
    let dir = TempDir::new().unwrap();
    let clean = path(&dir, "box.obj");
    save_mesh(&box_mesh(6), Path::new(&clean), FileFormat::Obj).unwrap();
    let noisy = path(&dir, "noisy.obj");
    let run = igk(&["--seed", "3", "corrupt", &clean, &noisy, "--mode", "uniform-vertex"]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));

    let out = path(&dir, "out.obj");
    let metrics = path(&dir, "m.csv");
    let run = igk(&[
        "denoise-mesh", &noisy, &out, "--loss", "lop", "--iters", "10", "--ref", &clean, "--metrics", &metrics,
    ]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    assert!(std::fs::read_to_string(&metrics).unwrap().contains("d_angle,"));

    let before = igk(&["evaluate", "--metric", "angle", &noisy, &clean]);
    let after = igk(&["evaluate", "--metric", "angle", &out, &clean]);
    let value = |o: &Output| -> f64 {
        let s = String::from_utf8_lossy(&o.stdout).to_string();
        let row = s.lines().find(|l| l.starts_with("d_angle,")).unwrap().to_string();
        row.split(',').nth(1).unwrap().parse().unwrap()
    };
    assert!(value(&after) < value(&before));
}

#[test]
fn corrupt_mode_must_match_input() {
    let dir = TempDir::new().unwrap();
    let input = write_cloud(&dir, "p.xyz", &sample_cube_surface(50, 1));
    let out = path(&dir, "q.xyz");
    assert_eq!(code(&igk(&["corrupt", &input, &out, "--mode", "uniform-vertex"])), 1);
    let run = igk(&["corrupt", &input, &out, "--mode", "gaussian-mix", "--frac-noise", "0.5"]);
    assert_eq!(code(&run), 1);
    let run = igk(&["corrupt", &input, &out, "--mode", "gaussian-mix"]);
    assert_eq!(code(&run), 0);
    assert_eq!(read_cloud(&out).len(), 50);
}
