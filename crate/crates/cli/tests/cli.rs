use std::fs;
use std::path::Path;
use std::process::Command;

use shapeopt::descent::{restricted_descent, LineSearchConfig};
use shapeopt::mesh::generate_disk_mesh;
use shapeopt::mesh::io::read_vtk_file;
use shapeopt::problems::paper_2d_data;
use shapeopt::shape::ElasticityParams;
use shapeopt_cli::{compare, compare_histories, preset, run, CliError, ExperimentConfig, MethodKind, PRESETS};

fn short_run(method: MethodKind, out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.method = method;
    cfg.problem.level = 0;
    cfg.line_search.max_iter = 12;
    cfg.output.dir = out.to_path_buf();
    cfg
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_shapeopt"))
}

#[test]
fn presets_validate_and_round_trip() {
    for name in PRESETS {
        let cfg = preset(name).unwrap();
        cfg.validate().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg, "{name}");
    }
    assert!(matches!(preset("nope"), Err(CliError::Config(_))));
}

#[test]
fn toml_sections_and_defaults() {
    let cfg = ExperimentConfig::from_toml(
        r#"
method = "restricted-newton"
[problem]
kind = "paper3d"
cells_per_edge = 4
[newton]
max_iter = 7
"#,
    )
    .unwrap();
    assert_eq!(cfg.method, MethodKind::RestrictedNewton);
    assert_eq!(cfg.problem.cells_per_edge, 4);
    assert_eq!(cfg.newton().max_iter, 7);
    assert_eq!(cfg.newton().beta, 0.1);
    assert_eq!(cfg.line_search().beta, 0.5);
    assert_eq!(cfg.elasticity.poisson, 0.4);
    assert!(ExperimentConfig::from_toml("[line_search]\nbetta = 0.5\n").is_err());
    assert!(ExperimentConfig::from_toml("method = \"newton\"\n").is_err());
}

#[test]
fn out_of_range_parameters_are_config_errors() {
    let mut cfg = ExperimentConfig::default();
    cfg.line_search.sigma = 0.0;
    assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
    let mut cfg = ExperimentConfig::default();
    cfg.elasticity.poisson = 0.5;
    assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
    let mut cfg = preset("paper2d-newton").unwrap();
    cfg.newton.sigma = 0.7;
    assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
    let mut cfg = ExperimentConfig::default();
    cfg.quality.det_lo = 1.5;
    assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
}

#[test]
fn invalid_beta_exits_with_config_error_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = dir.path().join("bad.toml");
    fs::write(&config, format!("[line_search]\nbeta = 1.5\n[output]\ndir = {:?}\n", out)).unwrap();
    let status = binary().arg("run").arg("--config").arg(&config).output().unwrap();
    assert_eq!(status.status.code(), Some(2));
    assert!(!out.exists());
    let mut cfg = ExperimentConfig::default();
    cfg.line_search.beta = 1.5;
    cfg.output.dir = out.clone();
    let err = run(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(!out.exists());
}

#[test]
fn exit_codes_are_distinct() {
    let codes = [
        CliError::Config(String::new()).exit_code(),
        CliError::Solver(String::new()).exit_code(),
        CliError::NotConverged(String::new()).exit_code(),
        CliError::Degenerate(String::new()).exit_code(),
    ];
    for (i, a) in codes.iter().enumerate() {
        assert_ne!(*a, 0);
        for b in &codes[i + 1..] {
            assert_ne!(a, b);
        }
    }
}

#[test]
fn unfinished_run_writes_artifacts_and_reports_non_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let mut cfg = short_run(MethodKind::RestrictedGradient, &out);
    cfg.output.snapshot_every = 5;
    let config = dir.path().join("short.toml");
    fs::write(&config, cfg.to_toml()).unwrap();
    let res = binary().arg("run").arg("--config").arg(&config).output().unwrap();
    assert_eq!(res.status.code(), Some(4), "{}", String::from_utf8_lossy(&res.stderr));
    for name in ["history.csv", "final_mesh.vtk", "summary.txt", "plot_history.py", "mesh_0000.vtk", "mesh_0005.vtk", "mesh_0010.vtk"] {
        assert!(out.join(name).exists(), "{name}");
    }
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("status: max-iterations"), "{summary}");
    assert!(summary.contains("iterations: 12"));
    let history = fs::read_to_string(out.join("history.csv")).unwrap();
    assert!(history.starts_with("iter,J,grad_energy,alpha,backtracks,min_radius_ratio,seconds\n"));
    assert_eq!(history.lines().count(), 14);
}

#[test]
fn history_matches_library_run_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = run(&short_run(MethodKind::RestrictedGradient, &dir.path().join("a"))).unwrap();
    let b = run(&short_run(MethodKind::RestrictedGradient, &dir.path().join("b"))).unwrap();
    let ha = fs::read(dir.path().join("a/history.csv")).unwrap();
    let hb = fs::read(dir.path().join("b/history.csv")).unwrap();
    assert_eq!(ha, hb);
    assert_eq!(a.exit_code(), 4);
    assert!(!b.converged);
    let cfg = LineSearchConfig { max_iter: 12, ..Default::default() };
    let (_, rec) = restricted_descent(&generate_disk_mesh(1.0, 0), &paper_2d_data(), &ElasticityParams::paper_defaults(), &cfg).unwrap();
    assert_eq!(String::from_utf8(ha).unwrap(), rec.to_csv());
}

#[test]
fn vtk_outputs_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = short_run(MethodKind::ClassicalGradient, dir.path());
    cfg.output.snapshot_every = 4;
    let summary = run(&cfg).unwrap();
    let final_mesh = read_vtk_file(dir.path().join("final_mesh.vtk")).unwrap().mesh;
    assert_eq!(final_mesh.points(), summary.final_mesh.points());
    assert!(final_mesh.cells().eq(summary.final_mesh.cells()));
    let first = read_vtk_file(dir.path().join("mesh_0000.vtk")).unwrap();
    let initial = generate_disk_mesh(1.0, 0);
    assert_eq!(first.mesh.points(), initial.points());
    assert!(first.mesh.cells().eq(initial.cells()));
    assert_eq!(first.fields.len(), 1);
    assert_eq!(first.fields[0].1.n_vertices(), initial.n_vertices());
}

#[test]
fn spurious_sweep_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = preset("paper2d-spurious-sweep").unwrap();
    cfg.problem.level = 0;
    cfg.sweep.samples = 10;
    cfg.output.dir = dir.path().to_path_buf();
    let summary = run(&cfg).unwrap();
    assert_eq!(summary.status, "collapsed");
    let sweep = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let rows: Vec<&str> = sweep.lines().collect();
    assert_eq!(rows[0], "alpha,J,min_det");
    assert_eq!(rows.len(), 12);
    assert!(rows[11].contains(",,"));
    assert!(dir.path().join("plot_sweep.py").exists());
    assert!(dir.path().join("final_mesh.vtk").exists());
}

#[test]
fn compare_rejects_empty_and_mismatched_inputs() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(compare(&[], dir.path()), Err(CliError::Config(_))));
    assert!(matches!(compare_histories(&[]), Err(CliError::Config(_))));
    let a = short_run(MethodKind::RestrictedGradient, dir.path());
    let mut b = short_run(MethodKind::ClassicalGradient, dir.path());
    b.problem.level = 1;
    assert!(matches!(compare(&[a, b], dir.path()), Err(CliError::Config(_))));
    assert!(fs::read_dir(dir.path()).unwrap().next().is_none());
}

#[test]
fn compare_single_passes_history_through() {
    let dir = tempfile::tempdir().unwrap();
    let csv = compare(&[short_run(MethodKind::RestrictedGradient, dir.path())], dir.path()).unwrap();
    let history = fs::read_to_string(dir.path().join("restricted-gradient/history.csv")).unwrap();
    assert_eq!(csv, history);
}

#[test]
fn compare_aligns_three_methods() {
    let dir = tempfile::tempdir().unwrap();
    let configs: Vec<_> = [MethodKind::RestrictedGradient, MethodKind::ClassicalGradient, MethodKind::SswGradient]
        .into_iter()
        .map(|m| short_run(m, dir.path()))
        .collect();
    let csv = compare(&configs, dir.path()).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(header.split(',').count(), 10);
    assert!(header.contains("classical-gradient_grad_norm") && header.contains("ssw-gradient_J"));
    assert_eq!(fs::read_to_string(dir.path().join("comparison.csv")).unwrap(), csv);
    let longest = configs.len();
    assert!(csv.lines().count() > longest);
}

#[test]
fn presets_subcommand_lists_every_preset() {
    let out = binary().arg("presets").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in PRESETS {
        assert!(text.lines().any(|l| l == name));
    }
}

#[test]
fn check_subcommand_reports_second_order() {
    let out = binary().args(["check", "--level", "0", "--fields", "3", "--seed", "7"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let worst: f64 = text.lines().last().unwrap().rsplit(' ').next().unwrap().parse().unwrap();
    assert!(worst >= 1.9, "{text}");
}
