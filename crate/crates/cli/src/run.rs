use std::cell::RefCell;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shapeopt::descent::{
    boundary_vertex_near_angle, run_descent, single_node_perturbation, spurious_sweep, DescentMethod, RunRecord,
    SweepPoint, Termination,
};
use shapeopt::fem::{evaluate_objective, solve_state_adjoint, NodalField};
use shapeopt::mesh::io::{read_gmsh_file, read_vtk_file, write_vtk_file};
use shapeopt::mesh::{generate_cube_mesh, generate_disk_mesh, SimplicialMesh};
use shapeopt::newton::restricted_newton_observed;
use shapeopt::problems::{paper_2d_data, paper_3d_data, ProblemData};
use shapeopt::shape::shape_derivative;

use crate::config::{ExperimentConfig, MethodKind, ProblemKind};
use crate::output::{compare_histories, plot_script, sweep_plot_script};
use crate::CliError;

pub struct Problem {
    pub mesh: SimplicialMesh,
    pub data: ProblemData,
    pub label: String,
}

pub fn build_problem(cfg: &ExperimentConfig) -> Result<Problem, CliError> {
    let p = &cfg.problem;
    let (mesh, label) = match p.kind {
        ProblemKind::Paper2d => (generate_disk_mesh(1.0, p.level), format!("paper2d level {}", p.level)),
        ProblemKind::Paper3d => (
            generate_cube_mesh(p.side, p.cells_per_edge),
            format!("paper3d cube side {} with {} cells per edge", p.side, p.cells_per_edge),
        ),
        ProblemKind::MeshFile => {
            let path = p.mesh_file.as_ref().ok_or_else(|| CliError::Config("mesh_file missing".into()))?;
            let mesh = match path.extension().and_then(|e| e.to_str()) {
                Some("msh") => read_gmsh_file(path)?,
                Some("vtk") => read_vtk_file(path)?.mesh,
                _ => return Err(CliError::Config(format!("unsupported mesh file {}", path.display()))),
            };
            (mesh, format!("mesh file {}", path.display()))
        }
    };
    let data = if mesh.dim() == 2 { paper_2d_data() } else { paper_3d_data() };
    Ok(Problem { mesh, data, label })
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub method: String,
    pub problem: String,
    pub status: String,
    pub converged: bool,
    pub iterations: usize,
    pub final_objective: f64,
    pub final_gradient_norm: f64,
    pub initial_min_radius_ratio: f64,
    pub final_min_radius_ratio: f64,
    pub final_damping: Option<f64>,
    pub wall_time: f64,
    pub record: Option<RunRecord>,
    pub sweep: Option<Vec<SweepPoint>>,
    pub final_mesh: SimplicialMesh,
}

impl RunSummary {
    /// 0 on success, otherwise the non-convergence status.
    pub fn exit_code(&self) -> i32 {
        if self.converged {
            0
        } else {
            CliError::NotConverged(String::new()).exit_code()
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "method: {}", self.method);
        let _ = writeln!(s, "problem: {}", self.problem);
        let _ = writeln!(s, "status: {}", self.status);
        let _ = writeln!(s, "iterations: {}", self.iterations);
        let _ = writeln!(s, "final_objective: {:e}", self.final_objective);
        let _ = writeln!(s, "final_gradient_norm: {:e}", self.final_gradient_norm);
        let _ = writeln!(s, "initial_min_radius_ratio: {:e}", self.initial_min_radius_ratio);
        let _ = writeln!(s, "final_min_radius_ratio: {:e}", self.final_min_radius_ratio);
        if let Some(a) = self.final_damping {
            let _ = writeln!(s, "final_damping: {a:e}");
        }
        let _ = writeln!(s, "wall_time_seconds: {:.3}", self.wall_time);
        s
    }
}

struct Snapshots {
    dir: PathBuf,
    every: usize,
    error: RefCell<Option<CliError>>,
}

impl Snapshots {
    fn write(&self, iter: usize, mesh: &SimplicialMesh, fields: &[(&str, &NodalField)]) {
        if self.every == 0 || iter % self.every != 0 || self.error.borrow().is_some() {
            return;
        }
        let path = self.dir.join(format!("mesh_{iter:04}.vtk"));
        if let Err(e) = write_vtk_file(&path, mesh, &format!("iteration {iter}"), fields) {
            *self.error.borrow_mut() = Some(e.into());
        }
    }

    fn finish(self) -> Result<(), CliError> {
        match self.error.into_inner() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

/// Runs the configured experiment and writes its artifacts into
/// `cfg.output.dir`. Invalid configurations fail before anything is written.
pub fn run(cfg: &ExperimentConfig) -> Result<RunSummary, CliError> {
    cfg.validate()?;
    let problem = build_problem(cfg)?;
    let params = cfg.elasticity_params()?;
    let dir = cfg.output.dir.clone();
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("config.toml"), cfg.to_toml())?;
    let snapshots = Snapshots {
        dir: dir.clone(),
        every: cfg.output.snapshot_every,
        error: RefCell::new(None),
    };
    let start = Instant::now();
    let initial_quality = problem.mesh.min_radius_ratio();
    log::info!("{} on {}", cfg.method.name(), problem.label);

    if cfg.method == MethodKind::SpuriousSweep {
        let summary = run_sweep(cfg, &problem, &snapshots, start)?;
        snapshots.finish()?;
        fs::write(dir.join("summary.txt"), summary.to_text())?;
        return Ok(summary);
    }

    let (mesh, record) = match cfg.method {
        MethodKind::RestrictedNewton => restricted_newton_observed(&problem.mesh, &problem.data, &params, &cfg.newton(), |i, m, it| {
            log::info!("iter {i}: J = {:e}, |V| = {:e}", it.objective, it.energy.sqrt());
            snapshots.write(i, m, &[("restricted_gradient", &it.v_tilde), ("state", &it.u)]);
        })?,
        method => {
            let kind = match method {
                MethodKind::RestrictedGradient => DescentMethod::Restricted,
                MethodKind::ClassicalGradient => DescentMethod::Classical,
                _ => DescentMethod::Ssw,
            };
            run_descent(kind, &problem.mesh, &problem.data, &params, &cfg.line_search(), |i, m, v| {
                log::debug!("iter {i}");
                snapshots.write(i, m, &[("direction", v)]);
            })?
        }
    };
    snapshots.finish()?;
    record.write_csv(dir.join("history.csv"))?;
    write_vtk_file(dir.join("final_mesh.vtk"), &mesh, "final mesh", &[])?;
    fs::write(dir.join("plot_history.py"), plot_script())?;
    let last = record.last().cloned();
    let summary = RunSummary {
        method: cfg.method.name().to_string(),
        problem: problem.label,
        status: record.status.as_str().to_string(),
        converged: record.status == Termination::Converged,
        iterations: record.steps(),
        final_objective: last.as_ref().map_or(f64::NAN, |r| r.objective),
        final_gradient_norm: record.final_gradient_norm(),
        initial_min_radius_ratio: initial_quality,
        final_min_radius_ratio: mesh.min_radius_ratio(),
        final_damping: last.and_then(|r| r.damping),
        wall_time: start.elapsed().as_secs_f64(),
        record: Some(record),
        sweep: None,
        final_mesh: mesh,
    };
    fs::write(dir.join("summary.txt"), summary.to_text())?;
    log::info!("{}: {}", summary.method, summary.status);
    Ok(summary)
}

fn run_sweep(cfg: &ExperimentConfig, problem: &Problem, snapshots: &Snapshots, start: Instant) -> Result<RunSummary, CliError> {
    let s = &cfg.sweep;
    let mesh = &problem.mesh;
    let v0 = boundary_vertex_near_angle(mesh, s.vertex_angle).ok_or_else(|| CliError::Config("mesh has no boundary".into()))?;
    let dir = [s.direction[0], s.direction[1], 0.0];
    let v = single_node_perturbation(mesh, v0, dir, s.collapse_alpha)
        .ok_or_else(|| CliError::Config("sweep direction does not shrink any cell at the chosen vertex".into()))?;
    let alphas: Vec<f64> = (0..=s.samples).map(|i| s.collapse_alpha * i as f64 / s.samples as f64).collect();
    let points = spurious_sweep(mesh, &problem.data, &v, &alphas)?;
    let mut csv = String::from("alpha,J,min_det\n");
    let mut last_good = mesh.clone();
    for (i, p) in points.iter().enumerate() {
        let j = p.objective.map(|j| format!("{j:e}")).unwrap_or_default();
        let _ = writeln!(csv, "{:e},{},{:e}", p.alpha, j, p.min_det);
        if p.objective.is_some() {
            last_good = mesh.apply_deformation(&v, p.alpha)?;
            snapshots.write(i, &last_good, &[]);
        }
    }
    let out = &cfg.output.dir;
    fs::write(out.join("sweep.csv"), csv)?;
    fs::write(out.join("plot_sweep.py"), sweep_plot_script())?;
    write_vtk_file(out.join("final_mesh.vtk"), &last_good, "last non-degenerate mesh", &[])?;
    let collapsed = points.last().is_some_and(|p| p.objective.is_none());
    let final_objective = points.iter().rev().find_map(|p| p.objective).unwrap_or(f64::NAN);
    Ok(RunSummary {
        method: cfg.method.name().to_string(),
        problem: format!("{}, vertex {v0}", problem.label),
        status: if collapsed { "collapsed" } else { "completed" }.to_string(),
        converged: true,
        iterations: points.len(),
        final_objective,
        final_gradient_norm: f64::NAN,
        initial_min_radius_ratio: mesh.min_radius_ratio(),
        final_min_radius_ratio: last_good.min_radius_ratio(),
        final_damping: None,
        wall_time: start.elapsed().as_secs_f64(),
        record: None,
        sweep: Some(points),
        final_mesh: last_good,
    })
}

/// Runs every configuration into `out/<method>` and writes the aligned
/// histories to `out/comparison.csv`.
pub fn compare(configs: &[ExperimentConfig], out: &Path) -> Result<String, CliError> {
    let first = configs.first().ok_or_else(|| CliError::Config("nothing to compare".into()))?;
    if configs.iter().any(|c| c.problem != first.problem) {
        return Err(CliError::Config("compared configurations must share the problem".into()));
    }
    if configs.iter().any(|c| c.method == MethodKind::SpuriousSweep) {
        return Err(CliError::Config("the spurious sweep has no iteration history to compare".into()));
    }
    for c in configs {
        c.validate()?;
    }
    let mut runs = Vec::new();
    for (k, c) in configs.iter().enumerate() {
        let mut label = c.method.name().to_string();
        if runs.iter().any(|(l, _)| *l == label) {
            label = format!("{label}-{k}");
        }
        let mut c = c.clone();
        c.output.dir = out.join(&label);
        let summary = run(&c)?;
        runs.push((label, summary.record.expect("iterative methods keep a record")));
    }
    let csv = compare_histories(&runs)?;
    fs::create_dir_all(out)?;
    fs::write(out.join("comparison.csv"), &csv)?;
    Ok(csv)
}

/// Observed orders of the central difference error `|ΔJ/2t − J'(V)|` over
/// `t = 1e-2 … 1e-5` for `fields` random deformation fields.
pub fn check_derivative(cfg: &ExperimentConfig, fields: usize) -> Result<Vec<f64>, CliError> {
    let problem = build_problem(cfg)?;
    let mesh = &problem.mesh;
    let d = mesh.dim();
    let (u, p) = solve_state_adjoint(mesh, &problem.data)?;
    let dj = shape_derivative(mesh, &u, &p, &problem.data);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let steps = [1e-2, 1e-3, 1e-4, 1e-5];
    let mut orders = Vec::with_capacity(fields);
    for _ in 0..fields {
        let v = NodalField::vector(d, (0..mesh.n_vertices() * d).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let exact = dj.pair(&v);
        let mut errs = Vec::with_capacity(steps.len());
        for &t in &steps {
            let jp = evaluate_objective(&mesh.apply_deformation(&v, t)?, &problem.data)?;
            let jm = evaluate_objective(&mesh.apply_deformation(&v, -t)?, &problem.data)?;
            errs.push(((jp - jm) / (2.0 * t) - exact).abs());
        }
        orders.push(loglog_slope(&steps, &errs));
    }
    Ok(orders)
}

/// Least-squares slope of `log y` against `log x`.
pub(crate) fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.max(f64::MIN_POSITIVE).ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
