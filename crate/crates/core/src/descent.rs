//! Gradient-type descent on the mesh with Armijo backtracking and a mesh-quality
//! safeguard: the restricted gradient method and the classical and
//! interior-masked baselines.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use thiserror::Error;

use crate::fem::{evaluate_objective, solve_state_adjoint, FemError, NodalField};
use crate::mesh::{quality_check, MeshError, QualityThresholds, SimplicialMesh};
use crate::problems::ProblemData;
use crate::shape::{mask_boundary, shape_derivative, ElasticityParams, ShapeError, ShapeOperators};
use crate::tensor;

#[derive(Debug, Error)]
pub enum DescentError {
    #[error("invalid line search configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("failed to write run record: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchConfig {
    pub alpha0: f64,
    pub beta: f64,
    pub sigma: f64,
    pub eps_tol: f64,
    pub max_iter: usize,
    pub max_backtracks: usize,
    pub quality: QualityThresholds,
    /// Fill the `seconds` column. Off by default so that records are reproducible.
    pub record_time: bool,
}

impl Default for LineSearchConfig {
    fn default() -> Self {
        LineSearchConfig {
            alpha0: 1.0,
            beta: 0.5,
            sigma: 0.1,
            eps_tol: 1e-7,
            max_iter: 2000,
            max_backtracks: 60,
            quality: QualityThresholds::default(),
            record_time: false,
        }
    }
}

impl LineSearchConfig {
    pub fn validate(&self) -> Result<(), DescentError> {
        let bad = |m: &str| Err(DescentError::InvalidConfig(m.to_string()));
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad("beta must lie in (0, 1)");
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return bad("sigma must lie in (0, 1)");
        }
        if !(self.eps_tol > 0.0) {
            return bad("eps_tol must be positive");
        }
        if !(self.alpha0 > 0.0 && self.alpha0.is_finite()) {
            return bad("alpha0 must be positive");
        }
        Ok(())
    }
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterations,
    /// No admissible step within `max_backtracks` reductions.
    BacktrackingExhausted,
    /// The direction was not a descent direction (`J'(V) ≥ 0`).
    NonDescent,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::MaxIterations => "max-iterations",
            Termination::BacktrackingExhausted => "backtracking-exhausted",
            Termination::NonDescent => "non-descent",
        }
    }
}

/// One row of a run history: the state at iterate `iter` and the step taken from it.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub objective: f64,
    /// `⟨E_h V, V⟩` of the search direction.
    pub grad_energy: f64,
    /// `J'_h(Ω_h; V)`.
    pub directional: f64,
    /// Accepted step size, 0 on the last row.
    pub alpha: f64,
    pub backtracks: usize,
    pub min_radius_ratio: f64,
    pub seconds: Option<f64>,
    /// Newton damping parameter used for the accepted step.
    pub damping: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub method: String,
    pub rows: Vec<IterationRecord>,
    pub status: Termination,
}

impl RunRecord {
    /// Number of accepted steps.
    pub fn steps(&self) -> usize {
        self.rows.iter().filter(|r| r.alpha > 0.0).count()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.rows.last()
    }

    pub fn final_gradient_norm(&self) -> f64 {
        self.last().map_or(f64::NAN, |r| r.grad_energy.max(0.0).sqrt())
    }

    /// CSV with columns `iter,J,grad_energy,alpha,backtracks,min_radius_ratio,seconds`,
    /// plus `damping` when any row carries one.
    pub fn to_csv(&self) -> String {
        let damped = self.rows.iter().any(|r| r.damping.is_some());
        let mut out = String::from("iter,J,grad_energy,alpha,backtracks,min_radius_ratio,seconds");
        if damped {
            out.push_str(",damping");
        }
        out.push('\n');
        for r in &self.rows {
            let secs = r.seconds.map(|s| format!("{s:e}")).unwrap_or_default();
            let _ = write!(
                out,
                "{},{:e},{:e},{:e},{},{:e},{}",
                r.iter, r.objective, r.grad_energy, r.alpha, r.backtracks, r.min_radius_ratio, secs
            );
            if damped {
                let _ = write!(out, ",{}", r.damping.map(|a| format!("{a:e}")).unwrap_or_default());
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), DescentError> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// `J_new ≤ J_old + σ α J'`.
pub fn armijo_accepts(j_old: f64, j_new: f64, directional: f64, alpha: f64, sigma: f64) -> bool {
    j_new <= j_old + sigma * alpha * directional
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DescentMethod {
    /// Projected direction `Ṽ` induced by normal forces.
    Restricted,
    /// `V̂ = −E_h⁻¹ J'`.
    Classical,
    /// `E_h V = −J'` with boundary test functions removed.
    Ssw,
}

impl DescentMethod {
    pub fn name(&self) -> &'static str {
        match self {
            DescentMethod::Restricted => "restricted-gradient",
            DescentMethod::Classical => "classical-gradient",
            DescentMethod::Ssw => "ssw-gradient",
        }
    }
}

/// Search direction with its `E_h` energy.
fn direction(
    method: DescentMethod,
    mesh: &SimplicialMesh,
    dj: &crate::fem::DualVector,
    params: &ElasticityParams,
) -> Result<(NodalField, f64), DescentError> {
    let ops = ShapeOperators::new(mesh, params)?;
    let d = mesh.dim();
    let v = match method {
        DescentMethod::Restricted => ops.restricted_gradient(d, dj)?.v_tilde,
        DescentMethod::Classical | DescentMethod::Ssw => {
            let rhs = if method == DescentMethod::Ssw { mask_boundary(mesh, dj) } else { dj.clone() };
            let neg: Vec<f64> = rhs.coeffs().iter().map(|c| -c).collect();
            NodalField::vector(d, ops.solve_elasticity(&neg)?)
        }
    };
    let energy = ops.energy(&v);
    Ok((v, energy))
}

/// Algorithm-1 style descent for the given direction. `observe` is called with
/// every iterate (including the first and the last) and its direction.
pub fn run_descent(
    method: DescentMethod,
    mesh0: &SimplicialMesh,
    data: &ProblemData,
    params: &ElasticityParams,
    cfg: &LineSearchConfig,
    mut observe: impl FnMut(usize, &SimplicialMesh, &NodalField),
) -> Result<(SimplicialMesh, RunRecord), DescentError> {
    cfg.validate()?;
    let start = Instant::now();
    let mut mesh = mesh0.clone();
    let mut rows = Vec::new();
    let mut alpha = cfg.alpha0;
    let mut status = Termination::MaxIterations;
    let (u, p) = solve_state_adjoint(&mesh, data)?;
    let mut objective = crate::fem::objective(&mesh, &u);
    let mut states = (u, p);
    for iter in 0..=cfg.max_iter {
        let dj = shape_derivative(&mesh, &states.0, &states.1, data);
        let (v, energy) = direction(method, &mesh, &dj, params)?;
        let directional = dj.pair(&v);
        observe(iter, &mesh, &v);
        let mut row = IterationRecord {
            iter,
            objective,
            grad_energy: energy,
            directional,
            alpha: 0.0,
            backtracks: 0,
            min_radius_ratio: mesh.min_radius_ratio(),
            seconds: None,
            damping: None,
        };
        let stamp = |row: &mut IterationRecord| {
            if cfg.record_time {
                row.seconds = Some(start.elapsed().as_secs_f64());
            }
        };
        if energy <= cfg.eps_tol * cfg.eps_tol {
            stamp(&mut row);
            rows.push(row);
            status = Termination::Converged;
            break;
        }
        if directional >= 0.0 {
            stamp(&mut row);
            rows.push(row);
            status = Termination::NonDescent;
            break;
        }
        if iter == cfg.max_iter {
            stamp(&mut row);
            rows.push(row);
            break;
        }
        alpha /= cfg.beta;
        let mut accepted = None;
        for backtracks in 0..=cfg.max_backtracks {
            if let Some(trial) = try_step(&mesh, &v, alpha, cfg, data, objective, directional)? {
                row.alpha = alpha;
                row.backtracks = backtracks;
                accepted = Some(trial);
                break;
            }
            alpha *= cfg.beta;
        }
        stamp(&mut row);
        rows.push(row);
        match accepted {
            Some((trial, j_new)) => {
                mesh = trial;
                objective = j_new;
                states = solve_state_adjoint(&mesh, data)?;
            }
            None => {
                status = Termination::BacktrackingExhausted;
                break;
            }
        }
    }
    log::debug!("{} finished after {} rows: {}", method.name(), rows.len(), status.as_str());
    let record = RunRecord {
        method: method.name().to_string(),
        rows,
        status,
    };
    Ok((mesh, record))
}

fn try_step(
    mesh: &SimplicialMesh,
    v: &NodalField,
    alpha: f64,
    cfg: &LineSearchConfig,
    data: &ProblemData,
    objective: f64,
    directional: f64,
) -> Result<Option<(SimplicialMesh, f64)>, DescentError> {
    let (ok, _) = quality_check(mesh, v, alpha, &cfg.quality);
    if !ok {
        return Ok(None);
    }
    let trial = match mesh.apply_deformation(v, alpha) {
        Ok(m) => m,
        Err(MeshError::DegenerateCell { .. }) => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let j_new = evaluate_objective(&trial, data)?;
    Ok(armijo_accepts(objective, j_new, directional, alpha, cfg.sigma).then_some((trial, j_new)))
}

/// Algorithm 1: descent along the restricted gradient `Ṽ`.
pub fn restricted_descent(
    mesh0: &SimplicialMesh,
    data: &ProblemData,
    params: &ElasticityParams,
    cfg: &LineSearchConfig,
) -> Result<(SimplicialMesh, RunRecord), DescentError> {
    run_descent(DescentMethod::Restricted, mesh0, data, params, cfg, |_, _, _| {})
}

/// Algorithm 1 with `Ṽ` replaced by the classical gradient `V̂`.
pub fn classical_descent(
    mesh0: &SimplicialMesh,
    data: &ProblemData,
    params: &ElasticityParams,
    cfg: &LineSearchConfig,
) -> Result<(SimplicialMesh, RunRecord), DescentError> {
    run_descent(DescentMethod::Classical, mesh0, data, params, cfg, |_, _, _| {})
}

/// Algorithm 1 with the interior-masked direction; stops with
/// [`Termination::NonDescent`] once that direction fails to descend.
pub fn ssw_descent(
    mesh0: &SimplicialMesh,
    data: &ProblemData,
    params: &ElasticityParams,
    cfg: &LineSearchConfig,
) -> Result<(SimplicialMesh, RunRecord), DescentError> {
    run_descent(DescentMethod::Ssw, mesh0, data, params, cfg, |_, _, _| {})
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub alpha: f64,
    /// `None` when the deformed mesh is degenerate.
    pub objective: Option<f64>,
    /// Smallest `det(I + α DV)` over all cells.
    pub min_det: f64,
}

/// Evaluates `α ↦ J_h((id + αV)(Ω_h))` along `alphas`, stopping after the first
/// configuration whose smallest cell determinant is not positive.
pub fn spurious_sweep(
    mesh: &SimplicialMesh,
    data: &ProblemData,
    v: &NodalField,
    alphas: &[f64],
) -> Result<Vec<SweepPoint>, DescentError> {
    let d = mesh.dim();
    let jacobians: Vec<_> = (0..mesh.n_cells()).map(|c| mesh.field_jacobian(c, v)).collect();
    let mut out = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let min_det = jacobians
            .iter()
            .map(|dv| tensor::det(&tensor::add(&tensor::identity(d), &tensor::scale(dv, alpha, d), d), d))
            .fold(f64::INFINITY, f64::min);
        let degenerate = min_det <= 1e-12;
        let objective = if degenerate {
            None
        } else {
            match mesh.apply_deformation(v, alpha) {
                Ok(moved) => Some(evaluate_objective(&moved, data)?),
                Err(_) => None,
            }
        };
        out.push(SweepPoint { alpha, objective, min_det });
        if objective.is_none() {
            break;
        }
    }
    Ok(out)
}

/// Field equal to `s·direction` at `vertex` and zero elsewhere, with `s > 0`
/// chosen so that the first cell around `vertex` collapses at exactly
/// `collapse_alpha`. `None` if no cell shrinks along `direction`.
pub fn single_node_perturbation(
    mesh: &SimplicialMesh,
    vertex: usize,
    direction: [f64; 3],
    collapse_alpha: f64,
) -> Option<NodalField> {
    let d = mesh.dim();
    // det(I + α DV) = 1 + α s (∇φ_v · direction) on each cell around `vertex`
    let rate = (0..mesh.n_cells())
        .filter_map(|c| {
            let a = mesh.cell(c).iter().position(|&v| v == vertex)?;
            Some(-tensor::dot(&mesh.cell_geometry(c).grads[a], &direction, d))
        })
        .fold(0.0, f64::max);
    if !(rate > 0.0) || !(collapse_alpha > 0.0) {
        return None;
    }
    let s = 1.0 / (collapse_alpha * rate);
    let mut values = vec![0.0; mesh.n_vertices() * d];
    for k in 0..d {
        values[vertex * d + k] = s * direction[k];
    }
    Some(NodalField::vector(d, values))
}

/// Boundary vertex of a 2D mesh whose polar angle is closest to `degrees`.
pub fn boundary_vertex_near_angle(mesh: &SimplicialMesh, degrees: f64) -> Option<usize> {
    let target = degrees.to_radians();
    let gap = |v: usize| {
        let x = mesh.point(v);
        let t = x[1].atan2(x[0]) - target;
        t.sin().atan2(t.cos()).abs()
    };
    mesh.boundary_vertex_set()
        .iter()
        .copied()
        .min_by(|&a, &b| gap(a).total_cmp(&gap(b)))
}
