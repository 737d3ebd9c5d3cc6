//! The damped restricted Newton-like method.
//!
//! Each outer iteration linearizes the seven-block system in
//! `(W, G, u, p, Ṽ, F, Π)` at `(0, 0, u, p, Ṽ, F, Π)`, keeps only the `W`
//! component of the solution and recomputes everything else on the deformed
//! mesh.

mod forms;

use std::time::Instant;

use thiserror::Error;

pub use forms::{elasticity_derivative, normal_force_adjoint_derivative, normal_force_derivative, LagrangianForms};

use crate::descent::{armijo_accepts, IterationRecord, RunRecord, Termination};
use crate::fem::{evaluate_objective, objective, solve_state_adjoint, stiffness, DofMap, DualVector, FemError, NodalField};
use crate::linalg::{norm2, BlockLayout, BlockSystem, LinalgError, SparseOperator};
use crate::mesh::{quality_check, MeshError, QualityThresholds, SimplicialMesh};
use crate::problems::ProblemData;
use crate::shape::{shape_derivative, ElasticityParams, ShapeError, ShapeOperators};

#[derive(Debug, Error)]
pub enum NewtonError {
    #[error("invalid Newton configuration: {0}")]
    InvalidConfig(String),
    #[error("Newton matrix is singular at block {block} (local index {index})")]
    Singular { block: &'static str, index: usize },
    #[error("Newton solve residual {0:e} exceeds tolerance")]
    Inaccurate(f64),
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Solver(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonConfig {
    pub alpha0: f64,
    pub beta: f64,
    pub sigma: f64,
    pub eps_tol: f64,
    pub max_iter: usize,
    pub max_backtracks: usize,
    pub quality: QualityThresholds,
    pub record_time: bool,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            alpha0: 1e-2,
            beta: 0.1,
            sigma: 0.1,
            eps_tol: 1e-9,
            max_iter: 50,
            max_backtracks: 30,
            quality: QualityThresholds::default(),
            record_time: false,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<(), NewtonError> {
        let bad = |m: &str| Err(NewtonError::InvalidConfig(m.to_string()));
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad("beta must lie in (0, 1)");
        }
        if !(self.sigma > 0.0 && self.sigma < 0.5) {
            return bad("sigma must lie in (0, 0.5)");
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

/// `(0, 0, u, p, Ṽ, F, Π)` on the current mesh, with the shape derivative.
#[derive(Debug, Clone)]
pub struct NewtonIterate {
    pub w: NodalField,
    /// Normal force inducing `W`, per boundary vertex.
    pub g: Vec<f64>,
    pub u: NodalField,
    pub p: NodalField,
    pub v_tilde: NodalField,
    pub force: Vec<f64>,
    pub pi: NodalField,
    pub derivative: DualVector,
    /// `⟨E_h Ṽ, Ṽ⟩`.
    pub energy: f64,
    pub objective: f64,
}

impl NewtonIterate {
    pub fn on_mesh(mesh: &SimplicialMesh, data: &ProblemData, params: &ElasticityParams) -> Result<Self, NewtonError> {
        let d = mesh.dim();
        let (u, p) = solve_state_adjoint(mesh, data)?;
        let derivative = shape_derivative(mesh, &u, &p, data);
        let r = ShapeOperators::new(mesh, params)?.restricted_gradient(d, &derivative)?;
        Ok(NewtonIterate {
            w: NodalField::zeros_vector(mesh.n_vertices(), d),
            g: vec![0.0; r.force.len()],
            objective: objective(mesh, &u),
            u,
            p,
            v_tilde: r.v_tilde,
            force: r.force,
            pi: r.pi,
            derivative,
            energy: r.energy,
        })
    }
}

/// The linearized system at an iterate, without the damping block.
///
/// Unknowns are ordered `(W, G, u, p, Ṽ, F, Π)`. Equations are placed so that
/// every diagonal block except `F` is structurally nonzero: the force balance
/// `−G/α + F` in the `G` rows, `EW − NG` in the `W` rows, the state equation
/// in the `u` rows, the adjoint equation in the `p` rows, `E^W Ṽ − N^W F` in
/// the `Ṽ` rows, `−(N^W)ᵀ Π` in the `F` rows and the stationarity in `W` in
/// the `Π` rows.
#[derive(Debug, Clone)]
pub struct NewtonSystem {
    system: BlockSystem,
    n_boundary: usize,
}

impl NewtonSystem {
    pub fn assemble(
        mesh: &SimplicialMesh,
        data: &ProblemData,
        params: &ElasticityParams,
        it: &NewtonIterate,
    ) -> Result<Self, NewtonError> {
        let d = mesh.dim();
        let nd = mesh.n_vertices() * d;
        let nb = it.force.len();
        let dofs = DofMap::new(mesh);
        let ni = dofs.len();
        let all: Vec<usize> = (0..nd).collect();
        let ops = ShapeOperators::new(mesh, params)?;
        let e = &ops.elasticity;
        let n = &ops.normal_force;
        let k = stiffness(mesh).submatrix(dofs.interior(), dofs.interior());
        let forms = LagrangianForms::new(mesh, data);
        let l_uw = forms.cross_uw(&it.p).submatrix(dofs.interior(), &all);
        let l_pw = forms.cross_pw(&it.u).submatrix(dofs.interior(), &all);
        let l_ww = forms.hessian_ww(&it.u, &it.p);
        let v_plus_pi = it.v_tilde.add_scaled(1.0, &it.pi);
        let ce_sum = elasticity_derivative(mesh, params, &v_plus_pi);
        let ce_v = elasticity_derivative(mesh, params, &it.v_tilde);
        let dn_f = normal_force_derivative(mesh, &it.force);
        let rn_pi = normal_force_adjoint_derivative(mesh, &it.pi);

        let layout = BlockLayout::new(&[("W", nd), ("G", nb), ("u", ni), ("p", ni), ("V", nd), ("F", nb), ("Pi", nd)]);
        let mut s = BlockSystem::new(layout);
        // −G/α + F = −F (the damping block is added per solve)
        s.add("G", "F", &SparseOperator::identity(nb), 1.0);
        s.set_rhs("G", &it.force.iter().map(|f| -f).collect::<Vec<_>>());
        // E W − N G = 0
        s.add("W", "W", e, 1.0);
        s.add("W", "G", n, -1.0);
        // state and adjoint equations
        s.add("u", "W", &l_pw, 1.0);
        s.add("u", "u", &k, 1.0);
        s.add("p", "W", &l_uw, 1.0);
        s.add("p", "p", &k, 1.0);
        // E^W Ṽ − N^W F = 0
        s.add("V", "W", &ce_v, 1.0);
        s.add("V", "W", &dn_f, -1.0);
        s.add("V", "V", e, 1.0);
        s.add("V", "F", n, -1.0);
        // −(N^W)ᵀ Π = 0
        s.add("F", "W", &rn_pi, -1.0);
        s.add_transposed("F", "Pi", n, -1.0);
        // E^W (Ṽ + Π) + ∂𝓛/∂W = 0
        s.add("Pi", "W", &l_ww, 1.0);
        s.add("Pi", "W", &ce_sum, 1.0);
        s.add_transposed("Pi", "u", &l_uw, 1.0);
        s.add_transposed("Pi", "p", &l_pw, 1.0);
        s.add("Pi", "V", e, 1.0);
        s.add("Pi", "Pi", e, 1.0);
        Ok(NewtonSystem { system: s, n_boundary: nb })
    }

    pub fn layout(&self) -> &BlockLayout {
        self.system.layout()
    }

    pub fn rhs(&self) -> &[f64] {
        self.system.rhs()
    }

    fn damped(&self, alpha: f64) -> BlockSystem {
        let mut s = self.system.clone();
        s.add("G", "G", &SparseOperator::from_diagonal(&vec![-1.0 / alpha; self.n_boundary]), 1.0);
        s
    }

    /// The full matrix for damping `alpha`.
    pub fn matrix(&self, alpha: f64) -> SparseOperator {
        self.damped(alpha).matrix()
    }

    /// Solves for all seven update blocks.
    pub fn solve(&self, alpha: f64) -> Result<Vec<f64>, NewtonError> {
        let s = self.damped(alpha);
        let a = s.matrix();
        let rhs = s.rhs().to_vec();
        let x = s.solve().map_err(|e| match e {
            LinalgError::Singular { column, .. } => {
                let (b, index) = self.layout().locate(column);
                NewtonError::Singular { block: self.layout().name(b), index }
            }
            other => NewtonError::Solver(other),
        })?;
        let r: Vec<f64> = a.mul_vec(&x).iter().zip(&rhs).map(|(ax, b)| ax - b).collect();
        let rel = norm2(&r) / norm2(&rhs).max(f64::MIN_POSITIVE);
        if rel > 1e-9 {
            return Err(NewtonError::Inaccurate(rel));
        }
        Ok(x)
    }
}

/// The `W` component of the damped Newton step at `it`.
pub fn newton_step(
    it: &NewtonIterate,
    mesh: &SimplicialMesh,
    data: &ProblemData,
    params: &ElasticityParams,
    alpha: f64,
) -> Result<NodalField, NewtonError> {
    let sys = NewtonSystem::assemble(mesh, data, params, it)?;
    let x = sys.solve(alpha)?;
    Ok(NodalField::vector(mesh.dim(), sys.layout().slice(&x, "W").to_vec()))
}

/// Algorithm 2. Rows of the returned record carry the damping parameter used
/// for the accepted step; the last row carries the damping at termination.
pub fn restricted_newton(
    mesh0: &SimplicialMesh,
    data: &ProblemData,
    params: &ElasticityParams,
    cfg: &NewtonConfig,
) -> Result<(SimplicialMesh, RunRecord), NewtonError> {
    restricted_newton_observed(mesh0, data, params, cfg, |_, _, _| {})
}

/// [`restricted_newton`] with a callback receiving every iterate.
pub fn restricted_newton_observed(
    mesh0: &SimplicialMesh,
    data: &ProblemData,
    params: &ElasticityParams,
    cfg: &NewtonConfig,
    mut observe: impl FnMut(usize, &SimplicialMesh, &NewtonIterate),
) -> Result<(SimplicialMesh, RunRecord), NewtonError> {
    cfg.validate()?;
    let start = Instant::now();
    let mut mesh = mesh0.clone();
    let mut rows = Vec::new();
    let mut alpha = cfg.alpha0;
    let mut status = Termination::MaxIterations;
    for iter in 0..=cfg.max_iter {
        let it = NewtonIterate::on_mesh(&mesh, data, params)?;
        observe(iter, &mesh, &it);
        let mut row = IterationRecord {
            iter,
            objective: it.objective,
            grad_energy: it.energy,
            directional: it.derivative.pair(&it.v_tilde),
            alpha: 0.0,
            backtracks: 0,
            min_radius_ratio: mesh.min_radius_ratio(),
            seconds: None,
            damping: Some(alpha),
        };
        let stamp = |row: &mut IterationRecord| {
            if cfg.record_time {
                row.seconds = Some(start.elapsed().as_secs_f64());
            }
        };
        if it.energy <= cfg.eps_tol * cfg.eps_tol {
            stamp(&mut row);
            rows.push(row);
            status = Termination::Converged;
            break;
        }
        if iter == cfg.max_iter {
            stamp(&mut row);
            rows.push(row);
            break;
        }
        alpha /= cfg.beta;
        let sys = NewtonSystem::assemble(&mesh, data, params, &it)?;
        let mut accepted = None;
        for backtracks in 0..=cfg.max_backtracks {
            let x = sys.solve(alpha)?;
            let w = NodalField::vector(mesh.dim(), sys.layout().slice(&x, "W").to_vec());
            if let Some(trial) = try_newton_step(&mesh, &it, &w, cfg, data)? {
                row.alpha = 1.0;
                row.backtracks = backtracks;
                row.damping = Some(alpha);
                accepted = Some(trial);
                break;
            }
            alpha *= cfg.beta;
        }
        stamp(&mut row);
        rows.push(row);
        match accepted {
            Some(trial) => mesh = trial,
            None => {
                status = Termination::BacktrackingExhausted;
                break;
            }
        }
    }
    log::debug!("restricted newton finished after {} rows: {}", rows.len(), status.as_str());
    let record = RunRecord {
        method: "restricted-newton".to_string(),
        rows,
        status,
    };
    Ok((mesh, record))
}

/// Accepts `W` if it descends, keeps the mesh quality and satisfies the
/// Armijo condition with unit step.
fn try_newton_step(
    mesh: &SimplicialMesh,
    it: &NewtonIterate,
    w: &NodalField,
    cfg: &NewtonConfig,
    data: &ProblemData,
) -> Result<Option<SimplicialMesh>, NewtonError> {
    let directional = it.derivative.pair(w);
    if !(directional < 0.0) {
        return Ok(None);
    }
    if !quality_check(mesh, w, 1.0, &cfg.quality).0 {
        return Ok(None);
    }
    let trial = match mesh.apply_deformation(w, 1.0) {
        Ok(m) => m,
        Err(MeshError::DegenerateCell { .. }) => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let j_new = evaluate_objective(&trial, data)?;
    Ok(armijo_accepts(it.objective, j_new, directional, 1.0, cfg.sigma).then_some(trial))
}
