//! Discrete shape calculus: the volume-form shape derivative, the elasticity
//! inner product, the normal force operator and the gradient directions
//! built from them.

pub(crate) mod assembly;

use thiserror::Error;

pub use assembly::{assemble_elasticity, assemble_normal_force};

use crate::fem::{map_point, DualVector, FemError, NodalField};
use crate::linalg::{BlockLayout, BlockSystem, LinalgError, LuFactorization, SparseOperator};
use crate::mesh::SimplicialMesh;
use crate::problems::ProblemData;
use crate::quadrature;
use crate::tensor;

#[derive(Debug, Error)]
pub enum ShapeError {
    #[error("invalid elasticity parameters: {0}")]
    InvalidParams(String),
    #[error("normal force operator is rank deficient (pivot {step}, boundary unknown {column})")]
    NormalForceRankDeficient { column: usize, step: usize },
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error("linear solve failed: {0}")]
    Solver(#[from] LinalgError),
}

/// Lamé parameters and damping of the elasticity inner product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticityParams {
    young: f64,
    poisson: f64,
    mu: f64,
    lambda: f64,
    delta: f64,
}

impl ElasticityParams {
    /// From Young's modulus `E₀`, Poisson ratio `ν` and damping `δ`, with
    /// `μ = E₀/(2(1+ν))` and `λ = E₀ν/((1+ν)(1−2ν))`.
    pub fn new(young: f64, poisson: f64, delta: f64) -> Result<Self, ShapeError> {
        if !(poisson > -1.0 && poisson < 0.5) {
            return Err(ShapeError::InvalidParams(format!("Poisson ratio {poisson} outside (-1, 0.5)")));
        }
        let mu = young / (2.0 * (1.0 + poisson));
        let lambda = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
        let mut p = Self::from_lame(mu, lambda, delta)?;
        p.young = young;
        p.poisson = poisson;
        Ok(p)
    }

    /// Requires `μ > 0`, `3λ + 2μ > 0` (hence also `2λ + 2μ > 0`) and `δ > 0`.
    pub fn from_lame(mu: f64, lambda: f64, delta: f64) -> Result<Self, ShapeError> {
        if !(mu > 0.0) {
            return Err(ShapeError::InvalidParams(format!("mu = {mu} must be positive")));
        }
        if !(3.0 * lambda + 2.0 * mu > 0.0) {
            return Err(ShapeError::InvalidParams(format!("d*lambda + 2*mu must be positive (lambda = {lambda})")));
        }
        if !(delta > 0.0) {
            return Err(ShapeError::InvalidParams(format!("damping delta = {delta} must be positive")));
        }
        let young = mu * (3.0 * lambda + 2.0 * mu) / (lambda + mu);
        let poisson = lambda / (2.0 * (lambda + mu));
        Ok(ElasticityParams {
            young,
            poisson,
            mu,
            lambda,
            delta,
        })
    }

    /// `E₀ = 1`, `ν = 0.4`, `δ = 0.2·E₀`.
    pub fn paper_defaults() -> Self {
        Self::new(1.0, 0.4, 0.2).expect("valid defaults")
    }

    pub fn young_modulus(&self) -> f64 {
        self.young
    }

    pub fn poisson_ratio(&self) -> f64 {
        self.poisson
    }

    pub fn lame_mu(&self) -> f64 {
        self.mu
    }

    pub fn lame_lambda(&self) -> f64 {
        self.lambda
    }

    pub fn damping_delta(&self) -> f64 {
        self.delta
    }
}

impl Default for ElasticityParams {
    fn default() -> Self {
        Self::paper_defaults()
    }
}

/// The discrete shape derivative `V ↦ J'_h(Ω_h; V)` in volume form,
///
/// `∫ u div V + ∫ ∇uᵀ[(div V)I − DV − DVᵀ]∇p − ∫ (∇f·V + f div V) p`.
///
/// With `u`, `p` the discrete state and adjoint this is the derivative of
/// the reduced objective; for other `u`, `p` it is the partial derivative of
/// the Lagrangian with respect to the deformation.
pub fn shape_derivative(mesh: &SimplicialMesh, u: &NodalField, p: &NodalField, data: &ProblemData) -> DualVector {
    let d = mesh.dim();
    let rule = quadrature::degree5(d);
    let mut out = vec![0.0; mesh.n_vertices() * d];
    for c in 0..mesh.n_cells() {
        let geo = mesh.cell_geometry(c);
        let cell = mesh.cell(c);
        let vol = geo.volume;
        let mut gu = [0.0; 3];
        let mut gp = [0.0; 3];
        let mut u_mean = 0.0;
        for (a, &v) in cell.iter().enumerate() {
            let (ua, pa) = (u.values()[v], p.values()[v]);
            u_mean += ua;
            for k in 0..d {
                gu[k] += ua * geo.grads[a][k];
                gp[k] += pa * geo.grads[a][k];
            }
        }
        u_mean /= (d + 1) as f64;
        let gup = tensor::dot(&gu, &gp, d);
        // ∫ p ∇f λ_a and ∫ p f over the cell, per quadrature
        let mut p_gradf = [[0.0; 3]; 4];
        let mut pf = 0.0;
        for (lambda, w) in rule.iter() {
            let x = map_point(mesh, c, lambda);
            let px: f64 = cell.iter().enumerate().map(|(a, &v)| lambda[a] * p.values()[v]).sum();
            let wt = w * vol * px;
            let gf = data.grad_f(&x);
            pf += wt * data.f(&x);
            for a in 0..=d {
                for k in 0..d {
                    p_gradf[a][k] += wt * lambda[a] * gf[k];
                }
            }
        }
        for (a, &v) in cell.iter().enumerate() {
            let g = &geo.grads[a];
            let g_gp = tensor::dot(g, &gp, d);
            let g_gu = tensor::dot(g, &gu, d);
            for i in 0..d {
                let t1 = vol * u_mean * g[i];
                let t2 = vol * (g[i] * gup - gu[i] * g_gp - gp[i] * g_gu);
                let t3 = p_gradf[a][i] + pf * g[i];
                out[v * d + i] += t1 + t2 - t3;
            }
        }
    }
    DualVector::new(d, out)
}

/// Solves `E_h V = rhs` for vertex-major vector coefficients.
fn solve_elasticity(e: &SparseOperator, rhs: &[f64]) -> Result<Vec<f64>, ShapeError> {
    Ok(LuFactorization::new(e)?.solve(rhs)?)
}

/// `V̂ = −E_h⁻¹ J'_h`.
pub fn classical_gradient(mesh: &SimplicialMesh, dj: &DualVector, params: &ElasticityParams) -> Result<NodalField, ShapeError> {
    let e = assemble_elasticity(mesh, params);
    let rhs: Vec<f64> = dj.coeffs().iter().map(|c| -c).collect();
    Ok(NodalField::vector(mesh.dim(), solve_elasticity(&e, &rhs)?))
}

/// Solution of the restricted gradient problem.
#[derive(Debug, Clone)]
pub struct RestrictedGradientResult {
    /// The projected gradient `Ṽ`.
    pub v_tilde: NodalField,
    /// The unrestricted gradient `V̂ = −E_h⁻¹ J'_h`.
    pub v_hat: NodalField,
    /// Normal force `F` on the boundary vertices, in boundary-vertex order.
    pub force: Vec<f64>,
    /// Multiplier `Π`.
    pub pi: NodalField,
    /// `⟨E_h Ṽ, Ṽ⟩`.
    pub energy: f64,
}

/// Operators reused across the solves of one iterate.
pub struct ShapeOperators {
    pub elasticity: SparseOperator,
    pub normal_force: SparseOperator,
    elasticity_lu: LuFactorization,
}

impl ShapeOperators {
    pub fn new(mesh: &SimplicialMesh, params: &ElasticityParams) -> Result<Self, ShapeError> {
        let elasticity = assemble_elasticity(mesh, params);
        let normal_force = assemble_normal_force(mesh);
        let elasticity_lu = LuFactorization::new(&elasticity)?;
        Ok(ShapeOperators {
            elasticity,
            normal_force,
            elasticity_lu,
        })
    }

    /// `E_h⁻¹ rhs`.
    pub fn solve_elasticity(&self, rhs: &[f64]) -> Result<Vec<f64>, ShapeError> {
        Ok(self.elasticity_lu.solve(rhs)?)
    }

    /// `‖V‖²_{E_h}`.
    pub fn energy(&self, v: &NodalField) -> f64 {
        self.elasticity.bilinear(v.values(), v.values())
    }

    /// Solves the reduced saddle system
    /// `[[0, Nᵀ], [N, E]] (F, Π) = (0, −J')` and sets `Ṽ = −E⁻¹J' − Π`.
    pub fn restricted_gradient(&self, dim: usize, dj: &DualVector) -> Result<RestrictedGradientResult, ShapeError> {
        let nd = self.elasticity.nrows();
        let nb = self.normal_force.ncols();
        let neg: Vec<f64> = dj.coeffs().iter().map(|c| -c).collect();
        let layout = BlockLayout::new(&[("F", nb), ("Pi", nd)]);
        let mut sys = BlockSystem::new(layout.clone());
        sys.add_transposed("F", "Pi", &self.normal_force, 1.0);
        sys.add("Pi", "F", &self.normal_force, 1.0);
        sys.add("Pi", "Pi", &self.elasticity, 1.0);
        sys.set_rhs("Pi", &neg);
        let x = sys.solve().map_err(|e| match e {
            LinalgError::Singular { column, step } if column < nb => {
                ShapeError::NormalForceRankDeficient { column, step }
            }
            other => ShapeError::Solver(other),
        })?;
        let force = layout.slice(&x, "F").to_vec();
        let pi = layout.slice(&x, "Pi").to_vec();
        let v_hat = self.solve_elasticity(&neg)?;
        let v_tilde: Vec<f64> = v_hat.iter().zip(&pi).map(|(a, b)| a - b).collect();
        let energy = self.elasticity.bilinear(&v_tilde, &v_tilde);
        Ok(RestrictedGradientResult {
            v_tilde: NodalField::vector(dim, v_tilde),
            v_hat: NodalField::vector(dim, v_hat),
            force,
            pi: NodalField::vector(dim, pi),
            energy,
        })
    }

    /// `‖N_hᵀ V‖`.
    pub fn stationarity_residual(&self, v: &NodalField) -> f64 {
        crate::linalg::norm2(&self.normal_force.mul_vec_transposed(v.values()))
    }
}

/// The `E_h`-orthogonal projection `Ṽ` of `V̂` onto deformations induced by
/// normal forces, with its force and multiplier.
pub fn restricted_gradient(
    mesh: &SimplicialMesh,
    dj: &DualVector,
    params: &ElasticityParams,
) -> Result<RestrictedGradientResult, ShapeError> {
    ShapeOperators::new(mesh, params)?.restricted_gradient(mesh.dim(), dj)
}

/// Euclidean norm of `N_hᵀ V̂`, i.e. of the pairings `∫ ψ_b (V̂·ν) ds` with
/// all boundary hats.
pub fn stationarity_residual(mesh: &SimplicialMesh, v_hat: &NodalField) -> f64 {
    crate::linalg::norm2(&assemble_normal_force(mesh).mul_vec_transposed(v_hat.values()))
}

/// `dJ` with all coefficients at boundary vertices set to zero.
pub fn mask_boundary(mesh: &SimplicialMesh, dj: &DualVector) -> DualVector {
    let d = dj.components();
    let mut coeffs = dj.coeffs().to_vec();
    for &v in mesh.boundary_vertex_set() {
        for k in 0..d {
            coeffs[v * d + k] = 0.0;
        }
    }
    DualVector::new(d, coeffs)
}

/// Interior-masked direction: solves `E_h V = −D_h dJ`.
pub fn ssw_direction(mesh: &SimplicialMesh, dj: &DualVector, params: &ElasticityParams) -> Result<NodalField, ShapeError> {
    classical_gradient(mesh, &mask_boundary(mesh, dj), params)
}
