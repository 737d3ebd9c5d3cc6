//! P1 finite elements: assembly, state and adjoint solves, objective.

use thiserror::Error;

pub use crate::field::{DualVector, NodalField};
use crate::linalg::{LinalgError, LuFactorization, SparseOperator, TripletBuilder};
use crate::mesh::SimplicialMesh;
use crate::problems::ProblemData;
use crate::quadrature;

#[derive(Debug, Error)]
pub enum FemError {
    #[error("mesh has no interior vertices")]
    NoInteriorDofs,
    #[error("field does not match the mesh ({actual} values, expected {expected})")]
    FieldMismatch { expected: usize, actual: usize },
    #[error("linear solve failed: {0}")]
    Solver(#[from] LinalgError),
}

/// Numbering of the interior (non-Dirichlet) vertices.
#[derive(Debug, Clone)]
pub struct DofMap {
    interior: Vec<usize>,
    local: Vec<usize>,
}

impl DofMap {
    pub fn new(mesh: &SimplicialMesh) -> Self {
        let interior = mesh.interior_vertices();
        let mut local = vec![usize::MAX; mesh.n_vertices()];
        for (k, &v) in interior.iter().enumerate() {
            local[v] = k;
        }
        DofMap { interior, local }
    }

    pub fn len(&self) -> usize {
        self.interior.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interior.is_empty()
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn local(&self, v: usize) -> Option<usize> {
        match self.local[v] {
            usize::MAX => None,
            k => Some(k),
        }
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.interior.iter().map(|&v| full[v]).collect()
    }

    /// Extends interior values by zero on the boundary.
    pub fn extend(&self, reduced: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.local.len()];
        for (k, &v) in self.interior.iter().enumerate() {
            full[v] = reduced[k];
        }
        full
    }
}

/// Full P1 stiffness matrix `∫ ∇φ_i · ∇φ_j` (no boundary conditions).
pub fn stiffness(mesh: &SimplicialMesh) -> SparseOperator {
    let d = mesh.dim();
    let n = mesh.n_vertices();
    let mut b = TripletBuilder::with_capacity(n, n, mesh.n_cells() * (d + 1) * (d + 1));
    for c in 0..mesh.n_cells() {
        let geo = mesh.cell_geometry(c);
        let cell = mesh.cell(c);
        for a in 0..=d {
            for bb in 0..=d {
                let k: f64 = (0..d).map(|k| geo.grads[a][k] * geo.grads[bb][k]).sum();
                b.push(cell[a], cell[bb], geo.volume * k);
            }
        }
    }
    b.build()
}

/// Full P1 mass matrix `∫ φ_i φ_j`.
pub fn mass(mesh: &SimplicialMesh) -> SparseOperator {
    let d = mesh.dim();
    let n = mesh.n_vertices();
    let denom = ((d + 1) * (d + 2)) as f64;
    let mut b = TripletBuilder::with_capacity(n, n, mesh.n_cells() * (d + 1) * (d + 1));
    for c in 0..mesh.n_cells() {
        let vol = mesh.cell_volume(c);
        let cell = mesh.cell(c);
        for a in 0..=d {
            for bb in 0..=d {
                let m = if a == bb { 2.0 } else { 1.0 };
                b.push(cell[a], cell[bb], vol * m / denom);
            }
        }
    }
    b.build()
}

/// Physical coordinates of a barycentric point of cell `c`.
pub fn map_point(mesh: &SimplicialMesh, c: usize, lambda: &[f64; 4]) -> [f64; 3] {
    let mut x = [0.0; 3];
    for (a, &v) in mesh.cell(c).iter().enumerate() {
        let p = mesh.point(v);
        for k in 0..3 {
            x[k] += lambda[a] * p[k];
        }
    }
    x
}

/// `∫ f φ_i` for every vertex, with a degree-5 rule.
pub fn load_vector(mesh: &SimplicialMesh, data: &ProblemData) -> Vec<f64> {
    let d = mesh.dim();
    let rule = quadrature::degree5(d);
    let mut out = vec![0.0; mesh.n_vertices()];
    for c in 0..mesh.n_cells() {
        let vol = mesh.cell_volume(c);
        let cell = mesh.cell(c);
        for (lambda, w) in rule.iter() {
            let fx = data.f(&map_point(mesh, c, lambda)) * vol * w;
            for a in 0..=d {
                out[cell[a]] += fx * lambda[a];
            }
        }
    }
    out
}

/// `∫ φ_i` for every vertex.
pub fn lumped_volumes(mesh: &SimplicialMesh) -> Vec<f64> {
    let d = mesh.dim();
    let mut out = vec![0.0; mesh.n_vertices()];
    for c in 0..mesh.n_cells() {
        let share = mesh.cell_volume(c) / (d + 1) as f64;
        for &v in mesh.cell(c) {
            out[v] += share;
        }
    }
    out
}

/// Factorized Dirichlet Laplacian on the interior vertices.
pub struct PoissonSolver {
    dofs: DofMap,
    reduced: SparseOperator,
    lu: LuFactorization,
}

impl PoissonSolver {
    pub fn new(mesh: &SimplicialMesh) -> Result<Self, FemError> {
        let dofs = DofMap::new(mesh);
        if dofs.is_empty() {
            return Err(FemError::NoInteriorDofs);
        }
        let reduced = stiffness(mesh).submatrix(dofs.interior(), dofs.interior());
        let lu = LuFactorization::new(&reduced)?;
        Ok(PoissonSolver { dofs, reduced, lu })
    }

    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    /// Reduced stiffness matrix on interior vertices.
    pub fn matrix(&self) -> &SparseOperator {
        &self.reduced
    }

    /// Solves with load `rhs` (one entry per vertex; boundary entries ignored)
    /// and returns the zero-extended nodal field.
    pub fn solve(&self, rhs: &[f64]) -> Result<NodalField, FemError> {
        let x = self.lu.solve(&self.dofs.restrict(rhs))?;
        Ok(NodalField::scalar(self.dofs.extend(&x)))
    }
}

/// `u_h ∈ S¹₀` with `∫ ∇u_h·∇v = ∫ f v`.
pub fn solve_state(mesh: &SimplicialMesh, data: &ProblemData) -> Result<NodalField, FemError> {
    PoissonSolver::new(mesh)?.solve(&load_vector(mesh, data))
}

/// `p_h ∈ S¹₀` with `∫ ∇p_h·∇v = −∫ v`.
pub fn solve_adjoint(mesh: &SimplicialMesh) -> Result<NodalField, FemError> {
    PoissonSolver::new(mesh)?.solve(&adjoint_rhs(mesh))
}

fn adjoint_rhs(mesh: &SimplicialMesh) -> Vec<f64> {
    lumped_volumes(mesh).into_iter().map(|v| -v).collect()
}

/// State and adjoint sharing one factorization.
pub fn solve_state_adjoint(mesh: &SimplicialMesh, data: &ProblemData) -> Result<(NodalField, NodalField), FemError> {
    let solver = PoissonSolver::new(mesh)?;
    let u = solver.solve(&load_vector(mesh, data))?;
    let p = solver.solve(&adjoint_rhs(mesh))?;
    Ok((u, p))
}

/// `J_h = ∫ u_h dx`, exact for piecewise-linear `u_h`.
pub fn objective(mesh: &SimplicialMesh, u: &NodalField) -> f64 {
    let d = mesh.dim();
    (0..mesh.n_cells())
        .map(|c| {
            let sum: f64 = mesh.cell(c).iter().map(|&v| u.values()[v]).sum();
            mesh.cell_volume(c) * sum / (d + 1) as f64
        })
        .sum()
}

/// `J_h` of the mesh: solves the state equation and integrates.
pub fn evaluate_objective(mesh: &SimplicialMesh, data: &ProblemData) -> Result<f64, FemError> {
    Ok(objective(mesh, &solve_state(mesh, data)?))
}

/// The vector field `R ∈ S¹(Ω_h)^d` with `∫ R·V = ⟨ℓ, V⟩` for all `V`.
pub fn l2_representer(mesh: &SimplicialMesh, functional: &DualVector) -> Result<NodalField, FemError> {
    let d = functional.components();
    let n = mesh.n_vertices();
    if functional.coeffs().len() != n * d {
        return Err(FemError::FieldMismatch {
            expected: n * d,
            actual: functional.coeffs().len(),
        });
    }
    let lu = LuFactorization::new(&mass(mesh))?;
    let mut values = vec![0.0; n * d];
    for k in 0..d {
        let rhs: Vec<f64> = (0..n).map(|i| functional.coeffs()[i * d + k]).collect();
        let r = lu.solve(&rhs)?;
        for i in 0..n {
            values[i * d + k] = r[i];
        }
    }
    Ok(NodalField::vector(d, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::constant_data;

    fn star() -> SimplicialMesh {
        // a square split into four triangles around one interior node
        let pts = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0], [0.5, 0.5, 0.0]];
        SimplicialMesh::new(2, pts, vec![0, 1, 4, 1, 2, 4, 2, 3, 4, 3, 0, 4]).unwrap()
    }

    #[test]
    fn single_interior_node_adjoint() {
        let m = star();
        let p = solve_adjoint(&m).unwrap();
        // ∫φ = 4·(1/4)/3, ∫|∇φ|² = 4
        let expected = -(1.0 / 3.0) / 4.0;
        assert!((p.values()[4] - expected).abs() < 1e-15);
        assert_eq!(&p.values()[..4], &[0.0; 4]);
    }

    #[test]
    fn objective_on_single_triangle() {
        let pts = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        let m = SimplicialMesh::new(2, pts, vec![0, 1, 2]).unwrap();
        assert!((objective(&m, &NodalField::scalar(vec![0.0, 0.0, 3.0])) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn constant_load_is_lumped_volume() {
        let m = star();
        let l = load_vector(&m, &constant_data(1.0));
        let v = lumped_volumes(&m);
        for (a, b) in l.iter().zip(&v) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn no_interior_vertices_is_an_error() {
        let pts = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        let m = SimplicialMesh::new(2, pts, vec![0, 1, 2]).unwrap();
        assert!(matches!(solve_adjoint(&m), Err(FemError::NoInteriorDofs)));
    }
}
