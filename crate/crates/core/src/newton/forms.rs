//! The pulled-back Lagrangian
//!
//! `𝓛(W, u, p) = ∫ u det A + ∫ (A⁻ᵀ∇u)·(A⁻ᵀ∇p) det A − ∫ (f∘T_W) p det A`,
//! `A = I + DW`, `T_W = id + W`, and its first and second partial derivatives.
//!
//! For P1 fields the pull-back to the reference mesh is the same as evaluating
//! the usual forms on the displaced mesh with unchanged nodal coefficients,
//! so first partials at any `W` are assembled that way. Second partials are
//! closed forms at `W = 0`.

use crate::fem::{load_vector, lumped_volumes, map_point, objective, stiffness, DualVector, NodalField};
use crate::linalg::{SparseOperator, TripletBuilder};
use crate::mesh::{CellGeometry, MeshError, SimplicialMesh};
use crate::problems::ProblemData;
use crate::quadrature;
use crate::shape::assembly::{area_normal_derivative, cell_mass_factor, facet_mass_factor};
use crate::shape::{shape_derivative, ElasticityParams};
use crate::tensor::{self, Mat};

/// Assembler for `𝓛` on a fixed reference mesh.
pub struct LagrangianForms<'a> {
    mesh: &'a SimplicialMesh,
    data: &'a ProblemData,
}

/// `D(e_j φ_b) = e_j ⊗ ∇φ_b`.
fn basis_jacobian(g: &[f64; 3], j: usize, d: usize) -> Mat {
    let mut m = tensor::ZERO;
    m[j][..d].copy_from_slice(&g[..d]);
    m
}

fn cell_gradient(mesh: &SimplicialMesh, c: usize, geo: &CellGeometry, u: &NodalField) -> [f64; 3] {
    let d = mesh.dim();
    let mut g = [0.0; 3];
    for (a, &v) in mesh.cell(c).iter().enumerate() {
        for k in 0..d {
            g[k] += u.values()[v] * geo.grads[a][k];
        }
    }
    g
}

/// Symmetric second derivative of `det(I + DW)` at `W = 0`.
fn det_second(x: &Mat, z: &Mat, d: usize) -> f64 {
    tensor::trace(x, d) * tensor::trace(z, d) - tensor::trace(&tensor::mul(x, z, d), d)
}

/// First derivative of `S = A⁻¹A⁻ᵀ det A` at `W = 0`: `(div Y) I − DY − DYᵀ`.
fn metric_first(x: &Mat, d: usize) -> Mat {
    let mut s = tensor::scale(&tensor::identity(d), tensor::trace(x, d), d);
    for i in 0..d {
        for j in 0..d {
            s[i][j] -= x[i][j] + x[j][i];
        }
    }
    s
}

/// Second derivative of `S = A⁻¹A⁻ᵀ det A` at `W = 0` in directions with
/// Jacobians `x` and `z`.
fn metric_second(x: &Mat, z: &Mat, d: usize) -> Mat {
    let xz = tensor::mul(x, z, d);
    let zx = tensor::mul(z, x, d);
    let xzt = tensor::mul(x, &tensor::transpose(z, d), d);
    let zxt = tensor::mul(z, &tensor::transpose(x, d), d);
    let (tx, tz) = (tensor::trace(x, d), tensor::trace(z, d));
    let dd = det_second(x, z, d);
    let mut s = tensor::ZERO;
    for i in 0..d {
        for j in 0..d {
            s[i][j] = xz[i][j] + zx[i][j] + xz[j][i] + zx[j][i] + xzt[i][j] + zxt[i][j]
                - (x[i][j] + x[j][i]) * tz
                - (z[i][j] + z[j][i]) * tx;
        }
        s[i][i] += dd;
    }
    s
}

impl<'a> LagrangianForms<'a> {
    pub fn new(mesh: &'a SimplicialMesh, data: &'a ProblemData) -> Self {
        LagrangianForms { mesh, data }
    }

    pub fn mesh(&self) -> &SimplicialMesh {
        self.mesh
    }

    fn displaced(&self, w: &NodalField) -> Result<SimplicialMesh, MeshError> {
        self.mesh.apply_deformation(w, 1.0)
    }

    /// `𝓛(W, u, p)`.
    pub fn value(&self, w: &NodalField, u: &NodalField, p: &NodalField) -> Result<f64, MeshError> {
        let m = self.displaced(w)?;
        let load = load_vector(&m, self.data);
        let k = stiffness(&m);
        let fp: f64 = load.iter().zip(p.values()).map(|(a, b)| a * b).sum();
        Ok(objective(&m, u) + k.bilinear(u.values(), p.values()) - fp)
    }

    /// `∂𝓛/∂u` tested with every hat function: `∫ φ_i det A + ⟨K_W p, φ_i⟩`.
    pub fn d_u(&self, w: &NodalField, p: &NodalField) -> Result<Vec<f64>, MeshError> {
        let m = self.displaced(w)?;
        let mut r = stiffness(&m).mul_vec(p.values());
        for (ri, vi) in r.iter_mut().zip(lumped_volumes(&m)) {
            *ri += vi;
        }
        Ok(r)
    }

    /// `∂𝓛/∂p` tested with every hat function: `⟨K_W u, φ_i⟩ − ∫ (f∘T_W) φ_i det A`.
    pub fn d_p(&self, w: &NodalField, u: &NodalField) -> Result<Vec<f64>, MeshError> {
        let m = self.displaced(w)?;
        let mut r = stiffness(&m).mul_vec(u.values());
        for (ri, li) in r.iter_mut().zip(load_vector(&m, self.data)) {
            *ri -= li;
        }
        Ok(r)
    }

    /// `∂𝓛/∂W`, the shape derivative on the displaced mesh.
    pub fn d_w(&self, w: &NodalField, u: &NodalField, p: &NodalField) -> Result<DualVector, MeshError> {
        let m = self.displaced(w)?;
        Ok(shape_derivative(&m, u, p, self.data))
    }

    /// `∂²𝓛/∂W²` at `(0, u, p)`, `n_vertices·d` square.
    pub fn hessian_ww(&self, u: &NodalField, p: &NodalField) -> SparseOperator {
        let mesh = self.mesh;
        let d = mesh.dim();
        let n = mesh.n_vertices() * d;
        let rule = quadrature::degree5(d);
        let k = (d + 1) * d;
        let mut b = TripletBuilder::with_capacity(n, n, mesh.n_cells() * k * k);
        for c in 0..mesh.n_cells() {
            let geo = mesh.cell_geometry(c);
            let cell = mesh.cell(c);
            let vol = geo.volume;
            let gu = cell_gradient(mesh, c, &geo, u);
            let gp = cell_gradient(mesh, c, &geo, p);
            let u_mean = cell.iter().map(|&v| u.values()[v]).sum::<f64>() / (d + 1) as f64;
            // cell integrals of p·f, p·∂f·λ_a and p·∂²f·λ_aλ_b
            let mut pf = 0.0;
            let mut pgf = [[0.0; 3]; 4];
            let mut phf = [[tensor::ZERO; 4]; 4];
            for (lambda, w) in rule.iter() {
                let x = map_point(mesh, c, lambda);
                let px: f64 = cell.iter().enumerate().map(|(a, &v)| lambda[a] * p.values()[v]).sum();
                let wt = w * vol * px;
                pf += wt * self.data.f(&x);
                let gf = self.data.grad_f(&x);
                let hf = self.data.hess_f(&x);
                for a in 0..=d {
                    for i in 0..d {
                        pgf[a][i] += wt * lambda[a] * gf[i];
                    }
                    for bb in 0..=d {
                        let s = wt * lambda[a] * lambda[bb];
                        for i in 0..d {
                            for j in 0..d {
                                phf[a][bb][i][j] += s * hf[i][j];
                            }
                        }
                    }
                }
            }
            for a in 0..=d {
                for i in 0..d {
                    let z = basis_jacobian(&geo.grads[a], i, d);
                    let div_z = geo.grads[a][i];
                    for bb in 0..=d {
                        for j in 0..d {
                            let x = basis_jacobian(&geo.grads[bb], j, d);
                            let div_y = geo.grads[bb][j];
                            let dd = det_second(&x, &z, d);
                            let t1 = vol * u_mean * dd;
                            let t2 = vol * tensor::quad(&gu, &metric_second(&x, &z, d), &gp, d);
                            let t3 = phf[a][bb][i][j] + pgf[bb][j] * div_z + pgf[a][i] * div_y + pf * dd;
                            b.push(cell[a] * d + i, cell[bb] * d + j, t1 + t2 - t3);
                        }
                    }
                }
            }
        }
        b.build()
    }

    /// `∂²𝓛/∂u∂W` at `W = 0`: rows are hat functions `φ_a` (all vertices),
    /// columns deformation basis fields `e_j φ_b`. Depends on `p` only.
    pub fn cross_uw(&self, p: &NodalField) -> SparseOperator {
        let mesh = self.mesh;
        let d = mesh.dim();
        let mut b = TripletBuilder::with_capacity(mesh.n_vertices(), mesh.n_vertices() * d, mesh.n_cells() * (d + 1) * (d + 1) * d);
        for c in 0..mesh.n_cells() {
            let geo = mesh.cell_geometry(c);
            let cell = mesh.cell(c);
            let vol = geo.volume;
            let gp = cell_gradient(mesh, c, &geo, p);
            for a in 0..=d {
                let ga = &geo.grads[a];
                for bb in 0..=d {
                    for j in 0..d {
                        let x = basis_jacobian(&geo.grads[bb], j, d);
                        let v = vol * geo.grads[bb][j] / (d + 1) as f64 + vol * tensor::quad(ga, &metric_first(&x, d), &gp, d);
                        b.push(cell[a], cell[bb] * d + j, v);
                    }
                }
            }
        }
        b.build()
    }

    /// `∂²𝓛/∂p∂W` at `W = 0`, laid out like [`Self::cross_uw`]. Depends on `u` only.
    pub fn cross_pw(&self, u: &NodalField) -> SparseOperator {
        let mesh = self.mesh;
        let d = mesh.dim();
        let rule = quadrature::degree5(d);
        let mut b = TripletBuilder::with_capacity(mesh.n_vertices(), mesh.n_vertices() * d, mesh.n_cells() * (d + 1) * (d + 1) * d);
        for c in 0..mesh.n_cells() {
            let geo = mesh.cell_geometry(c);
            let cell = mesh.cell(c);
            let vol = geo.volume;
            let gu = cell_gradient(mesh, c, &geo, u);
            // ∫ f λ_a and ∫ ∂f λ_a λ_b
            let mut fl = [0.0; 4];
            let mut gfl = [[[0.0; 3]; 4]; 4];
            for (lambda, w) in rule.iter() {
                let x = map_point(mesh, c, lambda);
                let fx = self.data.f(&x);
                let gf = self.data.grad_f(&x);
                for a in 0..=d {
                    fl[a] += w * vol * fx * lambda[a];
                    for bb in 0..=d {
                        for j in 0..d {
                            gfl[a][bb][j] += w * vol * gf[j] * lambda[a] * lambda[bb];
                        }
                    }
                }
            }
            for a in 0..=d {
                let ga = &geo.grads[a];
                for bb in 0..=d {
                    for j in 0..d {
                        let x = basis_jacobian(&geo.grads[bb], j, d);
                        let v = vol * tensor::quad(&gu, &metric_first(&x, d), ga, d) - gfl[a][bb][j] - fl[a] * geo.grads[bb][j];
                        b.push(cell[a], cell[bb] * d + j, v);
                    }
                }
            }
        }
        b.build()
    }
}

/// Derivative at `W = 0` of `Z ↦ ⟨E^W V₁, Z⟩` in direction `Y`: rows `Z`, columns `Y`.
pub fn elasticity_derivative(mesh: &SimplicialMesh, params: &ElasticityParams, v1: &NodalField) -> SparseOperator {
    let d = mesh.dim();
    let n = mesh.n_vertices() * d;
    let (mu, lambda, delta) = (params.lame_mu(), params.lame_lambda(), params.damping_delta());
    let k = (d + 1) * d;
    let mut b = TripletBuilder::with_capacity(n, n, mesh.n_cells() * k * k);
    for c in 0..mesh.n_cells() {
        let geo = mesh.cell_geometry(c);
        let cell = mesh.cell(c);
        let vol = geo.volume;
        let dv = mesh.field_jacobian(c, v1);
        let eps_v = tensor::sym(&dv, d);
        let div_v = tensor::trace(&dv, d);
        for a in 0..=d {
            for i in 0..d {
                let z = basis_jacobian(&geo.grads[a], i, d);
                let eps_z = tensor::sym(&z, d);
                let div_z = geo.grads[a][i];
                // ∫ V₁·Z / |T|
                let vz: f64 = cell
                    .iter()
                    .enumerate()
                    .map(|(cc, &vert)| v1.values()[vert * d + i] * cell_mass_factor(a, cc, d))
                    .sum();
                let base = 2.0 * mu * tensor::ddot(&eps_v, &eps_z, d) + lambda * div_v * div_z + delta * vz;
                for bb in 0..=d {
                    for j in 0..d {
                        let x = basis_jacobian(&geo.grads[bb], j, d);
                        let div_y = geo.grads[bb][j];
                        let dvx = tensor::mul(&dv, &x, d);
                        let dzx = tensor::mul(&z, &x, d);
                        let v = -2.0 * mu * tensor::ddot(&dvx, &eps_z, d) - 2.0 * mu * tensor::ddot(&eps_v, &dzx, d)
                            - lambda * tensor::trace(&dvx, d) * div_z
                            - lambda * div_v * tensor::trace(&dzx, d)
                            + base * div_y;
                        b.push(cell[a] * d + i, cell[bb] * d + j, vol * v);
                    }
                }
            }
        }
    }
    b.build()
}

/// Derivative at `W = 0` of `Z ↦ ⟨N^W F, Z⟩` in direction `Y`: rows `Z`, columns `Y`.
/// `force` is indexed by boundary vertex.
pub fn normal_force_derivative(mesh: &SimplicialMesh, force: &[f64]) -> SparseOperator {
    let d = mesh.dim();
    let n = mesh.n_vertices() * d;
    let mut b = TripletBuilder::with_capacity(n, n, mesh.n_facets() * d * d * d * d);
    for f in 0..mesh.n_facets() {
        let fv = mesh.facet(f);
        for (a, &va) in fv.iter().enumerate() {
            // Σ_c F_c ∫ ψ_c ψ_a / |f|
            let weight: f64 = fv
                .iter()
                .enumerate()
                .map(|(cc, &vc)| force[mesh.boundary_index(vc).expect("facet vertex on boundary")] * facet_mass_factor(cc, a, d))
                .sum();
            for (bb, &vb) in fv.iter().enumerate() {
                for j in 0..d {
                    let dn = area_normal_derivative(mesh, f, bb, j);
                    for i in 0..d {
                        b.push(va * d + i, vb * d + j, weight * dn[i]);
                    }
                }
            }
        }
    }
    b.build()
}

/// Derivative at `W = 0` of `b ↦ ⟨N^W ψ_b, Π⟩` in direction `Y`: rows are
/// boundary vertices, columns `Y`.
pub fn normal_force_adjoint_derivative(mesh: &SimplicialMesh, pi: &NodalField) -> SparseOperator {
    let d = mesh.dim();
    let n = mesh.n_vertices() * d;
    let nb = mesh.boundary_vertex_set().len();
    let mut b = TripletBuilder::with_capacity(nb, n, mesh.n_facets() * d * d * d);
    for f in 0..mesh.n_facets() {
        let fv = mesh.facet(f);
        for (a, &va) in fv.iter().enumerate() {
            let row = mesh.boundary_index(va).expect("facet vertex on boundary");
            // Σ_c Π_c ∫ ψ_a ψ_c / |f|
            let mut weighted = [0.0; 3];
            for (cc, &vc) in fv.iter().enumerate() {
                let m = facet_mass_factor(a, cc, d);
                for i in 0..d {
                    weighted[i] += m * pi.values()[vc * d + i];
                }
            }
            for (bb, &vb) in fv.iter().enumerate() {
                for j in 0..d {
                    let dn = area_normal_derivative(mesh, f, bb, j);
                    b.push(row, vb * d + j, tensor::dot(&weighted, &dn, d));
                }
            }
        }
    }
    b.build()
}
