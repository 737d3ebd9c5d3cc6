use super::ElasticityParams;
use crate::linalg::{SparseOperator, TripletBuilder};
use crate::mesh::SimplicialMesh;
use crate::tensor;

/// Elasticity bilinear form on one cell between the basis fields `e_i φ_a`
/// and `e_j φ_b`, without the damping term.
pub(crate) fn strain_entry(params: &ElasticityParams, ga: &[f64; 3], gb: &[f64; 3], i: usize, j: usize, d: usize) -> f64 {
    let mu = params.lame_mu();
    let lambda = params.lame_lambda();
    let gg = tensor::dot(ga, gb, d);
    let diag = if i == j { gg } else { 0.0 };
    mu * (diag + ga[j] * gb[i]) + lambda * ga[i] * gb[j]
}

/// `∫_T φ_a φ_b / |T|` for P1 on a `d`-simplex.
pub(crate) fn cell_mass_factor(a: usize, b: usize, d: usize) -> f64 {
    let m = if a == b { 2.0 } else { 1.0 };
    m / ((d + 1) * (d + 2)) as f64
}

/// `∫_f ψ_a ψ_b / |f|` for P1 on a boundary facet of a `d`-dimensional mesh.
pub(crate) fn facet_mass_factor(a: usize, b: usize, d: usize) -> f64 {
    let m = if a == b { 2.0 } else { 1.0 };
    m / (d * (d + 1)) as f64
}

/// Matrix of `⟨E_h V, W⟩ = ∫ 2μ ε(V):ε(W) + λ div V div W + δ V·W` on
/// vertex-major vector coefficients (`index = vertex·d + component`).
pub fn assemble_elasticity(mesh: &SimplicialMesh, params: &ElasticityParams) -> SparseOperator {
    let d = mesh.dim();
    let n = mesh.n_vertices() * d;
    let k = (d + 1) * d;
    let mut b = TripletBuilder::with_capacity(n, n, mesh.n_cells() * k * k);
    let delta = params.damping_delta();
    for c in 0..mesh.n_cells() {
        let geo = mesh.cell_geometry(c);
        let cell = mesh.cell(c);
        for a in 0..=d {
            for bb in 0..=d {
                let mass = delta * geo.volume * cell_mass_factor(a, bb, d);
                for i in 0..d {
                    for j in 0..d {
                        let mut v = geo.volume * strain_entry(params, &geo.grads[a], &geo.grads[bb], i, j, d);
                        if i == j {
                            v += mass;
                        }
                        b.push(cell[a] * d + i, cell[bb] * d + j, v);
                    }
                }
            }
        }
    }
    b.build()
}

/// Matrix of `⟨N_h F, V⟩ = ∫_{∂Ω_h} F (V·ν) ds`: rows are vertex-major vector
/// coefficients, columns are boundary vertices in the order of
/// [`SimplicialMesh::boundary_vertex_set`].
pub fn assemble_normal_force(mesh: &SimplicialMesh) -> SparseOperator {
    let d = mesh.dim();
    let n = mesh.n_vertices() * d;
    let nb = mesh.boundary_vertex_set().len();
    let mut b = TripletBuilder::with_capacity(n, nb, mesh.n_facets() * d * d * d);
    for f in 0..mesh.n_facets() {
        let area_normal = mesh.facet_area_normal(f);
        let fv = mesh.facet(f);
        for (a, &va) in fv.iter().enumerate() {
            for (bb, &vb) in fv.iter().enumerate() {
                let m = facet_mass_factor(a, bb, d);
                let col = mesh.boundary_index(vb).expect("facet vertex on boundary");
                for i in 0..d {
                    b.push(va * d + i, col, m * area_normal[i]);
                }
            }
        }
    }
    b.build()
}

/// Derivative of the facet's area-weighted normal with respect to moving
/// its local vertex `a` in direction `e_j`.
pub(crate) fn area_normal_derivative(mesh: &SimplicialMesh, f: usize, a: usize, j: usize) -> [f64; 3] {
    let fv = mesh.facet(f);
    let mut e = [0.0; 3];
    e[j] = 1.0;
    match mesh.dim() {
        2 => {
            // n = (t_y, −t_x), t = x_1 − x_0
            let s = if a == 1 { 1.0 } else { -1.0 };
            [s * e[1], -s * e[0], 0.0]
        }
        _ => {
            let x = |k: usize| mesh.point(fv[k]);
            let e1 = tensor::sub(x(1), x(0));
            let e2 = tensor::sub(x(2), x(0));
            let d1 = tensor::cross(&e, &e2);
            let d2 = tensor::cross(&e1, &e);
            let r = match a {
                1 => d1,
                2 => d2,
                _ => [-(d1[0] + d2[0]), -(d1[1] + d2[1]), -(d1[2] + d2[2])],
            };
            [0.5 * r[0], 0.5 * r[1], 0.5 * r[2]]
        }
    }
}
