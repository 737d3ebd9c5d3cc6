mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shapeopt::fem::{solve_state_adjoint, stiffness, DofMap, NodalField};
use shapeopt::linalg::SparseOperator;
use shapeopt::mesh::{generate_cube_mesh, generate_disk_mesh, SimplicialMesh};
use shapeopt::newton::{
    elasticity_derivative, newton_step, normal_force_adjoint_derivative, normal_force_derivative, LagrangianForms,
    NewtonIterate, NewtonSystem,
};
use shapeopt::problems::{paper_2d_data, paper_3d_data, ProblemData};
use shapeopt::shape::{assemble_elasticity, assemble_normal_force, shape_derivative, ElasticityParams, ShapeOperators};

use common::{max_abs, norm, op_max_diff};

fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Smallest relative error of the central difference of `first` against `exact` over the steps.
fn fd_error(exact: &[f64], first: impl Fn(f64) -> Vec<f64>) -> f64 {
    [1e-3, 1e-4, 1e-5]
        .iter()
        .map(|&t| {
            let (fp, fm) = (first(t), first(-t));
            let diff: Vec<f64> = fp.iter().zip(&fm).zip(exact).map(|((a, b), e)| (a - b) / (2.0 * t) - e).collect();
            norm(&diff) / norm(exact)
        })
        .fold(f64::INFINITY, f64::min)
}

fn check_blocks(mesh: &SimplicialMesh, data: &ProblemData, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = mesh.dim();
    let nv = mesh.n_vertices();
    let nb = mesh.boundary_vertex_set().len();
    let params = ElasticityParams::paper_defaults();
    let forms = LagrangianForms::new(mesh, data);
    let u = NodalField::scalar(random_vec(nv, &mut rng));
    let p = NodalField::scalar(random_vec(nv, &mut rng));
    let y = NodalField::vector(d, random_vec(nv * d, &mut rng)).scaled(0.1);
    let v1 = NodalField::vector(d, random_vec(nv * d, &mut rng));
    let force = random_vec(nb, &mut rng);
    let pi = NodalField::vector(d, random_vec(nv * d, &mut rng));
    let ty = |t: f64| y.scaled(t);
    let moved = |t: f64| mesh.apply_deformation(&y, t).unwrap();
    let tol = 1e-6;

    let e = fd_error(&forms.hessian_ww(&u, &p).mul_vec(y.values()), |t| {
        forms.d_w(&ty(t), &u, &p).unwrap().into_coeffs()
    });
    assert!(e <= tol, "L_WW: {e}");
    let e = fd_error(&forms.cross_uw(&p).mul_vec(y.values()), |t| forms.d_u(&ty(t), &p).unwrap());
    assert!(e <= tol, "L_uW: {e}");
    let e = fd_error(&forms.cross_pw(&u).mul_vec(y.values()), |t| forms.d_p(&ty(t), &u).unwrap());
    assert!(e <= tol, "L_pW: {e}");
    // the transposed blocks are derivatives of ∂𝓛/∂W in u and p
    let q = NodalField::scalar(random_vec(nv, &mut rng));
    let zero = NodalField::zeros_vector(nv, d);
    let e = fd_error(&forms.cross_uw(&p).mul_vec_transposed(q.values()), |t| {
        forms.d_w(&zero, &u.add_scaled(t, &q), &p).unwrap().into_coeffs()
    });
    assert!(e <= tol, "L_Wu: {e}");
    let e = fd_error(&forms.cross_pw(&u).mul_vec_transposed(q.values()), |t| {
        forms.d_w(&zero, &u, &p.add_scaled(t, &q)).unwrap().into_coeffs()
    });
    assert!(e <= tol, "L_Wp: {e}");
    let e = fd_error(&elasticity_derivative(mesh, &params, &v1).mul_vec(y.values()), |t| {
        assemble_elasticity(&moved(t), &params).mul_vec(v1.values())
    });
    assert!(e <= tol, "C_E: {e}");
    let e = fd_error(&normal_force_derivative(mesh, &force).mul_vec(y.values()), |t| {
        assemble_normal_force(&moved(t)).mul_vec(&force)
    });
    assert!(e <= tol, "D_N: {e}");
    let e = fd_error(&normal_force_adjoint_derivative(mesh, &pi).mul_vec(y.values()), |t| {
        assemble_normal_force(&moved(t)).mul_vec_transposed(pi.values())
    });
    assert!(e <= tol, "R_N: {e}");
}

#[test]
fn second_derivative_blocks_match_finite_differences_2d() {
    check_blocks(&generate_disk_mesh(1.0, 0), &paper_2d_data(), 1);
}

#[test]
fn second_derivative_blocks_match_finite_differences_3d() {
    check_blocks(&generate_cube_mesh(2.0, 2), &paper_3d_data(), 2);
}

#[test]
fn first_partials_at_identity() {
    let mesh = generate_disk_mesh(1.0, 1);
    let data = paper_2d_data();
    let (u, p) = solve_state_adjoint(&mesh, &data).unwrap();
    let forms = LagrangianForms::new(&mesh, &data);
    let zero = NodalField::zeros_vector(mesh.n_vertices(), 2);
    let dw = forms.d_w(&zero, &u, &p).unwrap();
    assert!(common::max_diff(dw.coeffs(), shape_derivative(&mesh, &u, &p, &data).coeffs()) <= 1e-12);
    let dofs = DofMap::new(&mesh);
    let dp = dofs.restrict(&forms.d_p(&zero, &u).unwrap());
    let du = dofs.restrict(&forms.d_u(&zero, &p).unwrap());
    assert!(max_abs(&dp) <= 1e-10 && max_abs(&du) <= 1e-10);
    let value = forms.value(&zero, &u, &p).unwrap();
    assert!((value - shapeopt::fem::objective(&mesh, &u)).abs() <= 1e-12);
}

#[test]
fn hessian_is_symmetric() {
    let mesh = generate_disk_mesh(1.0, 0);
    let data = paper_2d_data();
    let (u, p) = solve_state_adjoint(&mesh, &data).unwrap();
    let h = LagrangianForms::new(&mesh, &data).hessian_ww(&u, &p);
    assert!(h.max_asymmetry() <= 1e-12 * h.max_abs());
}

fn block(a: &SparseOperator, sys: &NewtonSystem, row: &str, col: &str) -> SparseOperator {
    let l = sys.layout();
    let range = |name: &str| {
        let b = l.index(name);
        (l.offset(b)..l.offset(b) + l.size(b)).collect::<Vec<_>>()
    };
    a.submatrix(&range(row), &range(col))
}

#[test]
fn newton_rows_reduce_to_state_and_projection_operators() {
    let mesh = generate_disk_mesh(1.0, 0);
    let data = paper_2d_data();
    let params = ElasticityParams::paper_defaults();
    let it = NewtonIterate::on_mesh(&mesh, &data, &params).unwrap();
    let sys = NewtonSystem::assemble(&mesh, &data, &params, &it).unwrap();
    let a = sys.matrix(1.0);
    let dofs = DofMap::new(&mesh);
    let k = stiffness(&mesh).submatrix(dofs.interior(), dofs.interior());
    let e = assemble_elasticity(&mesh, &params);
    let n = assemble_normal_force(&mesh);
    let nt = n.transpose();
    let checks: [(&str, &str, SparseOperator); 9] = [
        ("u", "u", k.clone()),
        ("p", "p", k.clone()),
        ("Pi", "Pi", e.clone()),
        ("Pi", "V", e.clone()),
        ("F", "Pi", nt.scaled(-1.0)),
        ("V", "V", e.clone()),
        ("V", "F", n.scaled(-1.0)),
        ("W", "W", e.clone()),
        ("W", "G", n.scaled(-1.0)),
    ];
    for (row, col, op) in checks {
        let got = block(&a, &sys, row, col);
        assert!(op_max_diff(&got, &op) <= 1e-12, "block ({row}, {col})");
    }
    assert!(block(&a, &sys, "u", "p").nnz() == 0 && block(&a, &sys, "p", "u").nnz() == 0);
}

#[test]
fn small_damping_gives_scaled_restricted_gradient() {
    let mesh = generate_disk_mesh(1.0, 0);
    let data = paper_2d_data();
    let params = ElasticityParams::paper_defaults();
    let it = NewtonIterate::on_mesh(&mesh, &data, &params).unwrap();
    let ops = ShapeOperators::new(&mesh, &params).unwrap();
    let vnorm = ops.energy(&it.v_tilde).sqrt();
    let mut ratios = Vec::new();
    for alpha in [1e-3, 1e-4, 1e-5] {
        let w = newton_step(&it, &mesh, &data, &params, alpha).unwrap();
        let diff = w.add_scaled(-alpha, &it.v_tilde);
        ratios.push(ops.energy(&diff).sqrt() / (alpha * vnorm));
    }
    assert!(ratios[1] <= 0.1 && ratios[2] <= 0.1, "{ratios:?}");
    assert!(ratios[2] < ratios[0]);
}
