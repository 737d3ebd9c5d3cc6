mod common;

use std::sync::Arc;

use shapeopt::fem::{
    l2_representer, load_vector, objective, solve_adjoint, solve_state, solve_state_adjoint, stiffness, DofMap,
    DualVector, NodalField,
};
use shapeopt::mesh::{generate_disk_mesh, SimplicialMesh};
use shapeopt::problems::{constant_data, paper_2d_data, ProblemData};
use shapeopt::quadrature::collapsed;

use common::{loglog_slope, max_abs, max_diff, norm};

fn radial_error(mesh: &SimplicialMesh, u: &NodalField, sign: f64) -> f64 {
    mesh.points()
        .iter()
        .zip(u.values())
        .map(|(x, ui)| (ui - sign * (1.0 - x[0] * x[0] - x[1] * x[1]) / 4.0).abs())
        .fold(0.0, f64::max)
}

#[test]
fn disk_poisson_converges_at_second_order() {
    let mut hs = Vec::new();
    let mut eu = Vec::new();
    let mut ep = Vec::new();
    for level in 0..3 {
        let m = generate_disk_mesh(1.0, level);
        let (u, p) = solve_state_adjoint(&m, &constant_data(1.0)).unwrap();
        hs.push(1.0 / (6 << level) as f64);
        eu.push(radial_error(&m, &u, 1.0));
        ep.push(radial_error(&m, &p, -1.0));
        assert!(p.values().iter().all(|&v| v <= 0.0), "maximum principle");
    }
    assert!(loglog_slope(&hs, &eu) >= 1.8, "state order {}", loglog_slope(&hs, &eu));
    assert!(loglog_slope(&hs, &ep) >= 1.8, "adjoint order {}", loglog_slope(&hs, &ep));
}

#[test]
fn zero_data_gives_zero_state() {
    let m = generate_disk_mesh(1.0, 0);
    let u = solve_state(&m, &constant_data(0.0)).unwrap();
    assert_eq!(max_abs(u.values()), 0.0);
}

#[test]
fn even_data_gives_even_state() {
    let m = generate_disk_mesh(1.0, 1);
    let data = ProblemData::new(
        "1 + x^2",
        Arc::new(|x| 1.0 + x[0] * x[0]),
        Arc::new(|x| [2.0 * x[0], 0.0, 0.0]),
        Arc::new(|_| [[2.0, 0.0, 0.0], [0.0; 3], [0.0; 3]]),
    );
    let u = solve_state(&m, &data).unwrap();
    for (i, x) in m.points().iter().enumerate() {
        let j = m
            .points()
            .iter()
            .position(|y| (y[0] + x[0]).abs() < 1e-12 && (y[1] - x[1]).abs() < 1e-12)
            .expect("mirror vertex");
        assert!((u.values()[i] - u.values()[j]).abs() < 1e-12);
    }
}

#[test]
fn galerkin_residual_and_adjoint_energy() {
    let m = generate_disk_mesh(1.0, 1);
    let data = paper_2d_data();
    let (u, p) = solve_state_adjoint(&m, &data).unwrap();
    let k = stiffness(&m);
    let dofs = DofMap::new(&m);
    let load = load_vector(&m, &data);
    let r: Vec<f64> = k.mul_vec(u.values()).iter().zip(&load).map(|(a, b)| a - b).collect();
    assert!(norm(&dofs.restrict(&r)) <= 1e-10 * norm(&dofs.restrict(&load)));
    let j = objective(&m, &u);
    let energy = -k.bilinear(p.values(), u.values());
    assert!((j - energy).abs() <= 1e-10 * j.abs());
    assert!((solve_adjoint(&m).unwrap().values()[0] - p.values()[0]).abs() < 1e-15);
}

#[test]
fn translation_invariance() {
    let m = generate_disk_mesh(1.0, 0);
    let data = paper_2d_data();
    let c = [0.3, -1.2];
    let moved = m.with_points(m.points().iter().map(|p| [p[0] + c[0], p[1] + c[1], 0.0]).collect()).unwrap();
    let base = paper_2d_data();
    let shifted = ProblemData::new(
        "shifted",
        Arc::new(move |x| base.f(&[x[0] - c[0], x[1] - c[1], 0.0])),
        Arc::new(|_| [0.0; 3]),
        Arc::new(|_| [[0.0; 3]; 3]),
    );
    let j0 = objective(&m, &solve_state(&m, &data).unwrap());
    let j1 = objective(&moved, &solve_state(&moved, &shifted).unwrap());
    assert!((j0 - j1).abs() < 1e-12);
}

fn reference_triangle() -> SimplicialMesh {
    let pts = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
    SimplicialMesh::new(2, pts, vec![0, 1, 2]).unwrap()
}

#[test]
fn load_vector_of_linear_data() {
    let m = reference_triangle();
    let data = ProblemData::new(
        "1 + 2x + 3y",
        Arc::new(|x| 1.0 + 2.0 * x[0] + 3.0 * x[1]),
        Arc::new(|_| [2.0, 3.0, 0.0]),
        Arc::new(|_| [[0.0; 3]; 3]),
    );
    let nodal = [1.0, 3.0, 4.0];
    let total: f64 = nodal.iter().sum();
    // ∫ f φ_i = |T|/12 (f_i + Σ_j f_j)
    let expected: Vec<f64> = nodal.iter().map(|fi| 0.5 / 12.0 * (fi + total)).collect();
    assert!(max_diff(&load_vector(&m, &data), &expected) < 1e-15);
}

#[test]
fn load_vector_of_paper_data_matches_overintegration() {
    let pts = vec![[-0.3, 0.1, 0.0], [0.8, -0.4, 0.0], [0.2, 0.9, 0.0]];
    let m = SimplicialMesh::new(2, pts, vec![0, 1, 2]).unwrap();
    let data = paper_2d_data();
    let rule = collapsed(2, 6);
    let vol = m.cell_volume(0);
    let mut oracle = [0.0; 3];
    for (lambda, w) in rule.iter() {
        let mut x = [0.0; 3];
        for a in 0..3 {
            for k in 0..2 {
                x[k] += lambda[a] * m.point(m.cell(0)[a])[k];
            }
        }
        for a in 0..3 {
            oracle[m.cell(0)[a]] += vol * w * data.f(&x) * lambda[a];
        }
    }
    assert!(max_diff(&load_vector(&m, &data), &oracle) < 1e-13);
}

#[test]
fn objective_of_constant_field_is_area() {
    let m = common::unit_square_mesh(3);
    assert!((objective(&m, &NodalField::scalar(vec![1.0; m.n_vertices()])) - 1.0).abs() < 1e-14);
    assert_eq!(objective(&m, &NodalField::zeros_scalar(m.n_vertices())), 0.0);
}

#[test]
fn l2_representer_reproduces_functional() {
    let m = generate_disk_mesh(1.0, 0);
    let w = NodalField::interpolate_vector(&m, |x| [x[1] * x[0], 1.0 - x[0], 0.0]);
    let mass = shapeopt::fem::mass(&m);
    let mut coeffs = vec![0.0; m.n_vertices() * 2];
    for k in 0..2 {
        let comp: Vec<f64> = (0..m.n_vertices()).map(|i| w.at(i)[k]).collect();
        for (i, v) in mass.mul_vec(&comp).into_iter().enumerate() {
            coeffs[i * 2 + k] = v;
        }
    }
    let r = l2_representer(&m, &DualVector::new(2, coeffs)).unwrap();
    assert!(max_diff(r.values(), w.values()) < 1e-12);
}
