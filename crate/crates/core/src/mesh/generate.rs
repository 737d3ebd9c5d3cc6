use std::f64::consts::PI;

use super::SimplicialMesh;

/// Triangulation of the disk of the given radius centred at the origin.
///
/// Level 0 is a fan of six rings: ring `k` carries `6k` equally spaced
/// vertices and is joined to ring `k−1` by `6(2k−1)` triangles, giving
/// 127 vertices and 216 cells. Each further level is a uniform red refinement
/// with new boundary vertices projected onto the circle.
pub fn generate_disk_mesh(radius: f64, refinement_level: u32) -> SimplicialMesh {
    assert!(radius > 0.0, "radius must be positive");
    let mut mesh = ring_fan(radius, 6);
    for _ in 0..refinement_level {
        mesh = mesh
            .refine_uniform(|x| {
                let r = x[0].hypot(x[1]);
                [radius * x[0] / r, radius * x[1] / r, 0.0]
            })
            .expect("refined disk mesh is valid");
    }
    mesh
}

fn ring_fan(radius: f64, m: usize) -> SimplicialMesh {
    let ring_start = |k: usize| if k == 0 { 0 } else { 1 + 3 * k * (k - 1) };
    let ring_len = |k: usize| if k == 0 { 1 } else { 6 * k };
    let mut points = Vec::with_capacity(1 + 3 * m * (m + 1));
    points.push([0.0, 0.0, 0.0]);
    for k in 1..=m {
        let r = radius * k as f64 / m as f64;
        let n = 6 * k;
        for j in 0..n {
            let theta = 2.0 * PI * j as f64 / n as f64;
            let (s, c) = theta.sin_cos();
            points.push([r * c, r * s, 0.0]);
        }
    }
    // vertex `t` (0..=k) of sector `s` on ring `k`, wrapping into the next sector
    let vertex = |k: usize, s: usize, t: usize| ring_start(k) + (s * k + t) % ring_len(k);
    let mut cells = Vec::with_capacity(3 * 6 * m * m);
    for k in 1..=m {
        for s in 0..6 {
            for t in 0..k {
                let inner = vertex(k - 1, s, t);
                cells.extend_from_slice(&[inner, vertex(k, s, t), vertex(k, s, t + 1)]);
                if t + 1 < k {
                    cells.extend_from_slice(&[inner, vertex(k, s, t + 1), vertex(k - 1, s, t + 1)]);
                }
            }
        }
    }
    SimplicialMesh::new(2, points, cells).expect("disk mesh is valid by construction")
}

/// Tetrahedral mesh of the cube `[−side/2, side/2]³`: an `(n+1)³` vertex grid
/// with each hexahedron split into the six tetrahedra sharing its main diagonal.
pub fn generate_cube_mesh(side: f64, n_per_edge: usize) -> SimplicialMesh {
    assert!(side > 0.0 && n_per_edge >= 1, "invalid cube parameters");
    let n = n_per_edge;
    let h = side / n as f64;
    let idx = |i: usize, j: usize, k: usize| i + (n + 1) * (j + (n + 1) * k);
    let mut points = Vec::with_capacity((n + 1).pow(3));
    for k in 0..=n {
        for j in 0..=n {
            for i in 0..=n {
                let c = |t: usize| if t == n { side / 2.0 } else { -side / 2.0 + h * t as f64 };
                points.push([c(i), c(j), c(k)]);
            }
        }
    }
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut cells = Vec::with_capacity(24 * n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                for perm in PERMS {
                    let mut pos = [i, j, k];
                    cells.push(idx(pos[0], pos[1], pos[2]));
                    for axis in perm {
                        pos[axis] += 1;
                        cells.push(idx(pos[0], pos[1], pos[2]));
                    }
                }
            }
        }
    }
    SimplicialMesh::new(3, points, cells).expect("cube mesh is valid by construction")
}
