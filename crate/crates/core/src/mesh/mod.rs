//! Conforming simplicial meshes (triangles in 2D, tetrahedra in 3D).

mod generate;
pub mod io;
mod quality;

use std::collections::HashMap;

use thiserror::Error;

use crate::field::NodalField;
use crate::tensor::{self, Mat};

pub use generate::{generate_cube_mesh, generate_disk_mesh};
pub use quality::{cell_radius_ratio, quality_check, CellQualityReport, QualityThresholds};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("unsupported spatial dimension {0}")]
    UnsupportedDimension(usize),
    #[error("cell list length {len} is not a multiple of {arity}")]
    BadCellArity { len: usize, arity: usize },
    #[error("cell {cell} references vertex {vertex} but the mesh has {n_vertices} vertices")]
    VertexOutOfRange { cell: usize, vertex: usize, n_vertices: usize },
    #[error("cell {cell} is degenerate (signed volume {volume:e})")]
    DegenerateCell { cell: usize, volume: f64 },
    #[error("facet {facet:?} is shared by {count} cells")]
    NonConforming { facet: Vec<usize>, count: usize },
    #[error("vertex {0} belongs to no cell")]
    UnusedVertex(usize),
    #[error("boundary facet {0} has zero measure")]
    DegenerateFacet(usize),
    #[error("field has {actual} values, expected {expected}")]
    FieldMismatch { expected: usize, actual: usize },
    #[error("mesh has no cells")]
    Empty,
}

/// Geometry of one cell: volume and gradients of the barycentric hat
/// functions `∇λ_a` (constant on the cell).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGeometry {
    pub volume: f64,
    pub grads: [[f64; 3]; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplicialMesh {
    dim: usize,
    points: Vec<[f64; 3]>,
    cells: Vec<usize>,
    facets: Vec<usize>,
    /// Cell owning each boundary facet.
    facet_cells: Vec<usize>,
    boundary_vertices: Vec<usize>,
    boundary_index: Vec<usize>,
}

pub const NOT_ON_BOUNDARY: usize = usize::MAX;

impl SimplicialMesh {
    /// Builds a mesh from coordinates (unused trailing components must be 0
    /// in 2D) and a flat list of `dim+1` vertex indices per cell.
    ///
    /// Negatively oriented cells are reoriented. The boundary is the set of
    /// facets owned by exactly one cell, oriented outward.
    pub fn new(dim: usize, points: Vec<[f64; 3]>, mut cells: Vec<usize>) -> Result<Self, MeshError> {
        if !(2..=3).contains(&dim) {
            return Err(MeshError::UnsupportedDimension(dim));
        }
        let arity = dim + 1;
        if cells.len() % arity != 0 {
            return Err(MeshError::BadCellArity { len: cells.len(), arity });
        }
        if cells.is_empty() {
            return Err(MeshError::Empty);
        }
        let n = points.len();
        let mut used = vec![false; n];
        for (c, cell) in cells.chunks_exact_mut(arity).enumerate() {
            for &v in cell.iter() {
                if v >= n {
                    return Err(MeshError::VertexOutOfRange { cell: c, vertex: v, n_vertices: n });
                }
                used[v] = true;
            }
            let vol = signed_volume(dim, &points, cell);
            if vol == 0.0 || !vol.is_finite() {
                return Err(MeshError::DegenerateCell { cell: c, volume: vol });
            }
            if vol < 0.0 {
                cell.swap(0, 1);
            }
        }
        if let Some(v) = used.iter().position(|&u| !u) {
            return Err(MeshError::UnusedVertex(v));
        }

        let mut counts: HashMap<[usize; 3], usize> = HashMap::with_capacity(cells.len() * arity);
        for cell in cells.chunks_exact(arity) {
            for a in 0..arity {
                *counts.entry(facet_key(cell, a)).or_insert(0) += 1;
            }
        }
        let mut facets = Vec::new();
        let mut facet_cells = Vec::new();
        for (c, cell) in cells.chunks_exact(arity).enumerate() {
            for a in 0..arity {
                let key = facet_key(cell, a);
                match counts[&key] {
                    1 => {
                        let mut f: Vec<usize> = (0..arity).filter(|&b| b != a).map(|b| cell[b]).collect();
                        if !is_outward(dim, &points, &f, cell[a]) {
                            f.swap(0, 1);
                        }
                        facets.extend_from_slice(&f);
                        facet_cells.push(c);
                    }
                    2 => {}
                    count => {
                        let facet = key.iter().copied().filter(|&v| v != usize::MAX).collect();
                        return Err(MeshError::NonConforming { facet, count });
                    }
                }
            }
        }

        let mut boundary_index = vec![NOT_ON_BOUNDARY; n];
        for &v in &facets {
            boundary_index[v] = 0;
        }
        let mut boundary_vertices = Vec::new();
        for (v, b) in boundary_index.iter_mut().enumerate() {
            if *b == 0 {
                *b = boundary_vertices.len();
                boundary_vertices.push(v);
            }
        }

        let mesh = SimplicialMesh {
            dim,
            points,
            cells,
            facets,
            facet_cells,
            boundary_vertices,
            boundary_index,
        };
        for f in 0..mesh.n_facets() {
            if mesh.facet_measure(f) <= 0.0 {
                return Err(MeshError::DegenerateFacet(f));
            }
        }
        Ok(mesh)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_vertices(&self) -> usize {
        self.points.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len() / (self.dim + 1)
    }

    pub fn n_facets(&self) -> usize {
        self.facets.len() / self.dim
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64; 3] {
        &self.points[i]
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        let k = self.dim + 1;
        &self.cells[c * k..(c + 1) * k]
    }

    pub fn cells(&self) -> impl ExactSizeIterator<Item = &[usize]> + '_ {
        self.cells.chunks_exact(self.dim + 1)
    }

    /// Outward-oriented boundary facet `f`.
    pub fn facet(&self, f: usize) -> &[usize] {
        &self.facets[f * self.dim..(f + 1) * self.dim]
    }

    pub fn facets(&self) -> impl ExactSizeIterator<Item = &[usize]> + '_ {
        self.facets.chunks_exact(self.dim)
    }

    /// The cell a boundary facet belongs to.
    pub fn facet_cell(&self, f: usize) -> usize {
        self.facet_cells[f]
    }

    /// Sorted boundary vertex indices.
    pub fn boundary_vertex_set(&self) -> &[usize] {
        &self.boundary_vertices
    }

    /// Position of `v` in [`Self::boundary_vertex_set`], or `None` for interior vertices.
    pub fn boundary_index(&self, v: usize) -> Option<usize> {
        match self.boundary_index[v] {
            NOT_ON_BOUNDARY => None,
            b => Some(b),
        }
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_index[v] != NOT_ON_BOUNDARY
    }

    pub fn interior_vertices(&self) -> Vec<usize> {
        (0..self.n_vertices()).filter(|&v| !self.is_boundary_vertex(v)).collect()
    }

    /// Area-weighted (unnormalized) outward normal of facet `f`: its length
    /// is the facet measure.
    pub fn facet_area_normal(&self, f: usize) -> [f64; 3] {
        let fv = self.facet(f);
        let p = |i: usize| &self.points[fv[i]];
        match self.dim {
            2 => {
                let t = tensor::sub(p(1), p(0));
                [t[1], -t[0], 0.0]
            }
            _ => {
                let c = tensor::cross(&tensor::sub(p(1), p(0)), &tensor::sub(p(2), p(0)));
                [0.5 * c[0], 0.5 * c[1], 0.5 * c[2]]
            }
        }
    }

    pub fn facet_measure(&self, f: usize) -> f64 {
        tensor::norm(&self.facet_area_normal(f))
    }

    pub fn facet_normal(&self, f: usize) -> [f64; 3] {
        let n = self.facet_area_normal(f);
        let len = tensor::norm(&n);
        [n[0] / len, n[1] / len, n[2] / len]
    }

    /// Signed volume of cell `c` (positive for a valid mesh).
    pub fn cell_volume(&self, c: usize) -> f64 {
        signed_volume(self.dim, &self.points, self.cell(c))
    }

    pub fn volume(&self) -> f64 {
        (0..self.n_cells()).map(|c| self.cell_volume(c)).sum()
    }

    pub fn boundary_measure(&self) -> f64 {
        (0..self.n_facets()).map(|f| self.facet_measure(f)).sum()
    }

    /// Edge matrix `J` with columns `x_{a} − x_0`, `a = 1..=d`.
    pub fn cell_jacobian(&self, c: usize) -> Mat {
        edge_matrix(self.dim, &self.points, self.cell(c))
    }

    pub fn cell_geometry(&self, c: usize) -> CellGeometry {
        let d = self.dim;
        let j = self.cell_jacobian(c);
        let volume = tensor::det(&j, d) / if d == 2 { 2.0 } else { 6.0 };
        let inv = tensor::inverse(&j, d).unwrap_or(tensor::ZERO);
        let mut grads = [[0.0; 3]; 4];
        for a in 1..=d {
            for k in 0..d {
                grads[a][k] = inv[a - 1][k];
                grads[0][k] -= inv[a - 1][k];
            }
        }
        CellGeometry { volume, grads }
    }

    pub fn cell_centroid(&self, c: usize) -> [f64; 3] {
        let cell = self.cell(c);
        let mut x = [0.0; 3];
        for &v in cell {
            for k in 0..3 {
                x[k] += self.points[v][k];
            }
        }
        let s = 1.0 / cell.len() as f64;
        [x[0] * s, x[1] * s, x[2] * s]
    }

    /// Piecewise-constant Jacobian `DV` of a vector field on cell `c`.
    pub fn field_jacobian(&self, c: usize, v: &NodalField) -> Mat {
        let geo = self.cell_geometry(c);
        self.field_jacobian_with(c, &geo, v)
    }

    pub(crate) fn field_jacobian_with(&self, c: usize, geo: &CellGeometry, v: &NodalField) -> Mat {
        let d = self.dim;
        let mut dv = tensor::ZERO;
        for (a, &vert) in self.cell(c).iter().enumerate() {
            let va = v.at(vert);
            for i in 0..d {
                for k in 0..d {
                    dv[i][k] += va[i] * geo.grads[a][k];
                }
            }
        }
        dv
    }

    /// Moves every vertex by `alpha * V`, keeping connectivity. Fails if any
    /// cell ends up with non-positive signed volume.
    pub fn apply_deformation(&self, v: &NodalField, alpha: f64) -> Result<SimplicialMesh, MeshError> {
        let moved = self.displaced(v, alpha)?;
        for c in 0..moved.n_cells() {
            let vol = moved.cell_volume(c);
            if !(vol > 0.0) {
                return Err(MeshError::DegenerateCell { cell: c, volume: vol });
            }
        }
        Ok(moved)
    }

    /// Like [`Self::apply_deformation`] without the orientation check.
    pub fn displaced(&self, v: &NodalField, alpha: f64) -> Result<SimplicialMesh, MeshError> {
        let d = self.dim;
        if v.components() != d || v.n_vertices() != self.n_vertices() {
            return Err(MeshError::FieldMismatch {
                expected: self.n_vertices() * d,
                actual: v.values().len(),
            });
        }
        let mut moved = self.clone();
        if alpha != 0.0 {
            for (i, p) in moved.points.iter_mut().enumerate() {
                for (k, vk) in v.at(i).iter().enumerate() {
                    p[k] += alpha * vk;
                }
            }
        }
        Ok(moved)
    }

    /// Same connectivity, new coordinates.
    pub fn with_points(&self, points: Vec<[f64; 3]>) -> Result<SimplicialMesh, MeshError> {
        if points.len() != self.n_vertices() {
            return Err(MeshError::FieldMismatch {
                expected: self.n_vertices(),
                actual: points.len(),
            });
        }
        let mut moved = self.clone();
        moved.points = points;
        for c in 0..moved.n_cells() {
            let vol = moved.cell_volume(c);
            if !(vol > 0.0) {
                return Err(MeshError::DegenerateCell { cell: c, volume: vol });
            }
        }
        Ok(moved)
    }

    /// Minimum over cells of `d · inradius / circumradius`.
    pub fn min_radius_ratio(&self) -> f64 {
        (0..self.n_cells())
            .map(|c| cell_radius_ratio(self, c))
            .fold(1.0, f64::min)
    }

    /// Uniform red refinement of a triangle mesh (each triangle split in four
    /// through edge midpoints). Midpoints of boundary edges are passed
    /// through `project`.
    pub fn refine_uniform(&self, project: impl Fn([f64; 3]) -> [f64; 3]) -> Result<SimplicialMesh, MeshError> {
        if self.dim != 2 {
            return Err(MeshError::UnsupportedDimension(self.dim));
        }
        let mut points = self.points.clone();
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edge_uses: HashMap<(usize, usize), usize> = HashMap::new();
        for cell in self.cells() {
            for a in 0..3 {
                let (i, j) = (cell[a], cell[(a + 1) % 3]);
                *edge_uses.entry((i.min(j), i.max(j))).or_insert(0) += 1;
            }
        }
        let mut mid = |i: usize, j: usize, points: &mut Vec<[f64; 3]>| -> usize {
            let key = (i.min(j), i.max(j));
            *midpoint.entry(key).or_insert_with(|| {
                let (p, q) = (points[i], points[j]);
                let mut m = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1]), 0.0];
                if edge_uses[&key] == 1 {
                    m = project(m);
                }
                points.push(m);
                points.len() - 1
            })
        };
        let mut cells = Vec::with_capacity(self.cells.len() * 4);
        for cell in self.cells() {
            let (a, b, c) = (cell[0], cell[1], cell[2]);
            let ab = mid(a, b, &mut points);
            let bc = mid(b, c, &mut points);
            let ca = mid(c, a, &mut points);
            cells.extend_from_slice(&[a, ab, ca, ab, b, bc, ca, bc, c, ab, bc, ca]);
        }
        SimplicialMesh::new(2, points, cells)
    }
}

fn facet_key(cell: &[usize], skip: usize) -> [usize; 3] {
    let mut key = [usize::MAX; 3];
    let mut k = 0;
    for (b, &v) in cell.iter().enumerate() {
        if b != skip {
            key[k] = v;
            k += 1;
        }
    }
    key[..k].sort_unstable();
    key
}

fn edge_matrix(dim: usize, points: &[[f64; 3]], cell: &[usize]) -> Mat {
    let mut j = tensor::ZERO;
    let x0 = &points[cell[0]];
    for a in 1..=dim {
        let xa = &points[cell[a]];
        for k in 0..dim {
            j[k][a - 1] = xa[k] - x0[k];
        }
    }
    j
}

fn signed_volume(dim: usize, points: &[[f64; 3]], cell: &[usize]) -> f64 {
    let j = edge_matrix(dim, points, cell);
    tensor::det(&j, dim) / if dim == 2 { 2.0 } else { 6.0 }
}

fn is_outward(dim: usize, points: &[[f64; 3]], facet: &[usize], opposite: usize) -> bool {
    let p = |i: usize| &points[facet[i]];
    let n = match dim {
        2 => {
            let t = tensor::sub(p(1), p(0));
            [t[1], -t[0], 0.0]
        }
        _ => tensor::cross(&tensor::sub(p(1), p(0)), &tensor::sub(p(2), p(0))),
    };
    let out = tensor::sub(p(0), &points[opposite]);
    tensor::dot(&n, &out, 3) > 0.0
}
