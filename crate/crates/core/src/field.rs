//! Piecewise-linear nodal fields and linear functionals on them.

use crate::mesh::SimplicialMesh;

/// Coefficients of a continuous piecewise-linear function, one scalar or one
/// `components`-vector per mesh vertex (vertex-major layout).
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    components: usize,
    values: Vec<f64>,
}

impl NodalField {
    pub fn scalar(values: Vec<f64>) -> Self {
        NodalField { components: 1, values }
    }

    /// # Panics
    ///
    /// Panics if `values.len()` is not a multiple of `dim`.
    pub fn vector(dim: usize, values: Vec<f64>) -> Self {
        assert!(dim > 0 && values.len() % dim == 0, "vector field length");
        NodalField {
            components: dim,
            values,
        }
    }

    pub fn zeros_scalar(n_vertices: usize) -> Self {
        Self::scalar(vec![0.0; n_vertices])
    }

    pub fn zeros_vector(n_vertices: usize, dim: usize) -> Self {
        Self::vector(dim, vec![0.0; n_vertices * dim])
    }

    /// Interpolates `g` at the vertices of `mesh`.
    pub fn interpolate_vector(mesh: &SimplicialMesh, g: impl Fn(&[f64; 3]) -> [f64; 3]) -> Self {
        let d = mesh.dim();
        let mut values = Vec::with_capacity(mesh.n_vertices() * d);
        for x in mesh.points() {
            let v = g(x);
            values.extend_from_slice(&v[..d]);
        }
        Self::vector(d, values)
    }

    pub fn interpolate_scalar(mesh: &SimplicialMesh, g: impl Fn(&[f64; 3]) -> f64) -> Self {
        Self::scalar(mesh.points().iter().map(g).collect())
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn is_scalar(&self) -> bool {
        self.components == 1
    }

    pub fn n_vertices(&self) -> usize {
        self.values.len() / self.components
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at vertex `i` (a slice of length `components`).
    pub fn at(&self, i: usize) -> &[f64] {
        &self.values[i * self.components..(i + 1) * self.components]
    }

    /// `self + scale * other`.
    pub fn add_scaled(&self, scale: f64, other: &NodalField) -> NodalField {
        assert_eq!(self.components, other.components);
        assert_eq!(self.values.len(), other.values.len());
        NodalField {
            components: self.components,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + scale * b)
                .collect(),
        }
    }

    pub fn scaled(&self, scale: f64) -> NodalField {
        NodalField {
            components: self.components,
            values: self.values.iter().map(|v| scale * v).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn matches(&self, mesh: &SimplicialMesh) -> bool {
        self.n_vertices() == mesh.n_vertices() && (self.components == 1 || self.components == mesh.dim())
    }
}

/// A linear functional on vector-valued nodal fields, stored through its
/// values on the nodal basis: `⟨ℓ, V⟩ = Σ coeffs[k] · V.values[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualVector {
    components: usize,
    coeffs: Vec<f64>,
}

impl DualVector {
    pub fn new(components: usize, coeffs: Vec<f64>) -> Self {
        assert!(components > 0 && coeffs.len() % components == 0, "dual vector length");
        DualVector { components, coeffs }
    }

    pub fn zeros(n_vertices: usize, components: usize) -> Self {
        Self::new(components, vec![0.0; n_vertices * components])
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn at(&self, i: usize) -> &[f64] {
        &self.coeffs[i * self.components..(i + 1) * self.components]
    }

    pub fn pair(&self, field: &NodalField) -> f64 {
        assert_eq!(self.components, field.components(), "pairing component count");
        assert_eq!(self.coeffs.len(), field.values().len(), "pairing length");
        self.coeffs.iter().zip(field.values()).map(|(a, b)| a * b).sum()
    }

    pub fn scaled(&self, scale: f64) -> DualVector {
        DualVector::new(self.components, self.coeffs.iter().map(|c| scale * c).collect())
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}
