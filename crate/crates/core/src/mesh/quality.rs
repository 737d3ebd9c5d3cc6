use super::SimplicialMesh;
use crate::field::NodalField;
use crate::tensor;

/// Per-cell acceptance bounds for a deformation step `id + αV`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityThresholds {
    pub det_lo: f64,
    pub det_hi: f64,
    pub frob_max: f64,
}

impl Default for QualityThresholds {
    fn default() -> Self {
        QualityThresholds {
            det_lo: 0.5,
            det_hi: 2.0,
            frob_max: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellQualityReport {
    /// `det(I + α DV)` per cell.
    pub determinants: Vec<f64>,
    /// `‖α DV‖_F` per cell.
    pub frobenius: Vec<f64>,
    /// Minimum radius ratio of the deformed mesh.
    pub min_radius_ratio: f64,
}

impl CellQualityReport {
    pub fn min_determinant(&self) -> f64 {
        self.determinants.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_determinant(&self) -> f64 {
        self.determinants.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_frobenius(&self) -> f64 {
        self.frobenius.iter().copied().fold(0.0, f64::max)
    }

    /// Cells violating `t`.
    pub fn violations(&self, t: &QualityThresholds) -> Vec<usize> {
        (0..self.determinants.len())
            .filter(|&c| {
                let det = self.determinants[c];
                !(det >= t.det_lo && det <= t.det_hi && self.frobenius[c] <= t.frob_max)
            })
            .collect()
    }
}

/// Checks `det_lo ≤ det(I + αDV) ≤ det_hi` and `‖αDV‖_F ≤ frob_max` on every cell.
pub fn quality_check(
    mesh: &SimplicialMesh,
    v: &NodalField,
    alpha: f64,
    thresholds: &QualityThresholds,
) -> (bool, CellQualityReport) {
    let d = mesh.dim();
    let n = mesh.n_cells();
    let mut determinants = Vec::with_capacity(n);
    let mut frobenius = Vec::with_capacity(n);
    for c in 0..n {
        let dv = tensor::scale(&mesh.field_jacobian(c, v), alpha, d);
        determinants.push(tensor::det(&tensor::add(&tensor::identity(d), &dv, d), d));
        frobenius.push(tensor::frobenius(&dv, d));
    }
    let min_radius_ratio = match mesh.displaced(v, alpha) {
        Ok(moved) => moved.min_radius_ratio(),
        Err(_) => 0.0,
    };
    let report = CellQualityReport {
        determinants,
        frobenius,
        min_radius_ratio,
    };
    let ok = report.violations(thresholds).is_empty();
    (ok, report)
}

/// `d · inradius / circumradius` of cell `c`, in `[0, 1]`; 0 for degenerate cells.
pub fn cell_radius_ratio(mesh: &SimplicialMesh, c: usize) -> f64 {
    let cell = mesh.cell(c);
    let p = |a: usize| mesh.point(cell[a]);
    let vol = mesh.cell_volume(c);
    if !(vol > 0.0) {
        return 0.0;
    }
    let ratio = match mesh.dim() {
        2 => {
            let a = tensor::norm(&tensor::sub(p(1), p(2)));
            let b = tensor::norm(&tensor::sub(p(0), p(2)));
            let cc = tensor::norm(&tensor::sub(p(0), p(1)));
            // r = 2A/(a+b+c), R = abc/(4A)
            16.0 * vol * vol / ((a + b + cc) * a * b * cc)
        }
        _ => {
            let mut surface = 0.0;
            for skip in 0..4 {
                let f: Vec<usize> = (0..4).filter(|&i| i != skip).collect();
                let cr = tensor::cross(&tensor::sub(p(f[1]), p(f[0])), &tensor::sub(p(f[2]), p(f[0])));
                surface += 0.5 * tensor::norm(&cr);
            }
            let inradius = 3.0 * vol / surface;
            // circumcentre offset y from p0 solves 2 e_i · y = |e_i|²
            let mut m = tensor::ZERO;
            let mut rhs = [0.0; 3];
            for i in 0..3 {
                let e = tensor::sub(p(i + 1), p(0));
                for k in 0..3 {
                    m[i][k] = 2.0 * e[k];
                }
                rhs[i] = tensor::dot(&e, &e, 3);
            }
            let Some(inv) = tensor::inverse(&m, 3) else {
                return 0.0;
            };
            let y = tensor::matvec(&inv, &rhs, 3);
            3.0 * inradius / tensor::norm(&y)
        }
    };
    ratio.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle(p: [[f64; 2]; 3]) -> SimplicialMesh {
        let pts = p.iter().map(|q| [q[0], q[1], 0.0]).collect();
        SimplicialMesh::new(2, pts, vec![0, 1, 2]).unwrap()
    }

    #[test]
    fn radius_ratio_of_reference_shapes() {
        let eq = triangle([[0.0, 0.0], [1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]]);
        assert!((eq.min_radius_ratio() - 1.0).abs() < 1e-14);
        let right = triangle([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let expected = (2.0 - 2f64.sqrt()) / (2f64.sqrt() / 2.0);
        assert!((right.min_radius_ratio() - expected).abs() < 1e-14);
        let pts = vec![
            [1.0, 1.0, 1.0],
            [1.0, -1.0, -1.0],
            [-1.0, 1.0, -1.0],
            [-1.0, -1.0, 1.0],
        ];
        let tet = SimplicialMesh::new(3, pts, vec![0, 1, 2, 3]).unwrap();
        assert!((tet.min_radius_ratio() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn collapsed_triangle_has_zero_ratio() {
        let m = triangle([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let v = NodalField::vector(2, vec![0.0, 0.0, 0.0, 0.0, 0.5, -1.0]);
        let (_, report) = quality_check(&m, &v, 1.0, &QualityThresholds::default());
        assert_eq!(report.min_radius_ratio, 0.0);
        assert!(report.determinants[0].abs() < 1e-15);
    }

    #[test]
    fn zero_field_passes() {
        let m = triangle([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let (ok, report) = quality_check(&m, &NodalField::zeros_vector(3, 2), 3.0, &QualityThresholds::default());
        assert!(ok);
        assert_eq!(report.determinants, vec![1.0]);
        assert_eq!(report.frobenius, vec![0.0]);
    }

    #[test]
    fn dilation_exceeds_determinant_bound() {
        let m = triangle([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let v = NodalField::interpolate_vector(&m, |x| [x[0], x[1], 0.0]);
        let (ok, report) = quality_check(&m, &v, 1.0, &QualityThresholds::default());
        assert!(!ok);
        assert!((report.determinants[0] - 4.0).abs() < 1e-14);
    }
}
