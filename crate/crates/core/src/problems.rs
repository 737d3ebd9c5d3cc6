//! Right-hand side data for the model problem `−Δu = f`, `u = 0` on `∂Ω`,
//! with objective `∫_Ω u dx`.

use std::fmt;
use std::sync::Arc;

use crate::tensor::Mat;

pub type ScalarFn = Arc<dyn Fn(&[f64; 3]) -> f64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(&[f64; 3]) -> [f64; 3] + Send + Sync>;
pub type HessianFn = Arc<dyn Fn(&[f64; 3]) -> Mat + Send + Sync>;

/// Analytic data `f` together with its gradient and Hessian.
#[derive(Clone)]
pub struct ProblemData {
    pub description: String,
    f: ScalarFn,
    grad: GradientFn,
    hess: HessianFn,
}

impl fmt::Debug for ProblemData {
    fn fmt(&self, fmt: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt.debug_struct("ProblemData").field("description", &self.description).finish()
    }
}

impl ProblemData {
    pub fn new(description: impl Into<String>, f: ScalarFn, grad: GradientFn, hess: HessianFn) -> Self {
        ProblemData {
            description: description.into(),
            f,
            grad,
            hess,
        }
    }

    pub fn f(&self, x: &[f64; 3]) -> f64 {
        (self.f)(x)
    }

    pub fn grad_f(&self, x: &[f64; 3]) -> [f64; 3] {
        (self.grad)(x)
    }

    pub fn hess_f(&self, x: &[f64; 3]) -> Mat {
        (self.hess)(x)
    }
}

/// `f(x, y) = 2.5 (x + 0.4 − y²)² + x² + y² − 1`.
pub fn paper_2d_data() -> ProblemData {
    ProblemData::new(
        "f(x,y) = 2.5 (x + 0.4 - y^2)^2 + x^2 + y^2 - 1",
        Arc::new(|p| {
            let g = p[0] + 0.4 - p[1] * p[1];
            2.5 * g * g + p[0] * p[0] + p[1] * p[1] - 1.0
        }),
        Arc::new(|p| {
            let g = p[0] + 0.4 - p[1] * p[1];
            [5.0 * g + 2.0 * p[0], -10.0 * p[1] * g + 2.0 * p[1], 0.0]
        }),
        Arc::new(|p| {
            let g = p[0] + 0.4 - p[1] * p[1];
            let xy = -10.0 * p[1];
            [[7.0, xy, 0.0], [xy, -10.0 * g + 20.0 * p[1] * p[1] + 2.0, 0.0], [0.0; 3]]
        }),
    )
}

/// `f(x, y, z) = 2.5 (x + 0.4 − y²)² + x² + y² + z² − 1`.
pub fn paper_3d_data() -> ProblemData {
    ProblemData::new(
        "f(x,y,z) = 2.5 (x + 0.4 - y^2)^2 + x^2 + y^2 + z^2 - 1",
        Arc::new(|p| {
            let g = p[0] + 0.4 - p[1] * p[1];
            2.5 * g * g + p[0] * p[0] + p[1] * p[1] + p[2] * p[2] - 1.0
        }),
        Arc::new(|p| {
            let g = p[0] + 0.4 - p[1] * p[1];
            [5.0 * g + 2.0 * p[0], -10.0 * p[1] * g + 2.0 * p[1], 2.0 * p[2]]
        }),
        Arc::new(|p| {
            let g = p[0] + 0.4 - p[1] * p[1];
            let xy = -10.0 * p[1];
            [
                [7.0, xy, 0.0],
                [xy, -10.0 * g + 20.0 * p[1] * p[1] + 2.0, 0.0],
                [0.0, 0.0, 2.0],
            ]
        }),
    )
}

/// `f ≡ c`.
pub fn constant_data(c: f64) -> ProblemData {
    ProblemData::new(
        format!("f = {c}"),
        Arc::new(move |_| c),
        Arc::new(|_| [0.0; 3]),
        Arc::new(|_| [[0.0; 3]; 3]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_values() {
        let d2 = paper_2d_data();
        assert!((d2.f(&[0.0, 0.0, 0.0]) + 0.6).abs() < 1e-15);
        assert!((d2.f(&[0.0, 1.0, 0.0]) - 0.9).abs() < 1e-15);
        assert_eq!(d2.grad_f(&[0.0, 0.0, 0.0]), [2.0, 0.0, 0.0]);
        let d3 = paper_3d_data();
        assert!((d3.f(&[0.0, 0.0, 0.0]) + 0.6).abs() < 1e-15);
        assert!((d3.f(&[0.0, 0.0, 1.0]) - 0.4).abs() < 1e-15);
        assert_eq!(d3.grad_f(&[0.0, 0.0, 1.0]), [2.0, 0.0, 2.0]);
        assert_eq!(constant_data(1.5).f(&[3.0, 1.0, 0.0]), 1.5);
    }
}
