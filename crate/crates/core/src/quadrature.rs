//! Quadrature on simplices in barycentric coordinates.

use std::sync::OnceLock;

/// Points in barycentric coordinates `(λ_0, …, λ_d)` with weights that sum
/// to 1, so `∫_T g ≈ |T| Σ w_q g(x_q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 4]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64; 4], f64)> + '_ {
        self.points.iter().zip(self.weights.iter().copied())
    }
}

/// A rule exact for polynomials of degree 5 on a `dim`-simplex.
pub fn degree5(dim: usize) -> &'static QuadratureRule {
    static TRI: OnceLock<QuadratureRule> = OnceLock::new();
    static TET: OnceLock<QuadratureRule> = OnceLock::new();
    match dim {
        2 => TRI.get_or_init(radon7),
        3 => TET.get_or_init(|| collapsed(3, 4)),
        _ => panic!("unsupported dimension {dim}"),
    }
}

/// Radon's 7-point degree-5 rule on triangles.
fn radon7() -> QuadratureRule {
    let s = 15f64.sqrt();
    let a = (6.0 - s) / 21.0;
    let b = (6.0 + s) / 21.0;
    let wa = (155.0 - s) / 1200.0;
    let wb = (155.0 + s) / 1200.0;
    let third = 1.0 / 3.0;
    let mut points = vec![[third, third, third, 0.0]];
    let mut weights = vec![9.0 / 40.0];
    for (p, w) in [(a, wa), (b, wb)] {
        let q = 1.0 - 2.0 * p;
        for pt in [[q, p, p, 0.0], [p, q, p, 0.0], [p, p, q, 0.0]] {
            points.push(pt);
            weights.push(w);
        }
    }
    QuadratureRule { points, weights }
}

/// Collapsed-coordinate (Duffy) tensor rule with `n` Gauss–Legendre points
/// per direction; exact for degree `2n − dim`.
pub fn collapsed(dim: usize, n: usize) -> QuadratureRule {
    let (x, w) = gauss_legendre(n);
    let mut points = Vec::new();
    let mut weights = Vec::new();
    match dim {
        2 => {
            for i in 0..n {
                for j in 0..n {
                    let (u, v) = (x[i], x[j]);
                    let l1 = u;
                    let l2 = v * (1.0 - u);
                    points.push([1.0 - l1 - l2, l1, l2, 0.0]);
                    weights.push(2.0 * w[i] * w[j] * (1.0 - u));
                }
            }
        }
        3 => {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let (u, v, t) = (x[i], x[j], x[k]);
                        let l1 = u;
                        let l2 = v * (1.0 - u);
                        let l3 = t * (1.0 - u) * (1.0 - v);
                        points.push([1.0 - l1 - l2 - l3, l1, l2, l3]);
                        weights.push(6.0 * w[i] * w[j] * w[k] * (1.0 - u) * (1.0 - u) * (1.0 - v));
                    }
                }
            }
        }
        _ => panic!("unsupported dimension {dim}"),
    }
    QuadratureRule { points, weights }
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wt = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = 0.5 * (1.0 - z);
        nodes[n - 1 - i] = 0.5 * (1.0 + z);
        weights[i] = 0.5 * wt;
        weights[n - 1 - i] = 0.5 * wt;
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// ∫ over the unit simplex of λ^α divided by its volume:
    /// d! Π α_i! / (d + Σα)!.
    fn monomial_mean(alpha: &[u32]) -> f64 {
        let d = alpha.len() as u32 - 1;
        let s: u32 = alpha.iter().sum();
        factorial(d) * alpha.iter().map(|&a| factorial(a)).product::<f64>() / factorial(d + s)
    }

    fn check(rule: &QuadratureRule, dim: usize, degree: u32) {
        let k = dim + 1;
        let mut alpha = vec![0u32; k];
        loop {
            let total: u32 = alpha.iter().sum();
            if total <= degree {
                let q: f64 = rule
                    .iter()
                    .map(|(p, w)| w * (0..k).map(|i| p[i].powi(alpha[i] as i32)).product::<f64>())
                    .sum();
                let exact = monomial_mean(&alpha);
                assert!((q - exact).abs() < 1e-14, "{alpha:?}: {q} vs {exact}");
            }
            let mut i = 0;
            while i < k {
                alpha[i] += 1;
                if alpha[i] <= degree {
                    break;
                }
                alpha[i] = 0;
                i += 1;
            }
            if i == k {
                break;
            }
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in 1..8 {
            let (x, w) = gauss_legendre(n);
            for p in 0..(2 * n) as i32 {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum();
                assert!((q - 1.0 / (p + 1) as f64).abs() < 1e-15, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn degree5_rules_are_exact() {
        check(degree5(2), 2, 5);
        check(degree5(3), 3, 5);
    }

    #[test]
    fn collapsed_rules_reach_high_degree() {
        check(&collapsed(2, 6), 2, 10);
        check(&collapsed(3, 6), 3, 9);
    }
}
