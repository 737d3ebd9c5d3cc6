//! Small dense `d×d` helpers (`d ≤ 3`) stored in fixed 3×3 arrays.

pub type Mat = [[f64; 3]; 3];

pub const ZERO: Mat = [[0.0; 3]; 3];

pub fn identity(d: usize) -> Mat {
    let mut m = ZERO;
    for (i, row) in m.iter_mut().enumerate().take(d) {
        row[i] = 1.0;
    }
    m
}

pub fn det(m: &Mat, d: usize) -> f64 {
    match d {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        _ => panic!("unsupported dimension {d}"),
    }
}

pub fn inverse(m: &Mat, d: usize) -> Option<Mat> {
    let det = det(m, d);
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let mut inv = ZERO;
    match d {
        1 => inv[0][0] = 1.0 / m[0][0],
        2 => {
            inv[0][0] = m[1][1] / det;
            inv[0][1] = -m[0][1] / det;
            inv[1][0] = -m[1][0] / det;
            inv[1][1] = m[0][0] / det;
        }
        3 => {
            for i in 0..3 {
                for j in 0..3 {
                    // cofactor of (j, i)
                    let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
                    let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
                    inv[i][j] = (m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]) / det;
                }
            }
        }
        _ => panic!("unsupported dimension {d}"),
    }
    Some(inv)
}

pub fn mul(a: &Mat, b: &Mat, d: usize) -> Mat {
    let mut c = ZERO;
    for i in 0..d {
        for j in 0..d {
            c[i][j] = (0..d).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

pub fn transpose(a: &Mat, d: usize) -> Mat {
    let mut t = ZERO;
    for i in 0..d {
        for j in 0..d {
            t[i][j] = a[j][i];
        }
    }
    t
}

pub fn add(a: &Mat, b: &Mat, d: usize) -> Mat {
    let mut c = ZERO;
    for i in 0..d {
        for j in 0..d {
            c[i][j] = a[i][j] + b[i][j];
        }
    }
    c
}

pub fn scale(a: &Mat, s: f64, d: usize) -> Mat {
    let mut c = ZERO;
    for i in 0..d {
        for j in 0..d {
            c[i][j] = s * a[i][j];
        }
    }
    c
}

pub fn trace(a: &Mat, d: usize) -> f64 {
    (0..d).map(|i| a[i][i]).sum()
}

/// `A : B = Σ a_ij b_ij`.
pub fn ddot(a: &Mat, b: &Mat, d: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            s += a[i][j] * b[i][j];
        }
    }
    s
}

pub fn frobenius(a: &Mat, d: usize) -> f64 {
    ddot(a, a, d).sqrt()
}

pub fn sym(a: &Mat, d: usize) -> Mat {
    let mut s = ZERO;
    for i in 0..d {
        for j in 0..d {
            s[i][j] = 0.5 * (a[i][j] + a[j][i]);
        }
    }
    s
}

/// `xᵀ A y`.
pub fn quad(x: &[f64], a: &Mat, y: &[f64], d: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            s += x[i] * a[i][j] * y[j];
        }
    }
    s
}

pub fn matvec(a: &Mat, x: &[f64], d: usize) -> [f64; 3] {
    let mut y = [0.0; 3];
    for i in 0..d {
        y[i] = (0..d).map(|j| a[i][j] * x[j]).sum();
    }
    y
}

pub fn dot(x: &[f64], y: &[f64], d: usize) -> f64 {
    (0..d).map(|i| x[i] * y[i]).sum()
}

/// Outer product `x yᵀ`.
pub fn outer(x: &[f64], y: &[f64], d: usize) -> Mat {
    let mut m = ZERO;
    for i in 0..d {
        for j in 0..d {
            m[i][j] = x[i] * y[j];
        }
    }
    m
}

pub fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn norm(a: &[f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_roundtrip_3d() {
        let a = [[2.0, 1.0, 0.5], [0.0, 3.0, -1.0], [1.0, 0.0, 4.0]];
        let inv = inverse(&a, 3).unwrap();
        let p = mul(&a, &inv, 3);
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((p[i][j] - e).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn determinant_2d_and_singular() {
        let a = [[1.0, 2.0, 0.0], [3.0, 4.0, 0.0], [0.0; 3]];
        assert_eq!(det(&a, 2), -2.0);
        let s = [[1.0, 2.0, 0.0], [2.0, 4.0, 0.0], [0.0; 3]];
        assert!(inverse(&s, 2).is_none());
    }
}
