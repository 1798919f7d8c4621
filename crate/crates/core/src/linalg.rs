//! Fixed-size helpers for points and symmetric matrices in at most two
//! dimensions. One-dimensional quantities live in the first slot and keep the
//! second slot at zero.

pub type Vec2 = [f64; 2];
pub type Mat2 = [[f64; 2]; 2];

pub const ZERO2: Vec2 = [0.0, 0.0];
pub const ZERO_MAT: Mat2 = [[0.0, 0.0], [0.0, 0.0]];

#[inline]
pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm(a: Vec2) -> f64 {
    a[0].hypot(a[1])
}

#[inline]
pub fn scale(a: Vec2, s: f64) -> Vec2 {
    [a[0] * s, a[1] * s]
}

#[inline]
pub fn add(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn mat_vec(m: &Mat2, v: Vec2) -> Vec2 {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

#[inline]
pub fn mat_add(a: &Mat2, b: &Mat2) -> Mat2 {
    [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]]
}

#[inline]
pub fn mat_scale(a: &Mat2, s: f64) -> Mat2 {
    [[a[0][0] * s, a[0][1] * s], [a[1][0] * s, a[1][1] * s]]
}

#[inline]
pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = ZERO_MAT;
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

#[inline]
pub fn outer(a: Vec2, b: Vec2) -> Mat2 {
    [[a[0] * b[0], a[0] * b[1]], [a[1] * b[0], a[1] * b[1]]]
}

#[inline]
pub fn identity(dim: usize) -> Mat2 {
    if dim == 1 {
        [[1.0, 0.0], [0.0, 0.0]]
    } else {
        [[1.0, 0.0], [0.0, 1.0]]
    }
}

/// Trace of the product of two matrices restricted to the leading `dim` block.
#[inline]
pub fn trace_product(a: &Mat2, b: &Mat2, dim: usize) -> f64 {
    if dim == 1 {
        a[0][0] * b[0][0]
    } else {
        a[0][0] * b[0][0] + a[0][1] * b[1][0] + a[1][0] * b[0][1] + a[1][1] * b[1][1]
    }
}

/// Inverse of the leading `dim` block. Returns `None` for singular input.
pub fn inverse(m: &Mat2, dim: usize) -> Option<Mat2> {
    if dim == 1 {
        if m[0][0] == 0.0 {
            return None;
        }
        return Some([[1.0 / m[0][0], 0.0], [0.0, 0.0]]);
    }
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    Some([[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]])
}

/// Solve `m x = b` on the leading `dim` block.
pub fn solve(m: &Mat2, b: Vec2, dim: usize) -> Option<Vec2> {
    inverse(m, dim).map(|inv| {
        let x = mat_vec(&inv, b);
        if dim == 1 {
            [x[0], 0.0]
        } else {
            x
        }
    })
}

/// Eigenvalues (ascending) of the symmetric leading block.
pub fn sym_eigenvalues(m: &Mat2, dim: usize) -> (f64, f64) {
    if dim == 1 {
        return (m[0][0], m[0][0]);
    }
    let a = m[0][0];
    let d = m[1][1];
    let b = 0.5 * (m[0][1] + m[1][0]);
    let mean = 0.5 * (a + d);
    let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    (mean - r, mean + r)
}

/// Largest entry-wise deviation between two matrices, relative to the
/// spectral size of `reference`.
pub fn relative_difference(m: &Mat2, reference: &Mat2, dim: usize) -> f64 {
    let (lo, hi) = sym_eigenvalues(reference, dim);
    let size = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    let mut worst: f64 = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            worst = worst.max((m[i][j] - reference[i][j]).abs());
        }
    }
    worst / size
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_round_trip() {
        let m = [[4.0, 1.0], [1.0, 3.0]];
        let inv = inverse(&m, 2).unwrap();
        let id = mat_mul(&m, &inv);
        assert!((id[0][0] - 1.0).abs() < 1e-14 && id[0][1].abs() < 1e-14);
        assert!((id[1][1] - 1.0).abs() < 1e-14 && id[1][0].abs() < 1e-14);
    }

    #[test]
    fn eigenvalues_of_diagonal() {
        let (lo, hi) = sym_eigenvalues(&[[2.0, 0.0], [0.0, -1.0]], 2);
        assert_eq!((lo, hi), (-1.0, 2.0));
    }
}
