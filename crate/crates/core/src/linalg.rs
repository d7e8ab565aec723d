//! Fixed-size 3-vector / 3x3 matrix helpers used by the physics kernels.

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

pub const IDENTITY: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
pub const ZERO: Mat3 = [[0.0; 3]; 3];

#[inline]
pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn add(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale(s: f64, a: &Vec3) -> Vec3 {
    [s * a[0], s * a[1], s * a[2]]
}

#[inline]
pub fn mat_vec(m: &Mat3, x: &Vec3) -> Vec3 {
    [dot(&m[0], x), dot(&m[1], x), dot(&m[2], x)]
}

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = ZERO;
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    c
}

pub fn mat_add(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = ZERO;
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = a[i][j] + b[i][j];
        }
    }
    c
}

pub fn mat_scale(s: f64, a: &Mat3) -> Mat3 {
    let mut c = *a;
    for row in c.iter_mut() {
        for x in row.iter_mut() {
            *x *= s;
        }
    }
    c
}

pub fn transpose(a: &Mat3) -> Mat3 {
    let mut t = ZERO;
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = a[j][i];
        }
    }
    t
}

/// Largest absolute entry.
pub fn max_abs(a: &Mat3) -> f64 {
    a.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn max_abs_vec(a: &Vec3) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn det(a: &Mat3) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

/// Inverse by cofactors; `None` when the matrix is numerically singular.
pub fn inverse(a: &Mat3) -> Option<Mat3> {
    let d = det(a);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let inv_d = 1.0 / d;
    let mut m = ZERO;
    m[0][0] = (a[1][1] * a[2][2] - a[1][2] * a[2][1]) * inv_d;
    m[0][1] = (a[0][2] * a[2][1] - a[0][1] * a[2][2]) * inv_d;
    m[0][2] = (a[0][1] * a[1][2] - a[0][2] * a[1][1]) * inv_d;
    m[1][0] = (a[1][2] * a[2][0] - a[1][0] * a[2][2]) * inv_d;
    m[1][1] = (a[0][0] * a[2][2] - a[0][2] * a[2][0]) * inv_d;
    m[1][2] = (a[0][2] * a[1][0] - a[0][0] * a[1][2]) * inv_d;
    m[2][0] = (a[1][0] * a[2][1] - a[1][1] * a[2][0]) * inv_d;
    m[2][1] = (a[0][1] * a[2][0] - a[0][0] * a[2][1]) * inv_d;
    m[2][2] = (a[0][0] * a[1][1] - a[0][1] * a[1][0]) * inv_d;
    Some(m)
}

/// Max-norm of `a - a^T`.
pub fn asymmetry(a: &Mat3) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            m = m.max((a[i][j] - a[j][i]).abs());
        }
    }
    m
}
