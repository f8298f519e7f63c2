//! Tiny fixed-size matrix helpers for the 3x3 spatial and 4x4 spacetime
//! blocks. Determinant/adjugate inverses are plenty at these sizes.

pub type Mat3 = [[f64; 3]; 3];
pub type Mat4 = [[f64; 4]; 4];

pub fn det3(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Inverse of a 3x3 matrix; returns `None` when the determinant vanishes.
pub fn inv3(m: &Mat3) -> Option<(Mat3, f64)> {
    let det = det3(m);
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let inv_det = 1.0 / det;
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            // cofactor expansion; (j, i) transposes into the adjugate
            let a = m[(j + 1) % 3][(i + 1) % 3] * m[(j + 2) % 3][(i + 2) % 3];
            let b = m[(j + 1) % 3][(i + 2) % 3] * m[(j + 2) % 3][(i + 1) % 3];
            out[i][j] = (a - b) * inv_det;
        }
    }
    Some((out, det))
}

pub fn det4(m: &Mat4) -> f64 {
    let mut det = 0.0;
    for c in 0..4 {
        let minor = minor3(m, 0, c);
        let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
        det += sign * m[0][c] * det3(&minor);
    }
    det
}

fn minor3(m: &Mat4, row: usize, col: usize) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    let mut r = 0;
    for i in 0..4 {
        if i == row {
            continue;
        }
        let mut cidx = 0;
        for j in 0..4 {
            if j == col {
                continue;
            }
            out[r][cidx] = m[i][j];
            cidx += 1;
        }
        r += 1;
    }
    out
}

/// Inverse of a 4x4 matrix via the adjugate.
pub fn inv4(m: &Mat4) -> Option<(Mat4, f64)> {
    let det = det4(m);
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            out[j][i] = sign * det3(&minor3(m, i, j)) / det;
        }
    }
    Some((out, det))
}

/// Forces exact symmetry: (m + m^T) / 2.
pub fn symmetrize3(m: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = 0.5 * (m[i][j] + m[j][i]);
        }
    }
    out
}

/// Forces exact antisymmetry: (m - m^T) / 2.
pub fn antisymmetrize3(m: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = 0.5 * (m[i][j] - m[j][i]);
        }
    }
    out
}

pub fn mat3_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

/// max |a_ij - b_ij|
pub fn max_abs_diff3(a: &Mat3, b: &Mat3) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            m = m.max((a[i][j] - b[i][j]).abs());
        }
    }
    m
}

pub fn max_abs3(a: &Mat3) -> f64 {
    a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
}
