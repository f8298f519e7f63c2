//! Independent brute-force ground truth in the coordinate frame.
//!
//! The full 4x4 metric is assembled from the component fields
//! (`g_00 = -Phi^2`, `g_0i = xi_i`, `g_ij`) and differentiated directly:
//! Christoffel symbols from first partials, the Riemann tensor from
//! Christoffels and their partials, Ricci by contraction, and the scalar
//! curvature by the metric trace. Nothing here touches the threading frame
//! machinery, which is exactly what makes it usable as an oracle for it.
//!
//! Curvature convention: `R(X, Y, U) = nab_X nab_Y U - nab_Y nab_X U -
//! nab_[X,Y] U`, components `riem[a][u][c][d]` with
//! `R(d_c, d_d, d_u) = riem[a][u][c][d] d_a`, and `ric[b][d] =
//! riem[a][d][a][b]`. On the exponential-scale cosmology this yields
//! `R_ab = 3 g_ab` (so `ric[0][0] = -3`), which pins the signs.

use crate::error::{Error, Result};
use crate::fields::FieldCtx;
use crate::linalg::{self, Mat4};
use crate::metric::{eval_sample, DerivMode, MetricSample, MetricSpec};

/// 4D metric data at a point: values, inverse, first and second partials.
#[derive(Clone, Debug)]
pub struct Metric4Sample {
    pub g_lo: Mat4,
    pub g_up: Mat4,
    /// `d1[a][b][c]` = d g_bc / dx^a
    pub d1: [Mat4; 4],
    /// `d2[a][b][c][d]` = d^2 g_cd / dx^a dx^b
    pub d2: [[Mat4; 4]; 4],
}

/// Assembles the 4D block form from a threading-adapted sample.
pub fn metric4_sample(sample: &MetricSample) -> Result<Metric4Sample> {
    let mut jets = [[crate::jet::Jet2::ZERO; 4]; 4];
    jets[0][0] = -sample.phi_sq;
    for i in 0..3 {
        jets[0][i + 1] = sample.xi[i];
        jets[i + 1][0] = sample.xi[i];
        for j in 0..3 {
            jets[i + 1][j + 1] = sample.g[i][j];
        }
    }

    let g_lo: Mat4 = std::array::from_fn(|a| std::array::from_fn(|b| jets[a][b].val));
    let (g_up, det) = linalg::inv4(&g_lo).ok_or(Error::SingularMetric(0.0))?;
    if det >= 0.0 {
        // Lorentzian signature has negative determinant.
        return Err(Error::SingularMetric(det));
    }

    let d1: [Mat4; 4] =
        std::array::from_fn(|a| std::array::from_fn(|b| std::array::from_fn(|c| jets[b][c].grad[a])));
    let d2: [[Mat4; 4]; 4] = std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            std::array::from_fn(|c| std::array::from_fn(|d| jets[c][d].hess[a][b]))
        })
    });

    Ok(Metric4Sample { g_lo, g_up, d1, d2 })
}

/// Coordinate Christoffel symbols `gamma[a][b][c]` = Gamma^a_bc, symmetric in
/// (b, c).
pub fn christoffel4_from(m4: &Metric4Sample) -> [[[f64; 4]; 4]; 4] {
    let mut gamma = [[[0.0; 4]; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            for c in b..4 {
                let mut s = 0.0;
                for d in 0..4 {
                    s += 0.5
                        * m4.g_up[a][d]
                        * (m4.d1[b][d][c] + m4.d1[c][d][b] - m4.d1[d][b][c]);
                }
                gamma[a][b][c] = s;
                gamma[a][c][b] = s;
            }
        }
    }
    gamma
}

pub fn christoffel4(
    spec: &MetricSpec,
    point: &[f64; 4],
    mode: DerivMode,
) -> Result<[[[f64; 4]; 4]; 4]> {
    let sample = eval_sample(spec, point, mode)?;
    Ok(christoffel4_from(&metric4_sample(&sample)?))
}

/// d Gamma^a_bc / dx^e, indexed [e][a][b][c].
fn christoffel4_partials(m4: &Metric4Sample) -> [[[[f64; 4]; 4]; 4]; 4] {
    // d g^ad/dx^e = -g^af g^dh d g_fh/dx^e
    let mut dg_up = [[[0.0; 4]; 4]; 4];
    for e in 0..4 {
        for a in 0..4 {
            for d in 0..4 {
                let mut s = 0.0;
                for f in 0..4 {
                    for h in 0..4 {
                        s -= m4.g_up[a][f] * m4.g_up[d][h] * m4.d1[e][f][h];
                    }
                }
                dg_up[e][a][d] = s;
            }
        }
    }
    let mut out = [[[[0.0; 4]; 4]; 4]; 4];
    for e in 0..4 {
        for a in 0..4 {
            for b in 0..4 {
                for c in b..4 {
                    let mut s = 0.0;
                    for d in 0..4 {
                        let koszul = m4.d1[b][d][c] + m4.d1[c][d][b] - m4.d1[d][b][c];
                        let d_koszul =
                            m4.d2[e][b][d][c] + m4.d2[e][c][d][b] - m4.d2[e][d][b][c];
                        s += 0.5 * (dg_up[e][a][d] * koszul + m4.g_up[a][d] * d_koszul);
                    }
                    out[e][a][b][c] = s;
                    out[e][a][c][b] = s;
                }
            }
        }
    }
    out
}

/// Riemann tensor `riem[a][u][c][d]`: `R(d_c, d_d, d_u) = riem[a][u][c][d] d_a`.
pub fn riemann4_from(m4: &Metric4Sample) -> [[[[f64; 4]; 4]; 4]; 4] {
    let gamma = christoffel4_from(m4);
    let dgamma = christoffel4_partials(m4);
    let mut riem = [[[[0.0; 4]; 4]; 4]; 4];
    for a in 0..4 {
        for u in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let mut s = dgamma[c][a][d][u] - dgamma[d][a][c][u];
                    for e in 0..4 {
                        s += gamma[a][c][e] * gamma[e][d][u] - gamma[a][d][e] * gamma[e][c][u];
                    }
                    riem[a][u][c][d] = s;
                }
            }
        }
    }
    riem
}

pub fn riemann4(
    spec: &MetricSpec,
    point: &[f64; 4],
    mode: DerivMode,
) -> Result<[[[[f64; 4]; 4]; 4]; 4]> {
    let sample = eval_sample(spec, point, mode)?;
    Ok(riemann4_from(&metric4_sample(&sample)?))
}

/// Coordinate Ricci components and the scalar curvature.
#[derive(Clone, Copy, Debug)]
pub struct Ricci4 {
    pub components: Mat4,
    pub scalar: f64,
}

pub fn ricci4_from(m4: &Metric4Sample) -> Ricci4 {
    let riem = riemann4_from(m4);
    let mut ric = [[0.0; 4]; 4];
    for b in 0..4 {
        for d in 0..4 {
            let mut s = 0.0;
            for a in 0..4 {
                s += riem[a][d][a][b];
            }
            ric[b][d] = s;
        }
    }
    let mut scalar = 0.0;
    for b in 0..4 {
        for d in 0..4 {
            scalar += m4.g_up[b][d] * ric[b][d];
        }
    }
    Ricci4 {
        components: ric,
        scalar,
    }
}

pub fn ricci4(spec: &MetricSpec, point: &[f64; 4], mode: DerivMode) -> Result<Ricci4> {
    let sample = eval_sample(spec, point, mode)?;
    Ok(ricci4_from(&metric4_sample(&sample)?))
}

/// Ricci components contracted against the threading frame:
/// `spatial[i][k] = Ric(delta_k, delta_i)`, `mixed[i] = Ric(d_0, delta_i)`,
/// `time = Ric(d_0, d_0)`, using `delta_i = d_i + Phi^-2 xi_i d_0`.
#[derive(Clone, Copy, Debug)]
pub struct ProjectedRicci {
    pub spatial: [[f64; 3]; 3],
    pub mixed: [f64; 3],
    pub time: f64,
}

pub fn project_ricci(sample: &MetricSample, ricci: &Ricci4) -> ProjectedRicci {
    let r = &ricci.components;
    let p: [f64; 3] = std::array::from_fn(|i| sample.xi[i].val / sample.phi_sq.val);
    let mut spatial = [[0.0; 3]; 3];
    for i in 0..3 {
        for k in 0..3 {
            spatial[i][k] = r[i + 1][k + 1]
                + p[k] * r[i + 1][0]
                + p[i] * r[0][k + 1]
                + p[i] * p[k] * r[0][0];
        }
    }
    let mixed: [f64; 3] = std::array::from_fn(|i| r[0][i + 1] + p[i] * r[0][0]);
    ProjectedRicci {
        spatial,
        mixed,
        time: r[0][0],
    }
}

/// Coordinate-frame geodesic acceleration: x''^a = -Gamma^a_bc x'^b x'^c.
pub fn geodesic_rhs4(
    spec: &MetricSpec,
    x: &[f64; 4],
    dx: &[f64; 4],
    mode: DerivMode,
) -> Result<[f64; 4]> {
    let gamma = christoffel4(spec, x, mode)?;
    let mut acc = [0.0; 4];
    for a in 0..4 {
        let mut s = 0.0;
        for b in 0..4 {
            for c in 0..4 {
                s -= gamma[a][b][c] * dx[b] * dx[c];
            }
        }
        acc[a] = s;
    }
    Ok(acc)
}

/// Contracts the threading-frame Levi-Civita table back into coordinates and
/// compares against the brute-force Christoffels; returns the worst absolute
/// deviation over every frame pair. One number certifies the whole table.
pub fn frame_table_residual(spec: &MetricSpec, point: &[f64; 4], mode: DerivMode) -> Result<f64> {
    let sample = eval_sample(spec, point, mode)?;
    let ctx = FieldCtx::new(&sample)?;
    let m4 = metric4_sample(&sample)?;
    let gamma4 = christoffel4_from(&m4);

    // Frame vectors as coordinate columns: e_0 = d_0, e_i = delta_i.
    let frame = |idx: usize| -> [f64; 4] {
        let mut v = [0.0; 4];
        if idx == 0 {
            v[0] = 1.0;
        } else {
            v[idx] = 1.0;
            v[0] = ctx.p[idx - 1].val;
        }
        v
    };
    // d(frame coefficient)/dx^a: only the time slot of delta_i varies.
    let dframe = |idx: usize, a: usize| -> [f64; 4] {
        let mut v = [0.0; 4];
        if idx > 0 {
            v[0] = ctx.p[idx - 1].grad[a];
        }
        v
    };

    // nabla_{e_A} e_B in coordinates.
    let cov = |a_idx: usize, b_idx: usize| -> [f64; 4] {
        let ea = frame(a_idx);
        let eb = frame(b_idx);
        let mut out = [0.0; 4];
        for c in 0..4 {
            // directional derivative of the coefficients
            for a in 0..4 {
                out[c] += ea[a] * dframe(b_idx, a)[c];
            }
            for a in 0..4 {
                for b in 0..4 {
                    out[c] += ea[a] * eb[b] * gamma4[c][a][b];
                }
            }
        }
        out
    };

    // Expected frame components from the kinematic decomposition.
    let phi_sq = ctx.phi_sq.val;
    let b_up: [f64; 3] = std::array::from_fn(|k| ctx.b_up[k].v);
    let expected = |a_idx: usize, b_idx: usize| -> (f64, [f64; 3]) {
        match (a_idx, b_idx) {
            (0, 0) => (0.0, std::array::from_fn(|k| phi_sq * b_up[k])),
            (0, bi) => {
                // nabla_{d0} delta_i
                let i = bi - 1;
                let time = ctx.b_co[i].v;
                (time, std::array::from_fn(|k| ctx.gamma_t[k][i]))
            }
            (ai, 0) => {
                // nabla_{delta_i} d0
                let i = ai - 1;
                let time = ctx.c_co[i].v;
                (time, std::array::from_fn(|k| ctx.gamma_t[k][i]))
            }
            (aj, bi) => {
                let j = aj - 1;
                let i = bi - 1;
                let time = ctx.omega[i][j].v + ctx.theta_lo[i][j].v / phi_sq;
                (time, std::array::from_fn(|k| ctx.gamma_s[k][i][j]))
            }
        }
    };

    let mut worst: f64 = 0.0;
    for a_idx in 0..4 {
        for b_idx in 0..4 {
            let v = cov(a_idx, b_idx);
            let split = crate::threading::coordinate_to_threading(&sample, &v);
            let (time, space) = expected(a_idx, b_idx);
            worst = worst.max((split.time_part - time).abs());
            for k in 0..3 {
                worst = worst.max((split.space_part[k] - space[k]).abs());
            }
        }
    }
    Ok(worst)
}
