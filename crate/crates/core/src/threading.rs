//! Threading-frame quantities at a point: induced spatial metric, congruence
//! kinematics, index raising and frame conversion.
//!
//! The adapted frame is `{d/dx0, delta_i}` with
//! `delta_i = d/dx^i + Phi^-2 xi_i d/dx^0`; its dual carries
//! `delta x0 = dx0 - Phi^-2 xi_i dx^i`. Against this frame the metric block-
//! diagonalizes: `ds^2 = -Phi^2 (delta x0)^2 + h_ij dx^i dx^j` with
//! `h_ij = g_ij + Phi^-2 xi_i xi_j`.
//!
//! Kinematic quantities of the congruence along `d/dx0`:
//!
//! * vorticity `omega_ij = (delta_i A_j - delta_j A_i) / 2` with the frame
//!   potential `A_i = -Phi^-2 xi_i` (an equivalent form directly in terms of
//!   `xi_i` is exercised by [`consistency_vorticity`]),
//! * expansion `Theta_ij = (d h_ij / dx0) / 2`, scalar `Theta = h^ij Theta_ij`,
//!   shear `sigma_ij = Theta_ij - Theta h_ij / 3`,
//! * acceleration covectors `a_i = Phi^-2 d xi_i/dx0`,
//!   `c_i = d(ln Phi)/dx^i`, and the geodesic covector `b_i = a_i + c_i`
//!   (the congruence consists of geodesics exactly when `b = 0`).
//!
//! Note that `xi_i` itself is raw component data, not a spatial tensor; it is
//! never index-raised here.

use crate::error::Result;
use crate::fields::FieldCtx;
use crate::linalg::{antisymmetrize3, symmetrize3, Mat3};
use crate::metric::MetricSample;
use serde::Serialize;

/// All kinematic quantities at one point.
#[derive(Clone, Debug, Serialize)]
pub struct KinematicState {
    pub h_lo: Mat3,
    pub h_up: Mat3,
    pub omega: Mat3,
    pub theta_lo: Mat3,
    pub theta_scalar: f64,
    pub sigma: Mat3,
    pub a_co: [f64; 3],
    pub c_co: [f64; 3],
    pub b_co: [f64; 3],
}

/// A tangent vector split against the threading frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThreadingVector {
    /// Component along d/dx0 (the `delta x0` pairing).
    pub time_part: f64,
    /// Components along the spatial frame vectors delta_i.
    pub space_part: [f64; 3],
}

/// Induced spatial metric and its inverse.
pub fn spatial_metric(sample: &MetricSample) -> Result<(Mat3, Mat3)> {
    let ctx = FieldCtx::new(sample)?;
    Ok((ctx.h_lo, ctx.h_up))
}

/// Computes every kinematic quantity. Symmetric/antisymmetric outputs are
/// explicitly (anti)symmetrized so the structural invariants hold exactly.
pub fn kinematics(sample: &MetricSample) -> Result<KinematicState> {
    let ctx = FieldCtx::new(sample)?;
    Ok(kinematics_from_ctx(&ctx))
}

pub(crate) fn kinematics_from_ctx(ctx: &FieldCtx) -> KinematicState {
    let omega = antisymmetrize3(&std::array::from_fn(|i| {
        std::array::from_fn(|j| ctx.omega[i][j].v)
    }));
    let theta_lo = symmetrize3(&std::array::from_fn(|i| {
        std::array::from_fn(|j| ctx.theta_lo[i][j].v)
    }));
    let sigma = symmetrize3(&std::array::from_fn(|i| {
        std::array::from_fn(|j| ctx.sigma[i][j].v)
    }));
    KinematicState {
        h_lo: ctx.h_lo,
        h_up: ctx.h_up,
        omega,
        theta_lo,
        theta_scalar: ctx.theta_scalar.v,
        sigma,
        a_co: std::array::from_fn(|i| ctx.a_co[i].v),
        c_co: std::array::from_fn(|i| ctx.c_co[i].v),
        b_co: std::array::from_fn(|i| ctx.b_co[i].v),
    }
}

/// Max-abs difference between the two equivalent vorticity expressions: the
/// frame-potential form (primary code path) and the direct form
/// `Phi^-2 { c_i xi_j - c_j xi_i + (delta_j xi_i - delta_i xi_j... ) / 2 }`
/// written in terms of xi and c.
pub fn consistency_vorticity(sample: &MetricSample) -> Result<f64> {
    let ctx = FieldCtx::new(sample)?;
    let inv_phi_sq = 1.0 / ctx.phi_sq.val;
    let delta_xi = |i: usize, k: usize| -> f64 {
        // delta xi_i / delta x^k
        sample.xi[i].grad[k + 1] + ctx.p[k].val * sample.xi[i].grad[0]
    };
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let xi_form = inv_phi_sq
                * (ctx.c_co[i].v * sample.xi[j].val - ctx.c_co[j].v * sample.xi[i].val
                    + 0.5 * (delta_xi(i, j) - delta_xi(j, i)));
            worst = worst.max((ctx.omega[i][j].v - xi_form).abs());
        }
    }
    Ok(worst)
}

/// Index-raised kinematics and the scalar contractions.
#[derive(Clone, Debug, Serialize)]
pub struct RaisedKinematics {
    /// omega_j^k = h^{ki} omega_{ij}, indexed `[k][j]`.
    pub omega_mixed: Mat3,
    /// omega^{kh} = h^{ki} h^{hj} omega_{ij}.
    pub omega_up: Mat3,
    pub omega_sq: f64,
    pub sigma_sq: f64,
    pub b_sq: f64,
}

pub fn raise_omega(state: &KinematicState) -> RaisedKinematics {
    let h = &state.h_up;
    let mut omega_mixed = [[0.0; 3]; 3];
    let mut omega_up = [[0.0; 3]; 3];
    for k in 0..3 {
        for j in 0..3 {
            for i in 0..3 {
                omega_mixed[k][j] += h[k][i] * state.omega[i][j];
            }
        }
    }
    for k in 0..3 {
        for hh in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    omega_up[k][hh] += h[k][i] * h[hh][j] * state.omega[i][j];
                }
            }
        }
    }
    let dc = |lo: &Mat3| -> f64 {
        let mut s = 0.0;
        for k in 0..3 {
            for hh in 0..3 {
                for i in 0..3 {
                    for j in 0..3 {
                        s += lo[k][hh] * h[k][i] * h[hh][j] * lo[i][j];
                    }
                }
            }
        }
        s
    };
    let mut b_sq = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            b_sq += state.b_co[i] * h[i][j] * state.b_co[j];
        }
    }
    RaisedKinematics {
        omega_mixed,
        omega_up,
        omega_sq: dc(&state.omega),
        sigma_sq: dc(&state.sigma),
        b_sq,
    }
}

/// Splits a coordinate-frame vector `v^a d/dx^a` against the threading frame:
/// `v = time_part d/dx0 + v^i delta_i` with
/// `time_part = v^0 - Phi^-2 xi_i v^i`.
pub fn coordinate_to_threading(sample: &MetricSample, v: &[f64; 4]) -> ThreadingVector {
    let inv_phi_sq = 1.0 / sample.phi_sq.val;
    let mut time_part = v[0];
    for i in 0..3 {
        time_part -= inv_phi_sq * sample.xi[i].val * v[i + 1];
    }
    ThreadingVector {
        time_part,
        space_part: [v[1], v[2], v[3]],
    }
}
