//! Curvature of the spatial connection and the threading split of the
//! spacetime curvature and Ricci tensors.
//!
//! With zero-based spatial indices, the computed blocks are
//!
//! * `r_star[i][j][k][h]`: curvature of the spatial connection, including the
//!   frame-bracket correction `-2 omega_kh (Theta_i^l + Phi^2 omega_i^l)`
//!   contracted with `h_jl`,
//! * `r_ssss`, `r_s0ss`, `r_s0s0`: the three independent blocks of the
//!   spacetime curvature against the threading frame (the all-spatial block,
//!   the single-time block, and the symmetric double-time block),
//! * `ricci_ss`, `ricci_s0`, `ricci_00`: the frame components of the Ricci
//!   tensor, assembled from spatial Ricci + kinematic terms,
//! * scalar curvatures of spacetime and of the spatial connection, the
//!   trace-free parts, and the electric Weyl block `E_ik`.
//!
//! `r_star` is antisymmetric in its last pair but, unlike a Riemannian
//! curvature, has no pair-exchange symmetry when the vorticity is non-zero
//! (the bracket correction breaks it); only the (k, h) antisymmetry is
//! asserted.

use crate::error::Result;
use crate::fields::FieldCtx;
use crate::linalg::{symmetrize3, Mat3};
use crate::metric::{eval_sample, DerivMode, MetricSpec};
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct CurvatureBundle {
    /// Spatial-connection curvature, indexed `[i][j][k][h]`.
    pub r_star: [[[[f64; 3]; 3]; 3]; 3],
    /// All-spatial curvature block, same index order.
    pub r_ssss: [[[[f64; 3]; 3]; 3]; 3],
    /// Single-time block, indexed `[i][k][h]`.
    pub r_s0ss: [[[f64; 3]; 3]; 3],
    /// Symmetric double-time block, indexed `[i][k]`.
    pub r_s0s0: Mat3,
    pub ricci_ss: Mat3,
    pub ricci_s0: [f64; 3],
    pub ricci_00: f64,
    /// Symmetrized contraction of `r_star` (the spatial Ricci tensor).
    pub ricci_star: Mat3,
    /// Scalar curvature of spacetime.
    pub scalar_r: f64,
    /// Scalar curvature of the spatial connection.
    pub scalar_r_star: f64,
    /// Electric Weyl block E_ik.
    pub weyl_e: Mat3,
    /// Trace-free part of the double-time block.
    pub r_tilde_s0s0: Mat3,
    /// Trace-free part of ricci_ss.
    pub ricci_tilde: Mat3,
}

pub fn curvature_bundle(
    spec: &MetricSpec,
    point: &[f64; 4],
    mode: DerivMode,
) -> Result<CurvatureBundle> {
    let sample = eval_sample(spec, point, mode)?;
    let ctx = FieldCtx::new(&sample)?;
    Ok(bundle_from_ctx(&ctx))
}

pub(crate) fn bundle_from_ctx(ctx: &FieldCtx) -> CurvatureBundle {
    let phi_sq = ctx.phi_sq.val;
    let inv_phi_sq = 1.0 / phi_sq;
    let h_lo = &ctx.h_lo;
    let h_up = &ctx.h_up;

    // delta Gamma^l_(ik) / delta x^h
    let delta_gamma = |l: usize, i: usize, k: usize, hh: usize| -> f64 {
        ctx.d_gamma_s[hh + 1][l][i][k] + ctx.p[hh].val * ctx.d_gamma_s[0][l][i][k]
    };

    // Curvature of the spatial connection with the bracket correction.
    let mut r_star = [[[[0.0; 3]; 3]; 3]; 3];
    for i in 0..3 {
        for k in 0..3 {
            for hh in 0..3 {
                for l in 0..3 {
                    let mut term = delta_gamma(l, i, k, hh) - delta_gamma(l, i, hh, k);
                    for n in 0..3 {
                        term += ctx.gamma_s[n][i][k] * ctx.gamma_s[l][n][hh]
                            - ctx.gamma_s[n][i][hh] * ctx.gamma_s[l][n][k];
                    }
                    term -= 2.0
                        * ctx.omega[k][hh].v
                        * (ctx.theta_mixed[l][i].v + phi_sq * ctx.omega_mixed[l][i].v);
                    for j in 0..3 {
                        r_star[i][j][k][hh] += h_lo[j][l] * term;
                    }
                }
            }
        }
    }

    // Shorthands for the kinematic values.
    let om = |i: usize, j: usize| ctx.omega[i][j].v;
    let th = |i: usize, j: usize| ctx.theta_lo[i][j].v;

    // All-spatial block: spatial curvature plus vorticity/expansion products.
    let mut r_ssss = [[[[0.0; 3]; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for hh in 0..3 {
                    r_ssss[i][j][k][hh] = r_star[i][j][k][hh]
                        + om(i, k) * th(j, hh)
                        - om(i, hh) * th(j, k)
                        + inv_phi_sq * (th(i, k) * th(j, hh) - th(i, hh) * th(j, k))
                        + phi_sq * (om(i, k) * om(j, hh) - om(i, hh) * om(j, k))
                        + th(i, k) * om(j, hh)
                        - th(i, hh) * om(j, k);
                }
            }
        }
    }

    // Covariant derivatives of the kinematic fields (exact partials).
    let theta_cov = ctx.cov_spatial_bilinear(&ctx.theta_lo); // Theta_(ij|k)
    let omega_cov = ctx.cov_spatial_bilinear(&ctx.omega); // omega_(ij|k)
    let b_cov = ctx.cov_spatial_covector(&ctx.b_co); // b_(i|k)
    let theta_dot = ctx.cov_time_bilinear(&ctx.theta_lo); // Theta_(ik|0)
    let c = |i: usize| ctx.c_co[i].v;
    let b = |i: usize| ctx.b_co[i].v;

    // Single-time block.
    let mut r_s0ss = [[[0.0; 3]; 3]; 3];
    for i in 0..3 {
        for k in 0..3 {
            for hh in 0..3 {
                r_s0ss[i][k][hh] = theta_cov[i][hh][k] - theta_cov[i][k][hh]
                    + th(i, k) * c(hh)
                    - th(i, hh) * c(k)
                    + phi_sq
                        * (omega_cov[i][hh][k] - omega_cov[i][k][hh] + om(i, hh) * c(k)
                            - om(i, k) * c(hh)
                            + 2.0 * om(k, hh) * b(i));
            }
        }
    }

    // Symmetric double-time block.
    let mut r_s0s0 = [[0.0; 3]; 3];
    for i in 0..3 {
        for k in 0..3 {
            let mut omom = 0.0;
            let mut thth = 0.0;
            for hh in 0..3 {
                omom += om(i, hh) * ctx.omega_mixed[hh][k].v;
                thth += th(i, hh) * ctx.theta_mixed[hh][k].v;
            }
            r_s0s0[i][k] = phi_sq
                * (b(i) * b(k) + 0.5 * (b_cov[i][k] + b_cov[k][i]) - phi_sq * omom)
                - theta_dot[i][k]
                - thth;
        }
    }
    let r_s0s0 = symmetrize3(&r_s0s0);

    // Ricci components: spatial part from the contracted r_star plus
    // kinematic terms, then the mixed and double-time traces.
    let mut r_star_contr = [[0.0; 3]; 3]; // h^{hj} r_star[i][j][k][h]
    for i in 0..3 {
        for k in 0..3 {
            let mut s = 0.0;
            for j in 0..3 {
                for hh in 0..3 {
                    s += h_up[hh][j] * r_star[i][j][k][hh];
                }
            }
            r_star_contr[i][k] = s;
        }
    }
    let ricci_star = symmetrize3(&r_star_contr);

    let theta = ctx.theta_scalar.v;
    let mut ricci_ss_raw = [[0.0; 3]; 3];
    for i in 0..3 {
        for k in 0..3 {
            let mut cross = 0.0;
            for hh in 0..3 {
                cross += om(k, hh) * ctx.theta_mixed[hh][i].v - om(i, hh) * ctx.theta_mixed[hh][k].v;
            }
            ricci_ss_raw[i][k] = r_star_contr[i][k]
                + inv_phi_sq * (theta_dot[i][k] + theta * th(i, k))
                - b(i) * b(k)
                - 0.5 * (b_cov[i][k] + b_cov[k][i])
                + theta * om(i, k)
                + cross;
        }
    }
    let ricci_ss = symmetrize3(&ricci_ss_raw);

    let theta_div = ctx.div_mixed(&ctx.theta_mixed);
    let omega_div = ctx.div_mixed(&ctx.omega_mixed);
    let mut ricci_s0 = [0.0; 3];
    for i in 0..3 {
        let mut s = theta_div[i] - ctx.delta_spatial(&ctx.theta_scalar, i) + theta * c(i);
        for k in 0..3 {
            s -= ctx.theta_mixed[k][i].v * c(k);
        }
        let mut vort = omega_div[i];
        for k in 0..3 {
            vort += ctx.omega_mixed[k][i].v * (c(k) + 2.0 * b(k));
        }
        ricci_s0[i] = s + phi_sq * vort;
    }

    let omega_sq = ctx.double_contraction(&ctx.omega);
    let theta_contr = ctx.double_contraction(&ctx.theta_lo);
    let b_div = ctx.div_vector(&ctx.b_up);
    let ricci_00 = phi_sq * (ctx.b_sq() + b_div + phi_sq * omega_sq)
        - ctx.theta_scalar.d[0]
        - theta_contr;

    // Scalar curvatures and trace-free parts.
    let mut h_trace_ricci = 0.0;
    for j in 0..3 {
        for hh in 0..3 {
            h_trace_ricci += h_up[j][hh] * ricci_ss[j][hh];
        }
    }
    let scalar_r = h_trace_ricci - inv_phi_sq * ricci_00;

    let mut scalar_r_star = 0.0;
    for j in 0..3 {
        for hh in 0..3 {
            scalar_r_star += h_up[j][hh] * ricci_star[j][hh];
        }
    }

    let mut r_tilde_s0s0 = [[0.0; 3]; 3];
    let mut ricci_tilde = [[0.0; 3]; 3];
    let mut weyl_e = [[0.0; 3]; 3];
    for i in 0..3 {
        for k in 0..3 {
            r_tilde_s0s0[i][k] = r_s0s0[i][k] - ricci_00 * h_lo[i][k] / 3.0;
            ricci_tilde[i][k] = ricci_ss[i][k] - h_trace_ricci * h_lo[i][k] / 3.0;
            weyl_e[i][k] = r_s0s0[i][k]
                + 0.5
                    * (phi_sq * ricci_ss[i][k]
                        - (ricci_00 + scalar_r * phi_sq / 3.0) * h_lo[i][k]);
        }
    }
    let weyl_e = symmetrize3(&weyl_e);

    CurvatureBundle {
        r_star,
        r_ssss,
        r_s0ss,
        r_s0s0,
        ricci_ss,
        ricci_s0,
        ricci_00,
        ricci_star,
        scalar_r,
        scalar_r_star,
        weyl_e,
        r_tilde_s0s0,
        ricci_tilde,
    }
}

/// Electric Weyl block through the trace-free route
/// `E_ik = Rtilde_(i0k0) + Phi^2 Rtilde_ik / 2`; agrees with the direct form
/// in the bundle up to roundoff and is kept as a consistency check.
pub fn weyl_e_trace_free_route(bundle: &CurvatureBundle, phi_sq: f64) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for k in 0..3 {
            out[i][k] = bundle.r_tilde_s0s0[i][k] + 0.5 * phi_sq * bundle.ricci_tilde[i][k];
        }
    }
    out
}

/// Skew part of the contracted spatial curvature against its kinematic
/// expression; returns the max-abs residual. Vanishes identically because
/// the frame Ricci tensor is symmetric.
pub fn skew_ricci_residual(spec: &MetricSpec, point: &[f64; 4], mode: DerivMode) -> Result<f64> {
    let sample = eval_sample(spec, point, mode)?;
    let ctx = FieldCtx::new(&sample)?;
    let bundle = bundle_from_ctx(&ctx);

    let mut r_star_contr = [[0.0; 3]; 3];
    for i in 0..3 {
        for k in 0..3 {
            let mut s = 0.0;
            for j in 0..3 {
                for hh in 0..3 {
                    s += ctx.h_up[hh][j] * bundle.r_star[i][j][k][hh];
                }
            }
            r_star_contr[i][k] = s;
        }
    }

    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for k in 0..3 {
            let lhs = 0.5 * (r_star_contr[i][k] - r_star_contr[k][i]);
            let mut rhs = -ctx.theta_scalar.v * ctx.omega[i][k].v;
            for hh in 0..3 {
                rhs += ctx.omega[i][hh].v * ctx.theta_mixed[hh][k].v
                    - ctx.omega[k][hh].v * ctx.theta_mixed[hh][i].v;
            }
            worst = worst.max((lhs - rhs).abs());
        }
    }
    Ok(worst)
}

/// Curvature blocks through the reduced expressions valid for stationary
/// specs (vanishing expansion and `a_i`, so `b = c`): products of vorticity
/// for the spatial block, vorticity gradients for the single-time block and
/// `c`-gradients for the double-time block.
#[derive(Clone, Debug)]
pub struct StationaryCurvature {
    pub r_ssss: [[[[f64; 3]; 3]; 3]; 3],
    pub r_s0ss: [[[f64; 3]; 3]; 3],
    pub r_s0s0: Mat3,
    pub ricci_ss: Mat3,
    pub ricci_s0: [f64; 3],
    pub ricci_00: f64,
}

pub fn curvature_stationary(
    spec: &MetricSpec,
    point: &[f64; 4],
    mode: DerivMode,
) -> Result<StationaryCurvature> {
    let sample = eval_sample(spec, point, mode)?;
    let ctx = FieldCtx::new(&sample)?;
    let bundle = bundle_from_ctx(&ctx);
    let phi_sq = ctx.phi_sq.val;
    let om = |i: usize, j: usize| ctx.omega[i][j].v;
    let c = |i: usize| ctx.c_co[i].v;

    let omega_cov = ctx.cov_spatial_bilinear(&ctx.omega);
    let c_cov = ctx.cov_spatial_covector(&ctx.c_co);

    let mut r_ssss = [[[[0.0; 3]; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for hh in 0..3 {
                    r_ssss[i][j][k][hh] = bundle.r_star[i][j][k][hh]
                        + phi_sq * (om(i, k) * om(j, hh) - om(i, hh) * om(j, k));
                }
            }
        }
    }

    let mut r_s0ss = [[[0.0; 3]; 3]; 3];
    for i in 0..3 {
        for k in 0..3 {
            for hh in 0..3 {
                r_s0ss[i][k][hh] = phi_sq
                    * (omega_cov[i][hh][k] - omega_cov[i][k][hh] + om(i, hh) * c(k)
                        - om(i, k) * c(hh)
                        + 2.0 * om(k, hh) * c(i));
            }
        }
    }

    let mut r_s0s0 = [[0.0; 3]; 3];
    for i in 0..3 {
        for k in 0..3 {
            let mut omom = 0.0;
            for hh in 0..3 {
                omom += om(i, hh) * ctx.omega_mixed[hh][k].v;
            }
            r_s0s0[i][k] =
                phi_sq * (c(i) * c(k) + 0.5 * (c_cov[i][k] + c_cov[k][i]) - phi_sq * omom);
        }
    }

    let mut ricci_ss = [[0.0; 3]; 3];
    for i in 0..3 {
        for k in 0..3 {
            ricci_ss[i][k] = bundle.ricci_star[i][k]
                - c(i) * c(k)
                - 0.5 * (c_cov[i][k] + c_cov[k][i]);
        }
    }

    let omega_div = ctx.div_mixed(&ctx.omega_mixed);
    let mut ricci_s0 = [0.0; 3];
    for i in 0..3 {
        let mut s = omega_div[i];
        for hh in 0..3 {
            s += 3.0 * ctx.omega_mixed[hh][i].v * c(hh);
        }
        ricci_s0[i] = phi_sq * s;
    }

    let mut c_sq = 0.0;
    let c_div;
    {
        // raise c with the metric and take the covariant divergence
        let mut c_up = [crate::fields::V1::default(); 3];
        for k in 0..3 {
            let mut v = 0.0;
            let mut d = [0.0; 4];
            for hh in 0..3 {
                v += ctx.h_up[k][hh] * ctx.c_co[hh].v;
                for a in 0..4 {
                    d[a] += ctx.dh_up[a][k][hh] * ctx.c_co[hh].v
                        + ctx.h_up[k][hh] * ctx.c_co[hh].d[a];
                }
            }
            c_up[k] = crate::fields::V1 { v, d };
        }
        for k in 0..3 {
            c_sq += ctx.c_co[k].v * c_up[k].v;
        }
        c_div = ctx.div_vector(&c_up);
    }
    let omega_sq = ctx.double_contraction(&ctx.omega);
    let ricci_00 = phi_sq * (c_sq + c_div + phi_sq * omega_sq);

    Ok(StationaryCurvature {
        r_ssss,
        r_s0ss,
        r_s0s0,
        ricci_ss,
        ricci_s0,
        ricci_00,
    })
}

/// Curvature blocks through the reduced expressions valid when the spatial
/// distribution is integrable (vanishing vorticity): the bracket correction
/// drops from the spatial curvature and all vorticity terms disappear.
#[derive(Clone, Debug)]
pub struct StaticCurvature {
    pub r_ssss: [[[[f64; 3]; 3]; 3]; 3],
    pub r_s0ss: [[[f64; 3]; 3]; 3],
    pub r_s0s0: Mat3,
    pub ricci_ss: Mat3,
    pub ricci_s0: [f64; 3],
    pub ricci_00: f64,
}

pub fn curvature_static(
    spec: &MetricSpec,
    point: &[f64; 4],
    mode: DerivMode,
) -> Result<StaticCurvature> {
    let sample = eval_sample(spec, point, mode)?;
    let ctx = FieldCtx::new(&sample)?;
    let bundle = bundle_from_ctx(&ctx);
    let phi_sq = ctx.phi_sq.val;
    let inv_phi_sq = 1.0 / phi_sq;
    let th = |i: usize, j: usize| ctx.theta_lo[i][j].v;
    let c = |i: usize| ctx.c_co[i].v;
    let b = |i: usize| ctx.b_co[i].v;

    let theta_cov = ctx.cov_spatial_bilinear(&ctx.theta_lo);
    let theta_dot = ctx.cov_time_bilinear(&ctx.theta_lo);
    let b_cov = ctx.cov_spatial_covector(&ctx.b_co);

    let mut r_ssss = [[[[0.0; 3]; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for hh in 0..3 {
                    r_ssss[i][j][k][hh] = bundle.r_star[i][j][k][hh]
                        + inv_phi_sq * (th(i, k) * th(j, hh) - th(i, hh) * th(j, k));
                }
            }
        }
    }

    let mut r_s0ss = [[[0.0; 3]; 3]; 3];
    for i in 0..3 {
        for k in 0..3 {
            for hh in 0..3 {
                r_s0ss[i][k][hh] = theta_cov[i][hh][k] - theta_cov[i][k][hh]
                    + th(i, k) * c(hh)
                    - th(i, hh) * c(k);
            }
        }
    }

    let mut r_s0s0 = [[0.0; 3]; 3];
    let mut ricci_ss = [[0.0; 3]; 3];
    for i in 0..3 {
        for k in 0..3 {
            let mut thth = 0.0;
            for hh in 0..3 {
                thth += th(i, hh) * ctx.theta_mixed[hh][k].v;
            }
            r_s0s0[i][k] = phi_sq * (b(i) * b(k) + 0.5 * (b_cov[i][k] + b_cov[k][i]))
                - theta_dot[i][k]
                - thth;
            ricci_ss[i][k] = bundle.ricci_star[i][k]
                + inv_phi_sq * (theta_dot[i][k] + ctx.theta_scalar.v * th(i, k))
                - b(i) * b(k)
                - 0.5 * (b_cov[i][k] + b_cov[k][i]);
        }
    }

    let theta_div = ctx.div_mixed(&ctx.theta_mixed);
    let mut ricci_s0 = [0.0; 3];
    for i in 0..3 {
        let mut s = theta_div[i] - ctx.delta_spatial(&ctx.theta_scalar, i)
            + ctx.theta_scalar.v * c(i);
        for k in 0..3 {
            s -= ctx.theta_mixed[k][i].v * c(k);
        }
        ricci_s0[i] = s;
    }

    let b_div = ctx.div_vector(&ctx.b_up);
    let ricci_00 = phi_sq * (ctx.b_sq() + b_div)
        - ctx.theta_scalar.d[0]
        - ctx.double_contraction(&ctx.theta_lo);

    Ok(StaticCurvature {
        r_ssss,
        r_s0ss,
        r_s0s0,
        ricci_ss,
        ricci_s0,
        ricci_00,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::expr;
    use crate::linalg::max_abs_diff3;
    use crate::oracle;
    use approx::assert_relative_eq;

    fn max4(t: &[[[[f64; 3]; 3]; 3]; 3]) -> f64 {
        t.iter()
            .flatten()
            .flatten()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    #[test]
    fn minkowski_curvature_vanishes() {
        let spec = catalog::minkowski();
        let b = curvature_bundle(&spec, &[0.0, 1.0, 2.0, 3.0], DerivMode::Analytic).unwrap();
        assert_eq!(max4(&b.r_star), 0.0);
        assert_eq!(max4(&b.r_ssss), 0.0);
        assert_eq!(b.ricci_00, 0.0);
        assert_eq!(b.scalar_r, 0.0);
        assert_eq!(b.scalar_r_star, 0.0);
    }

    #[test]
    fn exponential_cosmology_time_ricci() {
        let spec = catalog::flrw(expr::exp(expr::coord(0))).unwrap();
        let b = curvature_bundle(&spec, &[0.4, 0.1, 0.2, 0.3], DerivMode::Analytic).unwrap();
        assert_relative_eq!(b.ricci_00, -3.0, epsilon = 1e-10);
        assert_relative_eq!(b.scalar_r, 12.0, epsilon = 1e-10);
        // flat spatial slices
        assert!(b.scalar_r_star.abs() < 1e-10);
        // Weyl block vanishes in a conformally flat spacetime
        assert!(crate::linalg::max_abs3(&b.weyl_e) < 1e-10);
    }

    #[test]
    fn ricci_split_matches_oracle_on_catalog_metrics() {
        use rand::{Rng, SeedableRng};
        let specs = vec![
            catalog::kerr_newman(1.0, 0.5, 0.3),
            catalog::kerr(1.0, 0.8),
            catalog::reissner_nordstrom(1.0, 0.4),
            catalog::schwarzschild(1.0),
            catalog::flrw(expr::exp(expr::coord(0))).unwrap(),
            catalog::minkowski(),
        ];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for spec in &specs {
            let ranges = spec.sample_ranges();
            for _ in 0..10 {
                let x: [f64; 4] = std::array::from_fn(|a| {
                    ranges[a][0] + (ranges[a][1] - ranges[a][0]) * rng.gen::<f64>()
                });
                if !spec.contains(&x) {
                    continue;
                }
                let bundle = curvature_bundle(spec, &x, DerivMode::Analytic).unwrap();
                let sample = crate::metric::eval_sample(spec, &x, DerivMode::Analytic).unwrap();
                let m4 = oracle::metric4_sample(&sample).unwrap();
                let ricci = oracle::ricci4_from(&m4);
                let proj = oracle::project_ricci(&sample, &ricci);

                let mut scale: f64 = 1.0;
                for v in proj.spatial.iter().flatten() {
                    scale = scale.max(v.abs());
                }
                scale = scale.max(proj.time.abs());

                for i in 0..3 {
                    assert!(
                        (bundle.ricci_s0[i] - proj.mixed[i]).abs() / scale < 1e-7,
                        "mixed[{i}]: {} vs {} on {:?} at {x:?}",
                        bundle.ricci_s0[i],
                        proj.mixed[i],
                        spec.name()
                    );
                    for k in 0..3 {
                        assert!(
                            (bundle.ricci_ss[i][k] - proj.spatial[i][k]).abs() / scale < 1e-7,
                            "spatial[{i}][{k}]: {} vs {} on {:?} at {x:?}",
                            bundle.ricci_ss[i][k],
                            proj.spatial[i][k],
                            spec.name()
                        );
                    }
                }
                assert!(
                    (bundle.ricci_00 - proj.time).abs() / scale < 1e-7,
                    "time: {} vs {} on {:?} at {x:?}",
                    bundle.ricci_00,
                    proj.time,
                    spec.name()
                );
                assert!(
                    (bundle.scalar_r - ricci.scalar).abs() / ricci.scalar.abs().max(1.0) < 1e-7
                );
            }
        }
    }

    #[test]
    fn r_star_is_antisymmetric_in_the_derivative_pair() {
        let spec = catalog::kerr_newman(1.0, 0.5, 0.3);
        let b =
            curvature_bundle(&spec, &[0.0, 3.0, 1.0, 0.5], DerivMode::Analytic).unwrap();
        let scale = max4(&b.r_star).max(1.0);
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for hh in 0..3 {
                        assert!(
                            (b.r_star[i][j][k][hh] + b.r_star[i][j][hh][k]).abs() / scale < 1e-12
                        );
                        assert!(
                            (b.r_ssss[i][j][k][hh] + b.r_ssss[i][j][hh][k]).abs() / scale < 1e-12
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn trace_free_parts_are_trace_free() {
        let spec = catalog::kerr_newman(1.0, 0.5, 0.3);
        let b = curvature_bundle(&spec, &[0.0, 3.5, 1.2, 2.0], DerivMode::Analytic).unwrap();
        let mut t1 = 0.0;
        let mut t2 = 0.0;
        let mut t3 = 0.0;
        let (_, h_up) = {
            let s = crate::metric::eval_sample(&spec, &[0.0, 3.5, 1.2, 2.0], DerivMode::Analytic)
                .unwrap();
            crate::threading::spatial_metric(&s).unwrap()
        };
        for i in 0..3 {
            for k in 0..3 {
                t1 += h_up[i][k] * b.ricci_tilde[i][k];
                t2 += h_up[i][k] * b.r_tilde_s0s0[i][k];
                t3 += h_up[i][k] * b.weyl_e[i][k];
            }
        }
        assert!(t1.abs() < 1e-10, "ricci_tilde trace {t1}");
        assert!(t2.abs() < 1e-10, "r_tilde trace {t2}");
        assert!(t3.abs() < 1e-10, "weyl trace {t3}");
    }

    #[test]
    fn weyl_routes_agree() {
        let spec = catalog::kerr_newman(1.0, 0.6, 0.2);
        let x = [0.0, 4.2, 0.9, 1.4];
        let b = curvature_bundle(&spec, &x, DerivMode::Analytic).unwrap();
        let s = crate::metric::eval_sample(&spec, &x, DerivMode::Analytic).unwrap();
        let other = weyl_e_trace_free_route(&b, s.phi_sq.val);
        assert!(max_abs_diff3(&b.weyl_e, &other) < 1e-9);
    }

    #[test]
    fn skew_ricci_identity_holds() {
        let spec = catalog::kerr_newman(1.0, 0.5, 0.3);
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let x = [
                rng.gen::<f64>(),
                2.5 + 6.0 * rng.gen::<f64>(),
                0.5 + 2.0 * rng.gen::<f64>(),
                std::f64::consts::TAU * rng.gen::<f64>(),
            ];
            let res = skew_ricci_residual(&spec, &x, DerivMode::Analytic).unwrap();
            assert!(res < 1e-8, "skew residual {res} at {x:?}");
        }
        // trivially zero for the flat case
        let res = skew_ricci_residual(
            &catalog::minkowski(),
            &[0.0, 1.0, 1.0, 1.0],
            DerivMode::Analytic,
        )
        .unwrap();
        assert_eq!(res, 0.0);
    }

    #[test]
    fn charged_hole_has_traceless_source() {
        // The electromagnetic stress tensor is traceless, so the scalar
        // curvature of the charged rotating hole vanishes even though the
        // Ricci tensor does not.
        use rand::{Rng, SeedableRng};
        let spec = catalog::kerr_newman(1.0, 0.5, 0.3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let x = [
                rng.gen::<f64>(),
                2.6 + 5.0 * rng.gen::<f64>(),
                0.5 + 2.0 * rng.gen::<f64>(),
                std::f64::consts::TAU * rng.gen::<f64>(),
            ];
            let b = curvature_bundle(&spec, &x, DerivMode::Analytic).unwrap();
            assert!(b.scalar_r.abs() < 1e-10, "scalar curvature {}", b.scalar_r);
            let mut ricci_mag: f64 = 0.0;
            for i in 0..3 {
                for k in 0..3 {
                    ricci_mag = ricci_mag.max(b.ricci_ss[i][k].abs());
                }
            }
            assert!(ricci_mag > 1e-6, "Ricci should not vanish for e != 0");
        }
    }

    #[test]
    fn kerr_vacuum_makes_stationary_identities_nontrivial() {
        let spec = catalog::kerr(1.0, 0.5);
        let x = [0.0, 3.0, std::f64::consts::FRAC_PI_3, 0.0];
        let b = curvature_bundle(&spec, &x, DerivMode::Analytic).unwrap();
        // vacuum: all Ricci blocks vanish
        for i in 0..3 {
            assert!(b.ricci_s0[i].abs() < 1e-8);
            for k in 0..3 {
                assert!(b.ricci_ss[i][k].abs() < 1e-8);
            }
        }
        assert!(b.ricci_00.abs() < 1e-8);

        // so the reduced stationary expressions must vanish too
        let st = curvature_stationary(&spec, &x, DerivMode::Analytic).unwrap();
        for i in 0..3 {
            assert!(st.ricci_s0[i].abs() < 1e-8, "ricci_s0[{i}] = {}", st.ricci_s0[i]);
            for k in 0..3 {
                assert!(st.ricci_ss[i][k].abs() < 1e-8);
            }
        }
        assert!(st.ricci_00.abs() < 1e-8, "ricci_00 = {}", st.ricci_00);
    }

    #[test]
    fn stationary_shortcuts_match_the_general_path() {
        use rand::{Rng, SeedableRng};
        let spec = catalog::kerr_newman(1.0, 0.5, 0.3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let x = [
                rng.gen::<f64>(),
                2.6 + 5.0 * rng.gen::<f64>(),
                0.5 + 2.0 * rng.gen::<f64>(),
                std::f64::consts::TAU * rng.gen::<f64>(),
            ];
            let b = curvature_bundle(&spec, &x, DerivMode::Analytic).unwrap();
            let st = curvature_stationary(&spec, &x, DerivMode::Analytic).unwrap();
            assert!(max4(&b.r_ssss) > 0.0);
            let mut worst: f64 = 0.0;
            for i in 0..3 {
                worst = worst.max((b.ricci_s0[i] - st.ricci_s0[i]).abs());
                for k in 0..3 {
                    worst = worst.max((b.ricci_ss[i][k] - st.ricci_ss[i][k]).abs());
                    worst = worst.max((b.r_s0s0[i][k] - st.r_s0s0[i][k]).abs());
                    for hh in 0..3 {
                        worst = worst.max((b.r_s0ss[i][k][hh] - st.r_s0ss[i][k][hh]).abs());
                        for j in 0..3 {
                            worst =
                                worst.max((b.r_ssss[i][j][k][hh] - st.r_ssss[i][j][k][hh]).abs());
                        }
                    }
                }
            }
            worst = worst.max((b.ricci_00 - st.ricci_00).abs());
            assert!(worst < 1e-9, "stationary shortcut residual {worst} at {x:?}");
        }
    }

    #[test]
    fn static_reduction_matches_the_general_path() {
        // vanishing vorticity cases: non-rotating holes and the cosmology
        let specs = vec![
            catalog::schwarzschild(1.0),
            catalog::reissner_nordstrom(1.0, 0.4),
            catalog::flrw(expr::exp(expr::coord(0))).unwrap(),
        ];
        for spec in &specs {
            let x = if spec.name() == Some("flrw") {
                [0.4, 0.2, 0.5, 0.8]
            } else {
                [0.0, 4.0, 1.1, 0.7]
            };
            let b = curvature_bundle(spec, &x, DerivMode::Analytic).unwrap();
            let st = curvature_static(spec, &x, DerivMode::Analytic).unwrap();
            let mut worst: f64 = 0.0;
            for i in 0..3 {
                worst = worst.max((b.ricci_s0[i] - st.ricci_s0[i]).abs());
                for k in 0..3 {
                    worst = worst.max((b.ricci_ss[i][k] - st.ricci_ss[i][k]).abs());
                    worst = worst.max((b.r_s0s0[i][k] - st.r_s0s0[i][k]).abs());
                    for hh in 0..3 {
                        worst = worst.max((b.r_s0ss[i][k][hh] - st.r_s0ss[i][k][hh]).abs());
                        for j in 0..3 {
                            worst =
                                worst.max((b.r_ssss[i][j][k][hh] - st.r_ssss[i][j][k][hh]).abs());
                        }
                    }
                }
            }
            worst = worst.max((b.ricci_00 - st.ricci_00).abs());
            assert!(worst < 1e-10, "static reduction residual {worst} on {:?}", spec.name());
        }
    }
}
