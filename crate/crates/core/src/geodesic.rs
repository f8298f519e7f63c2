//! Geodesics in the threading variables, the conserved quantity
//! `K = Phi^2 (delta x0/delta lambda)`, the induced 3D force along a
//! trajectory, and the loci where integral curves of the threading field are
//! themselves geodesics.
//!
//! The integrated state is `(x^a, u^i, u0, s*)` with `u^i = dx^i/dlambda`
//! and `u0 = delta x0/delta lambda = dx^0/dlambda - Phi^-2 xi_i dx^i/dlambda`.
//! The equations of motion come from the frame decomposition of the
//! Levi-Civita connection:
//!
//! ```text
//! du^k/dl + G^k_(ij) u^i u^j + 2 u0 (Theta_i^k + Phi^2 w_i^k) u^i
//!         + u0^2 Phi^2 b^k = 0
//! du0/dl + u0 (b_i + c_i) u^i + Phi^-2 Theta_ij u^i u^j = 0
//! ```
//!
//! For stationary specs (`Theta = 0`, `a = 0`, so `b = c`) these collapse to
//! the reduced rotating-hole form with `2 u0 c_i u^i` in the time equation;
//! the general expressions above reduce to it term by term, so a single code
//! path serves both. `K` is conserved exactly along stationary-spec
//! geodesics and is monitored over every trajectory.
//!
//! The 3D arc length is carried as the auxiliary equation
//! `ds*/dlambda = sqrt(h_ij u^i u^j)` rather than by reparametrizing, which
//! keeps spatial geodesics (`ds*/dlambda -> const`, `u0 = 0`) regular.

use crate::error::{Error, Result};
use crate::fields::FieldCtx;
use crate::metric::{eval_sample, DerivMode, MetricSample, MetricSpec};
use crate::rk::{self, RkStatus};
use serde::Serialize;

/// State of a trajectory at one parameter value.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GeodesicState {
    pub lambda: f64,
    pub x: [f64; 4],
    /// Coordinate velocities dx^a/dlambda.
    pub dx: [f64; 4],
    /// Frame time component delta x0/delta lambda.
    pub delta_x0: f64,
    /// Accumulated 3D arc length.
    pub s_star: f64,
    /// ds*/dlambda at this point.
    pub ds_star: f64,
    /// Phi^2 delta_x0 (conserved along stationary-spec geodesics).
    pub k: f64,
}

impl GeodesicState {
    /// Initial state from coordinates and coordinate velocities.
    pub fn from_coordinate_velocity(
        spec: &MetricSpec,
        x: [f64; 4],
        dx: [f64; 4],
        mode: DerivMode,
    ) -> Result<GeodesicState> {
        let sample = eval_sample(spec, &x, mode)?;
        let u: [f64; 3] = [dx[1], dx[2], dx[3]];
        let mut delta_x0 = dx[0];
        for i in 0..3 {
            delta_x0 -= sample.xi[i].val / sample.phi_sq.val * u[i];
        }
        Ok(Self::assemble(&sample, x, u, delta_x0, 0.0))
    }

    /// Initial state from coordinates, spatial frame velocity and the value
    /// of the conserved quantity K (so `delta_x0 = K/Phi^2`).
    pub fn from_spatial_velocity(
        spec: &MetricSpec,
        x: [f64; 4],
        u: [f64; 3],
        k: f64,
        mode: DerivMode,
    ) -> Result<GeodesicState> {
        let sample = eval_sample(spec, &x, mode)?;
        let delta_x0 = k / sample.phi_sq.val;
        Ok(Self::assemble(&sample, x, u, delta_x0, 0.0))
    }

    fn assemble(
        sample: &MetricSample,
        x: [f64; 4],
        u: [f64; 3],
        delta_x0: f64,
        s_star: f64,
    ) -> GeodesicState {
        let phi_sq = sample.phi_sq.val;
        let mut dx0 = delta_x0;
        let mut ds_sq = 0.0;
        for i in 0..3 {
            dx0 += sample.xi[i].val / phi_sq * u[i];
            for j in 0..3 {
                let h_ij = sample.g[i][j].val + sample.xi[i].val * sample.xi[j].val / phi_sq;
                ds_sq += h_ij * u[i] * u[j];
            }
        }
        GeodesicState {
            lambda: 0.0,
            x,
            dx: [dx0, u[0], u[1], u[2]],
            delta_x0,
            s_star,
            ds_star: ds_sq.max(0.0).sqrt(),
            k: phi_sq * delta_x0,
        }
    }

    /// g(dx, dx) in the block form of the line element.
    pub fn norm(&self, sample: &MetricSample) -> f64 {
        let phi_sq = sample.phi_sq.val;
        let mut n = -phi_sq * self.delta_x0 * self.delta_x0;
        for i in 0..3 {
            for j in 0..3 {
                let h_ij = sample.g[i][j].val + sample.xi[i].val * sample.xi[j].val / phi_sq;
                n += h_ij * self.dx[i + 1] * self.dx[j + 1];
            }
        }
        n
    }
}

/// Derivatives of the trajectory state at a point.
#[derive(Clone, Copy, Debug)]
pub struct MotionDerivatives {
    /// dx^a/dlambda.
    pub dx: [f64; 4],
    /// d^2 x^a/dlambda^2 (the time slot follows from the frame split).
    pub ddx: [f64; 4],
    /// d(delta x0/delta lambda)/dlambda.
    pub d_delta_x0: f64,
    /// ds*/dlambda.
    pub ds_star: f64,
}

/// Right-hand side of the equations of motion at `(x, u, u0)`.
pub fn motion_rhs(
    spec: &MetricSpec,
    x: &[f64; 4],
    u: &[f64; 3],
    u0: f64,
    mode: DerivMode,
) -> Result<MotionDerivatives> {
    let sample = eval_sample(spec, x, mode)?;
    let ctx = FieldCtx::new(&sample)?;
    Ok(motion_rhs_from_ctx(&ctx, u, u0))
}

fn motion_rhs_from_ctx(ctx: &FieldCtx, u: &[f64; 3], u0: f64) -> MotionDerivatives {
    let phi_sq = ctx.phi_sq.val;

    let mut du = [0.0; 3];
    for k in 0..3 {
        let mut acc = u0 * u0 * phi_sq * ctx.b_up[k].v;
        for i in 0..3 {
            acc += 2.0 * u0 * ctx.gamma_t[k][i] * u[i];
            for j in 0..3 {
                acc += ctx.gamma_s[k][i][j] * u[i] * u[j];
            }
        }
        du[k] = -acc;
    }

    let mut du0 = 0.0;
    for i in 0..3 {
        du0 -= u0 * (ctx.b_co[i].v + ctx.c_co[i].v) * u[i];
        for j in 0..3 {
            du0 -= ctx.theta_lo[i][j].v * u[i] * u[j] / phi_sq;
        }
    }

    // dx^0 = u0 + P_i u^i and its lambda-derivative via the chain rule.
    let mut dx0 = u0;
    let mut ds_sq = 0.0;
    for i in 0..3 {
        dx0 += ctx.p[i].val * u[i];
        for j in 0..3 {
            ds_sq += ctx.h_lo[i][j] * u[i] * u[j];
        }
    }
    let dx = [dx0, u[0], u[1], u[2]];
    let mut ddx0 = du0;
    for i in 0..3 {
        let mut dp = 0.0;
        for a in 0..4 {
            dp += ctx.p[i].grad[a] * dx[a];
        }
        ddx0 += dp * u[i] + ctx.p[i].val * du[i];
    }

    MotionDerivatives {
        dx,
        ddx: [ddx0, du[0], du[1], du[2]],
        d_delta_x0: du0,
        ds_star: ds_sq.max(0.0).sqrt(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum TrajectoryStatus {
    Completed,
    /// Stopped at the domain-guard boundary before reaching lambda_end.
    BoundaryHit { lambda: f64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub states: Vec<GeodesicState>,
    pub status: TrajectoryStatus,
    /// max |K(lambda) - K(0)| over the recorded states.
    pub k_drift_max: f64,
    /// max |g(dx,dx)(lambda) - g(dx,dx)(0)|.
    pub norm_drift_max: f64,
    /// max |delta x0/delta lambda| (zero for spatial geodesics).
    pub delta_x0_max: f64,
}

/// Integrates the equations of motion from `init` to `lambda_end` with
/// per-step error at `tol`, recording conservation drifts along the way.
pub fn integrate(
    spec: &MetricSpec,
    init: &GeodesicState,
    lambda_end: f64,
    tol: f64,
    mode: DerivMode,
) -> Result<Trajectory> {
    // state vector: x0..x3, u1..u3, u0, s*
    let y0: [f64; 9] = [
        init.x[0],
        init.x[1],
        init.x[2],
        init.x[3],
        init.dx[1],
        init.dx[2],
        init.dx[3],
        init.delta_x0,
        init.s_star,
    ];

    let mut rhs = |_l: f64, y: &[f64; 9]| -> Result<[f64; 9]> {
        let x = [y[0], y[1], y[2], y[3]];
        let u = [y[4], y[5], y[6]];
        let sample = eval_sample(spec, &x, mode)?;
        let ctx = FieldCtx::new(&sample)?;
        let d = motion_rhs_from_ctx(&ctx, &u, y[7]);
        Ok([
            d.dx[0],
            d.dx[1],
            d.dx[2],
            d.dx[3],
            d.ddx[1],
            d.ddx[2],
            d.ddx[3],
            d.d_delta_x0,
            d.ds_star,
        ])
    };
    let guard = |_l: f64, y: &[f64; 9]| spec.contains(&[y[0], y[1], y[2], y[3]]);

    let mut states = Vec::new();
    let mut k_drift: f64 = 0.0;
    let mut norm_drift: f64 = 0.0;
    let mut delta_x0_max: f64 = init.delta_x0.abs();
    let k0 = init.k;
    let norm0 = {
        let sample = eval_sample(spec, &init.x, mode)?;
        init.norm(&sample)
    };

    let mut record = |lambda: f64, y: &[f64; 9]| -> Result<()> {
        let x = [y[0], y[1], y[2], y[3]];
        let u = [y[4], y[5], y[6]];
        let sample = eval_sample(spec, &x, mode)?;
        let mut st = GeodesicState::assemble(&sample, x, u, y[7], y[8]);
        st.lambda = lambda;
        k_drift = k_drift.max((st.k - k0).abs());
        norm_drift = norm_drift.max((st.norm(&sample) - norm0).abs());
        delta_x0_max = delta_x0_max.max(st.delta_x0.abs());
        states.push(st);
        Ok(())
    };
    record(init.lambda, &y0)?;

    let mut record_err = None;
    let out = rk::integrate_adaptive(
        &mut rhs,
        &guard,
        init.lambda,
        y0,
        init.lambda + lambda_end,
        tol,
        &mut |l, y| match record(l, y) {
            Ok(()) => true,
            Err(e) => {
                record_err = Some(e);
                false
            }
        },
    )?;
    if let Some(e) = record_err {
        return Err(e);
    }

    let status = match out.status {
        RkStatus::Completed => TrajectoryStatus::Completed,
        RkStatus::BoundaryHit | RkStatus::Stopped => TrajectoryStatus::BoundaryHit { lambda: out.t },
    };
    Ok(Trajectory {
        states,
        status,
        k_drift_max: k_drift,
        norm_drift_max: norm_drift,
        delta_x0_max,
    })
}

/// The induced 3D force at a trajectory point.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ForceSample {
    /// Contravariant force components F^k.
    pub f_up: [f64; 3],
    pub s_star: f64,
}

/// Force along a non-spatial geodesic, in the affine-parameter form
/// `F^k = -( K w_i^k u^i + K^2 Phi^-2 c^k + (s''/s') u^k ) / s'^2`.
/// `Err(SpatialGeodesic)` when `ds*/dlambda` vanishes.
pub fn force3(spec: &MetricSpec, state: &GeodesicState, mode: DerivMode) -> Result<ForceSample> {
    let sample = eval_sample(spec, &state.x, mode)?;
    let ctx = FieldCtx::new(&sample)?;
    let u = [state.dx[1], state.dx[2], state.dx[3]];
    let (ds, dds) = arc_rates(&ctx, &u, state.delta_x0);
    if ds < 1e-12 {
        return Err(Error::SpatialGeodesic);
    }
    let k_const = state.k;
    let phi_sq = ctx.phi_sq.val;

    let mut f = [0.0; 3];
    for k in 0..3 {
        let mut c_up = 0.0;
        for hh in 0..3 {
            c_up += ctx.h_up[k][hh] * ctx.c_co[hh].v;
        }
        let mut s = k_const * k_const / phi_sq * c_up + dds / ds * u[k];
        for i in 0..3 {
            s += k_const * ctx.omega_mixed[k][i].v * u[i];
        }
        f[k] = -s / (ds * ds);
    }
    Ok(ForceSample {
        f_up: f,
        s_star: state.s_star,
    })
}

/// `(ds*/dlambda, d^2 s*/dlambda^2)` along a geodesic through this state.
fn arc_rates(ctx: &FieldCtx, u: &[f64; 3], u0: f64) -> (f64, f64) {
    let d = motion_rhs_from_ctx(ctx, u, u0);
    let mut ds_sq = 0.0;
    let mut d_ds_sq = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            ds_sq += ctx.h_lo[i][j] * u[i] * u[j];
            let mut dh = 0.0;
            for a in 0..4 {
                dh += ctx.h[i][j].grad[a] * d.dx[a];
            }
            d_ds_sq += dh * u[i] * u[j] + 2.0 * ctx.h_lo[i][j] * d.ddx[i + 1] * u[j];
        }
    }
    let ds = ds_sq.max(0.0).sqrt();
    let dds = if ds > 0.0 { d_ds_sq / (2.0 * ds) } else { 0.0 };
    (ds, dds)
}

/// Max residual of the force identity
/// `K^2 Phi^-3 dPhi/dlambda + (ds*/dl)(d^2 s*/dl^2) = 0` over a trajectory.
pub fn force_identity_residual(
    spec: &MetricSpec,
    trajectory: &Trajectory,
    mode: DerivMode,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for st in &trajectory.states {
        let sample = eval_sample(spec, &st.x, mode)?;
        let ctx = FieldCtx::new(&sample)?;
        let u = [st.dx[1], st.dx[2], st.dx[3]];
        let (ds, dds) = arc_rates(&ctx, &u, st.delta_x0);
        // dPhi/dlambda = Phi c_i u^i
        let phi = ctx.phi_sq.val.sqrt();
        let mut dphi = 0.0;
        for i in 0..3 {
            dphi += phi * ctx.c_co[i].v * u[i];
        }
        let residual = st.k * st.k / (phi * phi * phi) * dphi + ds * dds;
        worst = worst.max(residual.abs());
    }
    Ok(worst)
}

/// One locus on which integral curves of the threading field are geodesics.
#[derive(Clone, Debug, Serialize)]
pub struct GeodesicLocus {
    pub family: LocusFamily,
    pub x1: f64,
    /// Fixed polar angle, when the locus is confined to one.
    pub x2: Option<f64>,
    pub inside_horizon: bool,
    pub on_axis: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LocusFamily {
    /// Equatorial ring x2 = pi/2.
    Equatorial,
    /// Polar-axis solution x2 = 0.
    Axis,
    /// Whole hypersurface of constant x1 (non-rotating case).
    Hypersurface,
}

/// Finds the zero set of the geodesic covector for the rotating-charged
/// catalog family by root-finding the numerator of `b_1` on each branch of
/// `b_2 = 0`. Empty for the uncharged non-rotating hole.
pub fn geodesic_locus_check(spec: &MetricSpec) -> Result<Vec<GeodesicLocus>> {
    let family = spec.name().unwrap_or("");
    if !matches!(
        family,
        "kerr_newman" | "kerr" | "reissner_nordstrom" | "schwarzschild"
    ) {
        return Err(Error::Invalid(
            "geodesic loci are defined for the black-hole catalog family".into(),
        ));
    }
    let m = spec.param("m").unwrap_or(0.0);
    let a = spec.param("a").unwrap_or(0.0);
    let e = spec.param("e").unwrap_or(0.0);
    if m <= 0.0 {
        return Err(Error::Invalid("mass must be positive".into()));
    }

    let horizon = {
        let disc = m * m - a * a - e * e;
        (disc >= 0.0).then(|| m + disc.sqrt())
    };
    let inside = |r: f64| horizon.is_some_and(|rh| r < rh);

    // numerator of b_1 at fixed polar angle
    let f = |r: f64, cos_sq: f64| -> f64 {
        let sigma = r * r + a * a * cos_sq;
        r * (2.0 * m * r - e * e) - m * sigma
    };

    let mut out = Vec::new();
    let bracket = |cos_sq: f64| -> Option<f64> {
        // scan for a sign change on (0, 20 m], then bisect
        let g = |r: f64| f(r, cos_sq);
        let mut lo = 1e-9 * m;
        let mut prev = g(lo);
        let n = 4000;
        for i in 1..=n {
            let r = 20.0 * m * i as f64 / n as f64;
            let cur = g(r);
            if prev * cur <= 0.0 && cur.is_finite() {
                let (mut rl, mut rr) = (lo, r);
                for _ in 0..200 {
                    let mid = 0.5 * (rl + rr);
                    if g(rl) * g(mid) <= 0.0 {
                        rr = mid;
                    } else {
                        rl = mid;
                    }
                }
                return Some(0.5 * (rl + rr));
            }
            lo = r;
            prev = cur;
        }
        None
    };

    if a == 0.0 {
        // b_2 vanishes identically; the locus is the whole hypersurface
        // x1 = e^2/m (empty when e = 0).
        if e != 0.0 {
            if let Some(r) = bracket(0.0) {
                out.push(GeodesicLocus {
                    family: LocusFamily::Hypersurface,
                    x1: r,
                    x2: None,
                    inside_horizon: inside(r),
                    on_axis: false,
                });
            }
        }
        return Ok(out);
    }

    // equatorial branch (cos x2 = 0)
    if let Some(r) = bracket(0.0) {
        if r > 1e-6 * m {
            out.push(GeodesicLocus {
                family: LocusFamily::Equatorial,
                x1: r,
                x2: Some(std::f64::consts::FRAC_PI_2),
                inside_horizon: inside(r),
                on_axis: false,
            });
        }
    }
    // axis branch (sin x2 = 0)
    if let Some(r) = bracket(1.0) {
        if r > 1e-6 * m {
            out.push(GeodesicLocus {
                family: LocusFamily::Axis,
                x1: r,
                x2: Some(0.0),
                inside_horizon: inside(r),
                on_axis: true,
            });
        }
    }
    Ok(out)
}
