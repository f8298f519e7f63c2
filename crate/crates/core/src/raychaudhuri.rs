//! Expansion-rate balances, time-derivative identities for the kinematic
//! fields, and the focusing-interval machinery.
//!
//! The central balance is the generalized expansion-rate equation for an
//! arbitrary (not necessarily unit) threading field:
//!
//! ```text
//! dTheta/dx0 = Phi^4 w^2 - s^2 - Theta^2/3 + Phi^2 (div b + b^2) - R_00
//! ```
//!
//! together with its scalar-curvature form
//!
//! ```text
//! dTheta/dx0 = -Theta^2 + Phi^2 (b^2 + div b + R - R*) + R_00
//! ```
//!
//! Both are evaluated as pointwise residuals; they are algebraically
//! equivalent, so their residuals also agree with each other. Note the
//! curvature term enters the two forms with opposite signs — that is not a
//! typo, the difference is absorbed by `R - R*`; the residual suite checks
//! each form exactly as stated.
//!
//! For a hypersurface-orthogonal geodesic congruence of a unit field the
//! second form collapses to `dTheta/dtau = -Theta^2 + R - R* + R_00`, the
//! equation behind the focusing classifier: with `Theta_0 < 0` and the
//! strong energy condition, the expansion diverges within proper time
//! `3/|Theta_0|`, and comparison arguments pin the divergence either to
//! `[1/|Theta_0|, 3/|Theta_0|]` or to `[0, 1/|Theta_0|)` depending on the
//! sign of `R - R*` and whether `Ric(xi, xi)` compensates it.

use crate::curvature::{bundle_from_ctx, weyl_e_trace_free_route};
use crate::error::{Error, Result};
use crate::expr::{Expr, Params};
use crate::fields::FieldCtx;
use crate::linalg::Mat3;
use crate::metric::{eval_sample, DerivMode, MetricSpec};
use crate::rk::{self, RkStatus};
use serde::Serialize;

/// Residuals of the expansion-rate balances at one point.
#[derive(Clone, Debug, Serialize)]
pub struct RaychaudhuriReport {
    /// dTheta/dx0 (time covariant derivative of the expansion scalar).
    pub theta_dot: f64,
    /// Right side of the kinematic form.
    pub rhs_kinematic: f64,
    /// Right side of the scalar-curvature form.
    pub rhs_scalar_curvature: f64,
    pub residual_kinematic: f64,
    pub residual_scalar_curvature: f64,
    pub omega_sq: f64,
    pub sigma_sq: f64,
    pub b_sq: f64,
    pub div_b: f64,
    /// Unit-field specialization residual, when Phi^2 = 1.
    pub residual_unit: Option<f64>,
    /// Geodesic-congruence specialization residual, when b = 0.
    pub residual_geodesic: Option<f64>,
}

pub fn raychaudhuri_residual(
    spec: &MetricSpec,
    point: &[f64; 4],
    mode: DerivMode,
) -> Result<RaychaudhuriReport> {
    let sample = eval_sample(spec, point, mode)?;
    let ctx = FieldCtx::new(&sample)?;
    let bundle = bundle_from_ctx(&ctx);

    let phi_sq = ctx.phi_sq.val;
    let theta = ctx.theta_scalar.v;
    let theta_dot = ctx.theta_scalar.d[0];
    let omega_sq = ctx.double_contraction(&ctx.omega);
    let sigma_sq = ctx.double_contraction(&ctx.sigma);
    let b_sq = ctx.b_sq();
    let div_b = ctx.div_vector(&ctx.b_up);
    let r_00 = bundle.ricci_00;

    let rhs_kinematic = phi_sq * phi_sq * omega_sq - sigma_sq - theta * theta / 3.0
        + phi_sq * (div_b + b_sq)
        - r_00;
    let rhs_scalar_curvature = -theta * theta
        + phi_sq * (b_sq + div_b + bundle.scalar_r - bundle.scalar_r_star)
        + r_00;

    let residual_unit = ((phi_sq - 1.0).abs() < 1e-12).then(|| {
        let rhs = omega_sq - sigma_sq - theta * theta / 3.0 + div_b + b_sq - r_00;
        (theta_dot - rhs).abs()
    });
    let max_b = ctx.b_co.iter().fold(0.0f64, |m, b| m.max(b.v.abs()));
    let residual_geodesic = (max_b < 1e-10).then(|| {
        let rhs = phi_sq * phi_sq * omega_sq - sigma_sq - theta * theta / 3.0 - r_00;
        (theta_dot - rhs).abs()
    });

    Ok(RaychaudhuriReport {
        theta_dot,
        rhs_kinematic,
        rhs_scalar_curvature,
        residual_kinematic: (theta_dot - rhs_kinematic).abs(),
        residual_scalar_curvature: (theta_dot - rhs_scalar_curvature).abs(),
        omega_sq,
        sigma_sq,
        b_sq,
        div_b,
        residual_unit,
        residual_geodesic,
    })
}

/// Time covariant derivatives of the kinematic fields and the residuals of
/// every identity expressing them through curvature, Ricci or Weyl data.
#[derive(Clone, Debug, Serialize)]
pub struct KinematicRates {
    pub omega_rate: Mat3,
    pub theta_rate: Mat3,
    pub sigma_rate: Mat3,
    /// (name, max-abs residual) per identity.
    pub residuals: Vec<(String, f64)>,
}

pub fn kinematic_rates(
    spec: &MetricSpec,
    point: &[f64; 4],
    mode: DerivMode,
) -> Result<KinematicRates> {
    let sample = eval_sample(spec, point, mode)?;
    let ctx = FieldCtx::new(&sample)?;
    let bundle = bundle_from_ctx(&ctx);

    let phi_sq = ctx.phi_sq.val;
    let theta = ctx.theta_scalar.v;
    let om = |i: usize, j: usize| ctx.omega[i][j].v;
    let th = |i: usize, j: usize| ctx.theta_lo[i][j].v;
    let sg = |i: usize, j: usize| ctx.sigma[i][j].v;
    let b = |i: usize| ctx.b_co[i].v;
    let h = |i: usize, j: usize| ctx.h_lo[i][j];

    let omega_rate = ctx.cov_time_bilinear(&ctx.omega);
    let theta_rate = ctx.cov_time_bilinear(&ctx.theta_lo);
    let sigma_rate = ctx.cov_time_bilinear(&ctx.sigma);
    let b_cov = ctx.cov_spatial_covector(&ctx.b_co);

    let omega_sq = ctx.double_contraction(&ctx.omega);
    let sigma_sq = ctx.double_contraction(&ctx.sigma);
    let b_sq = ctx.b_sq();
    let div_b = ctx.div_vector(&ctx.b_up);

    let weyl_e = &bundle.weyl_e;
    let e_alt = weyl_e_trace_free_route(&bundle, phi_sq);

    let worst = |lhs: &Mat3, rhs: &Mat3| -> f64 {
        crate::linalg::max_abs_diff3(lhs, rhs)
    };

    let mut residuals = Vec::new();

    // Vorticity rate: antisymmetrized gradient of b plus expansion mixing.
    let mut rhs = [[0.0; 3]; 3];
    for i in 0..3 {
        for k in 0..3 {
            let mut s = 0.5 * (b_cov[i][k] - b_cov[k][i]);
            for hh in 0..3 {
                s += om(k, hh) * ctx.theta_mixed[hh][i].v - om(i, hh) * ctx.theta_mixed[hh][k].v;
            }
            rhs[i][k] = s;
        }
    }
    residuals.push((
        "vorticity rate: expansion-mixing form".to_string(),
        worst(&omega_rate, &rhs),
    ));

    // Vorticity rate through shear and the expansion scalar.
    let mut rhs = [[0.0; 3]; 3];
    for i in 0..3 {
        for k in 0..3 {
            let mut s = 0.5 * (b_cov[i][k] - b_cov[k][i]) - 2.0 / 3.0 * theta * om(i, k);
            for hh in 0..3 {
                s += om(k, hh) * ctx.sigma_mixed[hh][i].v - om(i, hh) * ctx.sigma_mixed[hh][k].v;
            }
            rhs[i][k] = s;
        }
    }
    residuals.push((
        "vorticity rate: shear-mixing form".to_string(),
        worst(&omega_rate, &rhs),
    ));

    // The symmetric building block Phi^2 { b_i b_k + b_((i|k)) } shared by
    // every expansion/shear identity.
    let bb = |i: usize, k: usize| b(i) * b(k) + 0.5 * (b_cov[i][k] + b_cov[k][i]);
    let omom = |i: usize, k: usize| {
        let mut s = 0.0;
        for hh in 0..3 {
            s += om(i, hh) * ctx.omega_mixed[hh][k].v;
        }
        s
    };
    let thth = |i: usize, k: usize| {
        let mut s = 0.0;
        for hh in 0..3 {
            s += th(i, hh) * ctx.theta_mixed[hh][k].v;
        }
        s
    };
    let sgsg = |i: usize, k: usize| {
        let mut s = 0.0;
        for hh in 0..3 {
            s += sg(i, hh) * ctx.sigma_mixed[hh][k].v;
        }
        s
    };

    // Expansion rate through the double-time curvature block.
    let mut rhs = [[0.0; 3]; 3];
    for i in 0..3 {
        for k in 0..3 {
            rhs[i][k] = phi_sq * (bb(i, k) - phi_sq * omom(i, k))
                - thth(i, k)
                - bundle.r_s0s0[i][k];
        }
    }
    residuals.push((
        "expansion rate: curvature form".to_string(),
        worst(&theta_rate, &rhs),
    ));

    // Expansion rate through the Ricci difference.
    let mut rhs = [[0.0; 3]; 3];
    for i in 0..3 {
        for k in 0..3 {
            rhs[i][k] = -theta * th(i, k)
                + phi_sq * (bb(i, k) + bundle.ricci_ss[i][k] - bundle.ricci_star[i][k]);
        }
    }
    residuals.push((
        "expansion rate: ricci form".to_string(),
        worst(&theta_rate, &rhs),
    ));

    // Expansion rate through the electric Weyl block.
    let mut rhs = [[0.0; 3]; 3];
    for i in 0..3 {
        for k in 0..3 {
            rhs[i][k] = phi_sq * (bb(i, k) - phi_sq * omom(i, k))
                - thth(i, k)
                - weyl_e[i][k]
                + 0.5 * phi_sq * bundle.ricci_tilde[i][k]
                - bundle.ricci_00 * h(i, k) / 3.0;
        }
    }
    residuals.push((
        "expansion rate: weyl form".to_string(),
        worst(&theta_rate, &rhs),
    ));

    // Shear rate through the trace-free double-time block.
    let mut rhs = [[0.0; 3]; 3];
    for i in 0..3 {
        for k in 0..3 {
            rhs[i][k] = phi_sq
                * (bb(i, k)
                    - (div_b + b_sq) * h(i, k) / 3.0
                    - phi_sq * (omom(i, k) + omega_sq * h(i, k) / 3.0))
                + sigma_sq * h(i, k) / 3.0
                - sgsg(i, k)
                - 2.0 / 3.0 * theta * sg(i, k)
                - bundle.r_tilde_s0s0[i][k];
        }
    }
    residuals.push((
        "shear rate: curvature form".to_string(),
        worst(&sigma_rate, &rhs),
    ));

    // Shear rate through the Ricci difference.
    let mut rhs = [[0.0; 3]; 3];
    for i in 0..3 {
        for k in 0..3 {
            rhs[i][k] = -theta * sg(i, k)
                + (sigma_sq - 2.0 / 3.0 * theta * theta + bundle.ricci_00) * h(i, k) / 3.0
                + phi_sq
                    * (bb(i, k) - (div_b + b_sq + phi_sq * omega_sq) * h(i, k) / 3.0
                        + bundle.ricci_ss[i][k]
                        - bundle.ricci_star[i][k]);
        }
    }
    residuals.push((
        "shear rate: ricci form".to_string(),
        worst(&sigma_rate, &rhs),
    ));

    // Shear rate through the electric Weyl block.
    let mut rhs = [[0.0; 3]; 3];
    for i in 0..3 {
        for k in 0..3 {
            rhs[i][k] = phi_sq
                * (bb(i, k)
                    - (div_b + b_sq) * h(i, k) / 3.0
                    - phi_sq * (omom(i, k) + omega_sq * h(i, k) / 3.0))
                + sigma_sq * h(i, k) / 3.0
                - sgsg(i, k)
                - 2.0 / 3.0 * theta * sg(i, k)
                - weyl_e[i][k]
                + 0.5 * phi_sq * bundle.ricci_tilde[i][k];
        }
    }
    residuals.push((
        "shear rate: weyl form".to_string(),
        worst(&sigma_rate, &rhs),
    ));

    // The two Weyl routes feed several identities; keep their agreement in
    // the same report.
    residuals.push((
        "electric weyl: direct vs trace-free route".to_string(),
        crate::linalg::max_abs_diff3(weyl_e, &e_alt),
    ));

    Ok(KinematicRates {
        omega_rate,
        theta_rate,
        sigma_rate,
        residuals,
    })
}

// ---------------------------------------------------------------------------
// Focusing
// ---------------------------------------------------------------------------

/// Which comparison argument pinned the divergence window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FocusingRegime {
    /// `R >= R*`: window `[1/|Theta0|, 3/|Theta0|]`.
    LateWindow,
    /// `R < R*` but `Ric(xi, xi)` covers the gap: same window.
    CompensatedLateWindow,
    /// `R < R*` and `Ric(xi, xi)` below the gap: window `[0, 1/|Theta0|)`.
    EarlyWindow,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FocusingClassification {
    pub regime: FocusingRegime,
    pub lower: f64,
    pub upper: f64,
    /// True when the upper end is excluded (the early window).
    pub upper_exclusive: bool,
}

/// Classifies the proper-time window in which the expansion must diverge,
/// given the initial expansion and the three pointwise curvature conditions
/// as flags asserted by the caller.
pub fn focusing_classify(
    theta0: f64,
    strong_energy: bool,
    r_ge_rstar: bool,
    ric_ge_gap: bool,
) -> Result<FocusingClassification> {
    if !theta0.is_finite() || theta0 >= 0.0 {
        return Err(Error::HypothesisViolated(format!(
            "initial expansion must be negative, got {theta0}"
        )));
    }
    if !strong_energy {
        return Err(Error::HypothesisViolated(
            "Ric(xi, xi) >= 0 along the congruence is required".into(),
        ));
    }
    let inv = 1.0 / theta0.abs();
    let (regime, lower, upper, upper_exclusive) = if r_ge_rstar {
        (FocusingRegime::LateWindow, inv, 3.0 * inv, false)
    } else if ric_ge_gap {
        (FocusingRegime::CompensatedLateWindow, inv, 3.0 * inv, false)
    } else {
        (FocusingRegime::EarlyWindow, 0.0, inv, true)
    };
    Ok(FocusingClassification {
        regime,
        lower,
        upper,
        upper_exclusive,
    })
}

/// A 1D focusing experiment: initial expansion plus the three curvature
/// profiles as functions of proper time.
#[derive(Clone, Debug)]
pub struct FocusingScenario {
    pub theta0: f64,
    pub ric00: Expr,
    pub r: Expr,
    pub r_star: Expr,
    pub tau_max: f64,
}

impl FocusingScenario {
    /// Source term `s(tau) = R - R* + Ric00` of the comparison equation.
    pub fn source(&self, tau: f64) -> Result<f64> {
        let x = [tau, 0.0, 0.0, 0.0];
        let params = Params::new();
        Ok(self.r.eval(&x, &params)? - self.r_star.eval(&x, &params)?
            + self.ric00.eval(&x, &params)?)
    }

    /// Evaluates the classifier flags pointwise on `[0, tau_end]`.
    pub fn flags(&self, tau_end: f64, samples: usize) -> Result<(bool, bool, bool)> {
        let params = Params::new();
        let mut strong_energy = true;
        let mut r_ge_rstar = true;
        let mut ric_ge_gap = true;
        for i in 0..=samples {
            let tau = tau_end * i as f64 / samples as f64;
            let x = [tau, 0.0, 0.0, 0.0];
            let ric = self.ric00.eval(&x, &params)?;
            let gap = self.r_star.eval(&x, &params)? - self.r.eval(&x, &params)?;
            strong_energy &= ric >= 0.0;
            r_ge_rstar &= gap <= 0.0;
            ric_ge_gap &= ric >= gap;
        }
        Ok((strong_energy, r_ge_rstar, ric_ge_gap))
    }
}

/// Threshold beyond which the expansion counts as divergent.
pub const BLOWUP_THRESHOLD: f64 = 1e12;

#[derive(Clone, Debug, Serialize)]
pub struct FocusingOutcome {
    /// (tau, Theta) at every accepted integrator step up to the stop.
    pub samples: Vec<(f64, f64)>,
    /// Estimated divergence time.
    pub blow_up: f64,
}

/// Integrates `dTheta/dtau = -Theta^2 + s(tau)` adaptively and reports the
/// divergence time, refined by bisecting the threshold crossing and adding
/// the `1/|Theta|` tail of the dominant balance.
pub fn focusing_evolve(scenario: &FocusingScenario) -> Result<FocusingOutcome> {
    if scenario.tau_max <= 0.0 {
        return Err(Error::Invalid("tau_max must be positive".into()));
    }
    if !scenario.theta0.is_finite() || scenario.theta0 >= 0.0 {
        return Err(Error::HypothesisViolated(format!(
            "initial expansion must be negative, got {}",
            scenario.theta0
        )));
    }
    let mut rhs = |tau: f64, y: &[f64; 1]| -> Result<[f64; 1]> {
        Ok([-y[0] * y[0] + scenario.source(tau)?])
    };
    let guard = |_: f64, _: &[f64; 1]| true;
    let mut samples = Vec::new();
    samples.push((0.0, scenario.theta0));
    let out = rk::integrate_adaptive(
        &mut rhs,
        &guard,
        0.0,
        [scenario.theta0],
        scenario.tau_max,
        1e-12,
        &mut |tau, y| {
            samples.push((tau, y[0]));
            y[0].abs() < BLOWUP_THRESHOLD
        },
    )?;

    if out.status != RkStatus::Stopped {
        return Err(Error::NoBlowup(scenario.tau_max));
    }

    // Refine the crossing: restart from the last sample below threshold and
    // bisect the step span until the crossing is pinned to 1e-8.
    let (mut lo_tau, mut lo_theta) = samples
        .iter()
        .rev()
        .find(|(_, th)| th.abs() < BLOWUP_THRESHOLD)
        .copied()
        .unwrap_or((0.0, scenario.theta0));
    let mut hi_tau = out.t;
    for _ in 0..64 {
        if hi_tau - lo_tau < 1e-8 * hi_tau.max(1e-6) {
            break;
        }
        let mid = 0.5 * (lo_tau + hi_tau);
        if mid <= lo_tau || mid >= hi_tau {
            break;
        }
        let probe = rk::integrate_adaptive(
            &mut rhs,
            &guard,
            lo_tau,
            [lo_theta],
            mid,
            1e-12,
            &mut |_, y| y[0].abs() < BLOWUP_THRESHOLD,
        )?;
        if probe.status == RkStatus::Stopped {
            hi_tau = probe.t;
        } else {
            lo_tau = probe.t;
            lo_theta = probe.y[0];
        }
    }

    // Past the threshold the quadratic term dominates any bounded source,
    // so the remaining time to divergence is 1/|Theta| up to O(s/Theta^3).
    let blow_up = hi_tau + 1.0 / BLOWUP_THRESHOLD;
    Ok(FocusingOutcome { samples, blow_up })
}

/// Parses a focusing scenario from JSON: `theta0`, `tau_max`, and the three
/// profiles as expressions in `tau`.
pub fn parse_scenario_json(text: &str) -> Result<FocusingScenario> {
    #[derive(serde::Deserialize)]
    struct ScenarioFile {
        theta0: f64,
        #[serde(default = "zero_expr")]
        ric00: String,
        #[serde(default = "zero_expr")]
        r: String,
        #[serde(default = "zero_expr")]
        r_star: String,
        tau_max: f64,
    }
    fn zero_expr() -> String {
        "0".to_string()
    }
    let file: ScenarioFile = serde_json::from_str(text)?;
    let parse = |s: &str| {
        crate::expr::parse_sexpr(
            s,
            crate::expr::VarTable::PROPER_TIME,
            &std::collections::BTreeMap::new(),
        )
    };
    Ok(FocusingScenario {
        theta0: file.theta0,
        ric00: parse(&file.ric00)?,
        r: parse(&file.r)?,
        r_star: parse(&file.r_star)?,
        tau_max: file.tau_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::expr;
    use approx::assert_relative_eq;

    #[test]
    fn stationary_balance_on_kerr_newman() {
        // Theta = 0 everywhere, so the right side must cancel on its own.
        let spec = catalog::kerr_newman(1.0, 0.5, 0.3);
        let x = [0.0, 3.0, std::f64::consts::FRAC_PI_3, 0.0];
        let rep = raychaudhuri_residual(&spec, &x, DerivMode::Analytic).unwrap();
        assert_eq!(rep.theta_dot, 0.0);
        assert!(rep.residual_kinematic < 1e-7, "{}", rep.residual_kinematic);
        assert!(
            rep.residual_scalar_curvature < 1e-7,
            "{}",
            rep.residual_scalar_curvature
        );
        assert!(rep.omega_sq > 0.0);
        assert!(rep.b_sq > 0.0);
    }

    #[test]
    fn minkowski_balance_is_trivial() {
        let spec = catalog::minkowski();
        let rep =
            raychaudhuri_residual(&spec, &[0.0, 1.0, 1.0, 1.0], DerivMode::Analytic).unwrap();
        assert_eq!(rep.theta_dot, 0.0);
        assert_eq!(rep.rhs_kinematic, 0.0);
        assert_eq!(rep.residual_kinematic, 0.0);
        assert_eq!(rep.residual_unit, Some(0.0));
        assert_eq!(rep.residual_geodesic, Some(0.0));
    }

    #[test]
    fn exponential_cosmology_time_ricci_from_the_balance() {
        // Theta = 3 is constant and sigma = omega = b = 0, so the geodesic
        // unit-field balance forces R_00 = -Theta^2/3 = -3.
        let spec = catalog::flrw(expr::exp(expr::coord(0))).unwrap();
        let x = [0.2, 0.4, 0.6, 0.8];
        let rep = raychaudhuri_residual(&spec, &x, DerivMode::Analytic).unwrap();
        assert!(rep.theta_dot.abs() < 1e-10);
        assert!(rep.residual_kinematic < 1e-9);
        assert!(rep.residual_scalar_curvature < 1e-9);
        assert!(rep.residual_unit.unwrap() < 1e-9);
        assert!(rep.residual_geodesic.unwrap() < 1e-9);
        let bundle =
            crate::curvature::curvature_bundle(&spec, &x, DerivMode::Analytic).unwrap();
        assert_relative_eq!(bundle.ricci_00, -3.0, epsilon = 1e-9);
    }

    #[test]
    fn the_two_balance_forms_agree() {
        use rand::{Rng, SeedableRng};
        let spec = catalog::kerr_newman(1.0, 0.6, 0.25);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let x = [
                rng.gen::<f64>(),
                2.6 + 5.0 * rng.gen::<f64>(),
                0.5 + 2.0 * rng.gen::<f64>(),
                std::f64::consts::TAU * rng.gen::<f64>(),
            ];
            let rep = raychaudhuri_residual(&spec, &x, DerivMode::Analytic).unwrap();
            assert!(
                (rep.rhs_kinematic - rep.rhs_scalar_curvature).abs() < 1e-9,
                "forms differ at {x:?}"
            );
        }
    }

    #[test]
    fn kinematic_rate_identities_on_catalog_metrics() {
        use rand::{Rng, SeedableRng};
        let specs = vec![
            catalog::kerr_newman(1.0, 0.5, 0.3),
            catalog::flrw(expr::exp(expr::coord(0))).unwrap(),
        ];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for spec in &specs {
            let ranges = spec.sample_ranges();
            for _ in 0..5 {
                let x: [f64; 4] = std::array::from_fn(|a| {
                    ranges[a][0] + (ranges[a][1] - ranges[a][0]) * rng.gen::<f64>()
                });
                if !spec.contains(&x) {
                    continue;
                }
                let rates = kinematic_rates(spec, &x, DerivMode::Analytic).unwrap();
                for (name, residual) in &rates.residuals {
                    assert!(
                        *residual < 1e-7,
                        "{name} residual {residual} on {:?} at {x:?}",
                        spec.name()
                    );
                }
            }
        }
    }

    #[test]
    fn static_metric_rates_vanish() {
        let spec = catalog::schwarzschild(1.0);
        let rates =
            kinematic_rates(&spec, &[0.0, 4.0, 1.2, 0.3], DerivMode::Analytic).unwrap();
        assert!(crate::linalg::max_abs3(&rates.omega_rate) < 1e-9);
        assert!(crate::linalg::max_abs3(&rates.theta_rate) < 1e-9);
        assert!(crate::linalg::max_abs3(&rates.sigma_rate) < 1e-9);
        for (name, residual) in &rates.residuals {
            assert!(*residual < 1e-9, "{name}: {residual}");
        }
    }

    #[test]
    fn classifier_reproduces_the_three_windows() {
        let c = focusing_classify(-2.0, true, true, false).unwrap();
        assert_eq!(c.regime, FocusingRegime::LateWindow);
        assert_eq!((c.lower, c.upper, c.upper_exclusive), (0.5, 1.5, false));

        let c = focusing_classify(-2.0, true, false, true).unwrap();
        assert_eq!(c.regime, FocusingRegime::CompensatedLateWindow);
        assert_eq!((c.lower, c.upper, c.upper_exclusive), (0.5, 1.5, false));

        let c = focusing_classify(-2.0, true, false, false).unwrap();
        assert_eq!(c.regime, FocusingRegime::EarlyWindow);
        assert_eq!((c.lower, c.upper, c.upper_exclusive), (0.0, 0.5, true));

        assert!(matches!(
            focusing_classify(1.0, true, true, true),
            Err(Error::HypothesisViolated(_))
        ));
        assert!(matches!(
            focusing_classify(-1.0, false, true, true),
            Err(Error::HypothesisViolated(_))
        ));
    }

    fn constant_scenario(theta0: f64, s: f64, tau_max: f64) -> FocusingScenario {
        FocusingScenario {
            theta0,
            ric00: expr::c(s),
            r: expr::c(0.0),
            r_star: expr::c(0.0),
            tau_max,
        }
    }

    #[test]
    fn pure_quadratic_blowup_at_half() {
        // dTheta/dtau = -Theta^2 with Theta0 = -2 diverges at tau = 1/2.
        let out = focusing_evolve(&constant_scenario(-2.0, 0.0, 1.0)).unwrap();
        assert!((out.blow_up - 0.5).abs() < 1e-6, "blow-up {}", out.blow_up);
        assert!(out.samples.len() > 10);
    }

    #[test]
    fn negative_source_accelerates_the_divergence() {
        // s = -3: closed form gives tau_b = (pi/2 - atan(2/sqrt 3))/sqrt 3.
        let out = focusing_evolve(&constant_scenario(-2.0, -3.0, 1.0)).unwrap();
        let expected = (std::f64::consts::FRAC_PI_2 - (2.0 / 3.0f64.sqrt()).atan())
            / 3.0f64.sqrt();
        assert_relative_eq!(out.blow_up, expected, epsilon = 1e-6);
        assert!(out.blow_up < 0.5);
    }

    #[test]
    fn positive_source_delays_the_divergence() {
        // s = 1: tau_b = ln((Theta0 - 1)/(Theta0 + 1)) / 2 = ln(3)/2.
        let out = focusing_evolve(&constant_scenario(-2.0, 1.0, 2.0)).unwrap();
        assert_relative_eq!(out.blow_up, 3.0f64.ln() / 2.0, epsilon = 1e-6);
    }

    #[test]
    fn bounded_expansion_reports_no_blowup() {
        let err = focusing_evolve(&constant_scenario(-2.0, 0.0, 0.4));
        assert!(matches!(err, Err(Error::NoBlowup(_))));
    }

    #[test]
    fn blow_up_lands_in_the_classified_window() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..12 {
            let theta0 = -(1.0 + 3.0 * rng.gen::<f64>());
            // sources in [0, 2 theta0^2 / 3] keep the late-window hypotheses
            let s = rng.gen::<f64>() * 2.0 * theta0 * theta0 / 3.0;
            let scenario = constant_scenario(theta0, s, 6.0 / theta0.abs());
            let out = focusing_evolve(&scenario).unwrap();
            let (se, rge, gap) = scenario.flags(out.blow_up, 64).unwrap();
            let class = focusing_classify(theta0, se, rge, gap).unwrap();
            assert!(
                out.blow_up >= class.lower - 1e-6 && out.blow_up <= class.upper + 1e-6,
                "blow-up {} outside [{}, {}] for s = {s}",
                out.blow_up,
                class.lower,
                class.upper
            );
        }
        // and an early-window case: the spatial scalar curvature dominates
        // while Ric(xi, xi) stays admissible but below the gap
        let scenario = FocusingScenario {
            theta0: -2.0,
            ric00: expr::c(0.0),
            r: expr::c(0.0),
            r_star: expr::c(3.0),
            tau_max: 1.0,
        };
        let out = focusing_evolve(&scenario).unwrap();
        let (se, rge, gap) = scenario.flags(out.blow_up, 64).unwrap();
        assert!(se && !rge && !gap);
        let class = focusing_classify(-2.0, se, rge, gap).unwrap();
        assert_eq!(class.regime, FocusingRegime::EarlyWindow);
        assert!(out.blow_up < class.upper);
    }

    #[test]
    fn scenario_json_round_trip() {
        let text = r#"{"theta0": -2.0, "r": "(mul 0.5 tau)", "tau_max": 1.5}"#;
        let sc = parse_scenario_json(text).unwrap();
        assert_eq!(sc.theta0, -2.0);
        assert_eq!(sc.tau_max, 1.5);
        assert_relative_eq!(sc.source(1.0).unwrap(), 0.5, epsilon = 1e-15);
    }
}
