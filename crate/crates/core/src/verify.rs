//! The identity suite behind `verify`: every cross-check the toolkit makes
//! between independent computation routes, evaluated over a batch of random
//! domain points with one row per identity.
//!
//! Tolerances are pinned here. They assume exact derivatives (the analytic
//! and forward-mode engines agree to roundoff); with the finite-difference
//! engine every derivative-sensitive tolerance is widened by `FD_SLACK`.

use crate::catalog;
use crate::connection::{self, SpatialTensor};
use crate::curvature;
use crate::error::Result;
use crate::fields::FieldCtx;
use crate::metric::{eval_sample, DerivMode, MetricSpec};
use crate::oracle;
use crate::raychaudhuri;
use crate::threading;
use rand::{Rng, SeedableRng};
use serde::Serialize;

/// Tolerances for the identity suite (exact-derivative modes).
pub mod tol {
    /// Two expressions for the vorticity.
    pub const VORTICITY_FORMS: f64 = 1e-10;
    /// Covariant derivatives of h and its inverse (exact partials).
    pub const METRICITY: f64 = 1e-10;
    /// The black-box engine's five-point stencils on top of metricity.
    pub const ENGINE_STENCIL: f64 = 1e-7;
    /// Ricci split vs the 4D oracle, relative to the largest component.
    pub const ORACLE_RICCI: f64 = 1e-7;
    /// Skew part of the contracted spatial curvature.
    pub const SKEW_RICCI: f64 = 1e-8;
    /// Expansion-rate balances.
    pub const RAYCHAUDHURI: f64 = 1e-7;
    /// Mutual agreement of the two balance forms.
    pub const BALANCE_FORMS: f64 = 1e-9;
    /// Time-derivative identities of the kinematic fields.
    pub const KINEMATIC_RATES: f64 = 1e-7;
    /// Two routes to the electric Weyl block.
    pub const WEYL_ROUTES: f64 = 1e-9;
    /// Reduced stationary curvature/Ricci expressions vs the general path.
    pub const STATIONARY_FORMS: f64 = 1e-9;
    /// Reduced integrable-distribution expressions vs the general path.
    pub const STATIC_FORMS: f64 = 1e-10;
    /// Vacuum Ricci components (absolute).
    pub const VACUUM_RICCI: f64 = 1e-8;
    /// Trace of the shear.
    pub const SIGMA_TRACE: f64 = 1e-12;
    /// h * h^-1 - identity.
    pub const H_INVERSE: f64 = 1e-12;
    /// Raise-then-diverge vs diverge-then-raise.
    pub const DIVERGENCE_ROUTES: f64 = 1e-10;
    /// Widening factor applied in finite-difference mode.
    pub const FD_SLACK: f64 = 1e4;
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub max_residual: f64,
    pub tolerance: f64,
}

impl IdentityCheck {
    pub fn passed(&self) -> bool {
        self.max_residual.is_finite() && self.max_residual <= self.tolerance
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub metric: String,
    pub deriv_mode: String,
    pub points_used: usize,
    pub checks: Vec<IdentityCheck>,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed())
    }
}

/// Draws `n` points from the spec's default ranges (or `ranges` when given),
/// rejecting any the guards exclude. Deterministic in `seed`.
pub fn sample_domain_points(
    spec: &MetricSpec,
    n: usize,
    seed: u64,
    ranges: Option<[[f64; 2]; 4]>,
) -> Vec<[f64; 4]> {
    let ranges = ranges.unwrap_or_else(|| spec.sample_ranges());
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0;
    while out.len() < n && attempts < 10_000 * n.max(1) {
        attempts += 1;
        let x: [f64; 4] =
            std::array::from_fn(|a| ranges[a][0] + (ranges[a][1] - ranges[a][0]) * rng.gen::<f64>());
        if spec.contains(&x) {
            out.push(x);
        }
    }
    out
}

struct Accumulator {
    checks: Vec<(String, f64, f64)>,
}

impl Accumulator {
    fn new() -> Self {
        Accumulator { checks: Vec::new() }
    }

    fn record(&mut self, name: &str, residual: f64, tolerance: f64) {
        if let Some(entry) = self.checks.iter_mut().find(|(n, _, _)| n == name) {
            entry.1 = entry.1.max(residual);
        } else {
            self.checks.push((name.to_string(), residual, tolerance));
        }
    }
}

/// Runs the whole identity suite on `spec` over `points`.
pub fn run_verification(
    spec: &MetricSpec,
    points: &[[f64; 4]],
    mode: DerivMode,
) -> Result<VerificationReport> {
    let slack = if mode == DerivMode::Fd { tol::FD_SLACK } else { 1.0 };
    let mut acc = Accumulator::new();

    // Stationary shortcuts apply when expansion and the acceleration a_i
    // vanish; static reductions when additionally the vorticity vanishes.
    // Detect numerically over the batch.
    let mut stationary = true;
    let mut vorticity_free = true;

    let vacuum_expected = matches!(spec.name(), Some("kerr") | Some("schwarzschild"))
        || matches!(spec.name(), Some("kerr_newman") if spec.param("e").is_none())
        || spec.name() == Some("minkowski");

    for point in points {
        let sample = eval_sample(spec, point, mode)?;
        let ctx = FieldCtx::new(&sample)?;
        let state = threading::kinematics(&sample)?;
        let raised = threading::raise_omega(&state);
        let bundle = curvature::curvature_bundle(spec, point, mode)?;

        let theta_mag = crate::linalg::max_abs3(&state.theta_lo);
        let a_mag = state.a_co.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let omega_mag = crate::linalg::max_abs3(&state.omega);
        stationary &= theta_mag < 1e-12 && a_mag < 1e-12;
        vorticity_free &= omega_mag < 1e-12;

        // structural invariants
        let mut omega_antisym: f64 = 0.0;
        let mut sigma_trace = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                omega_antisym = omega_antisym.max((state.omega[i][j] + state.omega[j][i]).abs());
                sigma_trace += state.h_up[i][j] * state.sigma[i][j];
            }
        }
        acc.record("vorticity antisymmetry", omega_antisym, 0.0);
        acc.record("shear trace", sigma_trace.abs(), tol::SIGMA_TRACE);

        let id = crate::linalg::mat3_mul(&state.h_up, &state.h_lo);
        let mut id_err: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                id_err = id_err.max((id[i][j] - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        acc.record("spatial metric inverse", id_err, tol::H_INVERSE);

        // two vorticity expressions
        acc.record(
            "vorticity: potential vs xi form",
            threading::consistency_vorticity(&sample)?,
            tol::VORTICITY_FORMS * slack,
        );

        // metricity through exact partials of h and its inverse
        {
            let h_field: [[crate::fields::V1; 3]; 3] = std::array::from_fn(|i| {
                std::array::from_fn(|j| crate::fields::V1 {
                    v: ctx.h[i][j].val,
                    d: ctx.h[i][j].grad,
                })
            });
            let grad = ctx.cov_spatial_bilinear(&h_field);
            let mut worst: f64 = 0.0;
            for row in grad.iter().flatten().flatten() {
                worst = worst.max(row.abs());
            }
            acc.record("metricity: spatial gradient of h", worst, tol::METRICITY * slack);
            let dot = ctx.cov_time_bilinear(&h_field);
            acc.record(
                "metricity: time derivative of h",
                crate::linalg::max_abs3(&dot),
                tol::METRICITY * slack,
            );

            // contravariant version: delta h^ij + connection terms with
            // plus signs on both (upper) slots
            let mut worst_s: f64 = 0.0;
            let mut worst_t: f64 = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    let mut t = ctx.dh_up[0][i][j];
                    for hh in 0..3 {
                        t += ctx.h_up[hh][j] * ctx.gamma_t[i][hh]
                            + ctx.h_up[i][hh] * ctx.gamma_t[j][hh];
                    }
                    worst_t = worst_t.max(t.abs());
                    for k in 0..3 {
                        let mut s =
                            ctx.dh_up[k + 1][i][j] + ctx.p[k].val * ctx.dh_up[0][i][j];
                        for hh in 0..3 {
                            s += ctx.h_up[hh][j] * ctx.gamma_s[i][hh][k]
                                + ctx.h_up[i][hh] * ctx.gamma_s[j][hh][k];
                        }
                        worst_s = worst_s.max(s.abs());
                    }
                }
            }
            acc.record(
                "metricity: spatial gradient of h inverse",
                worst_s,
                tol::METRICITY * slack,
            );
            acc.record(
                "metricity: time derivative of h inverse",
                worst_t,
                tol::METRICITY * slack,
            );
        }

        // the black-box covariant-derivative engine differentiates h with
        // five-point stencils; its truncation error is its own limit
        let h_field = |y: &[f64; 4]| -> Result<SpatialTensor> {
            let s = eval_sample(spec, y, mode)?;
            Ok(SpatialTensor::bilinear(threading::spatial_metric(&s)?.0))
        };
        acc.record(
            "derivative engine: stencil metricity",
            connection::covariant_derivative_spatial(&h_field, spec, point, mode)?
                .max_abs()
                .max(connection::covariant_derivative_time(&h_field, spec, point, mode)?.max_abs()),
            tol::ENGINE_STENCIL * slack,
        );

        // Ricci split vs the oracle, relative to the largest block entry
        let m4 = oracle::metric4_sample(&sample)?;
        let ric4 = oracle::ricci4_from(&m4);
        let proj = oracle::project_ricci(&sample, &ric4);
        let mut scale: f64 = 1.0;
        for v in proj.spatial.iter().flatten() {
            scale = scale.max(v.abs());
        }
        for v in &proj.mixed {
            scale = scale.max(v.abs());
        }
        scale = scale.max(proj.time.abs());
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            worst = worst.max((bundle.ricci_s0[i] - proj.mixed[i]).abs());
            for k in 0..3 {
                worst = worst.max((bundle.ricci_ss[i][k] - proj.spatial[i][k]).abs());
            }
        }
        worst = worst.max((bundle.ricci_00 - proj.time).abs());
        acc.record(
            "ricci split vs 4d oracle",
            worst / scale,
            tol::ORACLE_RICCI * slack,
        );
        acc.record(
            "scalar curvature vs 4d oracle",
            (bundle.scalar_r - ric4.scalar).abs() / ric4.scalar.abs().max(1.0),
            tol::ORACLE_RICCI * slack,
        );

        if vacuum_expected {
            let mut vac: f64 = bundle.ricci_00.abs();
            for i in 0..3 {
                vac = vac.max(bundle.ricci_s0[i].abs());
                for k in 0..3 {
                    vac = vac.max(bundle.ricci_ss[i][k].abs());
                }
            }
            acc.record("vacuum ricci", vac, tol::VACUUM_RICCI * slack);
        }

        acc.record(
            "ricci skew block identity",
            curvature::skew_ricci_residual(spec, point, mode)?,
            tol::SKEW_RICCI * slack,
        );

        // expansion-rate balances
        let rep = raychaudhuri::raychaudhuri_residual(spec, point, mode)?;
        acc.record(
            "balance: kinematic form",
            rep.residual_kinematic,
            tol::RAYCHAUDHURI * slack,
        );
        acc.record(
            "balance: scalar-curvature form",
            rep.residual_scalar_curvature,
            tol::RAYCHAUDHURI * slack,
        );
        acc.record(
            "balance: forms agree",
            (rep.rhs_kinematic - rep.rhs_scalar_curvature).abs(),
            tol::BALANCE_FORMS * slack,
        );
        if let Some(r) = rep.residual_unit {
            acc.record("balance: unit-field form", r, tol::RAYCHAUDHURI * slack);
        }
        if let Some(r) = rep.residual_geodesic {
            acc.record("balance: geodesic form", r, tol::RAYCHAUDHURI * slack);
        }

        // kinematic-rate identities (includes the Weyl route agreement)
        let rates = raychaudhuri::kinematic_rates(spec, point, mode)?;
        for (name, residual) in &rates.residuals {
            let t = if name.starts_with("electric weyl") {
                tol::WEYL_ROUTES
            } else {
                tol::KINEMATIC_RATES
            };
            acc.record(name, *residual, t * slack);
        }

        // divergence route consistency for the mixed vorticity tensor
        {
            let route1 = ctx.div_mixed(&ctx.omega_mixed);
            let omega_cov = ctx.cov_spatial_bilinear(&ctx.omega);
            let mut worst: f64 = 0.0;
            for i in 0..3 {
                let mut v = 0.0;
                for k in 0..3 {
                    for hh in 0..3 {
                        v += ctx.h_up[k][hh] * omega_cov[hh][i][k];
                    }
                }
                worst = worst.max((route1[i] - v).abs());
            }
            acc.record(
                "divergence: raise vs lower route",
                worst,
                tol::DIVERGENCE_ROUTES * slack,
            );
        }
        let _ = raised;
    }

    // reduced-form cross-checks over the same batch
    if stationary && !points.is_empty() {
        let mut worst: f64 = 0.0;
        for point in points {
            let b = curvature::curvature_bundle(spec, point, mode)?;
            let st = curvature::curvature_stationary(spec, point, mode)?;
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
        }
        acc.record(
            "stationary curvature forms",
            worst,
            tol::STATIONARY_FORMS * slack,
        );
    }
    if vorticity_free && !points.is_empty() {
        let mut worst: f64 = 0.0;
        for point in points {
            let b = curvature::curvature_bundle(spec, point, mode)?;
            let st = curvature::curvature_static(spec, point, mode)?;
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
        }
        acc.record("static curvature forms", worst, tol::STATIC_FORMS * slack);
    }

    // frame-table certification at the first point
    if let Some(point) = points.first() {
        acc.record(
            "frame decomposition vs oracle christoffels",
            oracle::frame_table_residual(spec, point, mode)?,
            1e-9 * slack,
        );
    }

    Ok(VerificationReport {
        metric: spec.name().unwrap_or("custom").to_string(),
        deriv_mode: format!("{mode:?}").to_lowercase(),
        points_used: points.len(),
        checks: acc
            .checks
            .into_iter()
            .map(|(name, max_residual, tolerance)| IdentityCheck {
                name,
                max_residual,
                tolerance,
            })
            .collect(),
    })
}

/// Convenience wrapper: sample points and run the suite.
pub fn verify_metric(
    spec: &MetricSpec,
    samples: usize,
    seed: u64,
    mode: DerivMode,
) -> Result<VerificationReport> {
    let points = sample_domain_points(spec, samples, seed, None);
    run_verification(spec, &points, mode)
}

/// Every catalog entry with representative parameters, used by tests.
pub fn standard_catalog() -> Vec<MetricSpec> {
    vec![
        catalog::kerr_newman(1.0, 0.5, 0.3),
        catalog::kerr(1.0, 0.8),
        catalog::reissner_nordstrom(1.0, 0.4),
        catalog::schwarzschild(1.0),
        catalog::flrw(crate::expr::exp(crate::expr::coord(0))).unwrap(),
        catalog::minkowski(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_is_deterministic_and_in_domain() {
        let spec = catalog::kerr_newman(1.0, 0.5, 0.3);
        let a = sample_domain_points(&spec, 20, 7, None);
        let b = sample_domain_points(&spec, 20, 7, None);
        assert_eq!(a, b);
        assert_eq!(a.len(), 20);
        for x in &a {
            assert!(spec.contains(x));
        }
        let c = sample_domain_points(&spec, 5, 8, None);
        assert_ne!(a[0], c[0]);
    }

    #[test]
    fn suite_passes_on_minkowski() {
        let spec = catalog::minkowski();
        let report = verify_metric(&spec, 4, 1, DerivMode::Analytic).unwrap();
        assert!(report.all_passed(), "{:#?}", report.checks);
    }

    #[test]
    fn suite_passes_on_kerr_with_a_few_points() {
        let spec = catalog::kerr(1.0, 0.5);
        let report = verify_metric(&spec, 4, 7, DerivMode::Analytic).unwrap();
        assert!(
            report.all_passed(),
            "failing checks: {:#?}",
            report
                .checks
                .iter()
                .filter(|c| !c.passed())
                .collect::<Vec<_>>()
        );
        assert!(report.checks.iter().any(|c| c.name == "vacuum ricci"));
        assert!(report
            .checks
            .iter()
            .any(|c| c.name == "stationary curvature forms"));
    }
}
