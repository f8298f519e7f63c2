//! Acceptance suite: one test per release criterion, each printing a
//! pass/fail line (`cargo test --test acceptance -- --nocapture` to see
//! them). Tolerances are fixed here and must not be loosened.

use std::time::Instant;
use worldline_core::catalog;
use worldline_core::curvature;
use worldline_core::expr;
use worldline_core::geodesic::{self, GeodesicState, TrajectoryStatus};
use worldline_core::metric::{eval_sample, DerivMode};
use worldline_core::oracle;
use worldline_core::raychaudhuri::{self, FocusingRegime, FocusingScenario};
use worldline_core::threading;
use worldline_core::verify::{run_verification, sample_domain_points, standard_catalog};
use worldline_core::MetricSpec;

const MODE: DerivMode = DerivMode::Analytic;

fn report(criterion: usize, name: &str, detail: &str) {
    println!("acceptance {criterion} ({name}): PASS - {detail}");
}

#[test]
fn acceptance_1_oracle_ricci_equivalence() {
    // Every catalog metric, 50 seeded random domain points: the threading
    // split of the Ricci tensor matches the brute-force 4D oracle to 1e-7
    // relative, in under 10 seconds total.
    let started = Instant::now();
    let mut worst: f64 = 0.0;
    let mut total_points = 0;
    for spec in standard_catalog() {
        let points = sample_domain_points(&spec, 50, 2024, None);
        assert_eq!(points.len(), 50, "sampling failed for {:?}", spec.name());
        for point in &points {
            let bundle = curvature::curvature_bundle(&spec, point, MODE).unwrap();
            let sample = eval_sample(&spec, point, MODE).unwrap();
            let ricci = oracle::ricci4_from(&oracle::metric4_sample(&sample).unwrap());
            let proj = oracle::project_ricci(&sample, &ricci);

            let mut scale: f64 = 1.0;
            for v in proj.spatial.iter().flatten() {
                scale = scale.max(v.abs());
            }
            scale = scale.max(proj.time.abs());
            let mut dev: f64 = (bundle.ricci_00 - proj.time).abs();
            for i in 0..3 {
                dev = dev.max((bundle.ricci_s0[i] - proj.mixed[i]).abs());
                for k in 0..3 {
                    dev = dev.max((bundle.ricci_ss[i][k] - proj.spatial[i][k]).abs());
                }
            }
            worst = worst.max(dev / scale);
            total_points += 1;
        }
    }
    let elapsed = started.elapsed();
    assert!(worst < 1e-7, "worst relative deviation {worst}");
    assert!(
        elapsed.as_secs_f64() < 10.0,
        "oracle comparison took {elapsed:?}"
    );
    report(
        1,
        "oracle ricci equivalence",
        &format!(
            "max relative deviation {worst:.3e} over {total_points} points in {:.2?}",
            elapsed
        ),
    );
}

#[test]
fn acceptance_2_kerr_newman_closed_forms() {
    // 100 random exterior points: computed Phi^2, xi_3, h_ij, b_i, the two
    // vorticity components and the expansion match direct evaluation of the
    // closed forms to 1e-10 (expansion to 1e-12).
    let (m, a, e) = (1.0, 0.5, 0.3);
    let spec = catalog::kerr_newman(m, a, e);
    let points = sample_domain_points(&spec, 100, 7, None);
    assert_eq!(points.len(), 100);

    let rel = |got: f64, want: f64| (got - want).abs() / want.abs().max(1.0);
    let mut worst: f64 = 0.0;
    let mut worst_theta: f64 = 0.0;
    for x in &points {
        let (r, th) = (x[1], x[2]);
        let (sin_th, cos_th) = th.sin_cos();
        let sigma = r * r + a * a * cos_th * cos_th;
        let delta = r * r + a * a + e * e - 2.0 * m * r;
        let q = 2.0 * m * r - e * e;
        let phi_sq = 1.0 - q / sigma;
        let xi3 = -q * a * sin_th * sin_th / sigma;
        let h11 = sigma / delta;
        let h22 = sigma;
        let h33 = delta * sin_th * sin_th / phi_sq;
        let b1 = (r * q - m * sigma) / (phi_sq * sigma * sigma);
        let b2 = -q * a * a * sin_th * cos_th / (phi_sq * sigma * sigma);
        let w13 = a * sin_th * sin_th * (m * sigma - r * q) / (phi_sq * phi_sq * sigma * sigma);
        let w23 = q * a * delta * sin_th * cos_th / (phi_sq * phi_sq * sigma * sigma);

        let sample = eval_sample(&spec, x, MODE).unwrap();
        let state = threading::kinematics(&sample).unwrap();

        worst = worst.max(rel(sample.phi_sq.val, phi_sq));
        worst = worst.max(rel(sample.xi[2].val, xi3));
        worst = worst.max(rel(state.h_lo[0][0], h11));
        worst = worst.max(rel(state.h_lo[1][1], h22));
        worst = worst.max(rel(state.h_lo[2][2], h33));
        worst = worst.max(state.h_lo[0][1].abs());
        worst = worst.max(state.h_lo[0][2].abs());
        worst = worst.max(state.h_lo[1][2].abs());
        worst = worst.max(rel(state.b_co[0], b1));
        worst = worst.max(rel(state.b_co[1], b2));
        worst = worst.max(state.b_co[2].abs());
        worst = worst.max(rel(state.omega[0][2], w13));
        worst = worst.max(rel(state.omega[1][2], w23));
        worst = worst.max(state.omega[0][1].abs());

        for i in 0..3 {
            for j in 0..3 {
                worst_theta = worst_theta.max(state.theta_lo[i][j].abs());
            }
        }
    }
    assert!(worst < 1e-10, "closed-form deviation {worst}");
    assert!(worst_theta < 1e-12, "expansion magnitude {worst_theta}");
    report(
        2,
        "kerr-newman closed forms",
        &format!("max deviation {worst:.3e}, expansion <= {worst_theta:.3e} at 100 points"),
    );
}

#[test]
fn acceptance_3_kerr_vacuum_identities() {
    // Kerr is vacuum: all Ricci blocks below 1e-8 absolute, which turns the
    // three reduced stationary Ricci expressions into non-trivial
    // identities between spatial curvature and kinematics.
    let spec = catalog::kerr(1.0, 0.5);
    let points = sample_domain_points(&spec, 50, 11, None);
    let mut worst_ricci: f64 = 0.0;
    let mut worst_identity: f64 = 0.0;
    for x in &points {
        let bundle = curvature::curvature_bundle(&spec, x, MODE).unwrap();
        worst_ricci = worst_ricci.max(bundle.ricci_00.abs());
        for i in 0..3 {
            worst_ricci = worst_ricci.max(bundle.ricci_s0[i].abs());
            for k in 0..3 {
                worst_ricci = worst_ricci.max(bundle.ricci_ss[i][k].abs());
            }
        }
        // the reduced expressions must vanish on their own
        let st = curvature::curvature_stationary(&spec, x, MODE).unwrap();
        worst_identity = worst_identity.max(st.ricci_00.abs());
        for i in 0..3 {
            worst_identity = worst_identity.max(st.ricci_s0[i].abs());
            for k in 0..3 {
                worst_identity = worst_identity.max(st.ricci_ss[i][k].abs());
            }
        }
    }
    assert!(worst_ricci < 1e-8, "vacuum ricci magnitude {worst_ricci}");
    assert!(
        worst_identity < 1e-8,
        "stationary identity residual {worst_identity}"
    );
    report(
        3,
        "kerr vacuum",
        &format!("ricci <= {worst_ricci:.3e}, reduced identities <= {worst_identity:.3e}"),
    );
}

#[test]
fn acceptance_4_raychaudhuri_identities() {
    // Both expansion-rate balances and every kinematic-rate identity hold
    // to 1e-7 on all catalog metrics; the two electric-Weyl routes agree to
    // 1e-9.
    let mut worst_balance: f64 = 0.0;
    let mut worst_rate: f64 = 0.0;
    let mut worst_weyl: f64 = 0.0;
    for spec in standard_catalog() {
        let points = sample_domain_points(&spec, 20, 5, None);
        for x in &points {
            let rep = raychaudhuri::raychaudhuri_residual(&spec, x, MODE).unwrap();
            worst_balance = worst_balance
                .max(rep.residual_kinematic)
                .max(rep.residual_scalar_curvature);
            let rates = raychaudhuri::kinematic_rates(&spec, x, MODE).unwrap();
            for (name, res) in &rates.residuals {
                if name.starts_with("electric weyl") {
                    worst_weyl = worst_weyl.max(*res);
                } else {
                    worst_rate = worst_rate.max(*res);
                }
            }
        }
    }
    assert!(worst_balance < 1e-7, "balance residual {worst_balance}");
    assert!(worst_rate < 1e-7, "rate residual {worst_rate}");
    assert!(worst_weyl < 1e-9, "weyl route residual {worst_weyl}");
    report(
        4,
        "raychaudhuri identities",
        &format!(
            "balances <= {worst_balance:.3e}, rates <= {worst_rate:.3e}, weyl routes <= {worst_weyl:.3e}"
        ),
    );
}

#[test]
fn acceptance_5_geodesic_conservation() {
    let spec = catalog::kerr(1.0, 0.5);

    // bound orbit over lambda in [0, 50] at tol 1e-10
    let orbit = GeodesicState::from_coordinate_velocity(
        &spec,
        [0.0, 8.0, std::f64::consts::FRAC_PI_2, 0.0],
        [1.0, 0.01, 0.005, 1.0 / (8.0f64.powf(1.5) + 0.5)],
        MODE,
    )
    .unwrap();
    let traj = geodesic::integrate(&spec, &orbit, 50.0, 1e-10, MODE).unwrap();
    assert_eq!(traj.status, TrajectoryStatus::Completed);
    assert!(traj.k_drift_max < 1e-9, "K drift {}", traj.k_drift_max);
    assert!(
        traj.norm_drift_max < 1e-8,
        "norm drift {}",
        traj.norm_drift_max
    );

    // force identity along the trajectory
    let force_res = geodesic::force_identity_residual(&spec, &traj, MODE).unwrap();
    assert!(force_res < 1e-6, "force identity residual {force_res}");

    // threading-frame vs coordinate-frame integration from 10 random
    // initial conditions, compared at lambda = 10
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    let mut worst_coord: f64 = 0.0;
    for _ in 0..10 {
        let r = 6.0 + 3.0 * rng.gen::<f64>();
        let th = 1.0 + rng.gen::<f64>();
        let omega = 1.0 / (r.powf(1.5) + 0.5);
        let x = [0.0, r, th, std::f64::consts::TAU * rng.gen::<f64>()];
        let dx = [
            1.0,
            0.04 * (rng.gen::<f64>() - 0.5),
            0.02 * (rng.gen::<f64>() - 0.5),
            omega * (0.95 + 0.1 * rng.gen::<f64>()),
        ];
        let init = GeodesicState::from_coordinate_velocity(&spec, x, dx, MODE).unwrap();
        let ours = geodesic::integrate(&spec, &init, 10.0, 1e-10, MODE).unwrap();
        assert_eq!(ours.status, TrajectoryStatus::Completed);
        let end = ours.states.last().unwrap();

        let got = integrate_coordinate_frame(&spec, x, dx, 10.0);
        for (ours_x, got_x) in end.x.iter().zip(got) {
            worst_coord = worst_coord.max((ours_x - got_x).abs());
        }
    }
    assert!(worst_coord < 1e-6, "trajectory deviation {worst_coord}");

    report(
        5,
        "geodesic conservation",
        &format!(
            "K drift {:.3e}, norm drift {:.3e}, force identity {:.3e}, oracle deviation {:.3e}",
            traj.k_drift_max, traj.norm_drift_max, force_res, worst_coord
        ),
    );
}

/// Reference integration of the plain coordinate-frame geodesic system with
/// an independent fixed-step RK4, small enough steps for 1e-8 accuracy.
fn integrate_coordinate_frame(spec: &MetricSpec, x: [f64; 4], dx: [f64; 4], lambda: f64) -> [f64; 4] {
    let mut y = [x[0], x[1], x[2], x[3], dx[0], dx[1], dx[2], dx[3]];
    let rhs = |y: &[f64; 8]| -> [f64; 8] {
        let pos = [y[0], y[1], y[2], y[3]];
        let vel = [y[4], y[5], y[6], y[7]];
        let acc = oracle::geodesic_rhs4(spec, &pos, &vel, MODE).unwrap();
        [y[4], y[5], y[6], y[7], acc[0], acc[1], acc[2], acc[3]]
    };
    let n = 8_000;
    let h = lambda / n as f64;
    for _ in 0..n {
        let k1 = rhs(&y);
        let mut y2 = y;
        for i in 0..8 {
            y2[i] = y[i] + 0.5 * h * k1[i];
        }
        let k2 = rhs(&y2);
        for i in 0..8 {
            y2[i] = y[i] + 0.5 * h * k2[i];
        }
        let k3 = rhs(&y2);
        for i in 0..8 {
            y2[i] = y[i] + h * k3[i];
        }
        let k4 = rhs(&y2);
        for i in 0..8 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    [y[0], y[1], y[2], y[3]]
}

#[test]
fn acceptance_6_focusing_lemma() {
    // Pure quadratic decay: divergence at exactly 1/|theta0| = 0.5.
    let scenario = FocusingScenario {
        theta0: -2.0,
        ric00: expr::c(0.0),
        r: expr::c(0.0),
        r_star: expr::c(0.0),
        tau_max: 1.0,
    };
    let out = raychaudhuri::focusing_evolve(&scenario).unwrap();
    assert!(
        (out.blow_up - 0.5).abs() < 1e-6,
        "blow-up at {}",
        out.blow_up
    );

    // the classifier reproduces the three window cases exactly
    let c = raychaudhuri::focusing_classify(-2.0, true, true, false).unwrap();
    assert_eq!(c.regime, FocusingRegime::LateWindow);
    assert_eq!((c.lower, c.upper, c.upper_exclusive), (0.5, 1.5, false));
    let c = raychaudhuri::focusing_classify(-2.0, true, false, true).unwrap();
    assert_eq!(c.regime, FocusingRegime::CompensatedLateWindow);
    assert_eq!((c.lower, c.upper, c.upper_exclusive), (0.5, 1.5, false));
    let c = raychaudhuri::focusing_classify(-2.0, true, false, false).unwrap();
    assert_eq!(c.regime, FocusingRegime::EarlyWindow);
    assert_eq!((c.lower, c.upper, c.upper_exclusive), (0.0, 0.5, true));

    report(
        6,
        "focusing lemma",
        &format!(
            "blow-up at {} (target 0.5 +- 1e-6); all three windows classified",
            out.blow_up
        ),
    );
}

#[test]
fn acceptance_7_metricity_and_structure() {
    // Metricity residuals < 1e-10, trace-free shear < 1e-12, exact
    // vorticity antisymmetry, and agreement of the two vorticity forms
    // < 1e-10, across the catalog.
    let mut worst_metricity: f64 = 0.0;
    let mut worst_sigma: f64 = 0.0;
    let mut worst_vorticity: f64 = 0.0;
    for spec in standard_catalog() {
        let points = sample_domain_points(&spec, 20, 13, None);
        let reportv = run_verification(&spec, &points, MODE).unwrap();
        for check in &reportv.checks {
            match check.name.as_str() {
                "metricity: spatial gradient of h"
                | "metricity: time derivative of h"
                | "metricity: spatial gradient of h inverse"
                | "metricity: time derivative of h inverse" => {
                    worst_metricity = worst_metricity.max(check.max_residual)
                }
                "shear trace" => worst_sigma = worst_sigma.max(check.max_residual),
                "vorticity antisymmetry" => assert_eq!(check.max_residual, 0.0),
                "vorticity: potential vs xi form" => {
                    worst_vorticity = worst_vorticity.max(check.max_residual)
                }
                _ => {}
            }
        }
    }
    assert!(worst_metricity < 1e-10, "metricity {worst_metricity}");
    assert!(worst_sigma < 1e-12, "shear trace {worst_sigma}");
    assert!(worst_vorticity < 1e-10, "vorticity forms {worst_vorticity}");
    report(
        7,
        "metricity and structure",
        &format!(
            "metricity <= {worst_metricity:.3e}, shear trace <= {worst_sigma:.3e}, vorticity forms <= {worst_vorticity:.3e}, antisymmetry exact"
        ),
    );
}

#[test]
fn acceptance_8_cosmology_sanity() {
    // Exponential scale factor: expansion scalar 3, time Ricci -3 matching
    // the oracle to 1e-9.
    let spec = catalog::flrw(expr::exp(expr::coord(0))).unwrap();
    let points = sample_domain_points(&spec, 20, 3, None);
    let mut worst_exp: f64 = 0.0;
    for x in &points {
        let sample = eval_sample(&spec, x, MODE).unwrap();
        let state = threading::kinematics(&sample).unwrap();
        worst_exp = worst_exp.max((state.theta_scalar - 3.0).abs());
        let bundle = curvature::curvature_bundle(&spec, x, MODE).unwrap();
        worst_exp = worst_exp.max((bundle.ricci_00 + 3.0).abs());
        let ricci = oracle::ricci4_from(&oracle::metric4_sample(&sample).unwrap());
        let proj = oracle::project_ricci(&sample, &ricci);
        worst_exp = worst_exp.max((proj.time + 3.0).abs());
        worst_exp = worst_exp.max((bundle.ricci_00 - proj.time).abs());
    }
    assert!(worst_exp < 1e-9, "exponential-scale deviation {worst_exp}");

    // Scale factor x0 on hyperbolic slices (the flat-spacetime cosmology):
    // every Ricci component vanishes.
    let spec = catalog::flrw_with_curvature(expr::coord(0), -1.0).unwrap();
    let points = sample_domain_points(&spec, 20, 3, None);
    assert_eq!(points.len(), 20);
    let mut worst_milne: f64 = 0.0;
    for x in &points {
        let bundle = curvature::curvature_bundle(&spec, x, MODE).unwrap();
        worst_milne = worst_milne.max(bundle.ricci_00.abs());
        for i in 0..3 {
            worst_milne = worst_milne.max(bundle.ricci_s0[i].abs());
            for k in 0..3 {
                worst_milne = worst_milne.max(bundle.ricci_ss[i][k].abs());
            }
        }
        let sample = eval_sample(&spec, x, MODE).unwrap();
        let ricci = oracle::ricci4_from(&oracle::metric4_sample(&sample).unwrap());
        for a in 0..4 {
            for b in 0..4 {
                worst_milne = worst_milne.max(ricci.components[a][b].abs());
            }
        }
    }
    assert!(worst_milne < 1e-8, "linear-scale deviation {worst_milne}");
    report(
        8,
        "cosmology sanity",
        &format!(
            "exponential scale: expansion/Ricci deviations <= {worst_exp:.3e}; linear hyperbolic scale: Ricci <= {worst_milne:.3e}"
        ),
    );
}
