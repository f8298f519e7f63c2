//! Command-line surface of the worldline toolkit.
//!
//! Subcommands: `analyze` (per-point kinematics + curvature), `verify` (the
//! identity suite with a residual table), `geodesic` (trajectory
//! integration), `focusing` (expansion-divergence experiments) and
//! `catalog`.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration error,
//! 3 domain error (including a trajectory stopping at the domain boundary
//! before the requested parameter span).

mod output;

use clap::{Args, Parser, Subcommand};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use worldline_core::error::Error;
use worldline_core::expr::VarTable;
use worldline_core::geodesic::{self, GeodesicState, TrajectoryStatus};
use worldline_core::metric::{self, DerivMode, MetricSpec};
use worldline_core::raychaudhuri::{self, FocusingScenario};
use worldline_core::{catalog, curvature, eval_sample, threading, verify};

#[derive(Parser)]
#[command(
    name = "worldline",
    about = "Spacetime threading toolkit: congruence kinematics, curvature splits and geodesics",
    long_about = "Coordinates are (x0, x1, x2, x3); for the black-hole catalog this is \
(t, r, theta, phi) in geometric units (G = c = 1), angles in radians. \
Points are given as comma-separated 4-tuples."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct MetricArgs {
    /// Catalog name (kerr_newman, kerr, reissner_nordstrom, schwarzschild,
    /// flrw, minkowski) or path to a metric-spec JSON file.
    #[arg(long)]
    metric: String,
    /// Mass parameter.
    #[arg(long)]
    m: Option<f64>,
    /// Spin parameter.
    #[arg(long)]
    a: Option<f64>,
    /// Charge parameter.
    #[arg(long)]
    e: Option<f64>,
    /// Spatial curvature for flrw: -1, 0 or 1.
    #[arg(long, allow_hyphen_values = true)]
    k: Option<f64>,
    /// Scale factor expression in x0 for flrw, e.g. "(exp x0)".
    #[arg(long)]
    scale: Option<String>,
    /// Derivative engine.
    #[arg(long, default_value = "analytic", value_parser = ["analytic", "dual", "fd"])]
    deriv_mode: String,
}

impl MetricArgs {
    fn spec(&self) -> Result<MetricSpec, Error> {
        if catalog::CATALOG_NAMES.contains(&self.metric.as_str()) {
            let mut params = BTreeMap::new();
            if let Some(v) = self.m {
                params.insert("m".to_string(), v);
            }
            if let Some(v) = self.a {
                params.insert("a".to_string(), v);
            }
            if let Some(v) = self.e {
                params.insert("e".to_string(), v);
            }
            if let Some(v) = self.k {
                params.insert("k".to_string(), v);
            }
            let scale = match &self.scale {
                Some(s) => Some(worldline_core::expr::parse_sexpr(
                    s,
                    VarTable::SPACETIME,
                    &BTreeMap::new(),
                )?),
                None => None,
            };
            catalog::lookup(&self.metric, &params, scale.as_ref())
        } else {
            let text = std::fs::read_to_string(&self.metric)?;
            metric::parse_spec_json(&text)
        }
    }

    fn mode(&self) -> DerivMode {
        self.deriv_mode.parse().expect("validated by clap")
    }
}

#[derive(Args)]
struct PointArgs {
    /// Explicit evaluation point "x0,x1,x2,x3" (repeatable).
    #[arg(long = "point")]
    points: Vec<String>,
    /// Number of seeded random domain points (used when no --point given).
    #[arg(long, default_value_t = 10)]
    samples: usize,
    /// Seed for the random sampler.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override a sampling range: "x1=2.5,10" (repeatable).
    #[arg(long = "range")]
    ranges: Vec<String>,
}

impl PointArgs {
    fn resolve(&self, spec: &MetricSpec) -> Result<Vec<[f64; 4]>, Error> {
        if !self.points.is_empty() {
            return self.points.iter().map(|p| parse_point(p)).collect();
        }
        let mut ranges = spec.sample_ranges();
        for r in &self.ranges {
            let (axis, lo, hi) = parse_range(r)?;
            ranges[axis] = [lo, hi];
        }
        let pts = verify::sample_domain_points(spec, self.samples, self.seed, Some(ranges));
        if pts.len() < self.samples {
            return Err(Error::Invalid(format!(
                "could only sample {} of {} points inside the domain",
                pts.len(),
                self.samples
            )));
        }
        Ok(pts)
    }
}

fn parse_point(text: &str) -> Result<[f64; 4], Error> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 4 {
        return Err(Error::Invalid(format!(
            "point must have 4 comma-separated coordinates, got `{text}`"
        )));
    }
    let mut out = [0.0; 4];
    for (i, p) in parts.iter().enumerate() {
        out[i] = p
            .trim()
            .parse()
            .map_err(|_| Error::Invalid(format!("bad coordinate `{p}`")))?;
    }
    Ok(out)
}

fn parse_range(text: &str) -> Result<(usize, f64, f64), Error> {
    let bad = || Error::Invalid(format!("range must look like `x1=lo,hi`, got `{text}`"));
    let (name, rest) = text.split_once('=').ok_or_else(bad)?;
    let axis = match name.trim() {
        "x0" => 0,
        "x1" => 1,
        "x2" => 2,
        "x3" => 3,
        _ => return Err(bad()),
    };
    let (lo, hi) = rest.split_once(',').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !hi.is_finite() || !lo.is_finite() || hi <= lo {
        return Err(bad());
    }
    Ok((axis, lo, hi))
}

#[derive(Subcommand)]
enum Command {
    /// Kinematic and curvature quantities at each point.
    Analyze {
        #[command(flatten)]
        metric: MetricArgs,
        #[command(flatten)]
        points: PointArgs,
        /// Output file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output format.
        #[arg(long, default_value = "json", value_parser = ["json", "csv"])]
        format: String,
    },
    /// Run the cross-validation identity suite; non-zero exit on failure.
    Verify {
        #[command(flatten)]
        metric: MetricArgs,
        #[command(flatten)]
        points: PointArgs,
        /// Write the report as JSON here as well.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate a geodesic and write the trajectory plus a drift summary.
    Geodesic {
        #[command(flatten)]
        metric: MetricArgs,
        /// Initial state JSON: {"x": [..4], "dx": [..4]} or
        /// {"x": [..4], "u_spatial": [..3], "k": K}.
        #[arg(long)]
        init_file: PathBuf,
        /// Affine-parameter span to integrate.
        #[arg(long)]
        lambda_end: f64,
        /// Per-step error tolerance.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Also record the 3D force components along the trajectory.
        #[arg(long)]
        force: bool,
        /// Trajectory CSV path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Summary JSON path.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Classify a focusing scenario and integrate the expansion equation.
    Focusing {
        /// Scenario JSON: {"theta0": .., "r": expr, "r_star": expr,
        /// "ric00": expr, "tau_max": ..} with expressions in tau.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Initial expansion (must be negative); alternative to --scenario.
        #[arg(long, allow_hyphen_values = true)]
        theta0: Option<f64>,
        /// Scalar curvature profile in tau.
        #[arg(long, default_value = "0")]
        r: String,
        /// Spatial scalar curvature profile in tau.
        #[arg(long)]
        r_star: Option<String>,
        /// Ric(xi, xi) profile in tau.
        #[arg(long)]
        ric00: Option<String>,
        #[arg(long, default_value_t = 2.0)]
        tau_max: f64,
        /// Output file for the JSON report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List built-in metrics and their parameters.
    Catalog,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err {
                Error::Domain { .. } | Error::SingularMetric(_) | Error::StepFailure(_) => 3,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Analyze {
            metric,
            points,
            out,
            format,
        } => cmd_analyze(&metric, &points, out.as_deref(), &format),
        Command::Verify {
            metric,
            points,
            out,
        } => cmd_verify(&metric, &points, out.as_deref()),
        Command::Geodesic {
            metric,
            init_file,
            lambda_end,
            tol,
            force,
            out,
            summary,
        } => cmd_geodesic(
            &metric,
            &init_file,
            lambda_end,
            tol,
            force,
            out.as_deref(),
            summary.as_deref(),
        ),
        Command::Focusing {
            scenario,
            theta0,
            r,
            r_star,
            ric00,
            tau_max,
            out,
        } => cmd_focusing(
            scenario.as_deref(),
            theta0,
            &r,
            r_star.as_deref(),
            ric00.as_deref(),
            tau_max,
            out.as_deref(),
        ),
        Command::Catalog => {
            cmd_catalog();
            Ok(ExitCode::SUCCESS)
        }
    }
}

#[derive(serde::Serialize)]
struct AnalyzeRecord {
    point: [f64; 4],
    kinematics: threading::KinematicState,
    raised: threading::RaisedKinematics,
    vorticity_consistency: f64,
    /// Rank-4 blocks are nested arrays in row-major index order
    /// `[i][j][k][h]`, spatial indices 1..3 mapping to array slots 0..2.
    curvature: curvature::CurvatureBundle,
}

#[derive(serde::Serialize)]
struct AnalyzeReport {
    metric: String,
    params: BTreeMap<String, f64>,
    deriv_mode: String,
    points: Vec<AnalyzeRecord>,
}

fn cmd_analyze(
    margs: &MetricArgs,
    pargs: &PointArgs,
    out: Option<&std::path::Path>,
    format: &str,
) -> Result<ExitCode, Error> {
    let spec = margs.spec()?;
    let mode = margs.mode();
    let points = pargs.resolve(&spec)?;

    let mut records = Vec::with_capacity(points.len());
    for point in &points {
        let sample = eval_sample(&spec, point, mode)?;
        let kinematics = threading::kinematics(&sample)?;
        let raised = threading::raise_omega(&kinematics);
        let vorticity_consistency = threading::consistency_vorticity(&sample)?;
        let bundle = curvature::curvature_bundle(&spec, point, mode)?;
        records.push(AnalyzeRecord {
            point: *point,
            kinematics,
            raised,
            vorticity_consistency,
            curvature: bundle,
        });
    }

    let report = AnalyzeReport {
        metric: spec.name().unwrap_or("custom").to_string(),
        params: spec.params().clone(),
        deriv_mode: margs.deriv_mode.clone(),
        points: records,
    };

    let text = match format {
        "json" => output::to_json_17(&report)?,
        _ => analyze_csv(&report),
    };
    output::write_out(out, &text)?;
    Ok(ExitCode::SUCCESS)
}

fn analyze_csv(report: &AnalyzeReport) -> String {
    let mut s = String::from(
        "x0,x1,x2,x3,theta,omega_sq,sigma_sq,b_sq,b1,b2,b3,ricci_00,scalar_r,scalar_r_star\n",
    );
    for rec in &report.points {
        let p = rec.point;
        let cells = [
            p[0],
            p[1],
            p[2],
            p[3],
            rec.kinematics.theta_scalar,
            rec.raised.omega_sq,
            rec.raised.sigma_sq,
            rec.raised.b_sq,
            rec.kinematics.b_co[0],
            rec.kinematics.b_co[1],
            rec.kinematics.b_co[2],
            rec.curvature.ricci_00,
            rec.curvature.scalar_r,
            rec.curvature.scalar_r_star,
        ];
        let row: Vec<String> = cells.iter().map(|v| output::fmt_f64(*v)).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

fn cmd_verify(
    margs: &MetricArgs,
    pargs: &PointArgs,
    out: Option<&std::path::Path>,
) -> Result<ExitCode, Error> {
    let spec = margs.spec()?;
    let mode = margs.mode();
    let points = pargs.resolve(&spec)?;
    let report = verify::run_verification(&spec, &points, mode)?;

    let name_width = report
        .checks
        .iter()
        .map(|c| c.name.len())
        .max()
        .unwrap_or(8)
        .max(8);
    println!(
        "verify: {} ({} points, {} derivatives)",
        report.metric, report.points_used, report.deriv_mode
    );
    println!("{:<name_width$}  {:>13}  {:>10}  status", "identity", "max residual", "tolerance");
    for check in &report.checks {
        println!(
            "{:<name_width$}  {:>13.4e}  {:>10.1e}  {}",
            check.name,
            check.max_residual,
            check.tolerance,
            if check.passed() { "pass" } else { "FAIL" }
        );
    }
    let passed = report.all_passed();
    println!("{}", if passed { "PASS" } else { "FAIL" });

    if out.is_some() {
        let text = output::to_json_17(&report)?;
        output::write_out(out, &text)?;
    }
    Ok(if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

#[derive(serde::Deserialize)]
struct InitFile {
    x: [f64; 4],
    dx: Option<[f64; 4]>,
    u_spatial: Option<[f64; 3]>,
    k: Option<f64>,
}

#[derive(serde::Serialize)]
struct GeodesicSummary {
    status: String,
    boundary_lambda: Option<f64>,
    lambda_reached: f64,
    steps: usize,
    k_initial: f64,
    k_drift_max: f64,
    norm_drift_max: f64,
    delta_x0_max: f64,
    spatial_geodesic: bool,
    force_identity_max_residual: Option<f64>,
}

fn cmd_geodesic(
    margs: &MetricArgs,
    init_file: &std::path::Path,
    lambda_end: f64,
    tol: f64,
    force: bool,
    out: Option<&std::path::Path>,
    summary_path: Option<&std::path::Path>,
) -> Result<ExitCode, Error> {
    let spec = margs.spec()?;
    let mode = margs.mode();
    let init_text = std::fs::read_to_string(init_file)?;
    let init: InitFile = serde_json::from_str(&init_text)?;

    let state = match (init.dx, init.u_spatial) {
        (Some(dx), None) => GeodesicState::from_coordinate_velocity(&spec, init.x, dx, mode)?,
        (None, Some(u)) => {
            let k = init.k.ok_or_else(|| {
                Error::Invalid("initial state with u_spatial needs `k`".into())
            })?;
            GeodesicState::from_spatial_velocity(&spec, init.x, u, k, mode)?
        }
        _ => {
            return Err(Error::Invalid(
                "initial state needs either `dx` or `u_spatial` + `k`".into(),
            ))
        }
    };

    let traj = geodesic::integrate(&spec, &state, lambda_end, tol, mode)?;

    // trajectory CSV
    let mut csv = String::from(
        "lambda,x0,x1,x2,x3,dx0,dx1,dx2,dx3,delta_x0,k,s_star,ds_star",
    );
    if force {
        csv.push_str(",f1,f2,f3");
    }
    csv.push('\n');
    for st in &traj.states {
        let mut cells = vec![
            st.lambda, st.x[0], st.x[1], st.x[2], st.x[3], st.dx[0], st.dx[1], st.dx[2],
            st.dx[3], st.delta_x0, st.k, st.s_star, st.ds_star,
        ];
        if force {
            let f = geodesic::force3(&spec, st, mode)?;
            cells.extend(f.f_up);
        }
        let row: Vec<String> = cells.iter().map(|v| output::fmt_f64(*v)).collect();
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    output::write_out(out, &csv)?;

    let spatial = state.delta_x0.abs() < 1e-12;
    let force_residual = if spatial {
        None
    } else {
        Some(geodesic::force_identity_residual(&spec, &traj, mode)?)
    };
    let (status, boundary_lambda) = match traj.status {
        TrajectoryStatus::Completed => ("completed".to_string(), None),
        TrajectoryStatus::BoundaryHit { lambda } => ("boundary_hit".to_string(), Some(lambda)),
    };
    let summary = GeodesicSummary {
        status,
        boundary_lambda,
        lambda_reached: traj.states.last().map(|s| s.lambda).unwrap_or(0.0),
        steps: traj.states.len(),
        k_initial: state.k,
        k_drift_max: traj.k_drift_max,
        norm_drift_max: traj.norm_drift_max,
        delta_x0_max: traj.delta_x0_max,
        spatial_geodesic: spatial,
        force_identity_max_residual: force_residual,
    };
    let summary_text = output::to_json_17(&summary)?;
    match summary_path {
        Some(p) => std::fs::write(p, &summary_text)?,
        None => eprintln!("{summary_text}"),
    }

    Ok(match traj.status {
        TrajectoryStatus::Completed => ExitCode::SUCCESS,
        TrajectoryStatus::BoundaryHit { .. } => ExitCode::from(3),
    })
}

#[derive(serde::Serialize)]
struct FocusingReport {
    classification: raychaudhuri::FocusingClassification,
    flags: FocusingFlags,
    blow_up: Option<f64>,
    in_window: Option<bool>,
    samples: Vec<(f64, f64)>,
}

#[derive(serde::Serialize)]
struct FocusingFlags {
    strong_energy: bool,
    r_ge_rstar: bool,
    ric_ge_gap: bool,
}

#[allow(clippy::too_many_arguments)]
fn cmd_focusing(
    scenario_path: Option<&std::path::Path>,
    theta0: Option<f64>,
    r: &str,
    r_star: Option<&str>,
    ric00: Option<&str>,
    tau_max: f64,
    out: Option<&std::path::Path>,
) -> Result<ExitCode, Error> {
    let scenario = match scenario_path {
        Some(p) => raychaudhuri::parse_scenario_json(&std::fs::read_to_string(p)?)?,
        None => {
            let theta0 = theta0.ok_or_else(|| {
                Error::Invalid("focusing needs --scenario or --theta0".into())
            })?;
            let parse = |s: &str| {
                worldline_core::expr::parse_sexpr(s, VarTable::PROPER_TIME, &BTreeMap::new())
            };
            FocusingScenario {
                theta0,
                ric00: parse(ric00.unwrap_or("0"))?,
                r: parse(r)?,
                r_star: parse(r_star.unwrap_or("0"))?,
                tau_max,
            }
        }
    };

    let outcome = match raychaudhuri::focusing_evolve(&scenario) {
        Ok(o) => Some(o),
        Err(Error::NoBlowup(_)) => None,
        Err(e) => return Err(e),
    };
    let flag_end = outcome
        .as_ref()
        .map(|o| o.blow_up)
        .unwrap_or(scenario.tau_max);
    let (strong_energy, r_ge_rstar, ric_ge_gap) = scenario.flags(flag_end, 256)?;
    let classification =
        raychaudhuri::focusing_classify(scenario.theta0, strong_energy, r_ge_rstar, ric_ge_gap)?;

    let blow_up = outcome.as_ref().map(|o| o.blow_up);
    let in_window = blow_up.map(|t| {
        t >= classification.lower - 1e-6
            && if classification.upper_exclusive {
                t < classification.upper + 1e-6
            } else {
                t <= classification.upper + 1e-6
            }
    });

    println!(
        "window: [{}, {}{} ({:?})",
        output::fmt_f64(classification.lower),
        output::fmt_f64(classification.upper),
        if classification.upper_exclusive { ")" } else { "]" },
        classification.regime
    );
    match blow_up {
        Some(t) => println!(
            "expansion diverges at tau = {} ({})",
            output::fmt_f64(t),
            if in_window == Some(true) {
                "inside the window"
            } else {
                "OUTSIDE the window"
            }
        ),
        None => println!(
            "expansion stays bounded on [0, {}]",
            output::fmt_f64(scenario.tau_max)
        ),
    }

    let report = FocusingReport {
        classification,
        flags: FocusingFlags {
            strong_energy,
            r_ge_rstar,
            ric_ge_gap,
        },
        blow_up,
        in_window,
        samples: outcome.map(|o| o.samples).unwrap_or_default(),
    };
    if out.is_some() {
        output::write_out(out, &output::to_json_17(&report)?)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_catalog() {
    println!("built-in metrics (coordinates t, r, theta, phi unless noted):");
    println!("  kerr_newman         --m --a --e   rotating charged black hole");
    println!("  kerr                --m --a       rotating black hole");
    println!("  reissner_nordstrom  --m --e       charged static black hole");
    println!("  schwarzschild       --m           static black hole");
    println!("  flrw                --scale expr [--k -1|0|1]   cosmology, e.g. --scale \"(exp x0)\"");
    println!("  minkowski                         flat spacetime");
}
