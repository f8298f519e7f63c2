//! Metric specification and point evaluation.
//!
//! A metric is given in the threading-adapted form
//!
//! ```text
//! ds^2 = -Phi^2 (dx0)^2 + 2 xi_i dx^i dx0 + g_ij dx^i dx^j
//! ```
//!
//! with `Phi^2`, the three `xi_i` and the symmetric `g_ij` supplied as scalar
//! field expressions over `x0..x3`. `Phi` must not depend on `x0`; everything
//! downstream (kinematics, spatial connection, curvature) leans on that.
//!
//! Evaluating a spec at a point yields a [`MetricSample`]: the value and the
//! exact first and second partials of all ten component fields. Three
//! derivative engines are available and agree with each other, which is the
//! backbone of the toolkit's self-checks:
//!
//! * `Analytic` — derivative expression trees built once per spec,
//! * `Dual` — second-order forward-mode jets ([`crate::jet::Jet2`]),
//! * `Fd` — central finite differences of the value trees (tests and
//!   diagnostics; lowest accuracy).

use crate::error::{Error, Result};
use crate::expr::{self, Expr, Params, VarTable};
use crate::jet::Jet2;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// How `eval_sample` obtains derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DerivMode {
    #[default]
    Analytic,
    Dual,
    Fd,
}

impl std::str::FromStr for DerivMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(DerivMode::Analytic),
            "dual" => Ok(DerivMode::Dual),
            "fd" => Ok(DerivMode::Fd),
            other => Err(Error::Invalid(format!("unknown derivative mode `{other}`"))),
        }
    }
}

/// The ten scalar component fields in storage order.
const N_FIELDS: usize = 10;

/// Index of g_ij (i <= j, zero-based spatial indices) in triangular storage.
fn sym_index(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    match (i, j) {
        (0, 0) => 0,
        (0, 1) => 1,
        (0, 2) => 2,
        (1, 1) => 3,
        (1, 2) => 4,
        (2, 2) => 5,
        _ => unreachable!(),
    }
}

const FIELD_PHI_SQ: usize = 0;
fn field_xi(i: usize) -> usize {
    1 + i
}
fn field_g(i: usize, j: usize) -> usize {
    4 + sym_index(i, j)
}

/// One component field with its symbolic derivative closure.
#[derive(Clone, Debug)]
struct Field {
    value: Expr,
    d1: [Expr; 4],
    /// Upper triangle of second partials, index `tri(a, b)` for a <= b.
    d2: Vec<Expr>,
}

fn tri(a: usize, b: usize) -> usize {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    // row-major upper triangle of a 4x4
    a * 4 + b - a * (a + 1) / 2
}

impl Field {
    fn new(value: Expr) -> Field {
        let d1 = [value.diff(0), value.diff(1), value.diff(2), value.diff(3)];
        let mut d2 = Vec::with_capacity(10);
        for a in 0..4usize {
            for b in a..4 {
                d2.push(d1[a].diff(b as u8));
            }
        }
        Field { value, d1, d2 }
    }
}

/// A metric in threading-adapted form, ready for evaluation.
#[derive(Clone, Debug)]
pub struct MetricSpec {
    name: Option<String>,
    phi_sq: Expr,
    xi: [Expr; 3],
    g: [[Expr; 3]; 3],
    params: Params,
    guards: Vec<Expr>,
    fields: Vec<Field>,
    stationary: bool,
    ranges: [[f64; 2]; 4],
}

impl PartialEq for MetricSpec {
    fn eq(&self, other: &Self) -> bool {
        self.phi_sq == other.phi_sq
            && self.xi == other.xi
            && self.g == other.g
            && self.params == other.params
            && self.guards == other.guards
    }
}

impl MetricSpec {
    /// Builds a spec from component expressions. `g` must be symmetric.
    pub fn new(
        phi_sq: Expr,
        xi: [Expr; 3],
        g: [[Expr; 3]; 3],
        params: Params,
        guards: Vec<Expr>,
    ) -> Result<MetricSpec> {
        for i in 0..3 {
            for j in (i + 1)..3 {
                if g[i][j] != g[j][i] {
                    return Err(Error::Invalid(format!(
                        "g[{}][{}] and g[{}][{}] differ; the spatial metric must be symmetric",
                        i + 1,
                        j + 1,
                        j + 1,
                        i + 1
                    )));
                }
            }
        }

        let mut fields = Vec::with_capacity(N_FIELDS);
        fields.push(Field::new(phi_sq.clone()));
        for i in 0..3 {
            fields.push(Field::new(xi[i].clone()));
        }
        for i in 0..3 {
            for j in i..3 {
                fields.push(Field::new(g[i][j].clone()));
            }
        }

        let stationary = !fields.iter().any(|f| f.value.depends_on(0));

        Ok(MetricSpec {
            name: None,
            phi_sq,
            xi,
            g,
            params,
            guards,
            fields,
            stationary,
            ranges: [[0.0, 1.0], [-1.0, 1.0], [-1.0, 1.0], [-1.0, 1.0]],
        })
    }

    pub(crate) fn with_name(mut self, name: &str) -> Self {
        self.name = Some(name.to_string());
        self
    }

    pub(crate) fn with_ranges(mut self, ranges: [[f64; 2]; 4]) -> Self {
        self.ranges = ranges;
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.get(name).copied()
    }

    pub fn guards(&self) -> &[Expr] {
        &self.guards
    }

    pub fn phi_sq_expr(&self) -> &Expr {
        &self.phi_sq
    }

    pub fn xi_exprs(&self) -> &[Expr; 3] {
        &self.xi
    }

    pub fn g_exprs(&self) -> &[[Expr; 3]; 3] {
        &self.g
    }

    /// True when no component field depends on `x0`. Stationary specs have
    /// vanishing expansion and acceleration `a_i`.
    pub fn is_stationary(&self) -> bool {
        self.stationary
    }

    /// Default per-coordinate sampling ranges for random domain points.
    pub fn sample_ranges(&self) -> [[f64; 2]; 4] {
        self.ranges
    }

    /// Checks every domain guard at `point` (each must evaluate positive).
    pub fn check_guards(&self, point: &[f64; 4]) -> Result<()> {
        for guard in &self.guards {
            let v = guard.eval(point, &self.params)?;
            if v <= 0.0 {
                return Err(Error::Domain {
                    point: *point,
                    guard: guard.to_sexpr(),
                });
            }
        }
        Ok(())
    }

    /// True iff all guards pass and every field evaluates finite.
    pub fn contains(&self, point: &[f64; 4]) -> bool {
        self.check_guards(point).is_ok()
            && self
                .fields
                .iter()
                .all(|f| f.value.eval(point, &self.params).is_ok())
    }

    fn eval_field_analytic(&self, idx: usize, x: &[f64; 4]) -> Result<Jet2> {
        let f = &self.fields[idx];
        let mut jet = Jet2::constant(f.value.eval(x, &self.params)?);
        for a in 0..4 {
            jet.grad[a] = f.d1[a].eval(x, &self.params)?;
        }
        for a in 0..4 {
            for b in a..4 {
                let v = f.d2[tri(a, b)].eval(x, &self.params)?;
                jet.hess[a][b] = v;
                jet.hess[b][a] = v;
            }
        }
        Ok(jet)
    }

    fn eval_field_dual(&self, idx: usize, x: &[f64; 4]) -> Result<Jet2> {
        self.fields[idx].value.eval_jet(x, &self.params)
    }

    fn eval_field_fd(&self, idx: usize, x: &[f64; 4]) -> Result<Jet2> {
        let f = |x: &[f64; 4]| self.fields[idx].value.eval(x, &self.params);
        let mut jet = Jet2::constant(f(x)?);

        // First differences at the cube-root-of-epsilon step, second
        // differences at the fourth-root step (roundoff in a second
        // difference grows like eps/h^2, so the first-derivative step is
        // too small for it).
        let h1: [f64; 4] = std::array::from_fn(|a| {
            f64::EPSILON.cbrt() * x[a].abs().max(1.0)
        });
        let h2: [f64; 4] = std::array::from_fn(|a| {
            f64::EPSILON.powf(0.25) * x[a].abs().max(1.0)
        });

        let shifted = |a: usize, da: f64, b: usize, db: f64| -> Result<f64> {
            let mut y = *x;
            y[a] += da;
            y[b] += db;
            f(&y)
        };

        for a in 0..4 {
            jet.grad[a] = (shifted(a, h1[a], a, 0.0)? - shifted(a, -h1[a], a, 0.0)?) / (2.0 * h1[a]);
        }
        for a in 0..4 {
            let d = (shifted(a, h2[a], a, 0.0)? - 2.0 * jet.val + shifted(a, -h2[a], a, 0.0)?)
                / (h2[a] * h2[a]);
            jet.hess[a][a] = d;
        }
        for a in 0..4 {
            for b in (a + 1)..4 {
                let d = (shifted(a, h2[a], b, h2[b])? - shifted(a, h2[a], b, -h2[b])?
                    - shifted(a, -h2[a], b, h2[b])?
                    + shifted(a, -h2[a], b, -h2[b])?)
                    / (4.0 * h2[a] * h2[b]);
                jet.hess[a][b] = d;
                jet.hess[b][a] = d;
            }
        }
        Ok(jet)
    }

    fn eval_field(&self, idx: usize, x: &[f64; 4], mode: DerivMode) -> Result<Jet2> {
        match mode {
            DerivMode::Analytic => self.eval_field_analytic(idx, x),
            DerivMode::Dual => self.eval_field_dual(idx, x),
            DerivMode::Fd => self.eval_field_fd(idx, x),
        }
    }
}

/// Values and first/second partials of every component field at one point.
#[derive(Clone, Debug)]
pub struct MetricSample {
    pub point: [f64; 4],
    pub phi_sq: Jet2,
    pub xi: [Jet2; 3],
    /// Symmetric in the two spatial slots; jets are mirrored on assembly.
    pub g: [[Jet2; 3]; 3],
}

impl MetricSample {
    pub fn phi(&self) -> f64 {
        self.phi_sq.val.sqrt()
    }
}

/// Evaluates all component fields with the requested derivative engine.
pub fn eval_sample(spec: &MetricSpec, point: &[f64; 4], mode: DerivMode) -> Result<MetricSample> {
    spec.check_guards(point)?;

    let phi_sq = spec.eval_field(FIELD_PHI_SQ, point, mode)?;
    if phi_sq.val <= 0.0 {
        return Err(Error::Domain {
            point: *point,
            guard: "phi_sq > 0 (timelike threading direction)".into(),
        });
    }
    // Standing assumption: Phi is independent of x0.
    if phi_sq.grad[0].abs() > 1e-8 * phi_sq.val.abs().max(1.0) {
        return Err(Error::Invalid(
            "phi_sq depends on x0; the threading formulation requires d(phi_sq)/dx0 = 0".into(),
        ));
    }

    let xi = [
        spec.eval_field(field_xi(0), point, mode)?,
        spec.eval_field(field_xi(1), point, mode)?,
        spec.eval_field(field_xi(2), point, mode)?,
    ];

    let mut g = [[Jet2::ZERO; 3]; 3];
    for i in 0..3 {
        for j in i..3 {
            let jet = spec.eval_field(field_g(i, j), point, mode)?;
            g[i][j] = jet;
            g[j][i] = jet;
        }
    }

    Ok(MetricSample {
        point: *point,
        phi_sq,
        xi,
        g,
    })
}

/// Per-probe diagnostics from [`validate_spec`].
#[derive(Clone, Debug, Serialize)]
pub struct ProbeDiagnostics {
    pub point: [f64; 4],
    pub guards_pass: bool,
    pub phi_sq_positive: bool,
    pub phi_time_independent: bool,
    pub h_positive_definite: bool,
    pub phi_sq: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpecDiagnostics {
    pub probes: Vec<ProbeDiagnostics>,
}

impl SpecDiagnostics {
    pub fn all_ok(&self) -> bool {
        self.probes.iter().all(|p| {
            p.guards_pass && p.phi_sq_positive && p.phi_time_independent && p.h_positive_definite
        })
    }
}

/// Checks the structural requirements at each probe point: positive `Phi^2`,
/// `x0`-independence of `Phi`, and positive-definiteness of the induced
/// spatial metric h_ij = g_ij + Phi^-2 xi_i xi_j. Always returns diagnostics;
/// probes outside the guards are reported, not rejected.
pub fn validate_spec(spec: &MetricSpec, probes: &[[f64; 4]]) -> SpecDiagnostics {
    let mut out = Vec::with_capacity(probes.len());
    for point in probes {
        let guards_pass = spec.check_guards(point).is_ok();

        let phi_sq = spec.fields[FIELD_PHI_SQ]
            .value
            .eval(point, &spec.params)
            .unwrap_or(f64::NAN);
        let dphi0 = spec.fields[FIELD_PHI_SQ].d1[0]
            .eval(point, &spec.params)
            .unwrap_or(f64::NAN);
        let phi_sq_positive = phi_sq.is_finite() && phi_sq > 0.0;
        let phi_time_independent = dphi0.is_finite() && dphi0.abs() <= 1e-10 * phi_sq.abs().max(1.0);

        let h_positive_definite = if phi_sq_positive {
            let mut h = [[f64::NAN; 3]; 3];
            let mut ok = true;
            for i in 0..3 {
                for j in 0..3 {
                    let gij = spec.fields[field_g(i, j)]
                        .value
                        .eval(point, &spec.params)
                        .unwrap_or(f64::NAN);
                    let xi_i = spec.fields[field_xi(i)]
                        .value
                        .eval(point, &spec.params)
                        .unwrap_or(f64::NAN);
                    let xi_j = spec.fields[field_xi(j)]
                        .value
                        .eval(point, &spec.params)
                        .unwrap_or(f64::NAN);
                    h[i][j] = gij + xi_i * xi_j / phi_sq;
                    ok &= h[i][j].is_finite();
                }
            }
            // Sylvester's criterion on the three leading minors.
            ok && h[0][0] > 0.0
                && h[0][0] * h[1][1] - h[0][1] * h[1][0] > 0.0
                && crate::linalg::det3(&h) > 0.0
        } else {
            false
        };

        out.push(ProbeDiagnostics {
            point: *point,
            guards_pass,
            phi_sq_positive,
            phi_time_independent,
            h_positive_definite,
            phi_sq,
        });
    }
    SpecDiagnostics { probes: out }
}

// ---------------------------------------------------------------------------
// Metric-spec files
// ---------------------------------------------------------------------------

/// On-disk JSON form. Either a catalog reference (`name` + `params`, plus
/// `scale` for the cosmological family) or explicit `components` with
/// expressions as prefix s-expression strings. `defs` holds named
/// sub-expressions (e.g. `Sigma`, `Delta`) usable inside later expressions;
/// they are substituted inline while parsing.
#[derive(Serialize, Deserialize)]
struct SpecFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    params: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scale: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    defs: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    components: Option<ComponentsFile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    guards: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct ComponentsFile {
    phi_sq: String,
    xi: [String; 3],
    g: [[String; 3]; 3],
}

/// Resolves `defs` that may reference each other in any order; errors on
/// cycles or unknown identifiers that never become resolvable.
fn resolve_defs(raw: &BTreeMap<String, String>) -> Result<BTreeMap<String, Expr>> {
    let mut resolved: BTreeMap<String, Expr> = BTreeMap::new();
    let mut pending: Vec<(&String, &String)> = raw.iter().collect();
    while !pending.is_empty() {
        let before = pending.len();
        pending.retain(|(name, text)| {
            match expr::parse_sexpr(text, VarTable::SPACETIME, &resolved) {
                Ok(e) => {
                    // A def that still parses other defs as bare parameters is
                    // not resolved yet; detect by name collision.
                    if expr_mentions_any(&e, raw, &resolved) {
                        true
                    } else {
                        resolved.insert((*name).clone(), e);
                        false
                    }
                }
                Err(_) => true,
            }
        });
        if pending.len() == before {
            let names: Vec<&str> = pending.iter().map(|(n, _)| n.as_str()).collect();
            return Err(Error::Parse(format!(
                "could not resolve defs (cycle or bad expression): {}",
                names.join(", ")
            )));
        }
    }
    Ok(resolved)
}

fn expr_mentions_any(
    e: &Expr,
    raw: &BTreeMap<String, String>,
    resolved: &BTreeMap<String, Expr>,
) -> bool {
    match e {
        Expr::Param(name) => raw.contains_key(name) && !resolved.contains_key(name),
        Expr::Const(_) | Expr::Coord(_) => false,
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
            expr_mentions_any(a, raw, resolved) || expr_mentions_any(b, raw, resolved)
        }
        Expr::Neg(a)
        | Expr::Pow(a, _)
        | Expr::Sin(a)
        | Expr::Cos(a)
        | Expr::Tan(a)
        | Expr::Sqrt(a)
        | Expr::Exp(a)
        | Expr::Log(a) => expr_mentions_any(a, raw, resolved),
    }
}

/// Parses a metric-spec JSON document.
pub fn parse_spec_json(text: &str) -> Result<MetricSpec> {
    let file: SpecFile = serde_json::from_str(text)?;
    let params: Params = file.params.clone();

    if let Some(name) = &file.name {
        let scale = match &file.scale {
            Some(s) => Some(expr::parse_sexpr(
                s,
                VarTable::SPACETIME,
                &BTreeMap::new(),
            )?),
            None => None,
        };
        return crate::catalog::lookup(name, &params, scale.as_ref());
    }

    let components = file
        .components
        .ok_or_else(|| Error::Invalid("spec file needs either `name` or `components`".into()))?;
    let defs = resolve_defs(&file.defs)?;
    let parse = |s: &str| expr::parse_sexpr(s, VarTable::SPACETIME, &defs);

    let phi_sq = parse(&components.phi_sq)?;
    let xi = [
        parse(&components.xi[0])?,
        parse(&components.xi[1])?,
        parse(&components.xi[2])?,
    ];
    let mut g: [[Expr; 3]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| expr::c(0.0)));
    for i in 0..3 {
        for j in 0..3 {
            g[i][j] = parse(&components.g[i][j])?;
        }
    }
    let guards = file
        .guards
        .iter()
        .map(|s| parse(s))
        .collect::<Result<Vec<_>>>()?;

    MetricSpec::new(phi_sq, xi, g, params, guards)
}

/// Serializes a spec to the components form (defs expanded). Parsing the
/// output reproduces the same spec, so parse -> serialize -> parse is the
/// identity.
pub fn spec_to_json(spec: &MetricSpec) -> String {
    let file = SpecFile {
        name: None,
        params: spec.params.clone(),
        scale: None,
        defs: BTreeMap::new(),
        components: Some(ComponentsFile {
            phi_sq: spec.phi_sq.to_sexpr(),
            xi: [
                spec.xi[0].to_sexpr(),
                spec.xi[1].to_sexpr(),
                spec.xi[2].to_sexpr(),
            ],
            g: std::array::from_fn(|i| std::array::from_fn(|j| spec.g[i][j].to_sexpr())),
        }),
        guards: spec.guards.iter().map(|g| g.to_sexpr()).collect(),
    };
    serde_json::to_string_pretty(&file).expect("spec serialization cannot fail")
}
