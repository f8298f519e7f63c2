//! Built-in metric catalog.
//!
//! All black-hole entries are specializations of the charged rotating family
//! in Boyer-Lindquist-type coordinates `(x0, x1, x2, x3) = (t, r, theta, phi)`
//! with auxiliary quantities
//!
//! ```text
//! Sigma = x1^2 + a^2 cos^2 x2
//! Delta = x1^2 + a^2 + e^2 - 2 m x1
//! ```
//!
//! The cosmological entry `flrw` is spatially flat with a caller-supplied
//! scale factor `s(x0)`; `minkowski` is the flat baseline.
//!
//! Domain guards exclude the horizon/ergoregion (`Delta > 0`, `Phi^2 > 0`)
//! and a thin tube around the polar axis, where the threading frame itself
//! degenerates (`h_33 -> 0` as `sin x2 -> 0`).

use crate::error::{Error, Result};
use crate::expr::{add, c, coord, cos, div, exp, mul, neg, param, powi, sin, sub, Expr, Params};
use crate::metric::MetricSpec;

pub const CATALOG_NAMES: [&str; 6] = [
    "kerr_newman",
    "kerr",
    "reissner_nordstrom",
    "schwarzschild",
    "flrw",
    "minkowski",
];

/// Parameters required by each family (besides the flrw scale expression).
pub fn required_params(name: &str) -> Option<&'static [&'static str]> {
    match name {
        "kerr_newman" => Some(&["m", "a", "e"]),
        "kerr" => Some(&["m", "a"]),
        "reissner_nordstrom" => Some(&["m", "e"]),
        "schwarzschild" => Some(&["m"]),
        "flrw" | "minkowski" => Some(&[]),
        _ => None,
    }
}

/// Looks up a catalog metric. `scale` is required for `flrw` (the scale
/// factor as an expression in `x0`) and ignored elsewhere.
pub fn lookup(name: &str, params: &Params, scale: Option<&Expr>) -> Result<MetricSpec> {
    let need = |key: &str| -> Result<f64> {
        params.get(key).copied().ok_or_else(|| Error::MissingParam {
            metric: name.to_string(),
            param: key.to_string(),
        })
    };
    match name {
        "kerr_newman" => Ok(kerr_newman(need("m")?, need("a")?, need("e")?)),
        "kerr" => Ok(kerr(need("m")?, need("a")?)),
        "reissner_nordstrom" => Ok(reissner_nordstrom(need("m")?, need("e")?)),
        "schwarzschild" => Ok(schwarzschild(need("m")?)),
        "flrw" => {
            let scale = scale.ok_or_else(|| Error::MissingParam {
                metric: name.to_string(),
                param: "scale".to_string(),
            })?;
            let k = params.get("k").copied().unwrap_or(0.0);
            flrw_with_curvature(scale.clone(), k)
        }
        "minkowski" => Ok(minkowski()),
        other => Err(Error::UnknownMetric(other.to_string())),
    }
}

/// Shared component builder for the rotating charged family. Passing literal
/// zero for `a` or `e` lets constant folding specialize the trees.
fn kerr_class(m_val: f64, a_val: f64, e_val: f64, name: &str, params: Params) -> MetricSpec {
    let m = || param("m");
    let a = || {
        if a_val == 0.0 {
            c(0.0)
        } else {
            param("a")
        }
    };
    let e = || {
        if e_val == 0.0 {
            c(0.0)
        } else {
            param("e")
        }
    };

    let sigma = || add(powi(coord(1), 2), mul(powi(a(), 2), powi(cos(coord(2)), 2)));
    let delta = || {
        add(
            sub(
                add(powi(coord(1), 2), powi(a(), 2)),
                mul(c(2.0), mul(m(), coord(1))),
            ),
            powi(e(), 2),
        )
    };
    // q = 2 m x1 - e^2 (the mass/charge combination both phi^2 and xi_3 use)
    let q = || sub(mul(c(2.0), mul(m(), coord(1))), powi(e(), 2));
    let sin2 = || powi(sin(coord(2)), 2);

    let phi_sq = sub(c(1.0), div(q(), sigma()));
    let xi3 = div(mul(neg(q()), mul(a(), sin2())), sigma());

    let g11 = div(sigma(), delta());
    let g22 = sigma();
    let g33 = div(
        mul(
            sub(
                powi(add(powi(coord(1), 2), powi(a(), 2)), 2),
                mul(delta(), mul(powi(a(), 2), sin2())),
            ),
            sin2(),
        ),
        sigma(),
    );

    let zero = || c(0.0);
    let guards = vec![
        delta(),
        sigma(),
        phi_sq.clone(),
        // stay off the polar axis: sin^2 x2 > 1e-16
        sub(sin2(), c(1e-16)),
    ];

    // Random-point domain: outside the widest ergosurface radius
    // m + sqrt(m^2 - e^2), away from the poles.
    let ergo = m_val + (m_val * m_val - e_val * e_val).max(0.0).sqrt();
    let r_lo = 1.12 * ergo + 0.05 * m_val;
    let ranges = [
        [0.0, 1.0],
        [r_lo, 10.0 * m_val.max(0.1)],
        [0.35, std::f64::consts::PI - 0.35],
        [0.0, std::f64::consts::TAU],
    ];

    MetricSpec::new(
        phi_sq,
        [zero(), zero(), xi3],
        [
            [g11, zero(), zero()],
            [zero(), g22, zero()],
            [zero(), zero(), g33],
        ],
        params,
        guards,
    )
    .expect("catalog components are well-formed")
    .with_name(name)
    .with_ranges(ranges)
}

pub fn kerr_newman(m: f64, a: f64, e: f64) -> MetricSpec {
    let mut params = Params::new();
    params.insert("m".into(), m);
    if a != 0.0 {
        params.insert("a".into(), a);
    }
    if e != 0.0 {
        params.insert("e".into(), e);
    }
    kerr_class(m, a, e, "kerr_newman", params)
}

pub fn kerr(m: f64, a: f64) -> MetricSpec {
    let mut params = Params::new();
    params.insert("m".into(), m);
    if a != 0.0 {
        params.insert("a".into(), a);
    }
    kerr_class(m, a, 0.0, "kerr", params)
}

pub fn reissner_nordstrom(m: f64, e: f64) -> MetricSpec {
    let mut params = Params::new();
    params.insert("m".into(), m);
    if e != 0.0 {
        params.insert("e".into(), e);
    }
    kerr_class(m, 0.0, e, "reissner_nordstrom", params)
}

pub fn schwarzschild(m: f64) -> MetricSpec {
    let mut params = Params::new();
    params.insert("m".into(), m);
    kerr_class(m, 0.0, 0.0, "schwarzschild", params)
}

/// Spatially flat cosmological metric with line element
/// `ds^2 = -(dx0)^2 + s(x0)^2 delta_ij dx^i dx^j`.
pub fn flrw(scale: Expr) -> Result<MetricSpec> {
    flrw_with_curvature(scale, 0.0)
}

/// Cosmological metric with spatial curvature `k` in {-1, 0, +1}. For
/// `k = -1` the slices are hyperbolic in hyperspherical coordinates
/// (`x1` radial), so `scale = x0` is the flat-spacetime (Milne) case; for
/// `k = +1` they are round spheres.
pub fn flrw_with_curvature(scale: Expr, k: f64) -> Result<MetricSpec> {
    if scale.depends_on(1) || scale.depends_on(2) || scale.depends_on(3) {
        return Err(Error::Invalid(
            "flrw scale factor must be an expression in x0 only".into(),
        ));
    }
    if k != 0.0 && k != -1.0 && k != 1.0 {
        return Err(Error::Invalid(format!(
            "flrw curvature must be -1, 0 or 1, got {k}"
        )));
    }
    let s2 = || powi(scale.clone(), 2);
    let zero = || c(0.0);

    // radial profile of the slice metric: r, sinh r or sin r
    let (radial, guards, ranges): (Option<Expr>, Vec<Expr>, [[f64; 2]; 4]) = if k == 0.0 {
        (
            None,
            vec![scale.clone()],
            [[0.5, 2.0], [-1.0, 1.0], [-1.0, 1.0], [-1.0, 1.0]],
        )
    } else {
        let r = coord(1);
        let profile = if k < 0.0 {
            // sinh x1 = (e^x1 - e^-x1)/2
            div(sub(exp(r.clone()), exp(neg(r))), c(2.0))
        } else {
            sin(r)
        };
        let pole = sub(powi(sin(coord(2)), 2), c(1e-16));
        let origin = sub(powi(profile.clone(), 2), c(1e-16));
        (
            Some(profile),
            vec![scale.clone(), origin, pole],
            [
                [0.5, 2.0],
                [0.35, 1.5],
                [0.35, std::f64::consts::PI - 0.35],
                [0.0, std::f64::consts::TAU],
            ],
        )
    };

    let g = match radial {
        None => [
            [s2(), zero(), zero()],
            [zero(), s2(), zero()],
            [zero(), zero(), s2()],
        ],
        Some(profile) => {
            let p2 = powi(profile, 2);
            [
                [s2(), zero(), zero()],
                [zero(), mul(s2(), p2.clone()), zero()],
                [
                    zero(),
                    zero(),
                    mul(s2(), mul(p2, powi(sin(coord(2)), 2))),
                ],
            ]
        }
    };

    let mut params = Params::new();
    if k != 0.0 {
        params.insert("k".into(), k);
    }
    Ok(MetricSpec::new(
        c(1.0),
        [zero(), zero(), zero()],
        g,
        params,
        guards,
    )?
    .with_name("flrw")
    .with_ranges(ranges))
}

pub fn minkowski() -> MetricSpec {
    let zero = || c(0.0);
    MetricSpec::new(
        c(1.0),
        [zero(), zero(), zero()],
        [
            [c(1.0), zero(), zero()],
            [zero(), c(1.0), zero()],
            [zero(), zero(), c(1.0)],
        ],
        Params::new(),
        vec![],
    )
    .expect("minkowski components are well-formed")
    .with_name("minkowski")
    .with_ranges([[-2.0, 2.0], [-2.0, 2.0], [-2.0, 2.0], [-2.0, 2.0]])
}
