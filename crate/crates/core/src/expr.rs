//! Scalar fields over the coordinates `x0..x3` as expression trees.
//!
//! Trees are built either programmatically (metric catalog) or parsed from
//! prefix s-expression strings such as `(div Sigma Delta)`. They can be
//! differentiated symbolically, evaluated as plain `f64`, or evaluated in
//! second-order forward mode as a [`Jet2`].
//!
//! Exponents of `pow` are restricted to integers and half-integers.

use crate::error::{Error, Result};
use crate::jet::Jet2;
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Named parameter values, e.g. `m`, `a`, `e`.
pub type Params = BTreeMap<String, f64>;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Coordinate x^a, a in 0..=3.
    Coord(u8),
    Param(String),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    /// Base raised to `twice / 2`, so `twice = 3` means exponent 3/2.
    Pow(Box<Expr>, i32),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Tan(Box<Expr>),
    Sqrt(Box<Expr>),
    Exp(Box<Expr>),
    Log(Box<Expr>),
}

// Constructors with light constant folding. Folding keeps derivative trees
// from accumulating `0 * ...` and `... + 0` chaff; it never reassociates.
pub fn c(v: f64) -> Expr {
    Expr::Const(v)
}

pub fn coord(a: u8) -> Expr {
    assert!(a < 4);
    Expr::Coord(a)
}

pub fn param(name: &str) -> Expr {
    Expr::Param(name.to_string())
}

pub fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x + y),
        (Expr::Const(x), _) if *x == 0.0 => b,
        (_, Expr::Const(y)) if *y == 0.0 => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

pub fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x - y),
        (_, Expr::Const(y)) if *y == 0.0 => a,
        (Expr::Const(x), _) if *x == 0.0 => neg(b),
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

pub fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x * y),
        (Expr::Const(x), _) if *x == 0.0 => Expr::Const(0.0),
        (_, Expr::Const(y)) if *y == 0.0 => Expr::Const(0.0),
        (Expr::Const(x), _) if *x == 1.0 => b,
        (_, Expr::Const(y)) if *y == 1.0 => a,
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

pub fn div(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), _) if *x == 0.0 => Expr::Const(0.0),
        (_, Expr::Const(y)) if *y == 1.0 => a,
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

pub fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(x) => Expr::Const(-x),
        Expr::Neg(inner) => *inner,
        _ => Expr::Neg(Box::new(a)),
    }
}

/// `base` raised to `twice / 2`.
pub fn pow_half(base: Expr, twice: i32) -> Expr {
    match twice {
        0 => Expr::Const(1.0),
        2 => base,
        _ => Expr::Pow(Box::new(base), twice),
    }
}

/// Integer power.
pub fn powi(base: Expr, n: i32) -> Expr {
    pow_half(base, 2 * n)
}

pub fn sin(a: Expr) -> Expr {
    Expr::Sin(Box::new(a))
}
pub fn cos(a: Expr) -> Expr {
    Expr::Cos(Box::new(a))
}
pub fn tan(a: Expr) -> Expr {
    Expr::Tan(Box::new(a))
}
pub fn sqrt(a: Expr) -> Expr {
    Expr::Sqrt(Box::new(a))
}
pub fn exp(a: Expr) -> Expr {
    Expr::Exp(Box::new(a))
}
pub fn log(a: Expr) -> Expr {
    Expr::Log(Box::new(a))
}

impl Expr {
    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(v) if *v == 0.0)
    }

    /// True when any node references the coordinate `axis`.
    pub fn depends_on(&self, axis: u8) -> bool {
        match self {
            Expr::Const(_) | Expr::Param(_) => false,
            Expr::Coord(a) => *a == axis,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.depends_on(axis) || b.depends_on(axis)
            }
            Expr::Neg(a)
            | Expr::Pow(a, _)
            | Expr::Sin(a)
            | Expr::Cos(a)
            | Expr::Tan(a)
            | Expr::Sqrt(a)
            | Expr::Exp(a)
            | Expr::Log(a) => a.depends_on(axis),
        }
    }

    /// Symbolic partial derivative with respect to coordinate `axis`.
    pub fn diff(&self, axis: u8) -> Expr {
        match self {
            Expr::Const(_) | Expr::Param(_) => c(0.0),
            Expr::Coord(a) => c(if *a == axis { 1.0 } else { 0.0 }),
            Expr::Add(a, b) => add(a.diff(axis), b.diff(axis)),
            Expr::Sub(a, b) => sub(a.diff(axis), b.diff(axis)),
            Expr::Mul(a, b) => add(
                mul(a.diff(axis), (**b).clone()),
                mul((**a).clone(), b.diff(axis)),
            ),
            Expr::Div(a, b) => {
                // (a/b)' = a'/b - a b'/b^2
                let da = a.diff(axis);
                let db = b.diff(axis);
                if db.is_zero() {
                    div(da, (**b).clone())
                } else {
                    sub(
                        div(da, (**b).clone()),
                        div(mul((**a).clone(), db), powi((**b).clone(), 2)),
                    )
                }
            }
            Expr::Neg(a) => neg(a.diff(axis)),
            Expr::Pow(a, twice) => {
                let da = a.diff(axis);
                if da.is_zero() {
                    return c(0.0);
                }
                // p u^{p-1} u'
                mul(
                    mul(c(*twice as f64 / 2.0), pow_half((**a).clone(), twice - 2)),
                    da,
                )
            }
            Expr::Sin(a) => mul(cos((**a).clone()), a.diff(axis)),
            Expr::Cos(a) => neg(mul(sin((**a).clone()), a.diff(axis))),
            Expr::Tan(a) => {
                // sec^2 = 1 + tan^2
                mul(
                    add(c(1.0), powi(tan((**a).clone()), 2)),
                    a.diff(axis),
                )
            }
            Expr::Sqrt(a) => div(a.diff(axis), mul(c(2.0), sqrt((**a).clone()))),
            Expr::Exp(a) => mul(exp((**a).clone()), a.diff(axis)),
            Expr::Log(a) => div(a.diff(axis), (**a).clone()),
        }
    }

    /// Plain evaluation. Fails on an unknown parameter or a non-finite
    /// intermediate (division by zero, log of a negative number, ...).
    pub fn eval(&self, x: &[f64; 4], params: &Params) -> Result<f64> {
        let v = self.eval_raw(x, params)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Eval(self.to_sexpr()))
        }
    }

    fn eval_raw(&self, x: &[f64; 4], params: &Params) -> Result<f64> {
        Ok(match self {
            Expr::Const(v) => *v,
            Expr::Coord(a) => x[*a as usize],
            Expr::Param(name) => *params
                .get(name)
                .ok_or_else(|| Error::Invalid(format!("unbound parameter `{name}`")))?,
            Expr::Add(a, b) => a.eval_raw(x, params)? + b.eval_raw(x, params)?,
            Expr::Sub(a, b) => a.eval_raw(x, params)? - b.eval_raw(x, params)?,
            Expr::Mul(a, b) => a.eval_raw(x, params)? * b.eval_raw(x, params)?,
            Expr::Div(a, b) => a.eval_raw(x, params)? / b.eval_raw(x, params)?,
            Expr::Neg(a) => -a.eval_raw(x, params)?,
            Expr::Pow(a, twice) => {
                let base = a.eval_raw(x, params)?;
                if twice % 2 == 0 {
                    base.powi(twice / 2)
                } else {
                    base.powf(*twice as f64 / 2.0)
                }
            }
            Expr::Sin(a) => a.eval_raw(x, params)?.sin(),
            Expr::Cos(a) => a.eval_raw(x, params)?.cos(),
            Expr::Tan(a) => a.eval_raw(x, params)?.tan(),
            Expr::Sqrt(a) => a.eval_raw(x, params)?.sqrt(),
            Expr::Exp(a) => a.eval_raw(x, params)?.exp(),
            Expr::Log(a) => a.eval_raw(x, params)?.ln(),
        })
    }

    /// Forward-mode evaluation: value plus exact gradient and Hessian.
    pub fn eval_jet(&self, x: &[f64; 4], params: &Params) -> Result<Jet2> {
        let j = self.eval_jet_raw(x, params)?;
        if j.is_finite() {
            Ok(j)
        } else {
            Err(Error::Eval(self.to_sexpr()))
        }
    }

    fn eval_jet_raw(&self, x: &[f64; 4], params: &Params) -> Result<Jet2> {
        Ok(match self {
            Expr::Const(v) => Jet2::constant(*v),
            Expr::Coord(a) => Jet2::coordinate(x[*a as usize], *a as usize),
            Expr::Param(name) => Jet2::constant(
                *params
                    .get(name)
                    .ok_or_else(|| Error::Invalid(format!("unbound parameter `{name}`")))?,
            ),
            Expr::Add(a, b) => a.eval_jet_raw(x, params)? + b.eval_jet_raw(x, params)?,
            Expr::Sub(a, b) => a.eval_jet_raw(x, params)? - b.eval_jet_raw(x, params)?,
            Expr::Mul(a, b) => a.eval_jet_raw(x, params)? * b.eval_jet_raw(x, params)?,
            Expr::Div(a, b) => a.eval_jet_raw(x, params)? / b.eval_jet_raw(x, params)?,
            Expr::Neg(a) => -a.eval_jet_raw(x, params)?,
            Expr::Pow(a, twice) => a.eval_jet_raw(x, params)?.pow_half(*twice),
            Expr::Sin(a) => a.eval_jet_raw(x, params)?.sin(),
            Expr::Cos(a) => a.eval_jet_raw(x, params)?.cos(),
            Expr::Tan(a) => a.eval_jet_raw(x, params)?.tan(),
            Expr::Sqrt(a) => a.eval_jet_raw(x, params)?.sqrt(),
            Expr::Exp(a) => a.eval_jet_raw(x, params)?.exp(),
            Expr::Log(a) => a.eval_jet_raw(x, params)?.ln(),
        })
    }

    /// Canonical prefix s-expression form. Constants print in shortest
    /// round-trip notation, so parse -> serialize -> parse is the identity.
    pub fn to_sexpr(&self) -> String {
        let mut s = String::new();
        self.write_sexpr(&mut s);
        s
    }

    fn write_sexpr(&self, out: &mut String) {
        match self {
            Expr::Const(v) => {
                let _ = write!(out, "{v:?}");
            }
            Expr::Coord(a) => {
                let _ = write!(out, "x{a}");
            }
            Expr::Param(name) => out.push_str(name),
            Expr::Add(a, b) => Self::write_binary(out, "add", a, b),
            Expr::Sub(a, b) => Self::write_binary(out, "sub", a, b),
            Expr::Mul(a, b) => Self::write_binary(out, "mul", a, b),
            Expr::Div(a, b) => Self::write_binary(out, "div", a, b),
            Expr::Neg(a) => Self::write_unary(out, "neg", a),
            Expr::Pow(a, twice) => {
                out.push_str("(pow ");
                a.write_sexpr(out);
                if twice % 2 == 0 {
                    let _ = write!(out, " {}", twice / 2);
                } else {
                    let _ = write!(out, " {twice}/2");
                }
                out.push(')');
            }
            Expr::Sin(a) => Self::write_unary(out, "sin", a),
            Expr::Cos(a) => Self::write_unary(out, "cos", a),
            Expr::Tan(a) => Self::write_unary(out, "tan", a),
            Expr::Sqrt(a) => Self::write_unary(out, "sqrt", a),
            Expr::Exp(a) => Self::write_unary(out, "exp", a),
            Expr::Log(a) => Self::write_unary(out, "log", a),
        }
    }

    fn write_binary(out: &mut String, op: &str, a: &Expr, b: &Expr) {
        out.push('(');
        out.push_str(op);
        out.push(' ');
        a.write_sexpr(out);
        out.push(' ');
        b.write_sexpr(out);
        out.push(')');
    }

    fn write_unary(out: &mut String, op: &str, a: &Expr) {
        out.push('(');
        out.push_str(op);
        out.push(' ');
        a.write_sexpr(out);
        out.push(')');
    }
}

/// Maps identifiers to coordinate axes while parsing. Anything not listed and
/// not a number becomes a named parameter.
#[derive(Clone, Copy)]
pub struct VarTable<'a> {
    entries: &'a [(&'a str, u8)],
}

impl<'a> VarTable<'a> {
    /// Spacetime coordinates `x0..x3`.
    pub const SPACETIME: VarTable<'static> = VarTable {
        entries: &[("x0", 0), ("x1", 1), ("x2", 2), ("x3", 3)],
    };

    /// Single proper-time variable `tau` (used by focusing profiles).
    pub const PROPER_TIME: VarTable<'static> = VarTable {
        entries: &[("tau", 0)],
    };

    fn lookup(&self, name: &str) -> Option<u8> {
        self.entries
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, a)| *a)
    }
}

/// Parses a prefix s-expression, e.g. `(sub 1 (div (sub (mul 2 (mul m x1)) (pow e 2)) Sigma))`.
///
/// `defs` supplies named sub-expressions (referenced like parameters) that are
/// substituted inline during parsing.
pub fn parse_sexpr(input: &str, vars: VarTable, defs: &BTreeMap<String, Expr>) -> Result<Expr> {
    let tokens = tokenize(input)?;
    let mut pos = 0;
    let expr = parse_tokens(&tokens, &mut pos, vars, defs)?;
    if pos != tokens.len() {
        return Err(Error::Parse(format!(
            "trailing tokens after expression: `{}`",
            tokens[pos..].join(" ")
        )));
    }
    Ok(expr)
}

fn tokenize(input: &str) -> Result<Vec<String>> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    for ch in input.chars() {
        match ch {
            '(' | ')' => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
                tokens.push(ch.to_string());
            }
            ch if ch.is_whitespace() => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
            }
            _ => cur.push(ch),
        }
    }
    if !cur.is_empty() {
        tokens.push(cur);
    }
    if tokens.is_empty() {
        return Err(Error::Parse("empty expression".into()));
    }
    Ok(tokens)
}

fn parse_tokens(
    tokens: &[String],
    pos: &mut usize,
    vars: VarTable,
    defs: &BTreeMap<String, Expr>,
) -> Result<Expr> {
    let tok = tokens
        .get(*pos)
        .ok_or_else(|| Error::Parse("unexpected end of expression".into()))?;
    *pos += 1;

    if tok != "(" {
        return parse_atom(tok, vars, defs);
    }

    let op = tokens
        .get(*pos)
        .ok_or_else(|| Error::Parse("missing operator after `(`".into()))?
        .clone();
    *pos += 1;

    let mut args = Vec::new();
    let mut pow_exp: Option<i32> = None;
    loop {
        let tok = tokens
            .get(*pos)
            .ok_or_else(|| Error::Parse(format!("unclosed `({op} ...`")))?;
        if tok == ")" {
            *pos += 1;
            break;
        }
        if op == "pow" && args.len() == 1 {
            pow_exp = Some(parse_exponent(tok)?);
            *pos += 1;
            continue;
        }
        args.push(parse_tokens(tokens, pos, vars, defs)?);
    }

    let arity = |n: usize| -> Result<()> {
        if args.len() == n {
            Ok(())
        } else {
            Err(Error::Parse(format!(
                "`{op}` expects {n} argument(s), got {}",
                args.len()
            )))
        }
    };

    match op.as_str() {
        // add and mul fold variadically; sub and div are strictly binary
        "add" => {
            if args.len() < 2 {
                return Err(Error::Parse("`add` expects at least 2 arguments".into()));
            }
            let mut it = args.into_iter();
            let first = it.next().unwrap();
            Ok(it.fold(first, add))
        }
        "mul" => {
            if args.len() < 2 {
                return Err(Error::Parse("`mul` expects at least 2 arguments".into()));
            }
            let mut it = args.into_iter();
            let first = it.next().unwrap();
            Ok(it.fold(first, mul))
        }
        "sub" => {
            arity(2)?;
            let mut it = args.into_iter();
            Ok(sub(it.next().unwrap(), it.next().unwrap()))
        }
        "div" => {
            arity(2)?;
            let mut it = args.into_iter();
            Ok(div(it.next().unwrap(), it.next().unwrap()))
        }
        "neg" => {
            arity(1)?;
            Ok(neg(args.into_iter().next().unwrap()))
        }
        "pow" => {
            arity(1)?;
            let twice =
                pow_exp.ok_or_else(|| Error::Parse("`pow` is missing its exponent".into()))?;
            Ok(pow_half(args.into_iter().next().unwrap(), twice))
        }
        "sin" => {
            arity(1)?;
            Ok(sin(args.into_iter().next().unwrap()))
        }
        "cos" => {
            arity(1)?;
            Ok(cos(args.into_iter().next().unwrap()))
        }
        "tan" => {
            arity(1)?;
            Ok(tan(args.into_iter().next().unwrap()))
        }
        "sqrt" => {
            arity(1)?;
            Ok(sqrt(args.into_iter().next().unwrap()))
        }
        "exp" => {
            arity(1)?;
            Ok(exp(args.into_iter().next().unwrap()))
        }
        "log" => {
            arity(1)?;
            Ok(log(args.into_iter().next().unwrap()))
        }
        other => Err(Error::Parse(format!("unknown operator `{other}`"))),
    }
}

/// Exponent token for `pow`: an integer like `3` or a half-integer like `3/2`.
fn parse_exponent(tok: &str) -> Result<i32> {
    if let Some(numer) = tok.strip_suffix("/2") {
        numer
            .parse::<i32>()
            .map_err(|_| Error::Parse(format!("bad exponent `{tok}`")))
    } else {
        tok.parse::<i32>()
            .map(|n| 2 * n)
            .map_err(|_| Error::Parse(format!("bad exponent `{tok}` (integer or n/2)")))
    }
}

fn parse_atom(tok: &str, vars: VarTable, defs: &BTreeMap<String, Expr>) -> Result<Expr> {
    if let Ok(v) = tok.parse::<f64>() {
        return Ok(c(v));
    }
    if let Some(axis) = vars.lookup(tok) {
        return Ok(coord(axis));
    }
    if let Some(def) = defs.get(tok) {
        return Ok(def.clone());
    }
    if tok
        .chars()
        .all(|ch| ch.is_ascii_alphanumeric() || ch == '_')
        && tok.chars().next().is_some_and(|ch| ch.is_ascii_alphabetic() || ch == '_')
    {
        Ok(param(tok))
    } else {
        Err(Error::Parse(format!("bad token `{tok}`")))
    }
}
