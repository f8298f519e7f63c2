//! Second-order forward-mode arithmetic over the four spacetime coordinates.
//!
//! A [`Jet2`] carries a value together with its full gradient and Hessian with
//! respect to `x0..x3`. Propagating jets through an expression yields exact
//! first and second partial derivatives in one pass, independently of the
//! symbolic differentiation path, which is what makes the two modes useful as
//! cross-checks of each other.

/// Value, gradient and Hessian of a scalar quantity at a spacetime point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet2 {
    pub val: f64,
    pub grad: [f64; 4],
    /// Symmetric 4x4 matrix of second partials; `hess[a][b]` is d2/dx^a dx^b.
    pub hess: [[f64; 4]; 4],
}

impl Jet2 {
    pub const ZERO: Jet2 = Jet2 {
        val: 0.0,
        grad: [0.0; 4],
        hess: [[0.0; 4]; 4],
    };

    pub fn constant(val: f64) -> Self {
        Jet2 { val, ..Self::ZERO }
    }

    /// Seed for the coordinate `axis`: value with unit first derivative.
    pub fn coordinate(val: f64, axis: usize) -> Self {
        let mut grad = [0.0; 4];
        grad[axis] = 1.0;
        Jet2 {
            val,
            grad,
            hess: [[0.0; 4]; 4],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.val.is_finite()
            && self.grad.iter().all(|g| g.is_finite())
            && self.hess.iter().flatten().all(|h| h.is_finite())
    }

    /// Chain rule for a smooth unary map with value `f`, slope `df` and
    /// curvature `d2f` at `self.val`.
    fn chain(&self, f: f64, df: f64, d2f: f64) -> Jet2 {
        let mut out = Jet2::constant(f);
        for a in 0..4 {
            out.grad[a] = df * self.grad[a];
        }
        for a in 0..4 {
            for b in 0..4 {
                out.hess[a][b] = df * self.hess[a][b] + d2f * self.grad[a] * self.grad[b];
            }
        }
        out
    }

    pub fn recip(&self) -> Jet2 {
        let v = self.val;
        self.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }

    pub fn sin(&self) -> Jet2 {
        let (s, c) = self.val.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(&self) -> Jet2 {
        let (s, c) = self.val.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn tan(&self) -> Jet2 {
        let t = self.val.tan();
        let sec2 = 1.0 + t * t;
        self.chain(t, sec2, 2.0 * t * sec2)
    }

    pub fn sqrt(&self) -> Jet2 {
        let s = self.val.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * s * s))
    }

    pub fn exp(&self) -> Jet2 {
        let e = self.val.exp();
        self.chain(e, e, e)
    }

    pub fn ln(&self) -> Jet2 {
        let v = self.val;
        self.chain(v.ln(), 1.0 / v, -1.0 / (v * v))
    }

    /// Power with exponent `twice / 2` (integer or half-integer).
    pub fn pow_half(&self, twice: i32) -> Jet2 {
        let p = twice as f64 / 2.0;
        let v = self.val;
        let f = if twice % 2 == 0 {
            v.powi(twice / 2)
        } else {
            v.powf(p)
        };
        // f' = p v^(p-1), f'' = p (p-1) v^(p-2); expressed through f to keep
        // v = 0 with p >= 2 finite.
        let (df, d2f) = if v == 0.0 {
            match twice {
                2 => (1.0, 0.0),
                4 => (0.0, 2.0),
                t if t >= 6 => (0.0, 0.0),
                _ => (f64::NAN, f64::NAN),
            }
        } else {
            (p * f / v, p * (p - 1.0) * f / (v * v))
        };
        self.chain(f, df, d2f)
    }
}

impl std::ops::Add for Jet2 {
    type Output = Jet2;
    fn add(self, rhs: Jet2) -> Jet2 {
        let mut out = self;
        out.val += rhs.val;
        for a in 0..4 {
            out.grad[a] += rhs.grad[a];
            for b in 0..4 {
                out.hess[a][b] += rhs.hess[a][b];
            }
        }
        out
    }
}

impl std::ops::Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, rhs: Jet2) -> Jet2 {
        let mut out = self;
        out.val -= rhs.val;
        for a in 0..4 {
            out.grad[a] -= rhs.grad[a];
            for b in 0..4 {
                out.hess[a][b] -= rhs.hess[a][b];
            }
        }
        out
    }
}

impl std::ops::Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        let mut out = self;
        out.val = -out.val;
        for a in 0..4 {
            out.grad[a] = -out.grad[a];
            for b in 0..4 {
                out.hess[a][b] = -out.hess[a][b];
            }
        }
        out
    }
}

impl std::ops::Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: Jet2) -> Jet2 {
        let mut out = Jet2::constant(self.val * rhs.val);
        for a in 0..4 {
            out.grad[a] = self.grad[a] * rhs.val + self.val * rhs.grad[a];
        }
        for a in 0..4 {
            for b in 0..4 {
                out.hess[a][b] = self.hess[a][b] * rhs.val
                    + self.val * rhs.hess[a][b]
                    + self.grad[a] * rhs.grad[b]
                    + self.grad[b] * rhs.grad[a];
            }
        }
        out
    }
}

impl std::ops::Div for Jet2 {
    type Output = Jet2;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Jet2) -> Jet2 {
        self * rhs.recip()
    }
}

impl std::ops::Mul<f64> for Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: f64) -> Jet2 {
        self * Jet2::constant(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn seed(x: &[f64; 4]) -> [Jet2; 4] {
        [
            Jet2::coordinate(x[0], 0),
            Jet2::coordinate(x[1], 1),
            Jet2::coordinate(x[2], 2),
            Jet2::coordinate(x[3], 3),
        ]
    }

    // f = x1^2 sin(x2) + exp(x0 x3); all partials known in closed form.
    fn f(v: &[Jet2; 4]) -> Jet2 {
        v[1].pow_half(4) * v[2].sin() + (v[0] * v[3]).exp()
    }

    #[test]
    fn gradient_and_hessian_match_closed_form() {
        let x = [0.3, 1.7, 0.9, -0.4];
        let j = f(&seed(&x));

        let (x0, x1, x2, x3) = (x[0], x[1], x[2], x[3]);
        assert_relative_eq!(j.val, x1 * x1 * x2.sin() + (x0 * x3).exp(), epsilon = 1e-14);
        assert_relative_eq!(j.grad[1], 2.0 * x1 * x2.sin(), epsilon = 1e-14);
        assert_relative_eq!(j.grad[2], x1 * x1 * x2.cos(), epsilon = 1e-14);
        assert_relative_eq!(j.grad[0], x3 * (x0 * x3).exp(), epsilon = 1e-14);
        assert_relative_eq!(j.hess[1][2], 2.0 * x1 * x2.cos(), epsilon = 1e-14);
        assert_relative_eq!(j.hess[1][1], 2.0 * x2.sin(), epsilon = 1e-14);
        assert_relative_eq!(
            j.hess[0][3],
            (1.0 + x0 * x3) * (x0 * x3).exp(),
            epsilon = 1e-14
        );
        // Hessian symmetry is structural.
        for a in 0..4 {
            for b in 0..4 {
                assert_eq!(j.hess[a][b], j.hess[b][a]);
            }
        }
    }

    #[test]
    fn quotient_and_half_powers() {
        let x = [0.0, 2.0, 0.6, 1.0];
        let v = seed(&x);
        let j = (v[1].pow_half(3) / v[2].cos()).ln(); // ln(x1^{3/2} / cos x2)
        let expected = 1.5 * x[1].ln() - x[2].cos().ln();
        assert_relative_eq!(j.val, expected, epsilon = 1e-14);
        assert_relative_eq!(j.grad[1], 1.5 / x[1], epsilon = 1e-14);
        assert_relative_eq!(j.grad[2], x[2].tan(), epsilon = 1e-14);
        assert_relative_eq!(j.hess[1][1], -1.5 / (x[1] * x[1]), epsilon = 1e-14);
        let sec2 = 1.0 / (x[2].cos() * x[2].cos());
        assert_relative_eq!(j.hess[2][2], sec2, epsilon = 1e-13);
    }
}
