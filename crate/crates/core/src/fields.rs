//! Internal per-point context: every derived field (spatial metric,
//! kinematic quantities, spatial connection) together with its first
//! coordinate partials, assembled once from a [`MetricSample`] and shared by
//! the threading, connection, curvature and geodesic layers.
//!
//! All index gymnastics below use zero-based spatial indices 0..3 for the
//! spatial slots and 0..4 for coordinates; `grad[k + 1]` is the partial along
//! the k-th spatial coordinate.
//!
//! The adapted spatial frame vectors are `delta_i = d/dx^i + P_i d/dx^0` with
//! `P_i = Phi^-2 xi_i`, so the spatial directional derivative of a scalar f
//! is `delta f / delta x^i = df/dx^i + P_i df/dx^0`.

use crate::error::{Error, Result};
use crate::jet::Jet2;
use crate::linalg::{self, Mat3};
use crate::metric::MetricSample;

/// A scalar value carrying its four first coordinate partials.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct V1 {
    pub v: f64,
    pub d: [f64; 4],
}

impl V1 {
    fn from_jet_component(val: f64, d: [f64; 4]) -> V1 {
        V1 { v: val, d }
    }
}

pub(crate) struct FieldCtx {
    pub phi_sq: Jet2,
    /// P_i = Phi^-2 xi_i as full jets (value, gradient, Hessian).
    pub p: [Jet2; 3],
    /// Induced spatial metric h_ij = g_ij + Phi^-2 xi_i xi_j as full jets.
    pub h: [[Jet2; 3]; 3],
    pub h_lo: Mat3,
    pub h_up: Mat3,
    /// d h^ij / dx^a, indexed [a][i][j].
    pub dh_up: [Mat3; 4],

    // Kinematics, each with first partials.
    pub omega: [[V1; 3]; 3],
    pub theta_lo: [[V1; 3]; 3],
    pub theta_scalar: V1,
    pub sigma: [[V1; 3]; 3],
    pub a_co: [V1; 3],
    pub c_co: [V1; 3],
    pub b_co: [V1; 3],

    /// Mixed tensors indexed [k][i] = T_i^k = h^{kh} T_{hi}.
    pub omega_mixed: [[V1; 3]; 3],
    pub theta_mixed: [[V1; 3]; 3],
    pub sigma_mixed: [[V1; 3]; 3],
    pub b_up: [V1; 3],

    /// Spatial connection coefficients [k][i][j], symmetric in (i, j).
    pub gamma_s: [[[f64; 3]; 3]; 3],
    /// d gamma_s / dx^a, indexed [a][k][i][j].
    pub d_gamma_s: [[[[f64; 3]; 3]; 3]; 4],
    /// Time coefficients [k][i]: theta_i^k + Phi^2 omega_i^k.
    pub gamma_t: [[f64; 3]; 3],
}

impl FieldCtx {
    pub fn new(sample: &MetricSample) -> Result<FieldCtx> {
        let phi_sq = sample.phi_sq;
        let inv_phi_sq = phi_sq.recip();
        let p: [Jet2; 3] = std::array::from_fn(|i| sample.xi[i] * inv_phi_sq);

        // h_ij = g_ij + Phi^-2 xi_i xi_j; jets mirror exactly because the
        // product of jets commutes componentwise.
        let mut h = [[Jet2::ZERO; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                h[i][j] = sample.g[i][j] + p[i] * sample.xi[j];
            }
        }
        for i in 0..3 {
            for j in (i + 1)..3 {
                h[j][i] = h[i][j];
            }
        }

        let h_lo: Mat3 = std::array::from_fn(|i| std::array::from_fn(|j| h[i][j].val));
        let h_up = match linalg::inv3(&h_lo) {
            Some((inv, det)) if det > 0.0 => inv,
            Some((_, det)) => return Err(Error::SingularMetric(det)),
            None => return Err(Error::SingularMetric(0.0)),
        };

        // d h^ij/dx^a = -h^ik h^jl d h_kl/dx^a
        let mut dh_up = [[[0.0; 3]; 3]; 4];
        for a in 0..4 {
            for i in 0..3 {
                for j in 0..3 {
                    let mut s = 0.0;
                    for k in 0..3 {
                        for l in 0..3 {
                            s -= h_up[i][k] * h_up[j][l] * h[k][l].grad[a];
                        }
                    }
                    dh_up[a][i][j] = s;
                }
            }
        }

        // Expansion tensor: half the x0-derivative of h.
        let mut theta_lo = [[V1::default(); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                theta_lo[i][j] = V1::from_jet_component(
                    0.5 * h[i][j].grad[0],
                    std::array::from_fn(|a| 0.5 * h[i][j].hess[0][a]),
                );
            }
        }

        // Vorticity from the frame potential A_i = -P_i:
        // omega_ij = (delta A_j / delta x^i - delta A_i / delta x^j) / 2.
        let delta_of = |jet: &Jet2, k: usize| -> f64 { jet.grad[k + 1] + p[k].val * jet.grad[0] };
        let d_delta_of = |jet: &Jet2, k: usize, a: usize| -> f64 {
            jet.hess[k + 1][a] + p[k].grad[a] * jet.grad[0] + p[k].val * jet.hess[0][a]
        };
        let a_pot: [Jet2; 3] = std::array::from_fn(|i| -p[i]);
        let mut omega = [[V1::default(); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let v = 0.5 * (delta_of(&a_pot[j], i) - delta_of(&a_pot[i], j));
                let d = std::array::from_fn(|a| {
                    0.5 * (d_delta_of(&a_pot[j], i, a) - d_delta_of(&a_pot[i], j, a))
                });
                omega[i][j] = V1 { v, d };
            }
        }

        // a_i = Phi^-2 d xi_i/dx0 = d P_i/dx0 (Phi is x0-independent),
        // c_i = d ln Phi / dx^i, b_i = a_i + c_i.
        let log_phi_sq = phi_sq.ln();
        let a_co: [V1; 3] = std::array::from_fn(|i| V1 {
            v: p[i].grad[0],
            d: std::array::from_fn(|a| p[i].hess[0][a]),
        });
        let c_co: [V1; 3] = std::array::from_fn(|i| V1 {
            v: 0.5 * log_phi_sq.grad[i + 1],
            d: std::array::from_fn(|a| 0.5 * log_phi_sq.hess[i + 1][a]),
        });
        let b_co: [V1; 3] = std::array::from_fn(|i| V1 {
            v: a_co[i].v + c_co[i].v,
            d: std::array::from_fn(|a| a_co[i].d[a] + c_co[i].d[a]),
        });

        // Raised/mixed forms with product-rule partials.
        let raise_mixed = |lo: &[[V1; 3]; 3]| -> [[V1; 3]; 3] {
            // out[k][i] = h^{kh} lo_{hi}
            std::array::from_fn(|k| {
                std::array::from_fn(|i| {
                    let mut v = 0.0;
                    let mut d = [0.0; 4];
                    for hh in 0..3 {
                        v += h_up[k][hh] * lo[hh][i].v;
                        for a in 0..4 {
                            d[a] += dh_up[a][k][hh] * lo[hh][i].v + h_up[k][hh] * lo[hh][i].d[a];
                        }
                    }
                    V1 { v, d }
                })
            })
        };

        let theta_mixed = raise_mixed(&theta_lo);
        let omega_mixed = raise_mixed(&omega);

        let mut theta_scalar = V1::default();
        for k in 0..3 {
            theta_scalar.v += theta_mixed[k][k].v;
            for a in 0..4 {
                theta_scalar.d[a] += theta_mixed[k][k].d[a];
            }
        }

        let mut sigma = [[V1::default(); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                sigma[i][j] = V1 {
                    v: theta_lo[i][j].v - theta_scalar.v * h[i][j].val / 3.0,
                    d: std::array::from_fn(|a| {
                        theta_lo[i][j].d[a]
                            - (theta_scalar.d[a] * h[i][j].val + theta_scalar.v * h[i][j].grad[a])
                                / 3.0
                    }),
                };
            }
        }
        let sigma_mixed = raise_mixed(&sigma);

        let b_up: [V1; 3] = std::array::from_fn(|k| {
            let mut v = 0.0;
            let mut d = [0.0; 4];
            for hh in 0..3 {
                v += h_up[k][hh] * b_co[hh].v;
                for a in 0..4 {
                    d[a] += dh_up[a][k][hh] * b_co[hh].v + h_up[k][hh] * b_co[hh].d[a];
                }
            }
            V1 { v, d }
        });

        // Spatial connection from the Koszul combination of delta-derivatives
        // of h, and its coordinate partials via the product rule.
        let mut gamma_s = [[[0.0; 3]; 3]; 3];
        let mut d_gamma_s = [[[[0.0; 3]; 3]; 3]; 4];
        for k in 0..3 {
            for i in 0..3 {
                for j in i..3 {
                    let mut v = 0.0;
                    let mut d = [0.0; 4];
                    for l in 0..3 {
                        let koszul =
                            delta_of(&h[l][j], i) + delta_of(&h[l][i], j) - delta_of(&h[i][j], l);
                        v += 0.5 * h_up[k][l] * koszul;
                        for a in 0..4 {
                            let d_koszul = d_delta_of(&h[l][j], i, a) + d_delta_of(&h[l][i], j, a)
                                - d_delta_of(&h[i][j], l, a);
                            d[a] += 0.5 * (dh_up[a][k][l] * koszul + h_up[k][l] * d_koszul);
                        }
                    }
                    gamma_s[k][i][j] = v;
                    gamma_s[k][j][i] = v;
                    for a in 0..4 {
                        d_gamma_s[a][k][i][j] = d[a];
                        d_gamma_s[a][k][j][i] = d[a];
                    }
                }
            }
        }

        let gamma_t: [[f64; 3]; 3] = std::array::from_fn(|k| {
            std::array::from_fn(|i| theta_mixed[k][i].v + phi_sq.val * omega_mixed[k][i].v)
        });

        Ok(FieldCtx {
            phi_sq,
            p,
            h,
            h_lo,
            h_up,
            dh_up,
            omega,
            theta_lo,
            theta_scalar,
            sigma,
            a_co,
            c_co,
            b_co,
            omega_mixed,
            theta_mixed,
            sigma_mixed,
            b_up,
            gamma_s,
            d_gamma_s,
            gamma_t,
        })
    }

    /// delta f / delta x^k of a scalar-with-partials.
    pub fn delta_spatial(&self, f: &V1, k: usize) -> f64 {
        f.d[k + 1] + self.p[k].val * f.d[0]
    }

    /// Spatial covariant derivative of a covector field: T_{i|k}.
    pub fn cov_spatial_covector(&self, t: &[V1; 3]) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for k in 0..3 {
                let mut v = self.delta_spatial(&t[i], k);
                for hh in 0..3 {
                    v -= t[hh].v * self.gamma_s[hh][i][k];
                }
                out[i][k] = v;
            }
        }
        out
    }

    /// Spatial covariant derivative of a (0,2) field: T_{ij|k}, indexed [i][j][k].
    pub fn cov_spatial_bilinear(&self, t: &[[V1; 3]; 3]) -> [[[f64; 3]; 3]; 3] {
        let mut out = [[[0.0; 3]; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let mut v = self.delta_spatial(&t[i][j], k);
                    for hh in 0..3 {
                        v -= t[hh][j].v * self.gamma_s[hh][i][k]
                            + t[i][hh].v * self.gamma_s[hh][j][k];
                    }
                    out[i][j][k] = v;
                }
            }
        }
        out
    }

    /// Time covariant derivative of a (0,2) field: T_{ij|0}.
    pub fn cov_time_bilinear(&self, t: &[[V1; 3]; 3]) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let mut v = t[i][j].d[0];
                for hh in 0..3 {
                    v -= t[hh][j].v * self.gamma_t[hh][i] + t[i][hh].v * self.gamma_t[hh][j];
                }
                out[i][j] = v;
            }
        }
        out
    }

    /// Covariant divergence of a mixed field T_i^k (stored [k][i]): T^k_{i|k}.
    pub fn div_mixed(&self, t: &[[V1; 3]; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for i in 0..3 {
            let mut v = 0.0;
            for k in 0..3 {
                v += self.delta_spatial(&t[k][i], k);
                for hh in 0..3 {
                    v += t[hh][i].v * self.gamma_s[k][hh][k];
                    v -= t[k][hh].v * self.gamma_s[hh][i][k];
                }
            }
            out[i] = v;
        }
        out
    }

    /// Covariant divergence of a vector field T^k: T^k_{|k}.
    pub fn div_vector(&self, t: &[V1; 3]) -> f64 {
        let mut v = 0.0;
        for k in 0..3 {
            v += self.delta_spatial(&t[k], k);
            for hh in 0..3 {
                v += t[hh].v * self.gamma_s[k][hh][k];
            }
        }
        v
    }

    /// Full double contraction T_kh T^{kh} with both indices raised by h.
    pub fn double_contraction(&self, lo: &[[V1; 3]; 3]) -> f64 {
        let mut s = 0.0;
        for k in 0..3 {
            for hh in 0..3 {
                for i in 0..3 {
                    for j in 0..3 {
                        s += lo[k][hh].v * self.h_up[k][i] * self.h_up[hh][j] * lo[i][j].v;
                    }
                }
            }
        }
        s
    }

    pub fn b_sq(&self) -> f64 {
        let mut s = 0.0;
        for k in 0..3 {
            s += self.b_co[k].v * self.b_up[k].v;
        }
        s
    }
}
