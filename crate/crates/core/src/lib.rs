//! Numerical toolkit for threading a spacetime along a preferred timelike
//! direction `xi = d/dx0` that need not be normalized.
//!
//! From a metric of the form
//! `ds^2 = -Phi^2 (dx0)^2 + 2 xi_i dx^i dx0 + g_ij dx^i dx^j`
//! the crate computes, at any point:
//!
//! * the adapted (threading) frame and the induced spatial metric `h_ij`,
//! * congruence kinematics: vorticity, expansion, shear, the acceleration
//!   covectors and the geodesic covector `b_i`,
//! * the spatial connection on the orthogonal distribution, its curvature,
//!   and the split of the spacetime curvature/Ricci tensor into spatial
//!   pieces plus kinematic terms,
//! * generalized Raychaudhuri balances, time-derivative identities for the
//!   kinematic fields, the electric Weyl block, and a focusing-interval
//!   classifier with a 1D expansion integrator,
//! * geodesics in the adapted variables, their conserved quantity
//!   `K = Phi^2 (delta x0 / delta lambda)`, the induced 3D force, and the
//!   force identity along trajectories.
//!
//! Everything is cross-validated against an independent brute-force 4D
//! curvature oracle ([`oracle`]) driven by the same metric samples; see
//! [`verify`] for the full identity suite.

// Index loops mirror the tensor notation throughout; iterator rewrites
// would obscure the formulas.
#![allow(clippy::needless_range_loop)]

pub mod catalog;
pub mod connection;
pub mod curvature;
pub mod error;
pub mod expr;
mod fields;
pub mod geodesic;
pub mod jet;
pub mod linalg;
pub mod metric;
pub mod oracle;
pub mod raychaudhuri;
mod rk;
pub mod threading;
pub mod verify;

pub use error::{Error, Result};
pub use expr::{Expr, Params};
pub use jet::Jet2;
pub use metric::{eval_sample, validate_spec, DerivMode, MetricSample, MetricSpec};
pub use threading::{KinematicState, ThreadingVector};
