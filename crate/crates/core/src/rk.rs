//! Embedded Dormand-Prince 5(4) stepper with adaptive step control and
//! domain-boundary handling.
//!
//! A step is rejected when the embedded error estimate exceeds the
//! tolerance, when a stage leaves the guard region, or when the right-hand
//! side fails to evaluate. Rejected boundary steps are bisected on the step
//! size so the returned endpoint sits just inside the boundary.

use crate::error::{Error, Result};

const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 6] = [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
/// Fifth-order weights (FSAL: identical to the last stage row).
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
/// Fifth- minus fourth-order weights; contracts the stages into the
/// embedded error estimate.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum RkStatus {
    Completed,
    /// The trajectory reached the guard boundary; the final state is the
    /// last accepted point inside.
    BoundaryHit,
    /// The step callback requested an early stop.
    Stopped,
}

#[derive(Clone, Debug)]
pub(crate) struct RkResult<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub status: RkStatus,
}

enum Attempt<const N: usize> {
    Evaluated { y: [f64; N], err: f64 },
    RhsFailed,
}

fn try_step<const N: usize>(
    rhs: &mut impl FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
    t: f64,
    y: &[f64; N],
    k1: &[f64; N],
    h: f64,
    tol: f64,
) -> Attempt<N> {
    let mut k = [[0.0; N]; 7];
    k[0] = *k1;
    for stage in 0..6 {
        let mut ys = *y;
        for i in 0..N {
            let mut acc = 0.0;
            for (prev, kp) in k.iter().enumerate().take(stage + 1) {
                acc += A[stage][prev] * kp[i];
            }
            ys[i] += h * acc;
        }
        match rhs(t + C[stage] * h, &ys) {
            Ok(f) => k[stage + 1] = f,
            Err(_) => return Attempt::RhsFailed,
        }
    }

    let mut y_new = *y;
    let mut err_sq = 0.0;
    for i in 0..N {
        let mut dy = 0.0;
        let mut e = 0.0;
        for s in 0..7 {
            dy += B5[s] * k[s][i];
            e += E[s] * k[s][i];
        }
        y_new[i] += h * dy;
        let scale = tol + tol * y[i].abs().max(y_new[i].abs());
        let r = h * e / scale;
        err_sq += r * r;
    }
    let err = (err_sq / N as f64).sqrt();
    if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
        return Attempt::RhsFailed;
    }
    Attempt::Evaluated { y: y_new, err }
}

/// Integrates `y' = rhs(t, y)` from `t0` to `t_end` with per-step error
/// control at `tol`.
///
/// `guard(t, y)` must return true inside the admissible region; `on_step`
/// fires on every accepted step and may return false to stop early.
pub(crate) fn integrate_adaptive<const N: usize>(
    rhs: &mut impl FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
    guard: &impl Fn(f64, &[f64; N]) -> bool,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    tol: f64,
    on_step: &mut impl FnMut(f64, &[f64; N]) -> bool,
) -> Result<RkResult<N>> {
    let span = t_end - t0;
    if span <= 0.0 {
        return Err(Error::Invalid("integration span must be positive".into()));
    }
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::Invalid("tolerance must be positive".into()));
    }
    let mut t = t0;
    let mut y = y0;
    let mut h = (span / 100.0).min(0.1);
    let h_min = span * 1e-14;
    let mut steps = 0usize;
    const MAX_STEPS: usize = 50_000_000;

    let mut k1 = rhs(t, &y)?;

    loop {
        if t >= t_end - h_min {
            return Ok(RkResult {
                t,
                y,
                status: RkStatus::Completed,
            });
        }
        h = h.min(t_end - t);
        steps += 1;
        if steps > MAX_STEPS {
            return Err(Error::StepFailure(t));
        }

        match try_step(rhs, t, &y, &k1, h, tol) {
            Attempt::Evaluated { y: y_new, err } if err <= 1.0 => {
                if guard(t + h, &y_new) {
                    t += h;
                    y = y_new;
                    k1 = rhs(t, &y)?;
                    if !on_step(t, &y) {
                        return Ok(RkResult {
                            t,
                            y,
                status: RkStatus::Stopped,
                        });
                    }
                    let factor = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
                    h *= factor;
                } else {
                    // Accurate step that crossed the boundary: bisect the
                    // step size down to the crossing.
                    let (t_b, y_b) = bisect_to_boundary(rhs, guard, t, &y, &k1, h, tol)?;
                    if t_b > t {
                        on_step(t_b, &y_b);
                    }
                    return Ok(RkResult {
                        t: t_b,
                        y: y_b,
                status: RkStatus::BoundaryHit,
                    });
                }
            }
            Attempt::Evaluated { err, .. } => {
                let factor = (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
                h *= factor;
                if h < h_min {
                    // Persistent rejection at a vanishing step usually means
                    // the trajectory is running into a singular guard
                    // boundary (derivatives diverge before the guard line).
                    // Probe ahead along the current direction to tell that
                    // apart from genuine stiffness.
                    if boundary_ahead(guard, t, &y, &k1, span) {
                        return Ok(RkResult {
                            t,
                            y,
                            status: RkStatus::BoundaryHit,
                        });
                    }
                    return Err(Error::StepFailure(t));
                }
            }
            Attempt::RhsFailed => {
                // A stage left the domain; shrink towards the boundary.
                h *= 0.5;
                if h < h_min {
                    let (t_b, y_b) = (t, y);
                    return Ok(RkResult {
                        t: t_b,
                        y: y_b,
                status: RkStatus::BoundaryHit,
                    });
                }
            }
        }
    }
}

/// True when an Euler probe along the current derivative leaves the guard
/// region within a small fraction of the integration span.
fn boundary_ahead<const N: usize>(
    guard: &impl Fn(f64, &[f64; N]) -> bool,
    t: f64,
    y: &[f64; N],
    k1: &[f64; N],
    span: f64,
) -> bool {
    for exp in [-10, -8, -6, -4, -2] {
        let d = span * 10f64.powi(exp);
        let mut probe = *y;
        for i in 0..N {
            probe[i] += d * k1[i];
        }
        if !guard(t + d, &probe) {
            return true;
        }
    }
    false
}

/// Largest sub-step of `h` whose endpoint stays inside the guard; the RK
/// solution at that sub-step approximates the boundary crossing.
fn bisect_to_boundary<const N: usize>(
    rhs: &mut impl FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
    guard: &impl Fn(f64, &[f64; N]) -> bool,
    t: f64,
    y: &[f64; N],
    k1: &[f64; N],
    h: f64,
    tol: f64,
) -> Result<(f64, [f64; N])> {
    let mut lo = 0.0;
    let mut hi = h;
    let mut best: Option<(f64, [f64; N])> = None;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if mid <= 0.0 || (hi - lo) < 1e-12 * h.max(1e-300) {
            break;
        }
        match try_step(rhs, t, y, k1, mid, tol) {
            Attempt::Evaluated { y: y_mid, err } if err <= 1.0 && guard(t + mid, &y_mid) => {
                best = Some((t + mid, y_mid));
                lo = mid;
            }
            _ => hi = mid,
        }
    }
    Ok(best.unwrap_or((t, *y)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn harmonic_oscillator_accuracy() {
        let mut rhs = |_t: f64, y: &[f64; 2]| Ok([y[1], -y[0]]);
        let guard = |_: f64, _: &[f64; 2]| true;
        let mut count = 0;
        let out = integrate_adaptive(
            &mut rhs,
            &guard,
            0.0,
            [1.0, 0.0],
            10.0,
            1e-10,
            &mut |_, _| {
                count += 1;
                true
            },
        )
        .unwrap();
        assert_eq!(out.status, RkStatus::Completed);
        assert!(count > 10);
        assert_relative_eq!(out.y[0], 10.0f64.cos(), epsilon = 1e-8);
        assert_relative_eq!(out.y[1], -10.0f64.sin(), epsilon = 1e-8);
    }

    #[test]
    fn boundary_is_located_by_bisection() {
        // y' = 1, guard y < 1: boundary at t = 1 from y0 = 0.
        let mut rhs = |_t: f64, _y: &[f64; 1]| Ok([1.0]);
        let guard = |_: f64, y: &[f64; 1]| y[0] < 1.0;
        let out = integrate_adaptive(&mut rhs, &guard, 0.0, [0.0], 5.0, 1e-9, &mut |_, _| true)
            .unwrap();
        assert_eq!(out.status, RkStatus::BoundaryHit);
        assert!(out.y[0] < 1.0);
        assert!(1.0 - out.y[0] < 1e-9, "stopped at {}", out.y[0]);
    }

    #[test]
    fn early_stop_via_callback() {
        let mut rhs = |_t: f64, y: &[f64; 1]| Ok([y[0]]);
        let guard = |_: f64, _: &[f64; 1]| true;
        let out = integrate_adaptive(&mut rhs, &guard, 0.0, [1.0], 100.0, 1e-8, &mut |_, y| {
            y[0] < 10.0
        })
        .unwrap();
        assert_eq!(out.status, RkStatus::Stopped);
        assert!(out.y[0] >= 10.0);
    }

    #[test]
    fn rejects_bad_arguments() {
        let mut rhs = |_t: f64, _y: &[f64; 1]| Ok([0.0]);
        let guard = |_: f64, _: &[f64; 1]| true;
        assert!(
            integrate_adaptive(&mut rhs, &guard, 0.0, [0.0], -1.0, 1e-8, &mut |_, _| true).is_err()
        );
        assert!(
            integrate_adaptive(&mut rhs, &guard, 0.0, [0.0], 1.0, 0.0, &mut |_, _| true).is_err()
        );
    }
}
