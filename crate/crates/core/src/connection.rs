//! The metric connection on the spatial distribution and covariant
//! derivatives of spatial tensor fields.
//!
//! Spatial coefficients come from the Koszul combination of frame
//! derivatives of `h`; the time coefficients are
//! `Gamma^k_(i0) = Theta_i^k + Phi^2 omega_i^k`. Spatial covariant
//! derivatives add one lower slot; the time covariant derivative keeps the
//! rank.
//!
//! [`covariant_derivative_spatial`] and [`covariant_derivative_time`] accept
//! an arbitrary field evaluator (rank <= 2, any variance) and differentiate
//! it numerically with five-point stencils, which keeps them independent of
//! the exact-derivative path used internally by the curvature layer — they
//! double as a cross-check of it.

use crate::error::{Error, Result};
use crate::fields::FieldCtx;
use crate::metric::{eval_sample, DerivMode, MetricSpec};

/// Connection coefficients at a point.
#[derive(Clone, Debug)]
pub struct SpatialConnection {
    /// `gamma_space[k][i][j]` = Gamma^k_(ij), symmetric in (i, j).
    pub gamma_space: [[[f64; 3]; 3]; 3],
    /// `gamma_time[k][i]` = Gamma^k_(i0).
    pub gamma_time: [[f64; 3]; 3],
}

pub fn spatial_connection(
    spec: &MetricSpec,
    point: &[f64; 4],
    mode: DerivMode,
) -> Result<SpatialConnection> {
    let sample = eval_sample(spec, point, mode)?;
    let ctx = FieldCtx::new(&sample)?;
    Ok(SpatialConnection {
        gamma_space: ctx.gamma_s,
        gamma_time: ctx.gamma_t,
    })
}

/// Index variance of one tensor slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    Upper,
    Lower,
}

/// A spatial tensor of rank <= 2 with explicit variance, components in
/// row-major order over indices 0..3.
#[derive(Clone, Debug, PartialEq)]
pub struct SpatialTensor {
    pub slots: Vec<Slot>,
    pub data: Vec<f64>,
}

impl SpatialTensor {
    pub fn scalar(v: f64) -> Self {
        SpatialTensor {
            slots: vec![],
            data: vec![v],
        }
    }

    pub fn covector(v: [f64; 3]) -> Self {
        SpatialTensor {
            slots: vec![Slot::Lower],
            data: v.to_vec(),
        }
    }

    pub fn bilinear(m: [[f64; 3]; 3]) -> Self {
        SpatialTensor {
            slots: vec![Slot::Lower, Slot::Lower],
            data: m.iter().flatten().copied().collect(),
        }
    }

    pub fn rank(&self) -> usize {
        self.slots.len()
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[flat_index(idx)]
    }

    fn check_shape(&self) -> Result<()> {
        if self.rank() > 2 {
            return Err(Error::Invalid(
                "covariant derivatives support rank <= 2 fields".into(),
            ));
        }
        if self.data.len() != 3usize.pow(self.rank() as u32) {
            return Err(Error::Invalid("tensor data length mismatch".into()));
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

fn flat_index(idx: &[usize]) -> usize {
    idx.iter().fold(0, |acc, i| acc * 3 + i)
}

/// Evaluate a field on the five-point stencil along each coordinate to get
/// its partials; error ~ h^4 with h = eps^{1/5}, comfortably below the
/// metricity tolerances.
fn field_partials<F>(field: &F, point: &[f64; 4], len: usize) -> Result<[Vec<f64>; 4]>
where
    F: Fn(&[f64; 4]) -> Result<SpatialTensor>,
{
    let mut out: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; len]);
    for a in 0..4 {
        let h = f64::EPSILON.powf(0.2) * point[a].abs().max(1.0);
        let eval_at = |offset: f64| -> Result<Vec<f64>> {
            let mut x = *point;
            x[a] += offset;
            let t = field(&x)?;
            if t.data.len() != len {
                return Err(Error::Invalid(
                    "field evaluator changed tensor shape across points".into(),
                ));
            }
            Ok(t.data)
        };
        let m2 = eval_at(-2.0 * h)?;
        let m1 = eval_at(-h)?;
        let p1 = eval_at(h)?;
        let p2 = eval_at(2.0 * h)?;
        for c in 0..len {
            out[a][c] = (m2[c] - 8.0 * m1[c] + 8.0 * p1[c] - p2[c]) / (12.0 * h);
        }
    }
    Ok(out)
}

/// Spatial covariant derivative `T_(...|k)` of an arbitrary spatial tensor
/// field; the new lower slot comes last.
pub fn covariant_derivative_spatial<F>(
    field: &F,
    spec: &MetricSpec,
    point: &[f64; 4],
    mode: DerivMode,
) -> Result<SpatialTensor>
where
    F: Fn(&[f64; 4]) -> Result<SpatialTensor>,
{
    let value = field(point)?;
    value.check_shape()?;
    let sample = eval_sample(spec, point, mode)?;
    let ctx = FieldCtx::new(&sample)?;
    let partials = field_partials(field, point, value.data.len())?;

    let rank = value.rank();
    let mut out = SpatialTensor {
        slots: value.slots.clone(),
        data: vec![0.0; value.data.len() * 3],
    };
    out.slots.push(Slot::Lower);

    let mut idx = vec![0usize; rank + 1];
    loop {
        let k = idx[rank];
        let base = &idx[..rank];
        // frame derivative: d/dx^k + P_k d/dx^0 componentwise
        let flat = flat_index(base);
        let mut v = partials[k + 1][flat] + ctx.p[k].val * partials[0][flat];
        for (slot_pos, slot) in value.slots.iter().enumerate() {
            for hh in 0..3 {
                let mut swapped: Vec<usize> = base.to_vec();
                swapped[slot_pos] = hh;
                let t = value.data[flat_index(&swapped)];
                match slot {
                    Slot::Upper => v += t * ctx.gamma_s[base[slot_pos]][hh][k],
                    Slot::Lower => v -= t * ctx.gamma_s[hh][base[slot_pos]][k],
                }
            }
        }
        out.data[flat_index(&idx)] = v;
        if !advance(&mut idx) {
            break;
        }
    }
    Ok(out)
}

/// Time covariant derivative `T_(...|0)`; same rank as the input.
pub fn covariant_derivative_time<F>(
    field: &F,
    spec: &MetricSpec,
    point: &[f64; 4],
    mode: DerivMode,
) -> Result<SpatialTensor>
where
    F: Fn(&[f64; 4]) -> Result<SpatialTensor>,
{
    let value = field(point)?;
    value.check_shape()?;
    let sample = eval_sample(spec, point, mode)?;
    let ctx = FieldCtx::new(&sample)?;
    let partials = field_partials(field, point, value.data.len())?;

    let rank = value.rank();
    let mut out = SpatialTensor {
        slots: value.slots.clone(),
        data: vec![0.0; value.data.len()],
    };

    let mut idx = vec![0usize; rank];
    loop {
        let flat = flat_index(&idx);
        let mut v = partials[0][flat];
        for (slot_pos, slot) in value.slots.iter().enumerate() {
            for hh in 0..3 {
                let mut swapped = idx.clone();
                swapped[slot_pos] = hh;
                let t = value.data[flat_index(&swapped)];
                match slot {
                    Slot::Upper => v += t * ctx.gamma_t[idx[slot_pos]][hh],
                    Slot::Lower => v -= t * ctx.gamma_t[hh][idx[slot_pos]],
                }
            }
        }
        out.data[flat] = v;
        if idx.is_empty() || !advance(&mut idx) {
            break;
        }
    }
    Ok(out)
}

/// Odometer increment over spatial indices; false when exhausted.
fn advance(idx: &mut [usize]) -> bool {
    for i in (0..idx.len()).rev() {
        idx[i] += 1;
        if idx[i] < 3 {
            return true;
        }
        idx[i] = 0;
    }
    false
}
