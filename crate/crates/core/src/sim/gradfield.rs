//! Samples the gradient an estimator hands to every point of a grid.

use serde::Serialize;

use crate::codebook::{Codebook, Metric};
use crate::error::{check_dims, Error, Result};
use crate::estimators::EstimatorKind;
use crate::linalg::{norm, Matrix};
use crate::sim::field::ScalarField2D;
use crate::sim::point_gradient;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            x_min: -2.0,
            x_max: 2.0,
            y_min: -2.0,
            y_max: 2.0,
            nx: 41,
            ny: 41,
        }
    }
}

impl GridSpec {
    fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.ny < 2 || !(self.x_max > self.x_min) || !(self.y_max > self.y_min) {
            return Err(Error::InvalidParameter(format!("degenerate grid {self:?}")));
        }
        Ok(())
    }

    /// Row-major over y, then x.
    pub fn points(&self) -> Vec<[f64; 2]> {
        let mut out = Vec::with_capacity(self.nx * self.ny);
        for j in 0..self.ny {
            let y = self.y_min + (self.y_max - self.y_min) * j as f64 / (self.ny - 1) as f64;
            for i in 0..self.nx {
                let x = self.x_min + (self.x_max - self.x_min) * i as f64 / (self.nx - 1) as f64;
                out.push([x, y]);
            }
        }
        out
    }
}

/// One grid sample. `clipped` is 1 when the norm was clamped into the plot
/// range, -1 when the gradient is undefined (the row then holds NaN), else 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldRow {
    pub x: f64,
    pub y: f64,
    pub gx: f64,
    pub gy: f64,
    pub cell: usize,
    pub clipped: i8,
}

/// For every grid point: nearest code, field gradient at that code, and the
/// estimator's gradient at the grid point. With `clip = Some((lo, hi))` the
/// norms are clamped to `[lo, hi]` and flagged.
pub fn gradient_field(
    field: ScalarField2D,
    codebook: &Matrix,
    grid: &GridSpec,
    estimator: EstimatorKind,
    clip: Option<(f64, f64)>,
) -> Result<Vec<FieldRow>> {
    grid.validate()?;
    check_dims(2, codebook.cols())?;
    let cb = Codebook::new(codebook.clone(), Metric::Euclidean, 0.0)?;
    let mut rows = Vec::with_capacity(grid.nx * grid.ny);
    for p in grid.points() {
        let cell = cb.nearest(&p)?;
        let q = cb.vector(cell);
        let g_q = field.grad_at(q);
        let (mut g, mut flag) = if g_q.iter().all(|v| v.is_finite()) {
            match point_gradient(&p, q, &g_q, estimator, Some(field)) {
                Ok((g, _)) => (g, 0),
                Err(Error::NonFinite) => (vec![f64::NAN; 2], -1),
                Err(e) => return Err(e),
            }
        } else {
            (vec![f64::NAN; 2], -1)
        };
        if flag == 0 && !g.iter().all(|v| v.is_finite()) {
            g = vec![f64::NAN; 2];
            flag = -1;
        }
        if let (0, Some((lo, hi))) = (flag, clip) {
            let n = norm(&g);
            let target = n.clamp(lo, hi);
            if n > 0.0 && target != n {
                g.iter_mut().for_each(|v| *v *= target / n);
                flag = 1;
            }
        }
        rows.push(FieldRow {
            x: p[0],
            y: p[1],
            gx: g[0],
            gy: g[1],
            cell,
            clipped: flag,
        });
    }
    Ok(rows)
}
