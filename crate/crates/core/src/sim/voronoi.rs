//! Point clouds moving under quantized gradients.
//!
//! Each step assigns every point to a codebook vector, takes the loss
//! gradient at that codebook vector, lets the estimator carry it back to the
//! point and applies `x ← x - lr · ∇x`.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::codebook::{usage_fraction, Codebook, Metric};
use crate::error::{check_dims, Error, Result};
use crate::estimators::EstimatorKind;
use crate::linalg::{dot, sq_dist, Matrix};
use crate::sim::field::ScalarField2D;
use crate::sim::point_gradient;

#[derive(Debug, Clone, PartialEq)]
pub enum GradientSource {
    /// One constant gradient per codebook vector (`K × 2`). The implied loss
    /// is `g_k · x` inside cell `k`.
    PerCell(Matrix),
    Field(ScalarField2D),
}

impl GradientSource {
    fn at_code(&self, k: usize, q: &[f64]) -> Vec<f64> {
        match self {
            GradientSource::PerCell(g) => g.row(k).to_vec(),
            GradientSource::Field(f) => f.grad_at(q),
        }
    }

    fn objective(&self, k: usize, x: &[f64]) -> f64 {
        match self {
            GradientSource::PerCell(g) => dot(g.row(k), x),
            GradientSource::Field(f) => f.eval_at(x),
        }
    }

    fn field(&self) -> Option<ScalarField2D> {
        match self {
            GradientSource::Field(f) => Some(*f),
            GradientSource::PerCell(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimScenario {
    pub codebook_init: Matrix,
    pub points_init: Matrix,
    pub lr: f64,
    pub steps: usize,
    pub ema_decay: f64,
    pub estimator: EstimatorKind,
    /// EMA-update the codebook from each step's assignments.
    pub update_codebook: bool,
    /// Recompute assignments before every step; otherwise the initial cells
    /// are kept for the whole run.
    pub reassign: bool,
    pub source: GradientSource,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub step: usize,
    pub points: Matrix,
    pub codebook: Codebook,
    pub cells: Vec<usize>,
    /// Rotation fallbacks so far.
    pub fallbacks: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajRow {
    pub step: usize,
    pub point_id: usize,
    pub x: f64,
    pub y: f64,
    pub cell: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryRow {
    pub step: usize,
    pub mean_distortion: f64,
    pub mean_objective: f64,
    pub usage: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimRun {
    pub traj: Vec<TrajRow>,
    pub summary: Vec<SummaryRow>,
    pub state: SimState,
}

impl SimScenario {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidParameter("steps must be at least 1".into()));
        }
        if !(self.lr > 0.0) {
            return Err(Error::InvalidParameter(format!("lr must be positive, got {}", self.lr)));
        }
        if self.points_init.rows() == 0 {
            return Err(Error::Empty);
        }
        if self.codebook_init.rows() == 0 {
            return Err(Error::EmptyCodebook);
        }
        check_dims(2, self.codebook_init.cols())?;
        check_dims(2, self.points_init.cols())?;
        if let GradientSource::PerCell(g) = &self.source {
            check_dims(self.codebook_init.rows(), g.rows())?;
            check_dims(2, g.cols())?;
        }
        self.estimator.validate()
    }

    pub fn initial_state(&self) -> Result<SimState> {
        self.validate()?;
        let codebook = Codebook::new(self.codebook_init.clone(), Metric::Euclidean, self.ema_decay)?;
        let cells = codebook.lookup(&self.points_init)?.indices;
        Ok(SimState {
            step: 0,
            points: self.points_init.clone(),
            codebook,
            cells,
            fallbacks: 0,
        })
    }

    /// Runs all steps, recording every point's position (step 0 included)
    /// and one summary row per step.
    pub fn run(&self) -> Result<SimRun> {
        let mut state = self.initial_state()?;
        let mut traj = Vec::with_capacity(self.points_init.rows() * (self.steps + 1));
        let mut summary = Vec::with_capacity(self.steps);
        record(&state, &mut traj);
        for _ in 0..self.steps {
            voronoi_step(self, &mut state)?;
            record(&state, &mut traj);
            summary.push(self.summarize(&state)?);
        }
        Ok(SimRun { traj, summary, state })
    }

    /// Distortion and usage against the current codebook (fresh nearest
    /// assignment when reassigning, the frozen cells otherwise) and the mean
    /// objective at the points themselves.
    pub fn summarize(&self, state: &SimState) -> Result<SummaryRow> {
        let cells = if self.reassign {
            state.codebook.lookup(&state.points)?.indices
        } else {
            state.cells.clone()
        };
        let n = state.points.rows() as f64;
        let mut dist = 0.0;
        let mut obj = 0.0;
        for (x, &k) in state.points.iter_rows().zip(&cells) {
            dist += sq_dist(x, state.codebook.vector(k));
            obj += self.source.objective(k, x);
        }
        Ok(SummaryRow {
            step: state.step,
            mean_distortion: dist / n,
            mean_objective: obj / n,
            usage: usage_fraction(&cells, state.codebook.len())?,
        })
    }
}

fn record(state: &SimState, out: &mut Vec<TrajRow>) {
    for (i, (p, &c)) in state.points.iter_rows().zip(&state.cells).enumerate() {
        out.push(TrajRow {
            step: state.step,
            point_id: i,
            x: p[0],
            y: p[1],
            cell: c,
        });
    }
}

/// Per-point displacement `-lr · ∇x` for the current state, without applying it.
pub fn displacements(scn: &SimScenario, state: &SimState) -> Result<(Matrix, usize)> {
    let mut out = Matrix::zeros(state.points.rows(), 2);
    let mut fallbacks = 0;
    for i in 0..state.points.rows() {
        let k = state.cells[i];
        let q = state.codebook.vector(k);
        let g_q = scn.source.at_code(k, q);
        let (g_e, fb) = point_gradient(state.points.row(i), q, &g_q, scn.estimator, scn.source.field())?;
        fallbacks += fb as usize;
        for (o, g) in out.row_mut(i).iter_mut().zip(&g_e) {
            *o = -scn.lr * g;
        }
    }
    crate::error::check_finite(out.as_slice())?;
    Ok((out, fallbacks))
}

pub fn voronoi_step(scn: &SimScenario, state: &mut SimState) -> Result<()> {
    if state.points.rows() == 0 {
        return Err(Error::Empty);
    }
    if scn.reassign {
        state.cells = state.codebook.lookup(&state.points)?.indices;
    }
    let (delta, fallbacks) = displacements(scn, state)?;
    if scn.update_codebook {
        state.codebook.ema_update(&state.points, &state.cells)?;
    }
    for (p, d) in state.points.as_mut_slice().iter_mut().zip(delta.as_slice()) {
        *p += d;
    }
    state.fallbacks += fallbacks;
    state.step += 1;
    Ok(())
}

/// `per_cluster` points around each center with isotropic noise `sigma`.
pub fn gaussian_clusters<R: Rng + ?Sized>(centers: &Matrix, per_cluster: usize, sigma: f64, rng: &mut R) -> Result<Matrix> {
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidParameter(format!("sigma: {e}")))?;
    let d = centers.cols();
    let mut out = Matrix::zeros(centers.rows() * per_cluster, d);
    for (c, center) in centers.iter_rows().enumerate() {
        for j in 0..per_cluster {
            for (o, m) in out.row_mut(c * per_cluster + j).iter_mut().zip(center) {
                *o = m + normal.sample(rng);
            }
        }
    }
    Ok(out)
}

/// `n` points on an arc of `radius` around `center`, spanning `span` radians
/// and centered on direction `facing`, with small radial jitter.
pub fn crescent<R: Rng + ?Sized>(center: &[f64], radius: f64, n: usize, span: f64, facing: f64, rng: &mut R) -> Result<Matrix> {
    let jitter = Normal::new(0.0, 0.04 * radius).map_err(|e| Error::InvalidParameter(format!("radius: {e}")))?;
    let mut out = Matrix::zeros(n, 2);
    for i in 0..n {
        let t = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.5 };
        let a = facing - span / 2.0 + t * span;
        let r = radius + jitter.sample(rng);
        out[(i, 0)] = center[0] + r * a.cos();
        out[(i, 1)] = center[1] + r * a.sin();
    }
    Ok(out)
}

/// The four-cell illustration: codebook at `(±1.5, ±1.5)`, a 240° crescent
/// of 60 points around the top-left code, three Gaussian clusters in the
/// top-right cell (one near the code's direction, two at wide angles) and
/// one in the bottom-right, 40 points each with σ = 0.15. The top-left cell
/// gets an update pointing at the origin, the top-right one pointing away
/// from it, the bottom-right a sideways update. 25 steps, codebook and
/// cells frozen.
pub fn figure_preset(estimator: EstimatorKind, seed: u64) -> Result<SimScenario> {
    use std::f64::consts::PI;
    let mut rng = crate::seed::rng(seed, "voronoi/points");
    let s = 1.5;
    let codebook = Matrix::from_rows(&[[-s, s], [s, s], [-s, -s], [s, -s]])?;
    let r = (2.0_f64).sqrt() * s;
    let polar = |deg: f64, rad: f64| [rad * deg.to_radians().cos(), rad * deg.to_radians().sin()];
    let centers = Matrix::from_rows(&[polar(45.0, r + 0.5), polar(12.0, r), polar(78.0, r), polar(-40.0, r + 0.3)])?;
    let clusters = gaussian_clusters(&centers, 40, 0.15, &mut rng)?;
    let arc = crescent(&[-s, s], 0.5, 60, 240f64.to_radians(), 0.75 * PI, &mut rng)?;
    let mut rows: Vec<Vec<f64>> = arc.iter_rows().map(<[f64]>::to_vec).collect();
    rows.extend(clusters.iter_rows().map(<[f64]>::to_vec));
    let u = std::f64::consts::FRAC_1_SQRT_2;
    // gradients, so the update is their negative
    let grads = Matrix::from_rows(&[[-u, u], [-u, -u], [u, u], [0.0, -1.0]])?;
    Ok(SimScenario {
        codebook_init: codebook,
        points_init: Matrix::from_rows(&rows)?,
        lr: 0.02,
        steps: 25,
        ema_decay: 0.8,
        estimator,
        update_codebook: false,
        reassign: false,
        source: GradientSource::PerCell(grads),
        seed,
    })
}

/// Largest distance between any two rows.
pub fn max_pairwise_distance(points: &Matrix) -> f64 {
    let mut best = 0.0_f64;
    for i in 0..points.rows() {
        for j in i + 1..points.rows() {
            best = best.max(sq_dist(points.row(i), points.row(j)));
        }
    }
    best.sqrt()
}
