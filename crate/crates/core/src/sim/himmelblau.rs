//! Quantized descent on Himmelblau's function.
//!
//! `n` points and `K` codebook vectors are drawn independently and uniformly
//! from `[-a, a]²`. Each step moves the points
//! along the estimator's gradient, taken from `∇f` at their code, and updates
//! the codebook by EMA from the pre-update points. The initialization depends
//! only on the seed, so runs with different estimators are paired.

use rand::Rng;

use crate::error::{Error, Result};
use crate::estimators::EstimatorKind;
use crate::linalg::Matrix;
use crate::sim::field::ScalarField2D;
use crate::sim::voronoi::{GradientSource, SimRun, SimScenario, SummaryRow};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HimmelblauConfig {
    pub k: usize,
    pub n: usize,
    pub steps: usize,
    pub lr: f64,
    pub decay: f64,
    /// Points start in `[-half_width, half_width]²`.
    pub half_width: f64,
    pub estimator: EstimatorKind,
    pub seed: u64,
}

impl Default for HimmelblauConfig {
    fn default() -> Self {
        Self {
            k: 4,
            n: 200,
            steps: 100,
            lr: 1e-3,
            decay: 0.8,
            half_width: 6.0,
            estimator: EstimatorKind::Rotation,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HimmelblauRun {
    pub run: SimRun,
    pub last: SummaryRow,
}

impl HimmelblauConfig {
    pub fn scenario(&self) -> Result<SimScenario> {
        if self.k == 0 || self.n == 0 {
            return Err(Error::InvalidParameter(format!(
                "k and n must be positive, got k = {}, n = {}",
                self.k, self.n
            )));
        }
        if !(self.half_width > 0.0) {
            return Err(Error::InvalidParameter("half_width must be positive".into()));
        }
        let mut rng = crate::seed::rng(self.seed, "himmelblau/points");
        let a = self.half_width;
        let rows: Vec<[f64; 2]> = (0..self.n)
            .map(|_| [rng.random_range(-a..a), rng.random_range(-a..a)])
            .collect();
        let points = Matrix::from_rows(&rows)?;
        let mut rng = crate::seed::rng(self.seed, "himmelblau/codebook");
        let codes: Vec<[f64; 2]> = (0..self.k)
            .map(|_| [rng.random_range(-a..a), rng.random_range(-a..a)])
            .collect();
        let codebook = Matrix::from_rows(&codes)?;
        Ok(SimScenario {
            codebook_init: codebook,
            points_init: points,
            lr: self.lr,
            steps: self.steps,
            ema_decay: self.decay,
            estimator: self.estimator,
            update_codebook: true,
            reassign: true,
            source: GradientSource::Field(ScalarField2D::Himmelblau),
            seed: self.seed,
        })
    }
}

pub fn run_himmelblau(cfg: &HimmelblauConfig) -> Result<HimmelblauRun> {
    let run = cfg.scenario()?.run()?;
    let last = *run.summary.last().expect("steps >= 1");
    Ok(HimmelblauRun { run, last })
}
