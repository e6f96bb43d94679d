//! Minibatch SGD for the toy VQ autoencoder, one metrics row per epoch.

use rand::seq::SliceRandom;
use serde::Serialize;

use crate::codebook::{quantization_error, usage_fraction, Codebook, Metric};
use crate::data::GaussianMixture;
use crate::error::{Error, Result};
use crate::estimators::EstimatorKind;
use crate::linalg::Matrix;
use crate::net::mlp::{Activation, MlpNet};
use crate::net::model::{CodebookLearning, VqAeModel};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub estimator: EstimatorKind,
    pub seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub k: usize,
    pub latent_dim: usize,
    pub hidden: usize,
    pub beta: f64,
    pub decay: f64,
    pub codebook_learning: CodebookLearning,
    /// Generated dataset: samples, mixture components, ring radius, spread.
    pub n_samples: usize,
    pub components: usize,
    pub radius: f64,
    pub sigma: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            estimator: EstimatorKind::Rotation,
            seed: 0,
            epochs: 50,
            batch_size: 64,
            lr: 0.05,
            k: 64,
            latent_dim: 2,
            hidden: 32,
            beta: 1.0,
            decay: 0.8,
            codebook_learning: CodebookLearning::Ema,
            n_samples: 1024,
            components: 8,
            radius: 2.0,
            sigma: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub recon: f64,
    pub commit: f64,
    pub usage: f64,
    pub quant_error: f64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
            ("k", self.k),
            ("latent_dim", self.latent_dim),
            ("hidden", self.hidden),
            ("n_samples", self.n_samples),
            ("components", self.components),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidParameter(format!("{name} must be positive")));
            }
        }
        if !(self.lr > 0.0) {
            return Err(Error::InvalidParameter(format!("lr must be positive, got {}", self.lr)));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {}", self.sigma)));
        }
        self.estimator.validate()
    }

    pub fn dataset(&self) -> Result<Matrix> {
        let gm = GaussianMixture::ring(self.components, self.radius, self.sigma);
        gm.sample(self.n_samples, &mut crate::seed::rng(self.seed, "train/data"))
    }

    /// Model initialization; depends only on the seed and the shapes, so two
    /// estimators with the same seed start from the same weights.
    pub fn model(&self, input_dim: usize) -> Result<VqAeModel> {
        let mut rng = crate::seed::rng(self.seed, "train/init");
        let enc = MlpNet::new(
            &[input_dim, self.hidden, self.latent_dim],
            Activation::Tanh,
            Activation::Identity,
            &mut rng,
        )?;
        let dec = MlpNet::new(
            &[self.latent_dim, self.hidden, input_dim],
            Activation::Tanh,
            Activation::Identity,
            &mut rng,
        )?;
        let cb = Codebook::random_uniform(self.k, self.latent_dim, Metric::Euclidean, self.decay, &mut rng)?;
        Ok(VqAeModel::new(enc, dec, cb, self.estimator)?
            .with_beta(self.beta)
            .with_codebook_learning(self.codebook_learning))
    }
}

/// Trains on `data` and reports full-dataset metrics after every epoch.
pub fn train_on(cfg: &TrainConfig, data: &Matrix) -> Result<(VqAeModel, Vec<EpochMetrics>)> {
    cfg.validate()?;
    if data.rows() == 0 {
        return Err(Error::Empty);
    }
    let mut model = cfg.model(data.cols())?;
    let mut order: Vec<usize> = (0..data.rows()).collect();
    let mut rng = crate::seed::rng(cfg.seed, "train/shuffle");
    let mut out = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let rows: Vec<&[f64]> = chunk.iter().map(|&i| data.row(i)).collect();
            let batch = Matrix::from_rows(&rows)?;
            model.train_step(&batch, cfg.lr)?;
        }
        let pass = model.forward(data)?;
        out.push(EpochMetrics {
            epoch,
            recon: pass.loss.recon,
            commit: pass.loss.commit,
            usage: usage_fraction(&pass.indices, model.codebook.len())?,
            quant_error: quantization_error(&pass.e, &pass.q)?,
        });
    }
    Ok((model, out))
}

pub fn train(cfg: &TrainConfig) -> Result<(VqAeModel, Vec<EpochMetrics>)> {
    let data = cfg.dataset()?;
    train_on(cfg, &data)
}

/// One arm's metrics at one epoch, tagged with the estimator, for
/// side-by-side comparison tables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub epoch: usize,
    pub estimator: String,
    pub recon: f64,
    pub commit: f64,
    pub usage: f64,
    pub quant_error: f64,
}

/// Interleaves the arms epoch by epoch.
pub fn comparison(arms: &[(EstimatorKind, Vec<EpochMetrics>)]) -> Vec<ComparisonRow> {
    let epochs = arms.iter().map(|(_, m)| m.len()).max().unwrap_or(0);
    let mut out = Vec::with_capacity(epochs * arms.len());
    for i in 0..epochs {
        for (est, m) in arms {
            if let Some(r) = m.get(i) {
                out.push(ComparisonRow {
                    epoch: r.epoch,
                    estimator: est.to_string(),
                    recon: r.recon,
                    commit: r.commit,
                    usage: r.usage,
                    quant_error: r.quant_error,
                });
            }
        }
    }
    out
}
