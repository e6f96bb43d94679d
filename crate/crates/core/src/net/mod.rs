//! Toy VQ autoencoder: MLPs with hand-written backprop, the quantized
//! bottleneck, gradient checks and checkpoints.

pub mod checkpoint;
pub mod gradcheck;
pub mod mlp;
pub mod model;
pub mod train;

pub use gradcheck::{finite_diff_check, hvp_finite_diff, GradCheck, ParamGroup};
pub use mlp::{Activation, MlpGrads, MlpNet};
pub use model::{autoencoder_grads, CodebookLearning, LossBreakdown, ModelGrads, StepStats, VqAeModel};
pub use train::{comparison, train, train_on, ComparisonRow, EpochMetrics, TrainConfig};
