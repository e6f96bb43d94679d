//! Gradient estimators for the non-differentiable nearest-codebook lookup of a
//! vector-quantized autoencoder.
//!
//! The centerpiece is the rotation estimator: the forward pass writes the
//! quantized vector as `q = (|q|/|e|) R e` with `R` a rotation aligning `e` to
//! `q`, both factors held constant, so the backward pass sends
//! `(|q|/|e|) Rᵀ ∇q` to the encoder instead of copying `∇q` verbatim.
//! `R` is never materialized; it is two Householder reflections applied with
//! dot products only.
//!
//! Modules:
//!
//! * [`geom`]: rotations, reflections, angles and hyperspherical frames.
//! * [`codebook`]: nearest-vector lookup, EMA learning, usage and distortion.
//! * [`estimators`]: the forward-substitute / backward-transform pairs.
//! * [`net`]: a small MLP autoencoder with manual backprop and gradient checks.
//! * [`sim`]: Voronoi point-cloud dynamics, Himmelblau and gradient fields.
//! * [`cli`]: config handling and the runners behind the `rotvq` binary.
//!
//! Runnable walkthroughs for each capability live in `examples/`.

pub mod cli;
pub mod codebook;
pub mod data;
pub mod error;
pub mod estimators;
pub mod geom;
pub mod linalg;
pub mod net;
pub mod seed;
pub mod sim;
pub mod verify;

pub use codebook::{Codebook, Metric, QuantizeResult};
pub use error::{Error, Result};
pub use estimators::{EstimatorKind, Gamma, QuantizeTape};
pub use geom::{DegeneracyGuard, HypersphPoint, RotationOp};
pub use linalg::Matrix;
