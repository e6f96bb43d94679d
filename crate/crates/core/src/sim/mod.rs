//! Synthetic experiments in the plane: Voronoi-cell dynamics, the Himmelblau
//! study and gradient-field sampling.

pub mod field;
pub mod gradfield;
pub mod himmelblau;
pub mod output;
pub mod voronoi;

pub use field::ScalarField2D;
pub use gradfield::{gradient_field, FieldRow, GridSpec};
pub use himmelblau::{run_himmelblau, HimmelblauConfig, HimmelblauRun};
pub use voronoi::{voronoi_step, GradientSource, SimScenario, SimState, SummaryRow, TrajRow};

use crate::error::Result;
use crate::estimators::{backward_transform, forward_substitute, EstimatorKind};
use crate::net::gradcheck::hvp_finite_diff;

/// Gradient the estimator hands to a point `e` quantized to `q`, when the
/// loss gradient at `q` is `g_q`.
///
/// `field` is the loss the gradient came from, if any. The hessian estimator
/// uses it for the Hessian-vector product and the exact estimator evaluates
/// it at `e`; without a field (constant per-cell gradients) the loss is
/// linear, so both reduce to straight-through. Returns the gradient and
/// whether a rotation-based estimator fell back.
pub fn point_gradient(
    e: &[f64],
    q: &[f64],
    g_q: &[f64],
    estimator: EstimatorKind,
    field: Option<ScalarField2D>,
) -> Result<(Vec<f64>, bool)> {
    match (estimator, field) {
        (EstimatorKind::ExactDoublePass { .. }, Some(f)) => Ok((f.grad_at(e), false)),
        (EstimatorKind::ExactDoublePass { .. }, None) | (EstimatorKind::HessianApprox { .. }, None) => {
            Ok((g_q.to_vec(), false))
        }
        (EstimatorKind::HessianApprox { hvp_scale }, Some(f)) => {
            let (_, tape) = forward_substitute(e, q, estimator)?;
            let hvp = |v: &[f64]| {
                let eps = hvp_scale * (1.0 + crate::linalg::norm(q)) / (1.0 + crate::linalg::norm(v));
                hvp_finite_diff(|p| Ok(f.grad_at(p)), q, v, eps)
            };
            Ok((backward_transform(&tape, g_q, Some(&hvp))?, false))
        }
        _ => {
            let (_, tape) = forward_substitute(e, q, estimator)?;
            Ok((backward_transform(&tape, g_q, None)?, tape.fallback))
        }
    }
}
