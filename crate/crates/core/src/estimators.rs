//! Forward-substitute / backward-transform pairs for the quantization layer.
//!
//! Every estimator leaves the forward value at `q`; they differ only in the
//! Jacobian they pretend `∂q̃/∂e` has:
//!
//! | estimator        | backward `∇e`                          |
//! |------------------|----------------------------------------|
//! | `ste`            | `∇q`                                   |
//! | `rotation`       | `(|q|/|e|) Rᵀ ∇q`                      |
//! | `reflection`     | `(|q|/|e|) (I - 2rrᵀ) ∇q`              |
//! | `gamma:*`        | `γ(e) Rᵀ ∇q`                           |
//! | `hessian`        | `∇q + (∇²q L)(e - q)`                  |
//! | `exact`          | resolved by the trainer's double pass  |
//!
//! Rotation-based estimators fall back to the straight-through rule when the
//! rotation is degenerate; the tape records that it happened.

use std::fmt;
use std::str::FromStr;

use crate::error::{check_dims, Error, Result};
use crate::geom::{rotation_between, DegeneracyGuard, ReflectionOp, RotationOp};
use crate::linalg::{axpy, cosine, dot, norm, sq_dist};

/// Scaling factor choices for the generalized rotation estimator
/// `q̃ = γ(e) R e + (q - γ(e) R e)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gamma {
    /// `|q| / |e|`; identical to the rotation estimator.
    NormRatio,
    /// `1`; a pure rotation of the gradient.
    One,
    /// `1 / (8 |q - e|²)`
    InverseSqDist,
}

impl Gamma {
    pub fn value(self, e: &[f64], q: &[f64]) -> f64 {
        match self {
            Gamma::NormRatio => norm(q) / norm(e),
            Gamma::One => 1.0,
            Gamma::InverseSqDist => 1.0 / (8.0 * sq_dist(q, e).max(1e-12)),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Gamma::NormRatio => "norm_ratio",
            Gamma::One => "one",
            Gamma::InverseSqDist => "inv_sq",
        }
    }
}

/// Which backward rule to use, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimatorKind {
    Ste,
    Rotation,
    Reflection,
    Gamma(Gamma),
    /// Second-order correction through a Hessian-vector product. `hvp_scale`
    /// sets the finite-difference step used by the reference trainer.
    HessianApprox { hvp_scale: f64 },
    /// Two decoder passes with total loss `L_q + λ L_e`.
    ExactDoublePass { lambda: f64 },
}

impl EstimatorKind {
    pub const DEFAULT_HVP_SCALE: f64 = 1e-4;
    pub const DEFAULT_EXACT_LAMBDA: f64 = 1e-6;

    pub fn hessian() -> Self {
        EstimatorKind::HessianApprox {
            hvp_scale: Self::DEFAULT_HVP_SCALE,
        }
    }

    pub fn exact() -> Self {
        EstimatorKind::ExactDoublePass {
            lambda: Self::DEFAULT_EXACT_LAMBDA,
        }
    }

    /// All estimators with default parameters, in display order.
    pub fn all() -> Vec<EstimatorKind> {
        vec![
            EstimatorKind::Ste,
            EstimatorKind::Rotation,
            EstimatorKind::Reflection,
            EstimatorKind::Gamma(Gamma::NormRatio),
            EstimatorKind::Gamma(Gamma::One),
            EstimatorKind::Gamma(Gamma::InverseSqDist),
            EstimatorKind::hessian(),
            EstimatorKind::exact(),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            EstimatorKind::HessianApprox { hvp_scale } if !(hvp_scale > 0.0) => Err(
                Error::InvalidParameter(format!("hvp scale must be positive, got {hvp_scale}")),
            ),
            EstimatorKind::ExactDoublePass { lambda } if !(lambda > 0.0) => Err(
                Error::InvalidParameter(format!("exact-pass lambda must be positive, got {lambda}")),
            ),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorKind::Ste => f.write_str("ste"),
            EstimatorKind::Rotation => f.write_str("rotation"),
            EstimatorKind::Reflection => f.write_str("reflection"),
            EstimatorKind::Gamma(g) => write!(f, "gamma:{}", g.name()),
            EstimatorKind::HessianApprox { .. } => f.write_str("hessian"),
            EstimatorKind::ExactDoublePass { .. } => f.write_str("exact"),
        }
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "ste" => EstimatorKind::Ste,
            "rotation" => EstimatorKind::Rotation,
            "reflection" => EstimatorKind::Reflection,
            "gamma:norm_ratio" => EstimatorKind::Gamma(Gamma::NormRatio),
            "gamma:one" => EstimatorKind::Gamma(Gamma::One),
            "gamma:inv_sq" => EstimatorKind::Gamma(Gamma::InverseSqDist),
            "hessian" => EstimatorKind::hessian(),
            "exact" => EstimatorKind::exact(),
            other => {
                return Err(Error::Parse(format!(
                    "unknown estimator `{other}` (expected ste, rotation, reflection, \
                     gamma:norm_ratio, gamma:one, gamma:inv_sq, hessian or exact)"
                )))
            }
        })
    }
}

/// Constants captured in the forward pass and replayed in the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub enum Transform {
    Identity,
    /// `scale · Rᵀ`
    Rotation { op: RotationOp, scale: f64 },
    /// `λ (I - 2rrᵀ)`
    Reflection(ReflectionOp),
    /// `∇q + H (e - q)`
    Hessian,
    /// Deferred to the trainer.
    Exact,
}

/// What the backward pass needs for one quantized vector.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizeTape {
    pub e: Vec<f64>,
    pub q: Vec<f64>,
    pub estimator: EstimatorKind,
    pub transform: Transform,
    /// Set when a rotation-based estimator fell back to straight-through.
    pub fallback: bool,
}

impl QuantizeTape {
    pub fn rotation(&self) -> Option<&RotationOp> {
        match &self.transform {
            Transform::Rotation { op, .. } => Some(op),
            _ => None,
        }
    }

    /// The frozen linear map `J` with `q̃(e') ≈ q + J (e' - e)`, applied to `v`.
    /// `None` for estimators that are not a fixed linear map (hessian, exact).
    pub fn forward_jacobian(&self, v: &[f64]) -> Option<Result<Vec<f64>>> {
        match &self.transform {
            Transform::Identity => Some(Ok(v.to_vec())),
            Transform::Rotation { op, scale } => Some(op.rotate(v).map(|mut out| {
                out.iter_mut().for_each(|x| *x *= scale);
                out
            })),
            Transform::Reflection(refl) => Some(refl.reflect(v).map(|mut out| {
                out.iter_mut().for_each(|x| *x *= refl.lambda);
                out
            })),
            Transform::Hessian | Transform::Exact => None,
        }
    }
}

/// Relative tolerance for the rotated forward value against `q`.
const FORWARD_TOL: f64 = 1e-6;

/// Computes the decoder input `q̃` and the tape for one vector.
///
/// The value is always `q` (the rotation path computes `λRe` and checks it
/// lands on `q`); only the tape differs between estimators.
pub fn forward_substitute(
    e: &[f64],
    q: &[f64],
    kind: EstimatorKind,
) -> Result<(Vec<f64>, QuantizeTape)> {
    check_dims(e.len(), q.len())?;
    kind.validate()?;
    let mut fallback = false;
    let mut q_tilde = q.to_vec();

    let transform = match kind {
        EstimatorKind::Ste => Transform::Identity,
        EstimatorKind::Rotation | EstimatorKind::Gamma(_) => {
            let op = rotation_between(e, q, DegeneracyGuard::default())?;
            let aligned = if op.degenerate { None } else { op.apply(e).ok() };
            match aligned {
                Some(v) if sq_dist(&v, q).sqrt() <= FORWARD_TOL * norm(q) => {
                    let scale = match kind {
                        EstimatorKind::Gamma(g) => g.value(e, q),
                        _ => op.lambda,
                    };
                    if matches!(kind, EstimatorKind::Rotation) {
                        q_tilde = v;
                    }
                    Transform::Rotation { op, scale }
                }
                _ => {
                    fallback = true;
                    Transform::Identity
                }
            }
        }
        EstimatorKind::Reflection => match ReflectionOp::between(e, q, 1e-12) {
            Ok(r) => Transform::Reflection(r),
            Err(Error::DegenerateReflection) | Err(Error::ZeroNorm) => {
                fallback = true;
                Transform::Identity
            }
            Err(err) => return Err(err),
        },
        EstimatorKind::HessianApprox { .. } => Transform::Hessian,
        EstimatorKind::ExactDoublePass { .. } => Transform::Exact,
    };

    Ok((
        q_tilde,
        QuantizeTape {
            e: e.to_vec(),
            q: q.to_vec(),
            estimator: kind,
            transform,
            fallback,
        },
    ))
}

/// Maps the gradient at the decoder input back to the encoder output.
///
/// `hvp` must be supplied for the Hessian estimator; it is called once with
/// `e - q` and must return `(∇²q L)(e - q)`.
pub fn backward_transform(
    tape: &QuantizeTape,
    grad_q: &[f64],
    hvp: Option<&dyn Fn(&[f64]) -> Result<Vec<f64>>>,
) -> Result<Vec<f64>> {
    check_dims(tape.q.len(), grad_q.len())?;
    match &tape.transform {
        Transform::Identity => Ok(grad_q.to_vec()),
        Transform::Rotation { op, scale } => {
            let mut out = op.rotate_transpose(grad_q)?;
            out.iter_mut().for_each(|x| *x *= scale);
            Ok(out)
        }
        Transform::Reflection(refl) => {
            let mut out = refl.reflect(grad_q)?;
            out.iter_mut().for_each(|x| *x *= refl.lambda);
            Ok(out)
        }
        Transform::Hessian => {
            let hvp = hvp.ok_or(Error::MissingHvp)?;
            let delta: Vec<f64> = tape.e.iter().zip(&tape.q).map(|(a, b)| a - b).collect();
            let hd = hvp(&delta)?;
            check_dims(grad_q.len(), hd.len())?;
            let mut out = grad_q.to_vec();
            axpy(1.0, &hd, &mut out);
            Ok(out)
        }
        Transform::Exact => Err(Error::ExactDoublePass),
    }
}

/// Cosine between the rotation estimator's `∇e` and `∇q` for an in-plane
/// gradient. Equals `cos ∠(e, q)`, so it turns negative for obtuse pairs:
/// the gradient is rotated past a right angle.
pub fn over_rotation_check(e: &[f64], q: &[f64], grad_q: &[f64]) -> Result<f64> {
    check_dims(e.len(), q.len())?;
    check_dims(e.len(), grad_q.len())?;
    let op = rotation_between(e, q, DegeneracyGuard::default())?;
    if op.degenerate {
        return Err(Error::DegenerateRotation);
    }
    let residual = out_of_plane_residual(&op.e_hat, &op.q_hat, grad_q);
    if residual > 1e-8 * norm(grad_q).max(f64::MIN_POSITIVE) {
        return Err(Error::OutOfPlane { residual });
    }
    let grad_e = op.apply_transpose(grad_q)?;
    cosine(&grad_e, grad_q).ok_or(Error::ZeroNorm)
}

// Norm of the component of g outside span(a, b), for unit a, b.
fn out_of_plane_residual(a: &[f64], b: &[f64], g: &[f64]) -> f64 {
    let mut rest = g.to_vec();
    axpy(-dot(a, &rest), a, &mut rest);
    // b minus its a-component, normalized
    let mut b_perp = b.to_vec();
    axpy(-dot(a, b), a, &mut b_perp);
    let nb = norm(&b_perp);
    if nb > 1e-12 {
        b_perp.iter_mut().for_each(|x| *x /= nb);
        axpy(-dot(&b_perp, &rest), &b_perp, &mut rest);
    }
    norm(&rest)
}
