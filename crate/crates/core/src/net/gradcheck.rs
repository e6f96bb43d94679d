//! Finite-difference checks of the manual backward pass.
//!
//! Quantization is piecewise constant, so a naive finite difference through
//! the lookup sees zero (or a jump). The checks here instead differentiate a
//! frozen surrogate: codebook assignments and every tape's constants are held
//! at their forward-pass values, and the quantizer becomes the linear map the
//! estimator claims it is. That surrogate's exact gradient is what the
//! backward pass is supposed to compute.

use crate::error::{check_dims, check_finite, Error, Result};
use crate::estimators::EstimatorKind;
use crate::linalg::{dot, sq_dist, Matrix};
use crate::net::model::{ForwardPass, VqAeModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamGroup {
    Encoder,
    Decoder,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    /// Parameter index of the worst coordinate.
    pub worst: Option<usize>,
    pub checked: usize,
    /// Coordinates whose perturbation moved some point to another cell.
    pub skipped: Vec<usize>,
}

/// `|a - n| / max(|a|, |n|, 1e-6)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// `(∇L(q + εv) - ∇L(q - εv)) / 2ε`
pub fn hvp_finite_diff<F>(grad: F, q: &[f64], v: &[f64], eps: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    check_dims(q.len(), v.len())?;
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let shifted = |s: f64| -> Vec<f64> { q.iter().zip(v).map(|(a, b)| a + s * eps * b).collect() };
    let up = grad(&shifted(1.0))?;
    let down = grad(&shifted(-1.0))?;
    check_dims(q.len(), up.len())?;
    check_dims(q.len(), down.len())?;
    let out: Vec<f64> = up.iter().zip(&down).map(|(a, b)| (a - b) / (2.0 * eps)).collect();
    check_finite(&out)?;
    Ok(out)
}

fn mean_sq(a: &Matrix, b: &Matrix) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter_rows().zip(b.iter_rows()) {
        acc += sq_dist(x, y);
    }
    acc / a.rows() as f64
}

/// Linearized second-order model of the loss around each `q_i`, used as the
/// surrogate for the Hessian estimator: `gᵢ·e + ½ (e - qᵢ)ᵀ Hᵢ (e - qᵢ)`.
struct Quadratic {
    g: Matrix,
    h: Vec<Matrix>,
}

impl Quadratic {
    fn build(model: &VqAeModel, x: &Matrix, pass: &ForwardPass, scale: f64) -> Result<Self> {
        let n = x.rows();
        let d = pass.q.cols();
        let mut g = Matrix::zeros(n, d);
        let mut h = Vec::with_capacity(n);
        for i in 0..n {
            let q = pass.q.row(i);
            g.row_mut(i)
                .copy_from_slice(&model.decoder_input_grad(x.row(i), q, n)?);
            let mut hi = Matrix::zeros(d, d);
            for j in 0..d {
                let mut basis = vec![0.0; d];
                basis[j] = 1.0;
                let col = model.sample_hvp(x.row(i), q, &basis, n, scale)?;
                hi.set_column(j, &col);
            }
            h.push(hi);
        }
        Ok(Self { g, h })
    }

    fn eval(&self, e: &Matrix, q: &Matrix) -> Result<f64> {
        let mut acc = 0.0;
        for i in 0..e.rows() {
            let delta: Vec<f64> = e.row(i).iter().zip(q.row(i)).map(|(a, b)| a - b).collect();
            let hd = self.h[i].mat_vec(&delta)?;
            acc += dot(self.g.row(i), e.row(i)) + 0.5 * dot(&delta, &hd);
        }
        Ok(acc)
    }
}

/// Frozen-surrogate loss of a perturbed copy of `base`.
fn frozen_loss(
    base: &VqAeModel,
    m: &VqAeModel,
    x: &Matrix,
    pass: &ForwardPass,
    group: ParamGroup,
    quad: Option<&Quadratic>,
) -> Result<(f64, bool)> {
    let e = m.encoder.forward(x)?;
    let mut moved = false;
    for i in 0..e.rows() {
        if base.codebook.nearest(e.row(i))? != pass.indices[i] {
            moved = true;
        }
    }
    let commit = m.beta * mean_sq(&e, &pass.q);
    let loss = match (m.estimator, group) {
        (EstimatorKind::ExactDoublePass { .. }, ParamGroup::Encoder) => {
            mean_sq(x, &m.decoder.forward(&e)?)
        }
        (EstimatorKind::ExactDoublePass { lambda }, ParamGroup::Decoder) => {
            mean_sq(x, &m.decoder.forward(&pass.q)?) + lambda * mean_sq(x, &m.decoder.forward(&e)?)
        }
        (EstimatorKind::HessianApprox { .. }, ParamGroup::Encoder) => {
            quad.expect("built for hessian").eval(&e, &pass.q)? + commit
        }
        (EstimatorKind::HessianApprox { .. }, ParamGroup::Decoder) => {
            mean_sq(x, &m.decoder.forward(&pass.q)?) + commit
        }
        _ => {
            let mut q_tilde = pass.q.clone();
            for i in 0..e.rows() {
                let shift: Vec<f64> = e.row(i).iter().zip(pass.e.row(i)).map(|(a, b)| a - b).collect();
                let j = pass.tapes[i]
                    .forward_jacobian(&shift)
                    .expect("linear estimator")?;
                for (t, v) in q_tilde.row_mut(i).iter_mut().zip(&j) {
                    *t += v;
                }
            }
            mean_sq(x, &m.decoder.forward(&q_tilde)?) + commit
        }
    };
    Ok((loss, moved))
}

/// Max relative error between the analytic gradient of `group` and central
/// differences of the frozen surrogate, at step `h`.
pub fn finite_diff_check(model: &VqAeModel, x: &Matrix, group: ParamGroup, h: f64) -> Result<GradCheck> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {h}")));
    }
    let (grads, pass) = model.gradients(x)?;
    let analytic = match group {
        ParamGroup::Encoder => grads.encoder.flat(),
        ParamGroup::Decoder => grads.decoder.flat(),
    };
    let quad = match model.estimator {
        EstimatorKind::HessianApprox { hvp_scale } => Some(Quadratic::build(model, x, &pass, hvp_scale)?),
        _ => None,
    };

    let mut report = GradCheck {
        max_rel_error: 0.0,
        worst: None,
        checked: 0,
        skipped: Vec::new(),
    };
    for (idx, &a) in analytic.iter().enumerate() {
        let eval = |delta: f64| -> Result<(f64, bool)> {
            let mut probe = model.clone();
            match group {
                ParamGroup::Encoder => *probe.encoder.param_mut(idx) += delta,
                ParamGroup::Decoder => *probe.decoder.param_mut(idx) += delta,
            }
            frozen_loss(model, &probe, x, &pass, group, quad.as_ref())
        };
        let (up, moved_up) = eval(h)?;
        let (down, moved_down) = eval(-h)?;
        if moved_up || moved_down {
            report.skipped.push(idx);
            continue;
        }
        let numeric = (up - down) / (2.0 * h);
        let err = relative_error(a, numeric);
        report.checked += 1;
        if err > report.max_rel_error || report.worst.is_none() {
            report.max_rel_error = report.max_rel_error.max(err);
            report.worst = Some(idx);
        }
    }
    if !report.max_rel_error.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::{Codebook, Metric};
    use crate::net::mlp::{Activation, MlpNet};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model(est: EstimatorKind, seed: u64) -> (VqAeModel, Matrix) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let enc = MlpNet::new(&[3, 6, 3], Activation::Tanh, Activation::Identity, &mut rng).unwrap();
        let dec = MlpNet::new(&[3, 6, 3], Activation::Tanh, Activation::Identity, &mut rng).unwrap();
        let cb = Codebook::random_uniform(6, 3, Metric::Euclidean, 0.8, &mut rng).unwrap();
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        (VqAeModel::new(enc, dec, cb, est).unwrap(), Matrix::from_rows(&rows).unwrap())
    }

    #[test]
    fn hvp_of_simple_losses() {
        let v = [0.3, -1.2, 0.5];
        let q = [1.0, 2.0, -0.5];
        let sq = hvp_finite_diff(|p| Ok(p.iter().map(|x| 2.0 * x).collect()), &q, &v, 1e-4).unwrap();
        for (a, b) in sq.iter().zip(&v) {
            assert!((a - 2.0 * b).abs() < 1e-6);
        }
        let lin = hvp_finite_diff(|_| Ok(vec![1.0, -2.0, 3.0]), &q, &v, 1e-4).unwrap();
        assert!(lin.iter().all(|x| x.abs() < 1e-6));
    }

    #[test]
    fn hvp_of_quartic_matches_hand_hessian() {
        // L = x⁴ + x y² + z² y, ∇L = (4x³ + y², 2xy + z², 2zy)
        let grad = |p: &[f64]| Ok(vec![4.0 * p[0].powi(3) + p[1] * p[1], 2.0 * p[0] * p[1] + p[2] * p[2], 2.0 * p[2] * p[1]]);
        let p = [0.7, -0.4, 1.3];
        let hess = [
            [12.0 * p[0] * p[0], 2.0 * p[1], 0.0],
            [2.0 * p[1], 2.0 * p[0], 2.0 * p[2]],
            [0.0, 2.0 * p[2], 2.0 * p[1]],
        ];
        let v = [0.2, 0.5, -0.9];
        let got = hvp_finite_diff(grad, &p, &v, 1e-5).unwrap();
        for i in 0..3 {
            let want: f64 = (0..3).map(|j| hess[i][j] * v[j]).sum();
            assert!((got[i] - want).abs() < 1e-6, "{i}: {} vs {want}", got[i]);
        }
    }

    #[test]
    fn hvp_rejects_nonfinite() {
        assert!(hvp_finite_diff(|_| Ok(vec![f64::NAN]), &[0.0], &[1.0], 1e-4).is_err());
        assert!(hvp_finite_diff(|_| Ok(vec![0.0]), &[0.0], &[1.0], 0.0).is_err());
    }

    #[test]
    fn decoder_and_encoder_checks_pass_for_every_estimator() {
        for est in EstimatorKind::all() {
            let (m, x) = model(est, 21);
            for group in [ParamGroup::Decoder, ParamGroup::Encoder] {
                let r = finite_diff_check(&m, &x, group, 1e-5).unwrap();
                assert!(r.checked > 0);
                assert!(r.max_rel_error < 1e-4, "{est} {group:?}: {r:?}");
            }
        }
    }

    #[test]
    fn rotation_and_ste_encoder_grads_differ() {
        let (m, x) = model(EstimatorKind::Rotation, 4);
        let (g, _) = m.gradients(&x).unwrap();
        let ste = VqAeModel { estimator: EstimatorKind::Ste, ..m.clone() };
        let (gs, _) = ste.gradients(&x).unwrap();
        assert_ne!(g.encoder.flat(), gs.encoder.flat());
    }
}
