//! The property suite behind `rotvq verify`.
//!
//! Every property reports the largest error it measured and the tolerance
//! it was held to. The report is plain data and contains no timings, so it
//! is bit-identical across reruns with the same seed.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::codebook::{Codebook, Metric};
use crate::error::Result;
use crate::estimators::{backward_transform, forward_substitute, over_rotation_check, EstimatorKind};
use crate::geom::{
    cart_to_hypersph, hypersph_to_cart, normalized_jacobian, rotation_between,
    transport_rotation, DegeneracyGuard, HypersphPoint, RotationOp,
};
use crate::linalg::{cosine, norm, sub, Matrix};
use crate::net::gradcheck::{finite_diff_check, hvp_finite_diff, ParamGroup};
use crate::net::mlp::{Activation, MlpNet};
use crate::net::model::{autoencoder_grads, VqAeModel};
use crate::sim::{gradient_field, GridSpec, ScalarField2D};

/// Deliberate bugs for checking that the suite notices them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Flip the sign of the `2 ê q̂ᵀ` term in `Rᵀ`.
    FlipTransposeSign,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Random cases for the cheap geometric properties.
    pub samples: usize,
    pub fault: Option<Fault>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            samples: 10_000,
            fault: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyResult {
    pub name: String,
    pub passed: bool,
    pub max_error: f64,
    pub tolerance: f64,
    pub cases: usize,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub passed: bool,
    pub properties: Vec<PropertyResult>,
}

impl VerifyReport {
    pub fn failures(&self) -> impl Iterator<Item = &PropertyResult> {
        self.properties.iter().filter(|p| !p.passed)
    }
}

fn below(name: &str, max_error: f64, tolerance: f64, cases: usize, detail: impl Into<String>) -> PropertyResult {
    PropertyResult {
        name: name.into(),
        // NaN never passes
        passed: max_error < tolerance,
        max_error,
        tolerance,
        cases,
        detail: detail.into(),
    }
}

fn gaussian(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

// `λRᵀg`, optionally with the injected sign error.
fn transpose(op: &RotationOp, g: &[f64], fault: Option<Fault>) -> Result<Vec<f64>> {
    match fault {
        None => op.apply_transpose(g),
        Some(Fault::FlipTransposeSign) => {
            let rg: f64 = op.r.iter().zip(g).map(|(a, b)| a * b).sum();
            let qg: f64 = op.q_hat.iter().zip(g).map(|(a, b)| a * b).sum();
            Ok(g.iter()
                .zip(&op.r)
                .zip(&op.e_hat)
                .map(|((gi, ri), ei)| op.lambda * (gi - 2.0 * ri * rg - 2.0 * ei * qg))
                .collect())
        }
    }
}

/// Random non-degenerate `(e, q)` pair in dimension 2..=8.
fn pair(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    loop {
        let d = rng.random_range(2..=8);
        let e = gaussian(rng, d);
        let q = gaussian(rng, d);
        if let Ok(op) = rotation_between(&e, &q, DegeneracyGuard::default()) {
            if !op.degenerate {
                return (e, q);
            }
        }
    }
}

fn rotation_properties(opts: &VerifyOptions, out: &mut Vec<PropertyResult>) -> Result<()> {
    let mut rng = crate::seed::rng(opts.seed, "verify/rotation");
    let mut align = 0.0_f64;
    let mut ortho = 0.0_f64;
    let mut det = 0.0_f64;
    let mut angle = 0.0_f64;
    let mut materialized = 0;
    for i in 0..opts.samples {
        let (e, q) = pair(&mut rng);
        let g = gaussian(&mut rng, e.len());
        let op = rotation_between(&e, &q, DegeneracyGuard::default())?;
        align = align.max(norm(&sub(&op.apply(&e)?, &q)) / norm(&q));
        // the matrix checks are O(d³); a tenth of the cases is plenty
        if i % 10 == 0 {
            let m = op.to_matrix()?;
            ortho = ortho.max(m.orthogonality_error()?);
            det = det.max((m.determinant()? - 1.0).abs());
            materialized += 1;
        }
        let ge = transpose(&op, &g, opts.fault)?;
        if let (Some(a), Some(b)) = (cosine(&q, &g), cosine(&e, &ge)) {
            angle = angle.max((a - b).abs());
        }
    }
    out.push(below("rotation_alignment", align, 1e-6, opts.samples, "max |λRe - q| / |q|"));
    out.push(below("rotation_orthogonality", ortho, 1e-9, materialized, "max |RRᵀ - I|"));
    out.push(below("rotation_determinant", det, 1e-9, materialized, "max |det R - 1|"));
    out.push(below(
        "angle_preservation",
        angle,
        1e-8,
        opts.samples,
        "max |cos∠(q, g) - cos∠(e, λRᵀg)|",
    ));
    Ok(())
}

fn reflection_property(opts: &VerifyOptions, out: &mut Vec<PropertyResult>) -> Result<()> {
    let mut rng = crate::seed::rng(opts.seed, "verify/reflection");
    let n = opts.samples / 10;
    let mut worst = 0.0_f64;
    for _ in 0..n {
        let (e, q) = pair(&mut rng);
        let s: f64 = rng.random_range(-2.0..2.0);
        let g: Vec<f64> = q.iter().map(|v| s * v).collect();
        let op = rotation_between(&e, &q, DegeneracyGuard::default())?;
        let rot = transpose(&op, &g, opts.fault)?;
        let (_, tape) = forward_substitute(&e, &q, EstimatorKind::Reflection)?;
        let refl = backward_transform(&tape, &g, None)?;
        worst = worst.max(norm(&sub(&rot, &refl)) / norm(&g).max(1e-300));
    }
    out.push(below(
        "reflection_equals_rotation_for_g_along_q",
        worst,
        1e-10,
        n,
        "relative gap between reflection and rotation estimators when g ∥ q",
    ));
    Ok(())
}

fn ste_limit_property(opts: &VerifyOptions, out: &mut Vec<PropertyResult>) -> Result<()> {
    let e = [0.4, -1.1, 0.7];
    let q = [-0.9, 0.2, 1.3];
    let g = [0.5, 0.8, -0.6];
    let u = [0.6, 0.48, 0.64];
    let mut prev = -2.0;
    let mut monotone = true;
    let mut last = 0.0;
    for k in 0..=6 {
        let t = 10f64.powi(k);
        let es: Vec<f64> = e.iter().zip(&u).map(|(a, b)| a + t * b).collect();
        let qs: Vec<f64> = q.iter().zip(&u).map(|(a, b)| a + t * b).collect();
        let op = rotation_between(&es, &qs, DegeneracyGuard::default())?;
        let c = cosine(&transpose(&op, &g, opts.fault)?, &g).unwrap_or(f64::NAN);
        if c < prev {
            monotone = false;
        }
        prev = c;
        last = c;
    }
    let mut r = below(
        "ste_limit_under_translation",
        1.0 - last,
        1e-6,
        7,
        format!("1 - cos(rotation grad, STE grad) at shift 1e6; monotone over 1..1e6: {monotone}"),
    );
    r.passed &= monotone;
    out.push(r);
    Ok(())
}

/// Smooth non-quadratic test loss `Σ sin(vᵢ) + |v|⁴ / 4`.
fn test_loss_grad(v: &[f64]) -> Vec<f64> {
    let n2: f64 = v.iter().map(|x| x * x).sum();
    v.iter().map(|x| x.cos() + n2 * x).collect()
}

/// `|exact - hessian estimate|` as `|e - q|` halves, starting from `start`.
pub fn hessian_discrepancies(start: f64, halvings: usize) -> Result<Vec<f64>> {
    let q = [0.3, -0.5, 0.8];
    let dir = [0.48, 0.6, -0.64];
    let mut out = Vec::with_capacity(halvings + 1);
    for k in 0..=halvings {
        let s = start / 2f64.powi(k as i32);
        let e: Vec<f64> = q.iter().zip(&dir).map(|(a, b)| a + s * b).collect();
        let exact = test_loss_grad(&e);
        let (_, tape) = forward_substitute(&e, &q, EstimatorKind::hessian())?;
        let hvp = |v: &[f64]| hvp_finite_diff(|p| Ok(test_loss_grad(p)), &q, v, 1e-5);
        let approx = backward_transform(&tape, &test_loss_grad(&q), Some(&hvp))?;
        out.push(norm(&sub(&exact, &approx)));
    }
    Ok(out)
}

fn hessian_order_property(out: &mut Vec<PropertyResult>) -> Result<()> {
    let d = hessian_discrepancies(0.4, 3)?;
    let ratios: Vec<f64> = d.windows(2).map(|w| w[0] / w[1]).collect();
    let worst = ratios.iter().fold(0.0_f64, |m, r| m.max((r - 4.0).abs()));
    out.push(below(
        "hessian_second_order",
        worst,
        0.5 + 1e-12,
        ratios.len(),
        format!("max |ratio - 4| over successive halvings, ratios {ratios:?}"),
    ));
    Ok(())
}

fn tiny_model(est: EstimatorKind, seed: u64) -> Result<(VqAeModel, Matrix)> {
    let mut rng = crate::seed::rng(seed, "verify/model");
    let enc = MlpNet::new(&[3, 6, 3], Activation::Tanh, Activation::Identity, &mut rng)?;
    let dec = MlpNet::new(&[3, 6, 3], Activation::Tanh, Activation::Identity, &mut rng)?;
    let cb = Codebook::random_uniform(6, 3, Metric::Euclidean, 0.8, &mut rng)?;
    let rows: Vec<Vec<f64>> = (0..6)
        .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    Ok((VqAeModel::new(enc, dec, cb, est)?, Matrix::from_rows(&rows)?))
}

fn net_properties(opts: &VerifyOptions, out: &mut Vec<PropertyResult>) -> Result<()> {
    for group in [ParamGroup::Encoder, ParamGroup::Decoder] {
        let mut worst = 0.0_f64;
        let mut worst_at = String::new();
        let mut cases = 0;
        for est in EstimatorKind::all() {
            for s in 0..2 {
                let (m, x) = tiny_model(est, opts.seed.wrapping_add(s))?;
                let r = finite_diff_check(&m, &x, group, 1e-5)?;
                cases += r.checked;
                if r.max_rel_error >= worst {
                    worst = r.max_rel_error;
                    worst_at = format!("{est}");
                }
            }
        }
        let name = match group {
            ParamGroup::Encoder => "finite_difference_encoder",
            ParamGroup::Decoder => "finite_difference_decoder",
        };
        out.push(below(name, worst, 1e-4, cases, format!("max relative error, worst estimator {worst_at}")));
    }

    let mut worst = 0.0_f64;
    for &lambda in &[1e-6, 1e-3, 1.0] {
        let (m, x) = tiny_model(EstimatorKind::ExactDoublePass { lambda }, opts.seed)?;
        let (g, _) = m.exact_step(&x, lambda)?;
        let (ae, _) = autoencoder_grads(&m.encoder, &m.decoder, &x)?;
        for (a, b) in g.encoder.flat().iter().zip(ae.flat()) {
            worst = worst.max((a - b).abs());
        }
    }
    out.push(below("exact_path_identity", worst, 1e-9, 3, "max |exact-step encoder grad - autoencoder grad|"));

    // linear decoder makes the loss quadratic in q
    let (m, x) = tiny_model(EstimatorKind::hessian(), opts.seed)?;
    let dec = MlpNet::linear(Matrix::from_rows(&[[1.1, -0.3, 0.2], [0.4, 0.9, -0.5], [0.0, 0.3, 1.2]])?);
    let h = VqAeModel { decoder: dec.clone(), beta: 0.0, ..m.clone() };
    let gh = h.backward(&x, &h.forward(&x)?)?.encoder.flat();
    let ex = VqAeModel { decoder: dec, beta: 0.0, estimator: EstimatorKind::exact(), ..m };
    let ge = ex.exact_step(&x, 1e-6)?.0.encoder.flat();
    let worst = gh.iter().zip(&ge).fold(0.0_f64, |w, (a, b)| w.max((a - b).abs()));
    out.push(below("hessian_matches_exact_on_quadratic", worst, 1e-6, gh.len(), "max |hessian - exact| encoder grad"));
    Ok(())
}

/// Pairs whose hyperspherical coordinates differ only in the first angle.
pub fn first_angle_pair(rng: &mut ChaCha8Rng, d: usize) -> (Vec<f64>, Vec<f64>) {
    use std::f64::consts::PI;
    let mut thetas: Vec<f64> = (0..d - 1)
        .map(|i| if i + 2 < d { rng.random_range(0.2..PI - 0.2) } else { rng.random_range(-PI + 0.2..PI - 0.2) })
        .collect();
    let q = hypersph_to_cart(&HypersphPoint { r: rng.random_range(0.5..2.0), thetas: thetas.clone() });
    thetas[0] = if d > 2 { rng.random_range(0.2..PI - 0.2) } else { rng.random_range(-PI + 0.2..PI - 0.2) };
    let e = hypersph_to_cart(&HypersphPoint { r: rng.random_range(0.5..2.0), thetas });
    (q, e)
}

fn transport_properties(opts: &VerifyOptions, out: &mut Vec<PropertyResult>) -> Result<()> {
    let mut rng = crate::seed::rng(opts.seed, "verify/transport");
    let n = opts.samples / 10;
    let mut worst = 0.0_f64;
    let mut cases = 0;
    for d in 2..=4 {
        for _ in 0..n / 3 {
            // in the plane every pair qualifies; above it, only pairs that
            // differ in the first angle alone
            let (q, e) = if d == 2 {
                (gaussian(&mut rng, 2), gaussian(&mut rng, 2))
            } else {
                first_angle_pair(&mut rng, d)
            };
            let op = rotation_between(&e, &q, DegeneracyGuard::default())?;
            if op.degenerate {
                continue;
            }
            let g = gaussian(&mut rng, d);
            let t = transport_rotation(&q, &e, 1e-9)?;
            let lhs = t.mat_vec(&g)?;
            let rhs = op.rotate_transpose(&g)?;
            worst = worst.max(norm(&sub(&lhs, &rhs)));
            cases += 1;
        }
    }
    out.push(below(
        "transport_equals_rotation",
        worst,
        1e-8,
        cases,
        "max |Ĵ(e)Ĵ(q)ᵀg - Rᵀg| for planar pairs and pairs differing in θ₁ only",
    ));

    let mut ortho = 0.0_f64;
    let mut det = 0.0_f64;
    let mut cases = 0;
    for d in 2..=4 {
        for _ in 0..n / 3 {
            let x = gaussian(&mut rng, d);
            let Ok(j) = cart_to_hypersph(&x, 1e-9).and_then(|p| normalized_jacobian(&p, 1e-9)) else {
                continue;
            };
            ortho = ortho.max(j.orthogonality_error()?);
            det = det.max((j.determinant()? - 1.0).abs());
            cases += 1;
        }
    }
    out.push(below("jacobian_orthogonality", ortho, 1e-9, cases, "max |ĴĴᵀ - I|"));
    out.push(below("jacobian_determinant", det, 1e-9, cases, "max |det Ĵ - 1|"));
    Ok(())
}

fn over_rotation_property(out: &mut Vec<PropertyResult>) -> Result<()> {
    let mut worst = 0.0_f64;
    let mut signs_ok = true;
    let mut cases = 0;
    for deg in [10.0, 45.0, 80.0, 100.0, 135.0, 170.0] {
        let a = f64::to_radians(deg);
        let e = [2.0 * a.cos(), 2.0 * a.sin(), 0.0];
        let q = [1.0, 0.0, 0.0];
        for g in [[0.3, -0.8, 0.0], [-1.0, 0.2, 0.0], [0.6, 0.6, 0.0]] {
            let c = over_rotation_check(&e, &q, &g)?;
            worst = worst.max((c - a.cos()).abs());
            signs_ok &= (c < 0.0) == (deg > 90.0);
            cases += 1;
        }
    }
    let mut r = below(
        "over_rotation_cosine",
        worst,
        1e-8,
        cases,
        format!("max |cos∠(∇e, ∇q) - cos∠(e, q)|; sign flips past 90°: {signs_ok}"),
    );
    r.passed &= signs_ok;
    out.push(r);
    Ok(())
}

fn sim_properties(out: &mut Vec<PropertyResult>) -> Result<()> {
    let f = ScalarField2D::Himmelblau;
    let g = f.grad(3.0, 2.0);
    out.push(below(
        "himmelblau_minimum",
        f.eval(3.0, 2.0).abs().max(g[0].abs()).max(g[1].abs()),
        1e-9,
        1,
        "|f(3, 2)| and |∇f(3, 2)|",
    ));

    let codes = Matrix::from_rows(&[[-1.0, -1.0], [1.0, -0.5], [0.2, 1.3], [-1.2, 0.8], [0.9, 0.9]])?;
    let rows = gradient_field(ScalarField2D::Quadratic, &codes, &GridSpec::default(), EstimatorKind::Ste, None)?;
    let mut worst = 0.0_f64;
    for r in &rows {
        let c = codes.row(r.cell);
        worst = worst.max((r.gx - 2.0 * c[0]).abs()).max((r.gy - 2.0 * c[1]).abs());
    }
    out.push(below(
        "ste_cell_constant",
        worst,
        f64::MIN_POSITIVE,
        rows.len(),
        "max deviation of the STE field from the gradient at the cell's code (must be exactly 0)",
    ));

    let mut worst = 0.0_f64;
    let h = 1e-6;
    let pts = [[0.7, -1.3], [2.1, 0.4], [-1.5, 1.9], [0.2, 0.9]];
    for field in [ScalarField2D::Quadratic, ScalarField2D::LogTanh, ScalarField2D::Himmelblau] {
        for p in pts {
            let g = field.grad(p[0], p[1]);
            let fx = (field.eval(p[0] + h, p[1]) - field.eval(p[0] - h, p[1])) / (2.0 * h);
            let fy = (field.eval(p[0], p[1] + h) - field.eval(p[0], p[1] - h)) / (2.0 * h);
            let scale = 1.0_f64.max(g[0].abs()).max(g[1].abs());
            worst = worst.max(((fx - g[0]).abs()).max((fy - g[1]).abs()) / scale);
        }
    }
    out.push(below("field_gradients", worst, 1e-6, 12, "relative gap to central differences"));
    Ok(())
}

/// Runs every property and collects the report. Errors only on internal
/// failures; property violations are reported, not raised.
pub fn run_suite(opts: &VerifyOptions) -> Result<VerifyReport> {
    let mut props = Vec::new();
    rotation_properties(opts, &mut props)?;
    reflection_property(opts, &mut props)?;
    ste_limit_property(opts, &mut props)?;
    hessian_order_property(&mut props)?;
    net_properties(opts, &mut props)?;
    transport_properties(opts, &mut props)?;
    over_rotation_property(&mut props)?;
    sim_properties(&mut props)?;
    Ok(VerifyReport {
        seed: opts.seed,
        passed: props.iter().all(|p| p.passed),
        properties: props,
    })
}
