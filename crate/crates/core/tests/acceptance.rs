//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any
//! fails. Built with `harness = false`; run with
//! `cargo test --test acceptance`.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rotvq::codebook::{Codebook, Metric};
use rotvq::estimators::{backward_transform, forward_substitute, over_rotation_check};
use rotvq::geom::{cart_to_hypersph, normalized_jacobian, rotation_between, transport_rotation, DegeneracyGuard};
use rotvq::net::model::autoencoder_grads;
use rotvq::net::{finite_diff_check, hvp_finite_diff, train, Activation, MlpNet, ParamGroup, TrainConfig, VqAeModel};
use rotvq::sim::field::ScalarField2D;
use rotvq::sim::gradfield::{gradient_field, GridSpec};
use rotvq::sim::himmelblau::{run_himmelblau, HimmelblauConfig};
use rotvq::{EstimatorKind, Matrix};

type Outcome = Result<(bool, String), String>;

fn gaussian(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn cos(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b) / (norm(a) * norm(b))
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn ok<T>(r: rotvq::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn c1_rotation() -> Outcome {
    let t = Instant::now();
    let mut rng = rotvq::seed::rng(1, "acceptance/rotation");
    let (mut align, mut ortho, mut det) = (0.0_f64, 0.0_f64, 0.0_f64);
    for i in 0..10_000 {
        let d = 2 + i % 7;
        let e = gaussian(&mut rng, d);
        let q = gaussian(&mut rng, d);
        let op = ok(rotation_between(&e, &q, DegeneracyGuard::default()))?;
        if op.degenerate {
            return Err(format!("unexpected degenerate pair in d={d}"));
        }
        let m = ok(op.to_matrix())?;
        // through the materialized matrix, not the reflection formulas
        let re: Vec<f64> = ok(m.mat_vec(&e))?.iter().map(|v| op.lambda * v).collect();
        align = align.max(norm(&diff(&re, &q)) / norm(&q));
        let rrt = ok(m.matmul(&m.transpose()))?;
        ortho = ortho.max(ok(rrt.max_abs_diff(&Matrix::identity(d)))?);
        det = det.max((ok(m.determinant())? - 1.0).abs());
    }
    let secs = t.elapsed().as_secs_f64();
    Ok((
        align < 1e-6 && ortho < 1e-9 && det < 1e-9 && secs < 5.0,
        format!("align {align:.2e}, |RRᵀ-I| {ortho:.2e}, |det-1| {det:.2e}, {secs:.2}s"),
    ))
}

fn c2_angle() -> Outcome {
    let mut rng = rotvq::seed::rng(2, "acceptance/angle");
    let mut worst = 0.0_f64;
    for i in 0..10_000 {
        let d = 2 + i % 7;
        let (e, q, g) = (gaussian(&mut rng, d), gaussian(&mut rng, d), gaussian(&mut rng, d));
        let (_, tape) = ok(forward_substitute(&e, &q, EstimatorKind::Rotation))?;
        let ge = ok(backward_transform(&tape, &g, None))?;
        worst = worst.max((cos(&q, &g) - cos(&e, &ge)).abs());
    }
    Ok((worst < 1e-8, format!("max |cos∠(q,g) - cos∠(e,λRᵀg)| = {worst:.2e}")))
}

fn c3_ste_limit() -> Outcome {
    let mut rng = rotvq::seed::rng(3, "acceptance/ste");
    let mut worst_last = 0.0_f64;
    let mut monotone = true;
    for _ in 0..20 {
        let d = rng.random_range(2..=6);
        let (e, q, g) = (gaussian(&mut rng, d), gaussian(&mut rng, d), gaussian(&mut rng, d));
        let u = gaussian(&mut rng, d);
        let u: Vec<f64> = u.iter().map(|x| x / norm(&u)).collect();
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=6 {
            let t = 10f64.powi(k);
            let es: Vec<f64> = e.iter().zip(&u).map(|(a, b)| a + t * b).collect();
            let qs: Vec<f64> = q.iter().zip(&u).map(|(a, b)| a + t * b).collect();
            let (_, tape) = ok(forward_substitute(&es, &qs, EstimatorKind::Rotation))?;
            let c = cos(&ok(backward_transform(&tape, &g, None))?, &g);
            // allow roundoff once the cosine has saturated at 1
            if c < prev - 1e-12 {
                monotone = false;
            }
            prev = c;
        }
        worst_last = worst_last.max(1.0 - prev);
    }
    Ok((
        worst_last < 1e-6 && monotone,
        format!("max 1-cos at t=1e6: {worst_last:.2e}, monotone over 1..1e6: {monotone}"),
    ))
}

// L(v) = Σ exp(vᵢ/2) + (a·v)³/3
fn c4_loss_grad(v: &[f64]) -> Vec<f64> {
    let a = [0.7, -0.2, 0.5, 0.1];
    let s = dot(&a, v);
    v.iter().zip(&a).map(|(x, ai)| 0.5 * (0.5 * x).exp() + s * s * ai).collect()
}

fn c4_hessian_order() -> Outcome {
    let q = [0.4, -0.3, 0.9, 0.2];
    let dir = [0.5, 0.5, -0.5, 0.5];
    let mut gaps = Vec::new();
    for k in 0..4 {
        let s = 0.2 / 2f64.powi(k);
        let e: Vec<f64> = q.iter().zip(&dir).map(|(a, b)| a + s * b).collect();
        let (_, tape) = ok(forward_substitute(&e, &q, EstimatorKind::hessian()))?;
        let hvp = |v: &[f64]| hvp_finite_diff(|p| Ok(c4_loss_grad(p)), &q, v, 1e-5);
        let approx = ok(backward_transform(&tape, &c4_loss_grad(&q), Some(&hvp)))?;
        gaps.push(norm(&diff(&c4_loss_grad(&e), &approx)));
    }
    let ratios: Vec<f64> = gaps.windows(2).map(|w| w[0] / w[1]).collect();
    let pass = ratios.iter().all(|r| (3.5..=4.5).contains(r));
    Ok((pass, format!("discrepancy ratios per halving {:?}", ratios.iter().map(|r| (r * 1e3).round() / 1e3).collect::<Vec<_>>())))
}

fn small_model(est: EstimatorKind, seed: u64) -> Result<(VqAeModel, Matrix), String> {
    let mut rng = rotvq::seed::rng(seed, "acceptance/model");
    let enc = ok(MlpNet::new(&[4, 7, 3], Activation::Tanh, Activation::Identity, &mut rng))?;
    let dec = ok(MlpNet::new(&[3, 7, 4], Activation::Tanh, Activation::Identity, &mut rng))?;
    let cb = ok(Codebook::random_uniform(8, 3, Metric::Euclidean, 0.8, &mut rng))?;
    let rows: Vec<Vec<f64>> = (0..8).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    Ok((ok(VqAeModel::new(enc, dec, cb, est))?, ok(Matrix::from_rows(&rows))?))
}

fn c5_finite_difference() -> Outcome {
    let mut worst = (0.0_f64, String::new());
    let mut checked = 0;
    for seed in 0..5 {
        for est in EstimatorKind::all() {
            let (m, x) = small_model(est, seed)?;
            for group in [ParamGroup::Encoder, ParamGroup::Decoder] {
                let r = ok(finite_diff_check(&m, &x, group, 1e-5))?;
                checked += r.checked;
                if r.max_rel_error >= worst.0 {
                    worst = (r.max_rel_error, format!("{est} {group:?} seed {seed}"));
                }
            }
        }
    }
    Ok((worst.0 < 1e-4, format!("max rel error {:.2e} ({}), {checked} coordinates", worst.0, worst.1)))
}

fn c6_exact_identity() -> Outcome {
    let mut worst = 0.0_f64;
    for lambda in [1e-6, 1e-3, 1.0] {
        for seed in 0..3 {
            let (m, x) = small_model(EstimatorKind::ExactDoublePass { lambda }, seed)?;
            let (g, _) = ok(m.exact_step(&x, lambda))?;
            let (ae, _) = ok(autoencoder_grads(&m.encoder, &m.decoder, &x))?;
            for (a, b) in g.encoder.flat().iter().zip(ae.flat()) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    Ok((worst < 1e-9, format!("max |exact - autoencoder| encoder grad {worst:.2e}")))
}

fn c7_himmelblau() -> Outcome {
    let t = Instant::now();
    let mut wins = 0;
    for seed in 0..10 {
        let run = |estimator| ok(run_himmelblau(&HimmelblauConfig { seed, estimator, ..Default::default() }));
        let r = run(EstimatorKind::Rotation)?.last;
        let s = run(EstimatorKind::Ste)?.last;
        if r.mean_distortion < s.mean_distortion && r.mean_objective <= s.mean_objective {
            wins += 1;
        }
    }
    let secs = t.elapsed().as_secs_f64();
    Ok((wins >= 8 && secs < 10.0, format!("rotation ahead on {wins}/10 seeds, {secs:.2}s")))
}

fn c8_checkerboard() -> Outcome {
    let mut rng = rotvq::seed::rng(8, "acceptance/gradfield");
    let codes: Vec<[f64; 2]> = (0..16).map(|_| [rng.random_range(-1.8..1.8), rng.random_range(-1.8..1.8)]).collect();
    let codes = ok(Matrix::from_rows(&codes))?;
    let grid = GridSpec::default();
    let ste = ok(gradient_field(ScalarField2D::Quadratic, &codes, &grid, EstimatorKind::Ste, None))?;
    let rot = ok(gradient_field(ScalarField2D::Quadratic, &codes, &grid, EstimatorKind::Rotation, None))?;
    let mut first = vec![None; 16];
    let mut constant = true;
    for r in &ste {
        match first[r.cell] {
            None => first[r.cell] = Some((r.gx, r.gy)),
            Some(g) => constant &= g == (r.gx, r.gy),
        }
    }
    let differ = ste
        .iter()
        .zip(&rot)
        .filter(|(a, b)| (a.gx - b.gx).abs().max((a.gy - b.gy).abs()) > 1e-9)
        .count();
    let frac = differ as f64 / ste.len() as f64;
    Ok((constant && frac > 0.5, format!("STE cell-constant: {constant}, rotation differs on {:.1}% of {} points", 100.0 * frac, ste.len())))
}

fn c9_training() -> Outcome {
    let t = Instant::now();
    let mut wins = 0;
    for seed in 0..10 {
        let base = TrainConfig { seed, ..Default::default() };
        let r = *ok(train(&base))?.1.last().unwrap();
        let s = *ok(train(&TrainConfig { estimator: EstimatorKind::Ste, ..base }))?.1.last().unwrap();
        if r.quant_error <= s.quant_error && r.usage >= s.usage {
            wins += 1;
        }
    }
    let secs = t.elapsed().as_secs_f64();
    Ok((wins >= 8 && secs < 120.0, format!("rotation ahead on {wins}/10 seeds, {secs:.1}s")))
}

fn c10_transport() -> Outcome {
    let mut rng = rotvq::seed::rng(10, "acceptance/transport");
    let mut per_d = Vec::new();
    let (mut ortho, mut det) = (0.0_f64, 0.0_f64);
    for d in 2..=4 {
        let mut worst = 0.0_f64;
        let mut n = 0;
        while n < 1000 {
            let (q, e, g) = (gaussian(&mut rng, d), gaussian(&mut rng, d), gaussian(&mut rng, d));
            let op = ok(rotation_between(&e, &q, DegeneracyGuard::default()))?;
            let (Ok(t), Ok(pq), Ok(pe)) = (transport_rotation(&q, &e, 1e-9), cart_to_hypersph(&q, 1e-9), cart_to_hypersph(&e, 1e-9)) else {
                continue;
            };
            let rtg = ok(op.rotate_transpose(&g))?;
            worst = worst.max(norm(&diff(&ok(t.mat_vec(&g))?, &rtg)));
            for p in [pq, pe] {
                let j = ok(normalized_jacobian(&p, 1e-9))?;
                ortho = ortho.max(ok(j.matmul(&j.transpose()))?.max_abs_diff(&Matrix::identity(d)).unwrap());
                det = det.max((ok(j.determinant())? - 1.0).abs());
            }
            n += 1;
        }
        per_d.push(worst);
    }
    let pass = per_d.iter().all(|w| *w < 1e-8) && ortho < 1e-9 && det < 1e-9;
    Ok((
        pass,
        format!(
            "max |T g - Rᵀg| by d=2,3,4: {:.2e}, {:.2e}, {:.2e}; |ĴĴᵀ-I| {ortho:.2e}, |det Ĵ-1| {det:.2e}",
            per_d[0], per_d[1], per_d[2]
        ),
    ))
}

fn c11_over_rotation() -> Outcome {
    let mut rng = rotvq::seed::rng(11, "acceptance/over_rotation");
    let (mut signs, mut worst, mut n) = (true, 0.0_f64, 0);
    for _ in 0..500 {
        let d = rng.random_range(2..=6);
        let (a, b) = (gaussian(&mut rng, d), gaussian(&mut rng, d));
        // orthonormal pair spanning the test plane
        let u: Vec<f64> = a.iter().map(|x| x / norm(&a)).collect();
        let w = diff(&b, &u.iter().map(|x| x * dot(&u, &b)).collect::<Vec<_>>());
        let w: Vec<f64> = w.iter().map(|x| x / norm(&w)).collect();
        let plane = |c: f64, s: f64| -> Vec<f64> { u.iter().zip(&w).map(|(x, y)| c * x + s * y).collect() };
        let angle: f64 = rng.random_range(0.05..std::f64::consts::PI - 0.05);
        if (angle - std::f64::consts::FRAC_PI_2).abs() < 1e-3 {
            continue;
        }
        let (sq, se): (f64, f64) = (rng.random_range(0.5..2.0), rng.random_range(0.5..2.0));
        let q = plane(sq, 0.0);
        let e = plane(se * angle.cos(), se * angle.sin());
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let g = plane(phi.cos(), phi.sin());
        let c = ok(over_rotation_check(&e, &q, &g))?;
        signs &= (c < 0.0) == (angle > std::f64::consts::FRAC_PI_2);
        worst = worst.max((c - cos(&e, &q)).abs());
        n += 1;
    }
    Ok((signs && worst < 1e-8, format!("{n} in-plane cases, signs correct: {signs}, max |cos - cos∠(e,q)| {worst:.2e}")))
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn c12_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_rotvq");
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let train_cfg = tmp.path().join("train.toml");
    std::fs::write(&train_cfg, "epochs = 4\nn_samples = 256\npaired = \"ste,rotation\"\n").map_err(|e| e.to_string())?;
    let mut report = Vec::new();
    let mut pass = true;
    for cmd in ["verify", "gradfield", "voronoi", "himmelblau", "train"] {
        let a = tmp.path().join(format!("{cmd}-a"));
        let b = tmp.path().join(format!("{cmd}-b"));
        let mut first = Command::new(bin);
        first.args([cmd, "--seed", "5", "--out"]).arg(&a);
        if cmd == "train" {
            first.arg("--config").arg(&train_cfg);
        }
        let s1 = first.output().map_err(|e| e.to_string())?.status;
        let s2 = Command::new(bin)
            .args([cmd, "--config"])
            .arg(a.join("resolved_config.toml"))
            .arg("--out")
            .arg(&b)
            .output()
            .map_err(|e| e.to_string())?
            .status;
        let (fa, fb) = (files(&a), files(&b));
        let same = s1.success() && s2.success() && fa == fb && fa.len() > 1;
        pass &= same;
        report.push(format!("{cmd} {}", if same { format!("{} files identical", fa.len()) } else { "DIFFERS".into() }));
    }
    Ok((pass, report.join(", ")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("rotation correctness", c1_rotation),
        ("angle preservation", c2_angle),
        ("STE limit under translation", c3_ste_limit),
        ("Hessian second-order", c4_hessian_order),
        ("finite-difference gradients", c5_finite_difference),
        ("exact-path identity", c6_exact_identity),
        ("Himmelblau paired run", c7_himmelblau),
        ("gradient-field checkerboard", c8_checkerboard),
        ("toy paired training", c9_training),
        ("parallel-transport equivalence", c10_transport),
        ("over-rotation", c11_over_rotation),
        ("determinism", c12_determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let (pass, detail) = match f() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        println!("{} {:>2} {name}: {detail}", if pass { "PASS" } else { "FAIL" }, i + 1);
        if !pass {
            failed.push(i + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 12 criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
