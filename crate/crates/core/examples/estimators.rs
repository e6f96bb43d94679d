//! Same forward value, different backward: every estimator on one pair.

use rotvq::estimators::{backward_transform, forward_substitute, over_rotation_check};
use rotvq::EstimatorKind;

fn main() -> rotvq::Result<()> {
    let e = [0.8, -0.3];
    let q = [0.2, 1.0];
    let g = [0.5, 0.5];
    // Stand-in Hessian of the downstream loss: 2I.
    let hvp = |v: &[f64]| -> rotvq::Result<Vec<f64>> { Ok(v.iter().map(|x| 2.0 * x).collect()) };

    for est in EstimatorKind::all() {
        let (q_tilde, tape) = forward_substitute(&e, &q, est)?;
        match backward_transform(&tape, &g, Some(&hvp)) {
            Ok(back) => println!("{:<16} value {:?} grad_e [{:+.4}, {:+.4}]", est.to_string(), q_tilde, back[0], back[1]),
            Err(err) => println!("{:<16} {err}", est.to_string()),
        }
    }

    // Obtuse pair: the rotated gradient points past a right angle.
    let cos = over_rotation_check(&[1.0, 0.1], &[-1.0, 0.4], &[0.0, 1.0])?;
    println!("over-rotation cosine for an obtuse pair: {cos:.4}");
    Ok(())
}
