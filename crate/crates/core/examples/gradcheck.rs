//! Central-difference checks of the autoencoder's manual backward pass, for
//! every estimator.

use rotvq::codebook::{Codebook, Metric};
use rotvq::net::{finite_diff_check, Activation, MlpNet, ParamGroup, VqAeModel};
use rotvq::{EstimatorKind, Matrix};
use rand::Rng;

fn main() -> rotvq::Result<()> {
    let mut rng = rotvq::seed::rng(3, "example/gradcheck");
    let rows: Vec<Vec<f64>> = (0..6)
        .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let x = Matrix::from_rows(&rows)?;
    let enc = MlpNet::new(&[3, 8, 3], Activation::Tanh, Activation::Identity, &mut rng)?;
    let dec = MlpNet::new(&[3, 8, 3], Activation::Tanh, Activation::Identity, &mut rng)?;
    let cb = Codebook::random_uniform(8, 3, Metric::Euclidean, 0.8, &mut rng)?;

    for est in EstimatorKind::all() {
        let m = VqAeModel::new(enc.clone(), dec.clone(), cb.clone(), est)?;
        for group in [ParamGroup::Encoder, ParamGroup::Decoder] {
            let r = finite_diff_check(&m, &x, group, 1e-5)?;
            println!(
                "{:<16} {:<8} max rel err {:.2e} over {} params ({} skipped)",
                est.to_string(),
                format!("{group:?}"),
                r.max_rel_error,
                r.checked,
                r.skipped.len()
            );
        }
    }
    Ok(())
}
