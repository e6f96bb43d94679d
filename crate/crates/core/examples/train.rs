//! Trains the toy VQ autoencoder with STE and with the rotation estimator
//! from the same initialization, then saves and reloads a checkpoint.

use rotvq::net::checkpoint;
use rotvq::net::{train, TrainConfig};
use rotvq::EstimatorKind;

fn main() -> rotvq::Result<()> {
    let base = TrainConfig { seed: 1, epochs: 20, ..Default::default() };
    for est in [EstimatorKind::Ste, EstimatorKind::Rotation] {
        let (model, metrics) = train(&TrainConfig { estimator: est, ..base.clone() })?;
        for m in metrics.iter().step_by(5).chain(metrics.last()) {
            println!(
                "{:<9} epoch {:>2}: recon {:.4} commit {:.4} usage {:.3}",
                est.to_string(),
                m.epoch, m.recon, m.commit, m.usage
            );
        }
        let path = std::env::temp_dir().join(format!("rotvq-example-{est}.txt"));
        checkpoint::save(&model, &path)?;
        let back = checkpoint::load(&path)?;
        println!("checkpoint {} reloads identically: {}", path.display(), back == model);
    }
    Ok(())
}
