//! Nearest-code lookup and exponential-moving-average updates on a small
//! 2-D codebook.

use rotvq::codebook::{quantization_error, usage_fraction};
use rotvq::data::GaussianMixture;
use rotvq::{Codebook, Metric};

fn main() -> rotvq::Result<()> {
    let mut rng = rotvq::seed::rng(7, "example/codebook");
    let data = GaussianMixture::ring(4, 2.0, 0.1).sample(400, &mut rng)?;
    let mut cb = Codebook::random_uniform(8, 2, Metric::Euclidean, 0.8, &mut rng)?;

    for step in 0..10 {
        let res = cb.lookup(&data)?;
        println!(
            "step {step}: quant error {:.4}, usage {:.3}",
            quantization_error(&data, &res.q)?,
            usage_fraction(&res.indices, cb.len())?
        );
        cb.ema_update(&data, &res.indices)?;
    }
    for (i, v) in cb.vectors().iter_rows().enumerate() {
        println!("code {i}: ({:+.3}, {:+.3}) count {:.2}", v[0], v[1], cb.ema_counts()[i]);
    }
    Ok(())
}
