//! Samples the gradient each estimator sends back to an encoder output,
//! over a grid, for the log-tanh test field.

use rotvq::sim::field::ScalarField2D;
use rotvq::sim::gradfield::{gradient_field, GridSpec};
use rotvq::{EstimatorKind, Matrix};

fn main() -> rotvq::Result<()> {
    let codes = Matrix::from_rows(&[[1.0, 1.0], [-1.0, 0.5], [0.2, -1.2]])?;
    let grid = GridSpec { nx: 9, ny: 9, ..Default::default() };
    for est in [EstimatorKind::Ste, EstimatorKind::Rotation, EstimatorKind::hessian()] {
        let rows = gradient_field(ScalarField2D::LogTanh, &codes, &grid, est, None)?;
        let distinct = {
            let mut v: Vec<(i64, i64)> = rows
                .iter()
                .map(|r| ((r.gx * 1e9).round() as i64, (r.gy * 1e9).round() as i64))
                .collect();
            v.sort();
            v.dedup();
            v.len()
        };
        println!("{:<10} {} samples, {distinct} distinct gradients", est.to_string(), rows.len());
        for r in rows.iter().step_by(20) {
            println!("  ({:+.2}, {:+.2}) cell {} -> ({:+.4}, {:+.4})", r.x, r.y, r.cell, r.gx, r.gy);
        }
    }
    Ok(())
}
