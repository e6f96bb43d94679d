//! The four-cell point-dynamics figure: STE translates every cell rigidly,
//! the rotation estimator pulls or pushes points depending on the angle
//! between the update and the code.

use rotvq::sim::voronoi::figure_preset;
use rotvq::{EstimatorKind, Matrix};

/// RMS distance of a cell's points from their centroid.
fn cell_radius(pts: &Matrix, cells: &[usize], k: usize) -> Option<f64> {
    let idx: Vec<usize> = (0..pts.rows()).filter(|&i| cells[i] == k).collect();
    if idx.is_empty() {
        return None;
    }
    let n = idx.len() as f64;
    let cx = idx.iter().map(|&i| pts.row(i)[0]).sum::<f64>() / n;
    let cy = idx.iter().map(|&i| pts.row(i)[1]).sum::<f64>() / n;
    let ms = idx
        .iter()
        .map(|&i| (pts.row(i)[0] - cx).powi(2) + (pts.row(i)[1] - cy).powi(2))
        .sum::<f64>()
        / n;
    Some(ms.sqrt())
}

fn main() -> rotvq::Result<()> {
    for est in [EstimatorKind::Ste, EstimatorKind::Rotation] {
        let scn = figure_preset(est, 0)?;
        let start = scn.initial_state()?;
        let run = scn.run()?;
        println!("{est}:");
        for k in 0..scn.codebook_init.rows() {
            if let (Some(a), Some(b)) = (
                cell_radius(&start.points, &start.cells, k),
                cell_radius(&run.state.points, &run.state.cells, k),
            ) {
                println!("  cell {k}: radius {a:.4} -> {b:.4}");
            }
        }
    }
    Ok(())
}
