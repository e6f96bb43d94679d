//! Toy datasets: a seeded 2-D Gaussian mixture and a plain CSV loader.

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Mixture of isotropic Gaussians with equal weights.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    pub centers: Matrix,
    pub sigma: f64,
}

impl GaussianMixture {
    /// `k` centers evenly spaced on a circle of the given radius.
    pub fn ring(k: usize, radius: f64, sigma: f64) -> Self {
        let rows: Vec<[f64; 2]> = (0..k)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / k as f64;
                [radius * t.cos(), radius * t.sin()]
            })
            .collect();
        Self {
            centers: Matrix::from_rows(&rows).expect("fixed width"),
            sigma,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Matrix> {
        if self.centers.rows() == 0 {
            return Err(Error::Empty);
        }
        let normal = Normal::new(0.0, self.sigma)
            .map_err(|e| Error::InvalidParameter(format!("mixture sigma: {e}")))?;
        let d = self.centers.cols();
        let mut out = Matrix::zeros(n, d);
        for i in 0..n {
            let c = rng.random_range(0..self.centers.rows());
            for j in 0..d {
                out[(i, j)] = self.centers[(c, j)] + normal.sample(rng);
            }
        }
        Ok(out)
    }
}

/// Loads a numeric CSV. A first row that does not parse as numbers is taken
/// as a header and skipped.
pub fn load_csv(path: &Path) -> Result<Matrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) => rows.push(v),
            Err(_) if line == 0 => continue,
            Err(_) => {
                return Err(Error::Parse(format!(
                    "{}: non-numeric value on line {}",
                    path.display(),
                    line + 1
                )))
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::Empty);
    }
    let m = Matrix::from_rows(&rows)?;
    crate::error::check_finite(m.as_slice())?;
    Ok(m)
}
