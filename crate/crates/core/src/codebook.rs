//! Codebook storage, nearest-vector lookup, EMA learning, and the usage and
//! distortion metrics.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, check_finite, Error, Result};
use crate::linalg::{dot, norm, sq_dist, Matrix};

/// Encoder outputs with norm below this are looked up by Euclidean distance
/// under the cosine metric.
pub const COSINE_NORM_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Euclidean,
    Cosine,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Euclidean => "euclidean",
            Metric::Cosine => "cosine",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Metric::Euclidean),
            "cosine" => Ok(Metric::Cosine),
            other => Err(Error::Parse(format!("unknown metric `{other}`"))),
        }
    }
}

/// Output of [`Codebook::lookup`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizeResult {
    pub indices: Vec<usize>,
    /// Selected codebook rows, one per input row.
    pub q: Matrix,
    /// `|e_i - q_i|²` for the selected row, under either metric.
    pub distances: Vec<f64>,
}

/// `K` codebook vectors plus the exponential-moving-average statistics that
/// train them.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    vectors: Matrix,
    metric: Metric,
    ema_counts: Vec<f64>,
    ema_sums: Matrix,
    decay: f64,
    smoothing_eps: f64,
}

impl Codebook {
    pub const DEFAULT_DECAY: f64 = 0.8;
    pub const DEFAULT_SMOOTHING_EPS: f64 = 1e-5;

    /// Wraps explicit vectors. EMA counts start at one per code with sums
    /// equal to the vectors, so an untouched code keeps its position.
    pub fn new(vectors: Matrix, metric: Metric, decay: f64) -> Result<Self> {
        if vectors.rows() == 0 || vectors.cols() == 0 {
            return Err(Error::EmptyCodebook);
        }
        check_finite(vectors.as_slice())?;
        if !(0.0..1.0).contains(&decay) {
            return Err(Error::InvalidParameter(format!(
                "decay must lie in [0, 1), got {decay}"
            )));
        }
        Ok(Self {
            ema_counts: vec![1.0; vectors.rows()],
            ema_sums: vectors.clone(),
            vectors,
            metric,
            decay,
            smoothing_eps: Self::DEFAULT_SMOOTHING_EPS,
        })
    }

    /// `K × d` entries drawn i.i.d. from `U[-1/K, 1/K]`.
    pub fn random_uniform<R: Rng + ?Sized>(
        k: usize,
        d: usize,
        metric: Metric,
        decay: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if k == 0 || d == 0 {
            return Err(Error::EmptyCodebook);
        }
        let bound = 1.0 / k as f64;
        let data = (0..k * d).map(|_| rng.random_range(-bound..bound)).collect();
        Self::new(Matrix::from_vec(k, d, data)?, metric, decay)
    }

    pub fn with_smoothing_eps(mut self, eps: f64) -> Self {
        self.smoothing_eps = eps;
        self
    }

    pub fn len(&self) -> usize {
        self.vectors.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    pub fn vectors(&self) -> &Matrix {
        &self.vectors
    }

    /// Mutable access for gradient-based codebook learning. EMA statistics are
    /// left as they are.
    pub fn vectors_mut(&mut self) -> &mut Matrix {
        &mut self.vectors
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        self.vectors.row(i)
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn smoothing_eps(&self) -> f64 {
        self.smoothing_eps
    }

    pub fn ema_counts(&self) -> &[f64] {
        &self.ema_counts
    }

    pub fn ema_sums(&self) -> &Matrix {
        &self.ema_sums
    }

    /// Index of the nearest codebook row to `e`. Ties go to the smallest index.
    pub fn nearest(&self, e: &[f64]) -> Result<usize> {
        check_dims(self.dim(), e.len())?;
        check_finite(e)?;
        let use_cosine = self.metric == Metric::Cosine && norm(e) >= COSINE_NORM_EPS;
        if use_cosine {
            let ne = norm(e);
            let mut best = 0;
            let mut best_sim = f64::NEG_INFINITY;
            for (j, row) in self.vectors.iter_rows().enumerate() {
                let nq = norm(row);
                let sim = if nq > 0.0 {
                    dot(e, row) / (ne * nq)
                } else {
                    f64::NEG_INFINITY
                };
                if sim > best_sim {
                    best_sim = sim;
                    best = j;
                }
            }
            Ok(best)
        } else {
            let mut best = 0;
            let mut best_dist = f64::INFINITY;
            for (j, row) in self.vectors.iter_rows().enumerate() {
                let dist = sq_dist(e, row);
                if dist < best_dist {
                    best_dist = dist;
                    best = j;
                }
            }
            Ok(best)
        }
    }

    /// Quantizes each row of `e_batch`.
    pub fn lookup(&self, e_batch: &Matrix) -> Result<QuantizeResult> {
        check_dims(self.dim(), e_batch.cols())?;
        let n = e_batch.rows();
        let mut indices = Vec::with_capacity(n);
        let mut q = Matrix::zeros(n, self.dim());
        let mut distances = Vec::with_capacity(n);
        for (i, e) in e_batch.iter_rows().enumerate() {
            let j = self.nearest(e)?;
            q.row_mut(i).copy_from_slice(self.vector(j));
            distances.push(sq_dist(e, self.vector(j)));
            indices.push(j);
        }
        Ok(QuantizeResult {
            indices,
            q,
            distances,
        })
    }

    /// One EMA step from a batch and its assignments.
    ///
    /// `counts ← decay·counts + (1-decay)·n_i`,
    /// `sums ← decay·sums + (1-decay)·Σ e`, then each vector is its sum over a
    /// Laplace-smoothed count `(c_i + ε) / (N + Kε) · N`.
    pub fn ema_update(&mut self, e_batch: &Matrix, indices: &[usize]) -> Result<()> {
        check_dims(self.dim(), e_batch.cols())?;
        check_dims(e_batch.rows(), indices.len())?;
        let k = self.len();
        let d = self.dim();
        let mut batch_counts = vec![0.0; k];
        let mut batch_sums = Matrix::zeros(k, d);
        for (e, &j) in e_batch.iter_rows().zip(indices) {
            if j >= k {
                return Err(Error::IndexOutOfRange { index: j, size: k });
            }
            batch_counts[j] += 1.0;
            for (s, v) in batch_sums.row_mut(j).iter_mut().zip(e) {
                *s += v;
            }
        }

        let keep = self.decay;
        let take = 1.0 - self.decay;
        for j in 0..k {
            self.ema_counts[j] = keep * self.ema_counts[j] + take * batch_counts[j];
            let src = batch_sums.row(j).to_vec();
            for (s, b) in self.ema_sums.row_mut(j).iter_mut().zip(&src) {
                *s = keep * *s + take * b;
            }
        }

        let total: f64 = self.ema_counts.iter().sum();
        let eps = self.smoothing_eps;
        for j in 0..k {
            let smoothed = (self.ema_counts[j] + eps) / (total + k as f64 * eps) * total;
            let sums = self.ema_sums.row(j).to_vec();
            for (v, s) in self.vectors.row_mut(j).iter_mut().zip(&sums) {
                *v = s / smoothed;
            }
        }
        Ok(())
    }

    /// Writes the codebook as comma-separated text.
    ///
    /// ```text
    /// rotvq-codebook,1
    /// <K>,<d>,<metric>,<decay>,<smoothing_eps>
    /// <K rows of d vector components>
    /// <K rows: ema_count, then d ema_sum components>
    /// ```
    ///
    /// Floats use the shortest round-trip representation, so reading the file
    /// back reproduces the codebook bit for bit.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "rotvq-codebook,1")?;
        writeln!(
            w,
            "{},{},{},{},{}",
            self.len(),
            self.dim(),
            self.metric,
            self.decay,
            self.smoothing_eps
        )?;
        for row in self.vectors.iter_rows() {
            writeln!(w, "{}", join(row))?;
        }
        for (c, row) in self.ema_counts.iter().zip(self.ema_sums.iter_rows()) {
            writeln!(w, "{},{}", c, join(row))?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let mut next = || -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::Parse("unexpected end of codebook file".into()))?
                .map_err(Error::from)
        };
        let magic = next()?;
        if magic.trim() != "rotvq-codebook,1" {
            return Err(Error::Parse(format!("bad codebook header `{magic}`")));
        }
        let header = next()?;
        let fields: Vec<&str> = header.trim().split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Parse(format!("bad codebook shape line `{header}`")));
        }
        let k: usize = parse(fields[0])?;
        let d: usize = parse(fields[1])?;
        let metric: Metric = fields[2].parse()?;
        let decay: f64 = parse(fields[3])?;
        let smoothing_eps: f64 = parse(fields[4])?;

        let mut vectors = Matrix::zeros(k, d);
        for i in 0..k {
            let vals = parse_row(&next()?, d)?;
            vectors.row_mut(i).copy_from_slice(&vals);
        }
        let mut counts = Vec::with_capacity(k);
        let mut sums = Matrix::zeros(k, d);
        for i in 0..k {
            let vals = parse_row(&next()?, d + 1)?;
            counts.push(vals[0]);
            sums.row_mut(i).copy_from_slice(&vals[1..]);
        }
        let mut cb = Codebook::new(vectors, metric, decay)?.with_smoothing_eps(smoothing_eps);
        cb.ema_counts = counts;
        cb.ema_sums = sums;
        Ok(cb)
    }
}

pub(crate) fn join(vals: &[f64]) -> String {
    vals.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn parse<T: FromStr>(s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("cannot parse `{s}`")))
}

pub(crate) fn parse_row(line: &str, expected: usize) -> Result<Vec<f64>> {
    let vals: Vec<f64> = line
        .trim()
        .split(',')
        .map(parse::<f64>)
        .collect::<Result<_>>()?;
    check_dims(expected, vals.len())?;
    Ok(vals)
}

/// Fraction of the `k` codes that appear at least once in `indices`.
pub fn usage_fraction(indices: &[usize], k: usize) -> Result<f64> {
    if indices.is_empty() {
        return Err(Error::Empty);
    }
    if k == 0 {
        return Err(Error::EmptyCodebook);
    }
    let mut seen = vec![false; k];
    for &i in indices {
        if i >= k {
            return Err(Error::IndexOutOfRange { index: i, size: k });
        }
        seen[i] = true;
    }
    Ok(seen.iter().filter(|s| **s).count() as f64 / k as f64)
}

/// Mean of `|e_i - q_i|²` over the batch.
pub fn quantization_error(e_batch: &Matrix, q_batch: &Matrix) -> Result<f64> {
    check_dims(e_batch.rows(), q_batch.rows())?;
    check_dims(e_batch.cols(), q_batch.cols())?;
    if e_batch.rows() == 0 {
        return Err(Error::Empty);
    }
    let mut acc = 0.0;
    for (e, q) in e_batch.iter_rows().zip(q_batch.iter_rows()) {
        acc += sq_dist(e, q);
    }
    Ok(acc / e_batch.rows() as f64)
}

/// Distinct codes used, as a sorted set. Handy for reports.
pub fn used_codes(indices: &[usize]) -> BTreeSet<usize> {
    indices.iter().copied().collect()
}
