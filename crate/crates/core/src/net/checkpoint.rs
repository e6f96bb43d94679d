//! Plain-text checkpoints.
//!
//! ```text
//! rotvq-checkpoint,1
//! <estimator>,<estimator_param>,<beta>,<codebook_learning>
//! encoder,<layers>
//!   per layer: <in>,<out>,<activation>
//!              <out rows of in weights>
//!              <bias row>
//! decoder,<layers>
//!   (same)
//! <codebook block, see Codebook::write_to>
//! ```
//!
//! `estimator_param` is the HVP step for `hessian`, λ for `exact`, else 0.
//! Floats are written in shortest round-trip form, so a checkpoint reloads
//! bit for bit.

use std::io::{BufRead, Cursor, Write};
use std::path::Path;

use crate::codebook::{join, parse_row, Codebook};
use crate::error::{Error, Result};
use crate::estimators::EstimatorKind;
use crate::linalg::Matrix;
use crate::net::mlp::{Activation, Dense, MlpNet};
use crate::net::model::VqAeModel;

const MAGIC: &str = "rotvq-checkpoint,1";

fn write_net<W: Write>(w: &mut W, tag: &str, net: &MlpNet) -> Result<()> {
    writeln!(w, "{tag},{}", net.layers.len())?;
    for l in &net.layers {
        writeln!(w, "{},{},{}", l.in_dim(), l.out_dim(), l.activation.name())?;
        for row in l.weights.iter_rows() {
            writeln!(w, "{}", join(row))?;
        }
        writeln!(w, "{}", join(&l.bias))?;
    }
    Ok(())
}

pub fn write_checkpoint<W: Write>(model: &VqAeModel, mut w: W) -> Result<()> {
    writeln!(w, "{MAGIC}")?;
    let param = match model.estimator {
        EstimatorKind::HessianApprox { hvp_scale } => hvp_scale,
        EstimatorKind::ExactDoublePass { lambda } => lambda,
        _ => 0.0,
    };
    writeln!(
        w,
        "{},{},{},{}",
        model.estimator, param, model.beta, model.codebook_learning
    )?;
    write_net(&mut w, "encoder", &model.encoder)?;
    write_net(&mut w, "decoder", &model.decoder)?;
    model.codebook.write_to(&mut w)
}

pub fn save(model: &VqAeModel, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write_checkpoint(model, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<VqAeModel> {
    let f = std::fs::File::open(path)?;
    read_checkpoint(std::io::BufReader::new(f))
}

struct Lines<R> {
    inner: std::io::Lines<R>,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self) -> Result<String> {
        self.inner
            .next()
            .ok_or_else(|| Error::Parse("unexpected end of checkpoint".into()))?
            .map_err(Error::from)
    }
}

fn field<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad {what} `{s}` in checkpoint")))
}

fn read_net<R: BufRead>(lines: &mut Lines<R>, tag: &str) -> Result<MlpNet> {
    let head = lines.next()?;
    let (got, n) = head
        .split_once(',')
        .ok_or_else(|| Error::Parse(format!("bad section header `{head}`")))?;
    if got != tag {
        return Err(Error::Parse(format!("expected `{tag}` section, found `{got}`")));
    }
    let n: usize = field(n, "layer count")?;
    let mut layers = Vec::with_capacity(n);
    for _ in 0..n {
        let shape = lines.next()?;
        let parts: Vec<&str> = shape.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("bad layer line `{shape}`")));
        }
        let i: usize = field(parts[0], "layer input size")?;
        let o: usize = field(parts[1], "layer output size")?;
        let activation = Activation::from_name(parts[2].trim())?;
        let mut weights = Matrix::zeros(o, i);
        for r in 0..o {
            weights.row_mut(r).copy_from_slice(&parse_row(&lines.next()?, i)?);
        }
        let bias = parse_row(&lines.next()?, o)?;
        layers.push(Dense {
            weights,
            bias,
            activation,
        });
    }
    if layers.is_empty() {
        return Err(Error::Parse(format!("`{tag}` has no layers")));
    }
    Ok(MlpNet { layers })
}

pub fn read_checkpoint<R: BufRead>(r: R) -> Result<VqAeModel> {
    let mut lines = Lines { inner: r.lines() };
    let magic = lines.next()?;
    if magic.trim() != MAGIC {
        return Err(Error::Parse(format!("not a checkpoint (header `{magic}`)")));
    }
    let meta = lines.next()?;
    let parts: Vec<&str> = meta.split(',').collect();
    if parts.len() != 4 {
        return Err(Error::Parse(format!("bad checkpoint metadata `{meta}`")));
    }
    let param: f64 = field(parts[1], "estimator parameter")?;
    let estimator = match parts[0].parse::<EstimatorKind>()? {
        EstimatorKind::HessianApprox { .. } => EstimatorKind::HessianApprox { hvp_scale: param },
        EstimatorKind::ExactDoublePass { .. } => EstimatorKind::ExactDoublePass { lambda: param },
        other => other,
    };
    let beta: f64 = field(parts[2], "beta")?;
    let learning = parts[3].trim().parse()?;
    let encoder = read_net(&mut lines, "encoder")?;
    let decoder = read_net(&mut lines, "decoder")?;
    // the rest is the codebook block
    let mut rest = String::new();
    while let Some(l) = lines.inner.next() {
        rest.push_str(&l?);
        rest.push('\n');
    }
    let codebook = Codebook::read_from(Cursor::new(rest))?;
    Ok(VqAeModel::new(encoder, decoder, codebook, estimator)?
        .with_beta(beta)
        .with_codebook_learning(learning))
}
