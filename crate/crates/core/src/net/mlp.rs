use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, check_finite, Error, Result};
use crate::linalg::{dot, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    // derivative in terms of the pre-activation
    fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = pre.tanh();
                1.0 - t * t
            }
            Activation::Identity => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            "identity" => Ok(Activation::Identity),
            other => Err(Error::Parse(format!("unknown activation `{other}`"))),
        }
    }
}

/// Fully connected layer `y = act(W x + b)` with `W` stored `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Dense {
    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    fn param_count(&self) -> usize {
        self.weights.rows() * self.weights.cols() + self.bias.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrad {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

/// Parameter gradients for an [`MlpNet`], one entry per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub layers: Vec<DenseGrad>,
}

impl MlpGrads {
    pub fn zeros_like(net: &MlpNet) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| DenseGrad {
                    weights: Matrix::zeros(l.out_dim(), l.in_dim()),
                    bias: vec![0.0; l.out_dim()],
                })
                .collect(),
        }
    }

    /// Flattened in the same order as [`MlpNet::param`].
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend_from_slice(l.weights.as_slice());
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn add_scaled(&mut self, alpha: f64, other: &MlpGrads) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.weights.as_mut_slice().iter_mut().zip(b.weights.as_slice()) {
                *x += alpha * y;
            }
            for (x, y) in a.bias.iter_mut().zip(&b.bias) {
                *x += alpha * y;
            }
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for l in &mut self.layers {
            l.weights.as_mut_slice().iter_mut().for_each(|x| *x *= alpha);
            l.bias.iter_mut().for_each(|x| *x *= alpha);
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.flat().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Activations kept from a forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input to each layer (`inputs[0]` is the network input).
    pub inputs: Vec<Matrix>,
    /// Pre-activation of each layer.
    pub pre: Vec<Matrix>,
    pub output: Matrix,
}

/// Feed-forward network with a hand-written backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpNet {
    pub layers: Vec<Dense>,
}

impl MlpNet {
    /// Layers of sizes `dims[0] → dims[1] → … → dims[n]`, hidden layers using
    /// `hidden` and the last one `output`. Weights and biases are drawn from
    /// `U[-1/√fan_in, 1/√fan_in]`.
    pub fn new<R: Rng + ?Sized>(
        dims: &[usize],
        hidden: Activation,
        output: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::InvalidParameter(format!(
                "network needs at least two nonzero layer sizes, got {dims:?}"
            )));
        }
        let n = dims.len() - 1;
        let layers = (0..n)
            .map(|i| {
                let (fan_in, fan_out) = (dims[i], dims[i + 1]);
                let bound = 1.0 / (fan_in as f64).sqrt();
                let w = (0..fan_in * fan_out)
                    .map(|_| rng.random_range(-bound..bound))
                    .collect();
                let b = (0..fan_out).map(|_| rng.random_range(-bound..bound)).collect();
                Dense {
                    weights: Matrix::from_vec(fan_out, fan_in, w).expect("sized above"),
                    bias: b,
                    activation: if i + 1 == n { output } else { hidden },
                }
            })
            .collect();
        Ok(Self { layers })
    }

    /// Single linear layer with the given weights and zero bias.
    pub fn linear(weights: Matrix) -> Self {
        let out = weights.rows();
        Self {
            layers: vec![Dense {
                weights,
                bias: vec![0.0; out],
                activation: Activation::Identity,
            }],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::linear(Matrix::identity(dim))
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.in_dim()];
        d.extend(self.layers.iter().map(Dense::out_dim));
        d
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        Ok(self.forward_cached(x)?.output)
    }

    pub fn forward_cached(&self, x: &Matrix) -> Result<ForwardCache> {
        check_dims(self.in_dim(), x.cols())?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for layer in &self.layers {
            let n = h.rows();
            let mut z = Matrix::zeros(n, layer.out_dim());
            for i in 0..n {
                let row = h.row(i);
                for (o, w) in layer.weights.iter_rows().enumerate() {
                    z[(i, o)] = dot(w, row) + layer.bias[o];
                }
            }
            let mut a = z.clone();
            a.as_mut_slice()
                .iter_mut()
                .for_each(|v| *v = layer.activation.apply(*v));
            inputs.push(h);
            pre.push(z);
            h = a;
        }
        check_finite(h.as_slice())?;
        Ok(ForwardCache {
            inputs,
            pre,
            output: h,
        })
    }

    /// Backpropagates `grad_out = ∂L/∂output` through the cached pass.
    /// Returns parameter gradients and `∂L/∂input`.
    pub fn backward(&self, cache: &ForwardCache, grad_out: &Matrix) -> Result<(MlpGrads, Matrix)> {
        check_dims(cache.output.rows(), grad_out.rows())?;
        check_dims(cache.output.cols(), grad_out.cols())?;
        let mut grads = MlpGrads::zeros_like(self);
        let mut g = grad_out.clone();
        for (li, layer) in self.layers.iter().enumerate().rev() {
            let pre = &cache.pre[li];
            let input = &cache.inputs[li];
            // through the activation
            for (gv, p) in g.as_mut_slice().iter_mut().zip(pre.as_slice()) {
                *gv *= layer.activation.derivative(*p);
            }
            let lg = &mut grads.layers[li];
            for i in 0..g.rows() {
                let gi = g.row(i);
                let xi = input.row(i);
                for (o, &go) in gi.iter().enumerate() {
                    lg.bias[o] += go;
                    if go == 0.0 {
                        continue;
                    }
                    for (w, &x) in lg.weights.row_mut(o).iter_mut().zip(xi) {
                        *w += go * x;
                    }
                }
            }
            let mut gin = Matrix::zeros(g.rows(), layer.in_dim());
            for i in 0..g.rows() {
                for (o, w) in layer.weights.iter_rows().enumerate() {
                    let go = g[(i, o)];
                    if go == 0.0 {
                        continue;
                    }
                    for (dst, &wv) in gin.row_mut(i).iter_mut().zip(w) {
                        *dst += go * wv;
                    }
                }
            }
            g = gin;
        }
        Ok((grads, g))
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Dense::param_count).sum()
    }

    /// Mutable access to the `idx`-th parameter in flat order: each layer's
    /// weights row-major, then its bias.
    pub fn param_mut(&mut self, mut idx: usize) -> &mut f64 {
        for layer in &mut self.layers {
            let nw = layer.weights.rows() * layer.weights.cols();
            if idx < nw {
                return &mut layer.weights.as_mut_slice()[idx];
            }
            idx -= nw;
            if idx < layer.bias.len() {
                return &mut layer.bias[idx];
            }
            idx -= layer.bias.len();
        }
        panic!("parameter index out of range");
    }

    /// `θ ← θ - lr · g`
    pub fn sgd_step(&mut self, grads: &MlpGrads, lr: f64) {
        for (layer, g) in self.layers.iter_mut().zip(&grads.layers) {
            for (w, gw) in layer.weights.as_mut_slice().iter_mut().zip(g.weights.as_slice()) {
                *w -= lr * gw;
            }
            for (b, gb) in layer.bias.iter_mut().zip(&g.bias) {
                *b -= lr * gb;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_net_passes_through() {
        let net = MlpNet::identity(3);
        let x = Matrix::from_rows(&[[1.0, -2.0, 0.5]]).unwrap();
        assert_eq!(net.forward(&x).unwrap(), x);
    }

    #[test]
    fn backward_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let net = MlpNet::new(&[3, 5, 4, 2], Activation::Tanh, Activation::Identity, &mut rng).unwrap();
        let x = Matrix::from_rows(&[[0.3, -0.1, 0.8], [-0.5, 0.2, 0.1]]).unwrap();
        // L = Σ output²/2, so ∂L/∂out = out
        let loss = |n: &MlpNet| -> f64 {
            n.forward(&x).unwrap().as_slice().iter().map(|v| 0.5 * v * v).sum()
        };
        let cache = net.forward_cached(&x).unwrap();
        let (grads, gin) = net.backward(&cache, &cache.output).unwrap();
        let flat = grads.flat();
        let h = 1e-6;
        for i in 0..net.param_count() {
            let mut p = net.clone();
            *p.param_mut(i) += h;
            let up = loss(&p);
            *p.param_mut(i) -= 2.0 * h;
            let down = loss(&p);
            let fd = (up - down) / (2.0 * h);
            assert!((fd - flat[i]).abs() < 1e-8, "param {i}: {fd} vs {}", flat[i]);
        }
        // input gradient
        for j in 0..3 {
            let mut xp = x.clone();
            xp[(1, j)] += h;
            let up: f64 = net.forward(&xp).unwrap().as_slice().iter().map(|v| 0.5 * v * v).sum();
            xp[(1, j)] -= 2.0 * h;
            let down: f64 = net.forward(&xp).unwrap().as_slice().iter().map(|v| 0.5 * v * v).sum();
            assert!(((up - down) / (2.0 * h) - gin[(1, j)]).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(MlpNet::new(&[3], Activation::Relu, Activation::Identity, &mut rng).is_err());
        let net = MlpNet::identity(2);
        assert!(net.forward(&Matrix::zeros(1, 3)).is_err());
        assert!(net.forward(&Matrix::from_rows(&[[f64::NAN, 0.0]]).unwrap()).is_err());
    }
}
