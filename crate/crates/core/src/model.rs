//! Fully-connected ReLU network with analytic backpropagation.
//!
//! Hidden layers use ReLU, the output layer is linear: the logits are the last
//! pre-activation, and any softmax belongs to [`crate::objective`].
//!
//! [`MlpParams::backward`] is the plain chain rule for whatever logit gradient it is
//! handed. The loss functions in [`crate::objective`] already fold the
//! `1/batch` of a batch-mean loss into that gradient, so parameter gradients
//! come out batch-averaged without a second division here.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::{Error, Matrix, Result, Rng};

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    /// `fan_in x fan_out`
    pub weight: Matrix,
    /// `1 x fan_out`
    pub bias: Matrix,
}

impl Layer {
    pub fn fan_in(&self) -> usize {
        self.weight.rows()
    }

    pub fn fan_out(&self) -> usize {
        self.weight.cols()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpParams {
    layers: Vec<Layer>,
}

/// Everything `forward` computed that `backward` needs.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardTrace {
    /// Layer inputs: `inputs[0]` is the batch, `inputs[i]` is `relu(pre[i-1])`.
    pub inputs: Vec<Matrix>,
    /// Pre-activations of every layer; the last one is the logits.
    pub pre: Vec<Matrix>,
}

impl ForwardTrace {
    pub fn logits(&self) -> &Matrix {
        self.pre.last().expect("trace has at least one layer")
    }

    pub fn into_logits(mut self) -> Matrix {
        self.pre.pop().expect("trace has at least one layer")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
    /// `batch x input_dim`
    pub input_grad: Matrix,
}

impl MlpParams {
    /// Glorot-uniform weights, zero biases.
    pub fn init(dims: &[usize], rng: &mut Rng) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::config("an MLP needs at least input and output dims"));
        }
        if dims.contains(&0) {
            return Err(Error::config(format!("zero-width layer in {dims:?}")));
        }
        let layers = dims
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let s = (6.0 / (fan_in + fan_out) as f64).sqrt();
                Layer {
                    weight: Matrix::from_fn(fan_in, fan_out, |_, _| rng.uniform(-s, s)),
                    bias: Matrix::zeros(1, fan_out),
                }
            })
            .collect();
        Ok(MlpParams { layers })
    }

    /// Assembles parameters from explicit layers, checking that dimensions chain.
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::config("an MLP needs at least one layer"));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.shape() != (1, l.fan_out()) {
                return Err(Error::shape(
                    "from_layers",
                    format!("layer {i}: bias {:?} for fan_out {}", l.bias.shape(), l.fan_out()),
                ));
            }
        }
        for (i, w) in layers.windows(2).enumerate() {
            if w[0].fan_out() != w[1].fan_in() {
                return Err(Error::shape(
                    "from_layers",
                    format!("layer {i} fan_out {} != layer {} fan_in {}", w[0].fan_out(), i + 1, w[1].fan_in()),
                ));
            }
        }
        Ok(MlpParams { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn output_layer(&self) -> &Layer {
        self.layers.last().expect("non-empty")
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut dims = vec![self.layers[0].fan_in()];
        dims.extend(self.layers.iter().map(Layer::fan_out));
        dims
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn class_count(&self) -> usize {
        self.output_layer().fan_out()
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.rows() * l.weight.cols() + l.bias.cols())
            .sum()
    }

    pub fn forward(&self, x: &Matrix) -> Result<ForwardTrace> {
        if x.cols() != self.input_dim() {
            return Err(Error::shape(
                "forward",
                format!("input has {} columns, network expects {}", x.cols(), self.input_dim()),
            ));
        }
        let n = self.layers.len();
        let mut inputs = Vec::with_capacity(n);
        let mut pre = Vec::with_capacity(n);
        inputs.push(x.clone());
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = inputs[i].matmul(&layer.weight)?;
            z.add_row_broadcast(&layer.bias)?;
            if i + 1 < n {
                inputs.push(z.map(relu));
            }
            pre.push(z);
        }
        Ok(ForwardTrace { inputs, pre })
    }

    /// Logits only, without retaining the trace.
    pub fn logits(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.input_dim() {
            return Err(Error::shape(
                "logits",
                format!("input has {} columns, network expects {}", x.cols(), self.input_dim()),
            ));
        }
        let mut h = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = h.matmul(&layer.weight)?;
            z.add_row_broadcast(&layer.bias)?;
            h = if i + 1 < self.layers.len() { z.map(relu) } else { z };
        }
        Ok(h)
    }

    /// Chain rule from `logit_grad = ∂L/∂logits` down to every parameter and the input.
    pub fn backward(&self, trace: &ForwardTrace, logit_grad: &Matrix) -> Result<Gradients> {
        if trace.pre.len() != self.layers.len() {
            return Err(Error::shape("backward", "trace does not belong to these parameters"));
        }
        if logit_grad.shape() != trace.logits().shape() {
            return Err(Error::shape(
                "backward",
                format!("logit_grad {:?} vs logits {:?}", logit_grad.shape(), trace.logits().shape()),
            ));
        }
        let mut grads: Vec<Layer> = Vec::with_capacity(self.layers.len());
        let mut delta = logit_grad.clone();
        let mut input_grad = None;
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let weight = trace.inputs[i].matmul_tn(&delta)?;
            let bias = delta.sum_rows();
            let upstream = delta.matmul_nt(&layer.weight)?;
            grads.push(Layer { weight, bias });
            if i == 0 {
                input_grad = Some(upstream);
            } else {
                // ReLU subgradient is taken as 0 at exactly 0
                let gate = &trace.pre[i - 1];
                let mut d = upstream;
                for (v, &z) in d.as_mut_slice().iter_mut().zip(gate.as_slice()) {
                    if z <= 0.0 {
                        *v = 0.0;
                    }
                }
                delta = d;
            }
        }
        grads.reverse();
        Ok(Gradients {
            layers: grads,
            input_grad: input_grad.expect("at least one layer"),
        })
    }

    /// `θ ← θ − lr·g` for every parameter. No momentum, no weight decay.
    pub fn sgd_step(&mut self, g: &Gradients, lr: f64) -> Result<()> {
        if !(lr > 0.0) {
            return Err(Error::config(format!("learning rate must be positive, got {lr}")));
        }
        if g.layers.len() != self.layers.len()
            || self
                .layers
                .iter()
                .zip(&g.layers)
                .any(|(p, d)| p.weight.shape() != d.weight.shape() || p.bias.shape() != d.bias.shape())
        {
            return Err(Error::shape("sgd_step", "gradients are not congruent with parameters"));
        }
        for (p, d) in self.layers.iter_mut().zip(&g.layers) {
            p.weight.axpy(-lr, &d.weight)?;
            p.bias.axpy(-lr, &d.bias)?;
        }
        Ok(())
    }

    /// Flat parameter vector in layer order (weights row-major, then bias).
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(l.weight.as_slice());
            out.extend_from_slice(l.bias.as_slice());
        }
        out
    }

    /// Mutable reference to the `i`-th parameter in [`flatten`](Self::flatten) order.
    pub fn param_mut(&mut self, mut i: usize) -> &mut f64 {
        for l in &mut self.layers {
            let w = l.weight.as_slice().len();
            if i < w {
                return &mut l.weight.as_mut_slice()[i];
            }
            i -= w;
            let b = l.bias.as_slice().len();
            if i < b {
                return &mut l.bias.as_mut_slice()[i];
            }
            i -= b;
        }
        panic!("parameter index out of range");
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = encode_checkpoint(self);
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&bytes).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        decode_checkpoint(&bytes).map_err(|(offset, detail)| Error::Format {
            path: path.to_path_buf(),
            offset,
            detail,
        })
    }
}

impl Gradients {
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend_from_slice(l.weight.as_slice());
            out.extend_from_slice(l.bias.as_slice());
        }
        out
    }

    /// `self += s · other`, layer by layer.
    pub fn accumulate(&mut self, s: f64, other: &Gradients) -> Result<()> {
        if self.layers.len() != other.layers.len() {
            return Err(Error::shape("accumulate", "layer count differs"));
        }
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weight.axpy(s, &b.weight)?;
            a.bias.axpy(s, &b.bias)?;
        }
        Ok(())
    }
}

#[inline]
fn relu(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        0.0
    }
}

const MAGIC: &[u8; 4] = b"MCLP";
const CHECKPOINT_VERSION: u32 = 1;

/// Checkpoint layout: `"MCLP"`, version `u32`, layer count `u32`, `layers + 1`
/// dims as `u32`, then each layer's weights (row-major) and biases as `f64`.
/// All integers and floats little-endian.
pub fn encode_checkpoint(p: &MlpParams) -> Vec<u8> {
    let dims = p.dims();
    let mut out = Vec::with_capacity(12 + 4 * dims.len() + 8 * p.param_count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(p.layers.len() as u32).to_le_bytes());
    for d in dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in p.flatten() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn decode_checkpoint(bytes: &[u8]) -> std::result::Result<MlpParams, (u64, String)> {
    let mut pos = 0usize;
    let mut take = |n: usize| -> std::result::Result<&[u8], (u64, String)> {
        let s = bytes
            .get(pos..pos + n)
            .ok_or_else(|| (pos as u64, format!("truncated: needed {n} more bytes")))?;
        pos += n;
        Ok(s)
    };
    if take(4)? != MAGIC {
        return Err((0, "bad magic".into()));
    }
    let version = u32::from_le_bytes(take(4)?.try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err((4, format!("unsupported version {version}")));
    }
    let n_layers = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
    if n_layers == 0 {
        return Err((8, "zero layers".into()));
    }
    let mut dims = Vec::with_capacity(n_layers + 1);
    for _ in 0..=n_layers {
        dims.push(u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize);
    }
    let mut layers = Vec::with_capacity(n_layers);
    for w in dims.windows(2) {
        let mut read = |n: usize| -> std::result::Result<Vec<f64>, (u64, String)> {
            let raw = take(8 * n)?;
            Ok(raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect())
        };
        let weight = read(w[0] * w[1])?;
        let bias = read(w[1])?;
        let weight = Matrix::from_vec(w[0], w[1], weight).map_err(|e| (0, e.to_string()))?;
        let bias = Matrix::from_vec(1, w[1], bias).map_err(|e| (0, e.to_string()))?;
        layers.push(Layer { weight, bias });
    }
    if pos != bytes.len() {
        return Err((pos as u64, "trailing bytes".into()));
    }
    MlpParams::from_layers(layers).map_err(|e| (0, e.to_string()))
}
