//! Fully connected network with tanh hidden layers and a linear output,
//! stored as one flat parameter vector so optimizers and checkpoints can
//! treat it as a plain slice.

use rand::Rng;

use crate::RlError;

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

/// Activations of every layer from one forward pass; `acts[0]` is the input.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    acts: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.acts.last().expect("at least the input layer")
    }
}

fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl Mlp {
    /// All weights and biases zero.
    pub fn zeros(sizes: &[usize]) -> Result<Self, RlError> {
        if sizes.len() < 2 || sizes.iter().any(|&s| s == 0) {
            return Err(RlError::Shape(format!("invalid layer sizes {sizes:?}")));
        }
        Ok(Self { sizes: sizes.to_vec(), params: vec![0.0; param_count(sizes)] })
    }

    /// Glorot-uniform weights, zero biases; the output layer is scaled by `out_scale`.
    pub fn glorot<R: Rng + ?Sized>(sizes: &[usize], out_scale: f64, rng: &mut R) -> Result<Self, RlError> {
        let mut m = Self::zeros(sizes)?;
        let layers = sizes.len() - 1;
        let mut off = 0;
        for l in 0..layers {
            let (n_in, n_out) = (sizes[l], sizes[l + 1]);
            let limit = (6.0 / (n_in + n_out) as f64).sqrt();
            let scale = if l + 1 == layers { out_scale } else { 1.0 };
            for w in &mut m.params[off..off + n_in * n_out] {
                *w = rng.random_range(-limit..limit) * scale;
            }
            off += n_in * n_out + n_out;
        }
        Ok(m)
    }

    pub fn from_params(sizes: &[usize], params: Vec<f64>) -> Result<Self, RlError> {
        let m = Self::zeros(sizes)?;
        if params.len() != m.params.len() {
            return Err(RlError::Shape(format!("expected {} parameters, got {}", m.params.len(), params.len())));
        }
        Ok(Self { sizes: sizes.to_vec(), params })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("validated")
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    fn check_input(&self, x: &[f64]) -> Result<(), RlError> {
        if x.len() != self.input_dim() {
            return Err(RlError::Shape(format!("input of length {} for a {}-input network", x.len(), self.input_dim())));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(RlError::NonFinite(format!("network input {x:?}")));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, RlError> {
        Ok(self.forward_cached(x)?.acts.pop().expect("output layer"))
    }

    pub fn forward_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, RlError> {
        xs.iter().map(|x| self.forward(x)).collect()
    }

    pub fn forward_cached(&self, x: &[f64]) -> Result<ForwardCache, RlError> {
        self.check_input(x)?;
        let layers = self.sizes.len() - 1;
        let mut acts = Vec::with_capacity(layers + 1);
        acts.push(x.to_vec());
        let mut off = 0;
        for l in 0..layers {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let w = &self.params[off..off + n_in * n_out];
            let b = &self.params[off + n_in * n_out..off + n_in * n_out + n_out];
            let prev = &acts[l];
            let mut out = Vec::with_capacity(n_out);
            for j in 0..n_out {
                let row = &w[j * n_in..(j + 1) * n_in];
                let mut z = b[j];
                for i in 0..n_in {
                    z += row[i] * prev[i];
                }
                out.push(if l + 1 < layers { z.tanh() } else { z });
            }
            acts.push(out);
            off += n_in * n_out + n_out;
        }
        Ok(ForwardCache { acts })
    }

    /// Adds d(loss)/d(params) to `grad`, given d(loss)/d(output).
    pub fn backward(&self, cache: &ForwardCache, d_out: &[f64], grad: &mut [f64]) {
        let layers = self.sizes.len() - 1;
        let mut offsets = Vec::with_capacity(layers);
        let mut off = 0;
        for l in 0..layers {
            offsets.push(off);
            off += self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1];
        }
        let mut delta = d_out.to_vec();
        for l in (0..layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let off = offsets[l];
            let prev = &cache.acts[l];
            for j in 0..n_out {
                let dj = delta[j];
                let gw = &mut grad[off + j * n_in..off + (j + 1) * n_in];
                for i in 0..n_in {
                    gw[i] += dj * prev[i];
                }
                grad[off + n_in * n_out + j] += dj;
            }
            if l > 0 {
                let w = &self.params[off..off + n_in * n_out];
                let mut next = vec![0.0; n_in];
                for j in 0..n_out {
                    let dj = delta[j];
                    let row = &w[j * n_in..(j + 1) * n_in];
                    for i in 0..n_in {
                        next[i] += dj * row[i];
                    }
                }
                // prev is a tanh activation
                for i in 0..n_in {
                    next[i] *= 1.0 - prev[i] * prev[i];
                }
                delta = next;
            }
        }
    }
}
