//! Minimal fully connected feedforward network with exact reverse-mode
//! gradients.
//!
//! Hidden layers are rectified-linear, the output layer is affine. This is
//! all the surrogate models need; there is no general tape, just the
//! layer-by-layer chain rule over a recorded forward pass.

pub mod adam;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use adam::{adam_step, AdamState};

/// Fully connected network. `weights[l]` is row-major `[out x in]` for the
/// l-th affine layer, `biases[l]` has length `out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layer_sizes: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

/// Recorded activations from a batched forward pass, consumed by
/// [`Mlp::backward`].
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    layer_sizes: Vec<usize>,
    batch: usize,
    /// `acts[0]` is the input batch; `acts[l]` the post-activation output of
    /// layer `l`. All buffers are batch-major `[sample x width]`.
    acts: Vec<Vec<f64>>,
    /// Pre-activations of every layer (affine output before the rectifier).
    preacts: Vec<Vec<f64>>,
    recorded: bool,
}

impl ForwardTrace {
    pub fn batch(&self) -> usize {
        self.batch
    }

    /// Output activations of the last layer, batch-major.
    pub fn outputs(&self) -> &[f64] {
        self.acts.last().expect("trace has layers")
    }

    /// Pre-activations of layer `l` (0-based affine layer index).
    pub fn preacts(&self, l: usize) -> &[f64] {
        &self.preacts[l]
    }

    /// Smallest pre-activation magnitude over all hidden units and samples.
    /// Useful for keeping finite-difference probes away from rectifier kinks.
    pub fn min_hidden_preact_magnitude(&self) -> f64 {
        let hidden = self.preacts.len().saturating_sub(1);
        self.preacts[..hidden]
            .iter()
            .flat_map(|z| z.iter())
            .fold(f64::INFINITY, |m, z| m.min(z.abs()))
    }
}

/// Parameter gradients with the same shapes as the network's weights and
/// biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Gradients {
            weights: net.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn reset(&mut self) {
        for w in &mut self.weights {
            w.iter_mut().for_each(|x| *x = 0.0);
        }
        for b in &mut self.biases {
            b.iter_mut().for_each(|x| *x = 0.0);
        }
    }

    /// Append all gradient entries (weights then bias per layer) to `out`.
    pub fn flatten_into(&self, out: &mut Vec<f64>) {
        for (w, b) in self.weights.iter().zip(self.biases.iter()) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
    }
}

impl Mlp {
    fn validate_sizes(layer_sizes: &[usize]) -> Result<()> {
        if layer_sizes.len() < 2 {
            return Err(Error::InvalidArchitecture(format!(
                "need input and output layers, got sizes {layer_sizes:?}"
            )));
        }
        if layer_sizes.iter().any(|&s| s == 0) {
            return Err(Error::InvalidArchitecture(format!(
                "zero-width layer in {layer_sizes:?}"
            )));
        }
        Ok(())
    }

    /// All-zero parameters (handy for tests).
    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        Self::validate_sizes(layer_sizes)?;
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..layer_sizes.len() - 1 {
            weights.push(vec![0.0; layer_sizes[l + 1] * layer_sizes[l]]);
            biases.push(vec![0.0; layer_sizes[l + 1]]);
        }
        Ok(Mlp { layer_sizes: layer_sizes.to_vec(), weights, biases })
    }

    /// Kaiming initialization: each weight drawn from a zero-mean normal with
    /// standard deviation `sqrt(2 / fan_in)` (fan-in mode, rectifier gain),
    /// biases zero. Deterministic for a given seed.
    pub fn kaiming(layer_sizes: &[usize], seed: u64) -> Result<Self> {
        Self::validate_sizes(layer_sizes)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..layer_sizes.len() - 1 {
            let fan_in = layer_sizes[l];
            let fan_out = layer_sizes[l + 1];
            let std = (2.0 / fan_in as f64).sqrt();
            let normal = Normal::new(0.0, std).expect("positive std");
            let w: Vec<f64> = (0..fan_out * fan_in).map(|_| normal.sample(&mut rng)).collect();
            weights.push(w);
            biases.push(vec![0.0; fan_out]);
        }
        Ok(Mlp { layer_sizes: layer_sizes.to_vec(), weights, biases })
    }

    /// Shape consistency check, mainly for states read back from disk.
    pub fn validate(&self) -> Result<()> {
        Self::validate_sizes(&self.layer_sizes)?;
        let layers = self.layer_sizes.len() - 1;
        if self.weights.len() != layers || self.biases.len() != layers {
            return Err(Error::InvalidArchitecture(format!(
                "{} weight and {} bias layers for sizes {:?}",
                self.weights.len(),
                self.biases.len(),
                self.layer_sizes
            )));
        }
        for l in 0..layers {
            if self.weights[l].len() != self.layer_sizes[l + 1] * self.layer_sizes[l]
                || self.biases[l].len() != self.layer_sizes[l + 1]
            {
                return Err(Error::InvalidArchitecture(format!(
                    "layer {l} parameter buffers do not match sizes {:?}",
                    self.layer_sizes
                )));
            }
        }
        Ok(())
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().expect("at least two layers")
    }

    /// Number of affine layers.
    pub fn n_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn n_params(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>()
            + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.biases
    }

    /// Append all parameters (weights then bias per layer) to `out`.
    pub fn flatten_params_into(&self, out: &mut Vec<f64>) {
        for (w, b) in self.weights.iter().zip(self.biases.iter()) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
    }

    /// Overwrite parameters from a flat slice in `flatten_params_into` order.
    /// Returns how many entries were consumed.
    pub fn set_params_from_flat(&mut self, flat: &[f64]) -> Result<usize> {
        if flat.len() < self.n_params() {
            return Err(Error::Shape(format!(
                "flat parameter slice has {} entries, need {}",
                flat.len(),
                self.n_params()
            )));
        }
        let mut offset = 0;
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            let wl = w.len();
            w.copy_from_slice(&flat[offset..offset + wl]);
            offset += wl;
            let bl = b.len();
            b.copy_from_slice(&flat[offset..offset + bl]);
            offset += bl;
        }
        Ok(offset)
    }

    /// Single-sample forward pass.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape(format!(
                "input width {} does not match first layer size {}",
                x.len(),
                self.input_dim()
            )));
        }
        let mut a = x.to_vec();
        let last = self.n_layers() - 1;
        for l in 0..=last {
            let n_in = self.layer_sizes[l];
            let n_out = self.layer_sizes[l + 1];
            let mut z = vec![0.0; n_out];
            for o in 0..n_out {
                let row = &self.weights[l][o * n_in..(o + 1) * n_in];
                let mut acc = self.biases[l][o];
                for (wi, ai) in row.iter().zip(a.iter()) {
                    acc += wi * ai;
                }
                z[o] = if l < last { acc.max(0.0) } else { acc };
            }
            a = z;
        }
        Ok(a)
    }

    /// Convenience scalar forward for 1-in/1-out surrogates.
    pub fn forward_scalar(&self, u: f64) -> Result<f64> {
        Ok(self.forward(&[u])?[0])
    }

    /// Allocate a trace buffer for a given batch size.
    pub fn trace(&self, batch: usize) -> ForwardTrace {
        let acts = self
            .layer_sizes
            .iter()
            .map(|&w| vec![0.0; w * batch])
            .collect();
        let preacts = self.layer_sizes[1..]
            .iter()
            .map(|&w| vec![0.0; w * batch])
            .collect();
        ForwardTrace {
            layer_sizes: self.layer_sizes.clone(),
            batch,
            acts,
            preacts,
            recorded: false,
        }
    }

    /// Batched forward pass recording every activation. `inputs` is
    /// batch-major `[sample x input_dim]`.
    pub fn forward_batch(&self, inputs: &[f64], trace: &mut ForwardTrace) -> Result<()> {
        if trace.layer_sizes != self.layer_sizes {
            return Err(Error::State(
                "trace was allocated for a different architecture".into(),
            ));
        }
        let batch = trace.batch;
        let n_in = self.input_dim();
        if inputs.len() != batch * n_in {
            return Err(Error::Shape(format!(
                "input buffer has {} entries, expected {} x {}",
                inputs.len(),
                batch,
                n_in
            )));
        }
        trace.acts[0].copy_from_slice(inputs);
        let last = self.n_layers() - 1;
        for l in 0..=last {
            let n_in = self.layer_sizes[l];
            let n_out = self.layer_sizes[l + 1];
            let (prev_acts, rest) = trace.acts.split_at_mut(l + 1);
            let prev = &prev_acts[l];
            let act = &mut rest[0];
            let pre = &mut trace.preacts[l];
            let w = &self.weights[l];
            let b = &self.biases[l];
            for k in 0..batch {
                let xin = &prev[k * n_in..(k + 1) * n_in];
                let zrow = &mut pre[k * n_out..(k + 1) * n_out];
                let arow = &mut act[k * n_out..(k + 1) * n_out];
                for o in 0..n_out {
                    let row = &w[o * n_in..(o + 1) * n_in];
                    let mut acc = b[o];
                    for (wi, ai) in row.iter().zip(xin.iter()) {
                        acc += wi * ai;
                    }
                    zrow[o] = acc;
                    arow[o] = if l < last { acc.max(0.0) } else { acc };
                }
            }
        }
        trace.recorded = true;
        Ok(())
    }

    /// Exact reverse-mode gradients of a batch loss. `upstream` holds the
    /// loss gradient with respect to the network outputs, batch-major
    /// `[sample x output_dim]`; the rectifier subgradient at zero is taken
    /// as zero. Requires the trace of a forward pass over the same batch.
    pub fn backward(
        &self,
        trace: &ForwardTrace,
        upstream: &[f64],
        grads: &mut Gradients,
    ) -> Result<()> {
        if !trace.recorded {
            return Err(Error::State(
                "backward called without a recorded forward pass".into(),
            ));
        }
        if trace.layer_sizes != self.layer_sizes {
            return Err(Error::State(
                "trace was recorded for a different architecture".into(),
            ));
        }
        let batch = trace.batch;
        let n_out = self.output_dim();
        if upstream.len() != batch * n_out {
            return Err(Error::Shape(format!(
                "upstream gradient has {} entries, expected {} x {}",
                upstream.len(),
                batch,
                n_out
            )));
        }
        if grads.weights.len() != self.weights.len()
            || grads
                .weights
                .iter()
                .zip(self.weights.iter())
                .any(|(g, w)| g.len() != w.len())
        {
            return Err(Error::Shape("gradient buffer shape mismatch".into()));
        }

        // dz of the current layer; output layer activation is the identity.
        let mut dz = upstream.to_vec();
        for l in (0..self.n_layers()).rev() {
            let n_in = self.layer_sizes[l];
            let n_out = self.layer_sizes[l + 1];
            let prev = &trace.acts[l];
            let gw = &mut grads.weights[l];
            let gb = &mut grads.biases[l];
            for k in 0..batch {
                let dzrow = &dz[k * n_out..(k + 1) * n_out];
                let arow = &prev[k * n_in..(k + 1) * n_in];
                for o in 0..n_out {
                    let d = dzrow[o];
                    if d != 0.0 {
                        let grow = &mut gw[o * n_in..(o + 1) * n_in];
                        for (g, a) in grow.iter_mut().zip(arow.iter()) {
                            *g += d * a;
                        }
                    }
                    gb[o] += d;
                }
            }
            if l > 0 {
                // Propagate to the previous layer and apply its rectifier mask.
                let zprev = &trace.preacts[l - 1];
                let w = &self.weights[l];
                let mut da = vec![0.0; batch * n_in];
                for k in 0..batch {
                    let dzrow = &dz[k * n_out..(k + 1) * n_out];
                    let darow = &mut da[k * n_in..(k + 1) * n_in];
                    for o in 0..n_out {
                        let d = dzrow[o];
                        if d != 0.0 {
                            let row = &w[o * n_in..(o + 1) * n_in];
                            for (dai, wi) in darow.iter_mut().zip(row.iter()) {
                                *dai += d * wi;
                            }
                        }
                    }
                    for (dai, z) in darow.iter_mut().zip(&zprev[k * n_in..(k + 1) * n_in]) {
                        if *z <= 0.0 {
                            *dai = 0.0;
                        }
                    }
                }
                dz = da;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_architectures() {
        assert!(Mlp::kaiming(&[], 0).is_err());
        assert!(Mlp::kaiming(&[3], 0).is_err());
        assert!(Mlp::kaiming(&[3, 0, 1], 0).is_err());
    }

    #[test]
    fn smallest_network_is_single_weight_zero_bias() {
        let net = Mlp::kaiming(&[1, 1], 123).unwrap();
        assert_eq!(net.n_params(), 2);
        assert_eq!(net.biases()[0], vec![0.0]);
        let w = net.weights()[0][0];
        let y = net.forward(&[2.0]).unwrap();
        assert_eq!(y[0], w * 2.0);
    }

    #[test]
    fn init_is_deterministic_per_seed() {
        let a = Mlp::kaiming(&[1, 20, 20, 1], 7).unwrap();
        let b = Mlp::kaiming(&[1, 20, 20, 1], 7).unwrap();
        let c = Mlp::kaiming(&[1, 20, 20, 1], 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn kaiming_variance_tracks_fan_in() {
        // Pool weights over 10 re-seeds per layer; sample variance should sit
        // within 20% of 2/fan_in.
        let sizes = [1usize, 20, 20, 20, 20, 1];
        let mut per_layer: Vec<Vec<f64>> = vec![Vec::new(); sizes.len() - 1];
        for seed in 0..10u64 {
            let net = Mlp::kaiming(&sizes, 1000 + seed).unwrap();
            for (l, w) in net.weights().iter().enumerate() {
                per_layer[l].extend_from_slice(w);
            }
        }
        for (l, pool) in per_layer.iter().enumerate() {
            let n = pool.len() as f64;
            let mean = pool.iter().sum::<f64>() / n;
            let var = pool.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
            let target = 2.0 / sizes[l] as f64;
            assert!(
                (var - target).abs() / target < 0.2,
                "layer {l}: variance {var} vs target {target}"
            );
        }
    }

    #[test]
    fn zero_network_maps_everything_to_zero() {
        let net = Mlp::zeros(&[3, 8, 2]).unwrap();
        assert_eq!(net.forward(&[0.3, -1.0, 2.5]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn single_affine_layer() {
        let mut net = Mlp::zeros(&[1, 1]).unwrap();
        net.weights_mut()[0][0] = 1.7;
        net.biases_mut()[0][0] = -0.3;
        let y = net.forward(&[2.0]).unwrap();
        assert!((y[0] - (1.7 * 2.0 - 0.3)).abs() < 1e-15);
    }

    #[test]
    fn forward_width_mismatch_is_shape_error() {
        let net = Mlp::kaiming(&[2, 4, 1], 0).unwrap();
        assert!(matches!(net.forward(&[1.0]), Err(Error::Shape(_))));
    }

    /// Independent matrix-arithmetic oracle for the forward pass: explicit
    /// nested Vec matrices, no slice tricks shared with the implementation.
    fn forward_oracle(net: &Mlp, x: &[f64]) -> Vec<f64> {
        let sizes = net.layer_sizes();
        let mut a: Vec<f64> = x.to_vec();
        for l in 0..sizes.len() - 1 {
            let (n_in, n_out) = (sizes[l], sizes[l + 1]);
            let mut matrix = vec![vec![0.0; n_in]; n_out];
            for o in 0..n_out {
                for i in 0..n_in {
                    matrix[o][i] = net.weights()[l][o * n_in + i];
                }
            }
            let mut next = vec![0.0; n_out];
            for o in 0..n_out {
                let mut acc = net.biases()[l][o];
                for i in 0..n_in {
                    acc += matrix[o][i] * a[i];
                }
                next[o] = if l + 2 < sizes.len() && acc < 0.0 { 0.0 } else { acc };
            }
            a = next;
        }
        a
    }

    #[test]
    fn forward_matches_matrix_oracle() {
        let net = Mlp::kaiming(&[3, 10, 7, 2], 99).unwrap();
        let xs = [[0.2, -0.5, 1.3], [0.0, 0.0, 0.0], [-1.0, 2.0, 0.5]];
        for x in xs {
            let got = net.forward(&x).unwrap();
            let want = forward_oracle(&net, &x);
            for (g, w) in got.iter().zip(want.iter()) {
                assert!((g - w).abs() < 1e-12, "got {g}, oracle {w}");
            }
        }
    }

    #[test]
    fn batched_forward_matches_single() {
        let net = Mlp::kaiming(&[2, 6, 3], 5).unwrap();
        let inputs = vec![0.1, -0.2, 0.7, 0.9, -1.5, 0.3];
        let mut trace = net.trace(3);
        net.forward_batch(&inputs, &mut trace).unwrap();
        for k in 0..3 {
            let single = net.forward(&inputs[k * 2..(k + 1) * 2]).unwrap();
            let batched = &trace.outputs()[k * 3..(k + 1) * 3];
            assert_eq!(single.as_slice(), batched);
        }
    }

    #[test]
    fn backward_without_forward_is_state_error() {
        let net = Mlp::kaiming(&[1, 4, 1], 0).unwrap();
        let trace = net.trace(2);
        let mut grads = Gradients::zeros_like(&net);
        let res = net.backward(&trace, &[1.0, 1.0], &mut grads);
        assert!(matches!(res, Err(Error::State(_))));
    }

    #[test]
    fn scalar_affine_squared_loss_gradient_is_analytic() {
        // L = (w*x + b - t)^2, dL/dw = 2*(w*x+b-t)*x, dL/db = 2*(w*x+b-t).
        let mut net = Mlp::zeros(&[1, 1]).unwrap();
        net.weights_mut()[0][0] = 0.8;
        net.biases_mut()[0][0] = 0.1;
        let (x, t) = (1.7, 2.0);
        let mut trace = net.trace(1);
        net.forward_batch(&[x], &mut trace).unwrap();
        let pred = trace.outputs()[0];
        let upstream = [2.0 * (pred - t)];
        let mut grads = Gradients::zeros_like(&net);
        net.backward(&trace, &upstream, &mut grads).unwrap();
        let resid = 0.8 * x + 0.1 - t;
        assert!((grads.weights[0][0] - 2.0 * resid * x).abs() < 1e-14);
        assert!((grads.biases[0][0] - 2.0 * resid).abs() < 1e-14);
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let net = Mlp::kaiming(&[2, 5, 2], 3).unwrap();
        let mut trace = net.trace(2);
        net.forward_batch(&[0.3, 0.4, -0.1, 0.9], &mut trace).unwrap();
        let mut grads = Gradients::zeros_like(&net);
        net.backward(&trace, &[0.0; 4], &mut grads).unwrap();
        assert!(grads.weights.iter().flatten().all(|&g| g == 0.0));
        assert!(grads.biases.iter().flatten().all(|&g| g == 0.0));
    }

    #[test]
    fn piecewise_linear_within_activation_region() {
        // With a fixed rectifier pattern the map is affine, so a small
        // perturbation scales the output change linearly.
        let net = Mlp::kaiming(&[1, 16, 16, 1], 21).unwrap();
        let x = 0.37;
        let y0 = net.forward_scalar(x).unwrap();
        let eps = 1e-7;
        let d1 = net.forward_scalar(x + eps).unwrap() - y0;
        let d2 = net.forward_scalar(x + 2.0 * eps).unwrap() - y0;
        assert!((d2 - 2.0 * d1).abs() < 1e-12 * d1.abs().max(1.0));
    }

    #[test]
    fn params_flatten_roundtrip() {
        let net = Mlp::kaiming(&[2, 7, 3], 11).unwrap();
        let mut flat = Vec::new();
        net.flatten_params_into(&mut flat);
        assert_eq!(flat.len(), net.n_params());
        let mut copy = Mlp::zeros(&[2, 7, 3]).unwrap();
        let used = copy.set_params_from_flat(&flat).unwrap();
        assert_eq!(used, flat.len());
        assert_eq!(copy, net);
    }
}
