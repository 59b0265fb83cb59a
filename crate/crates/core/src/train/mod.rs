//! Training of the structured modular model and the monolithic baseline.
//!
//! The modular model keeps the composition structure: one scalar surrogate
//! network per module plus learnable composition parameters, combined through
//! the known rational map. The monolithic baseline is a single unstructured
//! network from all inputs to all outputs. Both minimize the same cost, the
//! mean over samples of the summed squared output errors, with full-batch
//! Adam.

pub mod grid;
pub mod metrics;

use serde::{Deserialize, Serialize};

use crate::composition::{Dataset, Provenance};
use crate::config::GroundTruth;
use crate::error::{Error, Result};
use crate::nnet::{adam_step, AdamState, ForwardTrace, Gradients, Mlp};

pub use grid::{evaluate_grid, GridEvaluation};
pub use metrics::MetricsRecord;

/// Optional transform applied to surrogate outputs; the softplus variant
/// keeps module outputs strictly positive at the cost of deviating from the
/// plain network function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputTransform {
    #[default]
    Identity,
    Softplus,
}

impl OutputTransform {
    #[inline]
    pub(crate) fn apply(self, z: f64) -> f64 {
        match self {
            OutputTransform::Identity => z,
            OutputTransform::Softplus => softplus(z),
        }
    }

    #[inline]
    fn derivative(self, z: f64) -> f64 {
        match self {
            OutputTransform::Identity => 1.0,
            OutputTransform::Softplus => sigmoid(z),
        }
    }
}

#[inline]
fn softplus(z: f64) -> f64 {
    if z > 30.0 {
        z
    } else if z < -30.0 {
        z.exp()
    } else {
        z.exp().ln_1p()
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Anything that maps an input vector to an output vector.
pub trait Predict {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn predict(&self, u: &[f64]) -> Result<Vec<f64>>;
}

/// Structured model: scalar surrogates behind the resource-sharing map with
/// learnable (or pinned) composition parameters.
#[derive(Debug, Clone)]
pub struct ModularModel {
    pub surrogates: Vec<Mlp>,
    pub theta_hat: Vec<f64>,
    /// When false, `theta_hat` is treated as known and left untouched by the
    /// trainer (the single-module identifiable setting).
    pub train_theta: bool,
    pub output_transform: OutputTransform,
}

impl ModularModel {
    /// Learnable composition parameters, all initialized to `theta_init`.
    pub fn new(surrogates: Vec<Mlp>, theta_init: f64) -> Result<Self> {
        let n = surrogates.len();
        let model = ModularModel {
            surrogates,
            theta_hat: vec![theta_init; n],
            train_theta: true,
            output_transform: OutputTransform::Identity,
        };
        model.validate()?;
        Ok(model)
    }

    /// Known composition parameters, excluded from optimization.
    pub fn with_fixed_theta(surrogates: Vec<Mlp>, theta: Vec<f64>) -> Result<Self> {
        let model = ModularModel {
            surrogates,
            theta_hat: theta,
            train_theta: false,
            output_transform: OutputTransform::Identity,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.surrogates.is_empty() {
            return Err(Error::InvalidConfig("modular model needs >= 1 surrogate".into()));
        }
        if self.theta_hat.len() != self.surrogates.len() {
            return Err(Error::Shape(format!(
                "{} theta entries for {} surrogates",
                self.theta_hat.len(),
                self.surrogates.len()
            )));
        }
        for (i, net) in self.surrogates.iter().enumerate() {
            if net.input_dim() != 1 || net.output_dim() != 1 {
                return Err(Error::InvalidConfig(format!(
                    "surrogate {i} must map one scalar to one scalar, has sizes {:?}",
                    net.layer_sizes()
                )));
            }
        }
        Ok(())
    }

    pub fn n_modules(&self) -> usize {
        self.surrogates.len()
    }

    /// Surrogate module outputs `f_hat_i(u_i)` (after the output transform).
    pub fn module_outputs(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.n_modules() {
            return Err(Error::Shape(format!(
                "input has {} coordinates for {} modules",
                u.len(),
                self.n_modules()
            )));
        }
        self.surrogates
            .iter()
            .zip(u.iter())
            .map(|(net, &ui)| Ok(self.output_transform.apply(net.forward_scalar(ui)?)))
            .collect()
    }

    /// Smallest surrogate output over an evaluation lattice, per module.
    /// Negative values flag a violated positivity assumption.
    pub fn min_surrogate_outputs(&self, points_per_axis: usize) -> Result<Vec<f64>> {
        let grid = crate::composition::lattice(0.0, 1.0, points_per_axis);
        let mut mins = vec![f64::INFINITY; self.n_modules()];
        for (i, net) in self.surrogates.iter().enumerate() {
            for &u in &grid {
                let y = self.output_transform.apply(net.forward_scalar(u)?);
                mins[i] = mins[i].min(y);
            }
        }
        Ok(mins)
    }
}

impl Predict for ModularModel {
    fn input_dim(&self) -> usize {
        self.n_modules()
    }

    fn output_dim(&self) -> usize {
        self.n_modules()
    }

    /// The structured prediction `theta_hat_i * y_i / (1 + sum_j y_j)`.
    /// Computed directly rather than through the domain-checked composition
    /// map: surrogate outputs are unconstrained and may dip below zero while
    /// training.
    fn predict(&self, u: &[f64]) -> Result<Vec<f64>> {
        let y = self.module_outputs(u)?;
        let denom = 1.0 + y.iter().sum::<f64>();
        Ok(y.iter().zip(self.theta_hat.iter()).map(|(&yi, &ti)| ti * yi / denom).collect())
    }
}

/// Baseline without structural prior: one network over all inputs.
#[derive(Debug, Clone)]
pub struct MonolithicModel {
    pub net: Mlp,
}

impl MonolithicModel {
    pub fn new(net: Mlp) -> Self {
        MonolithicModel { net }
    }
}

impl Predict for MonolithicModel {
    fn input_dim(&self) -> usize {
        self.net.input_dim()
    }

    fn output_dim(&self) -> usize {
        self.net.output_dim()
    }

    fn predict(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.net.forward(u)
    }
}

/// Mean over samples of the summed squared output-component errors.
pub fn loss<M: Predict + ?Sized>(model: &M, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Domain("loss of an empty dataset is undefined".into()));
    }
    let mut total = 0.0;
    for (u, t) in data.inputs.iter().zip(data.outputs.iter()) {
        let pred = model.predict(u)?;
        if pred.len() != t.len() {
            return Err(Error::Shape(format!(
                "model emits {} outputs, dataset has {}",
                pred.len(),
                t.len()
            )));
        }
        for (p, y) in pred.iter().zip(t.iter()) {
            let e = p - y;
            total += e * e;
        }
    }
    Ok(total / data.len() as f64)
}

/// Knobs shared by both trainers.
#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub epochs: usize,
    pub learning_rate: f64,
    /// Record metrics every this many epochs (plus epoch 0 and the final
    /// epoch). Zero disables recording.
    pub log_stride: usize,
}

impl TrainOptions {
    pub fn new(epochs: usize, learning_rate: f64) -> Self {
        TrainOptions { epochs, learning_rate, log_stride: 100 }
    }

    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be positive and finite, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }

    fn record_due(&self, epoch: usize) -> bool {
        self.log_stride > 0 && (epoch % self.log_stride == 0 || epoch == self.epochs)
    }
}

/// One loss-history entry for the monolithic trainer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub epoch: usize,
    pub loss: f64,
}

/// Full-batch Adam on all surrogate parameters (and the composition
/// parameters when they are learnable, initialized by the caller; the
/// conventional starting value is 3 per module). Deterministic: the only
/// randomness lives in the caller-provided initial networks.
pub fn train_modular(
    model: &mut ModularModel,
    data: &Dataset,
    truth: &GroundTruth,
    opts: &TrainOptions,
) -> Result<Vec<MetricsRecord>> {
    opts.validate()?;
    model.validate()?;
    if data.is_empty() {
        return Err(Error::Domain("cannot train on an empty dataset".into()));
    }
    data.validate()?;
    let n = model.n_modules();
    if data.input_dim() != n || data.output_dim() != n {
        return Err(Error::Shape(format!(
            "dataset is {}-in/{}-out, model expects {n}/{n}",
            data.input_dim(),
            data.output_dim()
        )));
    }
    if data.provenance != Provenance::Unimodular {
        eprintln!(
            "warning: training data provenance is {:?}, not unimodular; \
             module recovery guarantees do not apply",
            data.provenance
        );
    }

    let batch = data.len();
    let ctx = metrics::MetricsContext::new(data, truth)?;

    // Per-module input columns, batch-major.
    let columns: Vec<Vec<f64>> = (0..n)
        .map(|i| data.inputs.iter().map(|u| u[i]).collect())
        .collect();
    let targets: Vec<&[f64]> = data.outputs.iter().map(Vec::as_slice).collect();

    let net_param_count: usize = model.surrogates.iter().map(Mlp::n_params).sum();
    let total_params = net_param_count + if model.train_theta { n } else { 0 };

    let mut params = Vec::with_capacity(total_params);
    for net in &model.surrogates {
        net.flatten_params_into(&mut params);
    }
    if model.train_theta {
        params.extend_from_slice(&model.theta_hat);
    }

    let mut adam = AdamState::new(total_params, opts.learning_rate);
    let mut traces: Vec<ForwardTrace> =
        model.surrogates.iter().map(|net| net.trace(batch)).collect();
    let mut grads: Vec<Gradients> =
        model.surrogates.iter().map(Gradients::zeros_like).collect();
    let mut flat_grads = Vec::with_capacity(total_params);
    let mut y = vec![vec![0.0; batch]; n];
    let mut upstream = vec![vec![0.0; batch]; n];
    let mut theta_grads = vec![0.0; n];
    let transform = model.output_transform;

    let mut records = Vec::new();
    if opts.record_due(0) {
        records.push(ctx.compute(model, data, 0)?);
    }

    for epoch in 1..=opts.epochs {
        for i in 0..n {
            model.surrogates[i].forward_batch(&columns[i], &mut traces[i])?;
            let out = traces[i].outputs();
            for k in 0..batch {
                y[i][k] = transform.apply(out[k]);
            }
        }

        theta_grads.iter_mut().for_each(|g| *g = 0.0);
        for g in &mut grads {
            g.reset();
        }
        for k in 0..batch {
            let mut denom = 1.0;
            for yi in y.iter() {
                denom += yi[k];
            }
            // Residuals scaled for the mean: r_i = 2 (G_hat_i - Y_i) / N.
            let mut weighted_sum = 0.0; // sum_i r_i * G_hat_i
            let mut residuals = [0.0f64; 16];
            let use_heap = n > residuals.len();
            let mut heap_residuals = if use_heap { vec![0.0; n] } else { Vec::new() };
            for i in 0..n {
                let g_hat = model.theta_hat[i] * y[i][k] / denom;
                let r = 2.0 * (g_hat - targets[k][i]) / batch as f64;
                if use_heap {
                    heap_residuals[i] = r;
                } else {
                    residuals[i] = r;
                }
                weighted_sum += r * g_hat;
                theta_grads[i] += r * y[i][k] / denom;
            }
            let r_of = |i: usize| if use_heap { heap_residuals[i] } else { residuals[i] };
            for j in 0..n {
                // d G_hat_i / d y_j = theta_i (delta_ij / denom - y_i / denom^2)
                let dy = r_of(j) * model.theta_hat[j] / denom - weighted_sum / denom;
                let z = traces[j].outputs()[k];
                upstream[j][k] = dy * transform.derivative(z);
            }
        }

        for i in 0..n {
            model.surrogates[i].backward(&traces[i], &upstream[i], &mut grads[i])?;
        }

        flat_grads.clear();
        for g in &grads {
            g.flatten_into(&mut flat_grads);
        }
        if model.train_theta {
            flat_grads.extend_from_slice(&theta_grads);
        }

        adam_step(&mut params, &flat_grads, &mut adam)?;

        let mut offset = 0;
        for net in &mut model.surrogates {
            offset += net.set_params_from_flat(&params[offset..])?;
        }
        if model.train_theta {
            model.theta_hat.copy_from_slice(&params[offset..offset + n]);
        }

        if opts.record_due(epoch) {
            records.push(ctx.compute(model, data, epoch)?);
        }
    }

    Ok(records)
}

/// Full-batch Adam on the unstructured baseline. Returns the loss history
/// (epoch 0, every stride, and the final epoch). `epochs = 0` leaves the
/// model untouched.
pub fn train_monolithic(
    model: &mut MonolithicModel,
    data: &Dataset,
    opts: &TrainOptions,
) -> Result<Vec<LossRecord>> {
    opts.validate()?;
    if data.is_empty() {
        return Err(Error::Domain("cannot train on an empty dataset".into()));
    }
    data.validate()?;
    let (n, m) = (model.net.input_dim(), model.net.output_dim());
    if data.input_dim() != n || data.output_dim() != m {
        return Err(Error::Shape(format!(
            "dataset is {}-in/{}-out, network expects {n}/{m}",
            data.input_dim(),
            data.output_dim()
        )));
    }

    let batch = data.len();
    let inputs: Vec<f64> = data.inputs.iter().flatten().copied().collect();
    let targets: Vec<f64> = data.outputs.iter().flatten().copied().collect();

    let mut params = Vec::with_capacity(model.net.n_params());
    model.net.flatten_params_into(&mut params);
    let mut adam = AdamState::new(params.len(), opts.learning_rate);
    let mut trace = model.net.trace(batch);
    let mut grads = Gradients::zeros_like(&model.net);
    let mut flat_grads = Vec::with_capacity(params.len());
    let mut upstream = vec![0.0; batch * m];

    let mut history = Vec::new();
    if opts.record_due(0) {
        history.push(LossRecord { epoch: 0, loss: loss(model, data)? });
    }

    for epoch in 1..=opts.epochs {
        model.net.forward_batch(&inputs, &mut trace)?;
        let outputs = trace.outputs();
        let mut epoch_loss = 0.0;
        for (idx, (&o, &t)) in outputs.iter().zip(targets.iter()).enumerate() {
            let e = o - t;
            epoch_loss += e * e;
            upstream[idx] = 2.0 * e / batch as f64;
        }
        epoch_loss /= batch as f64;

        grads.reset();
        model.net.backward(&trace, &upstream, &mut grads)?;
        flat_grads.clear();
        grads.flatten_into(&mut flat_grads);
        adam_step(&mut params, &flat_grads, &mut adam)?;
        model.net.set_params_from_flat(&params)?;

        if opts.record_due(epoch) {
            // Loss of the pre-step parameters is already in hand; report the
            // post-step state for consistency with the modular metrics.
            let _ = epoch_loss;
            history.push(LossRecord { epoch, loss: loss(model, data)? });
        }
    }

    Ok(history)
}

#[cfg(test)]
pub(crate) mod tests_support {
    use super::Predict;
    use crate::config::GroundTruth;
    use crate::error::Result;

    /// Test oracle that reproduces the ground truth exactly.
    pub(crate) struct ExactModel(pub GroundTruth);

    impl Predict for ExactModel {
        fn input_dim(&self) -> usize {
            self.0.n_modules()
        }
        fn output_dim(&self) -> usize {
            self.0.n_modules()
        }
        fn predict(&self, u: &[f64]) -> Result<Vec<f64>> {
            self.0.global_output(u)
        }
    }
}
