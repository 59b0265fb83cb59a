//! Finite-difference verification of the reverse-mode gradients.
//!
//! The checked quantity is the squared-error batch loss
//! `L = mean_k sum_o (net(x_k)_o - t_k_o)^2`. The reference gradient comes
//! from central finite differences over forward passes only, so the two
//! routes share no differentiation code. Instances whose hidden
//! pre-activations come close to a rectifier kink are resampled, since the
//! loss is not differentiable there.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nnet::{Gradients, Mlp};

#[derive(Debug, Clone)]
pub struct GradCheckConfig {
    pub trials: usize,
    pub seed: u64,
    /// Central-difference step.
    pub fd_step: f64,
    /// Relative tolerance on each parameter gradient.
    pub rel_tol: f64,
    /// Absolute floor below which finite-difference noise dominates
    /// (central differences of an O(1) loss carry ~1e-10 absolute error).
    pub abs_floor: f64,
    /// Minimum pre-activation magnitude; instances below it are resampled.
    pub kink_guard: f64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            trials: 100,
            seed: 2024,
            fd_step: 1e-6,
            rel_tol: 1e-6,
            abs_floor: 1e-8,
            kink_guard: 1e-4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub trials: usize,
    pub params_checked: usize,
    /// Instances redrawn because a pre-activation sat within the kink guard.
    pub resampled: usize,
    /// Gradient entries violating `|a - n| <= abs_floor + rel_tol * |n|`.
    pub failures: usize,
    /// Max `|a - n| / |n|` over entries with `|n| >= 1e-3`.
    pub max_rel_err: f64,
    /// Max `|a - n|` over all entries.
    pub max_abs_err: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

fn batch_loss(net: &Mlp, inputs: &[f64], targets: &[f64], batch: usize) -> Result<f64> {
    let m = net.output_dim();
    let n = net.input_dim();
    let mut loss = 0.0;
    for k in 0..batch {
        let out = net.forward(&inputs[k * n..(k + 1) * n])?;
        for o in 0..m {
            let e = out[o] - targets[k * m + o];
            loss += e * e;
        }
    }
    Ok(loss / batch as f64)
}

/// Analytic gradient of the batch loss via the reverse pass.
fn analytic_gradient(net: &Mlp, inputs: &[f64], targets: &[f64], batch: usize) -> Result<Vec<f64>> {
    let m = net.output_dim();
    let mut trace = net.trace(batch);
    net.forward_batch(inputs, &mut trace)?;
    let outputs = trace.outputs();
    let upstream: Vec<f64> = outputs
        .iter()
        .zip(targets.iter())
        .map(|(y, t)| 2.0 * (y - t) / batch as f64)
        .collect();
    let _ = m;
    let mut grads = Gradients::zeros_like(net);
    net.backward(&trace, &upstream, &mut grads)?;
    let mut flat = Vec::with_capacity(net.n_params());
    grads.flatten_into(&mut flat);
    Ok(flat)
}

/// Central finite differences over every parameter.
fn numeric_gradient(
    net: &Mlp,
    inputs: &[f64],
    targets: &[f64],
    batch: usize,
    h: f64,
) -> Result<Vec<f64>> {
    let mut flat = Vec::with_capacity(net.n_params());
    net.flatten_params_into(&mut flat);
    let mut work = net.clone();
    let mut grad = vec![0.0; flat.len()];
    for i in 0..flat.len() {
        let orig = flat[i];
        flat[i] = orig + h;
        work.set_params_from_flat(&flat)?;
        let lp = batch_loss(&work, inputs, targets, batch)?;
        flat[i] = orig - h;
        work.set_params_from_flat(&flat)?;
        let lm = batch_loss(&work, inputs, targets, batch)?;
        flat[i] = orig;
        grad[i] = (lp - lm) / (2.0 * h);
    }
    Ok(grad)
}

const ARCH_POOL: [&[usize]; 5] = [
    &[1, 6, 1],
    &[1, 10, 10, 1],
    &[2, 8, 4, 1],
    &[3, 12, 12, 2],
    &[2, 20, 20, 2],
];

/// Run `cfg.trials` random (network, batch) instances and compare both
/// gradient routes parameter by parameter.
pub fn check_random_instances(cfg: &GradCheckConfig) -> Result<GradCheckReport> {
    if cfg.trials == 0 {
        return Err(Error::InvalidConfig("gradcheck needs >= 1 trial".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = GradCheckReport {
        trials: cfg.trials,
        params_checked: 0,
        resampled: 0,
        failures: 0,
        max_rel_err: 0.0,
        max_abs_err: 0.0,
    };

    let mut done = 0;
    let mut attempts = 0;
    while done < cfg.trials {
        attempts += 1;
        if attempts > cfg.trials * 50 {
            return Err(Error::Convergence(
                "could not sample enough kink-free gradcheck instances".into(),
            ));
        }
        let arch = ARCH_POOL[rng.random_range(0..ARCH_POOL.len())];
        let batch = rng.random_range(2..8usize);
        let net = Mlp::kaiming(arch, rng.random_range(0..u64::MAX / 2))?;
        let n_in = net.input_dim();
        let n_out = net.output_dim();
        let inputs: Vec<f64> = (0..batch * n_in).map(|_| rng.random_range(-1.0..1.0)).collect();
        let targets: Vec<f64> = (0..batch * n_out).map(|_| rng.random_range(-1.0..1.0)).collect();

        // Keep finite differences away from rectifier kinks.
        let mut trace = net.trace(batch);
        net.forward_batch(&inputs, &mut trace)?;
        if trace.min_hidden_preact_magnitude() < cfg.kink_guard {
            report.resampled += 1;
            continue;
        }

        let analytic = analytic_gradient(&net, &inputs, &targets, batch)?;
        let numeric = numeric_gradient(&net, &inputs, &targets, batch, cfg.fd_step)?;
        for (&a, &n) in analytic.iter().zip(numeric.iter()) {
            let diff = (a - n).abs();
            report.max_abs_err = report.max_abs_err.max(diff);
            if n.abs() >= 1e-3 {
                report.max_rel_err = report.max_rel_err.max(diff / n.abs());
            }
            if diff > cfg.abs_floor + cfg.rel_tol * n.abs() {
                report.failures += 1;
            }
        }
        report.params_checked += analytic.len();
        done += 1;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_instances_match_finite_differences() {
        let cfg = GradCheckConfig { trials: 25, seed: 11, ..Default::default() };
        let report = check_random_instances(&cfg).unwrap();
        assert!(report.passed(), "{report:?}");
        assert!(report.max_rel_err <= 1e-6, "{report:?}");
        assert!(report.params_checked > 0);
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = GradCheckConfig { trials: 5, seed: 3, ..Default::default() };
        let a = check_random_instances(&cfg).unwrap();
        let b = check_random_instances(&cfg).unwrap();
        assert_eq!(a.max_rel_err, b.max_rel_err);
        assert_eq!(a.max_abs_err, b.max_abs_err);
    }

    #[test]
    fn zero_trials_is_config_error() {
        let cfg = GradCheckConfig { trials: 0, ..Default::default() };
        assert!(check_random_instances(&cfg).is_err());
    }
}
