//! Normalized maximum-error metrics tracked during modular training.
//!
//! For the training set `{u_k}`:
//!
//! - `E_G_i = max_k |G_hat_i(u_k) - G_i(u_k)| / max_k G_i(u_k)` over the whole
//!   training set,
//! - `E_f_i = max_k |f_hat_i(u_ik) - f_i(u_ik)| / max_k f_i(u_ik)` over the
//!   module-i slice of the training set,
//! - `E_theta_i = |theta_hat_i - theta_i| / theta_i`.

use serde::{Deserialize, Serialize};

use crate::composition::{Dataset, Membership};
use crate::config::GroundTruth;
use crate::error::{Error, Result};
use crate::train::{loss, ModularModel, Predict};

/// One row of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub epoch: usize,
    pub loss: f64,
    pub e_g: Vec<f64>,
    pub e_f: Vec<f64>,
    pub e_theta: Vec<f64>,
}

impl MetricsRecord {
    pub fn max_e_g(&self) -> f64 {
        self.e_g.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_e_f(&self) -> f64 {
        self.e_f.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_e_theta(&self) -> f64 {
        self.e_theta.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Precomputed ground-truth quantities reused at every logging epoch.
pub struct MetricsContext {
    /// Row indices belonging to each module's slice; the all-anchor point (if
    /// present) belongs to every slice.
    rows_by_module: Vec<Vec<usize>>,
    /// True `f_i` at each row of module i's slice (aligned with
    /// `rows_by_module`).
    true_f: Vec<Vec<f64>>,
    /// `max_k f_i(u_ik)` per module.
    max_f: Vec<f64>,
    /// `max_k G_i(u_k)` per output.
    max_g: Vec<f64>,
    theta: Vec<f64>,
}

impl MetricsContext {
    pub fn new(data: &Dataset, truth: &GroundTruth) -> Result<Self> {
        let n = truth.n_modules();
        if data.input_dim() != n || data.output_dim() != n {
            return Err(Error::Shape(format!(
                "dataset is {}-in/{}-out, ground truth has {n} modules",
                data.input_dim(),
                data.output_dim()
            )));
        }
        let mut rows_by_module = vec![Vec::new(); n];
        for (k, u) in data.inputs.iter().enumerate() {
            match truth.input_set.classify(u) {
                Membership::Block(i) => rows_by_module[i].push(k),
                Membership::Anchor => (0..n).for_each(|i| rows_by_module[i].push(k)),
                Membership::NotMember => {
                    // Metrics are still well defined; attribute the row to
                    // every module so E_f covers whatever inputs were seen.
                    (0..n).for_each(|i| rows_by_module[i].push(k));
                }
            }
        }
        let mut true_f = Vec::with_capacity(n);
        let mut max_f = Vec::with_capacity(n);
        for i in 0..n {
            let vals: Vec<f64> = rows_by_module[i]
                .iter()
                .map(|&k| truth.functions[i].eval(data.inputs[k][i]))
                .collect();
            let m = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if !(m > 0.0) {
                return Err(Error::Domain(format!(
                    "module {i} has no positive true f values; E_f is undefined"
                )));
            }
            true_f.push(vals);
            max_f.push(m);
        }
        let mut max_g = vec![f64::NEG_INFINITY; n];
        for y in &data.outputs {
            for i in 0..n {
                max_g[i] = max_g[i].max(y[i]);
            }
        }
        if max_g.iter().any(|&g| !(g > 0.0)) {
            return Err(Error::Domain(
                "some output component is never positive on the training set; \
                 E_G is undefined"
                    .into(),
            ));
        }
        Ok(MetricsContext {
            rows_by_module,
            true_f,
            max_f,
            max_g,
            theta: truth.theta.clone(),
        })
    }

    pub fn compute(
        &self,
        model: &ModularModel,
        data: &Dataset,
        epoch: usize,
    ) -> Result<MetricsRecord> {
        let n = self.theta.len();

        let mut e_g = vec![0.0f64; n];
        for (u, y) in data.inputs.iter().zip(data.outputs.iter()) {
            let pred = model.predict(u)?;
            for i in 0..n {
                e_g[i] = e_g[i].max((pred[i] - y[i]).abs());
            }
        }
        for i in 0..n {
            e_g[i] /= self.max_g[i];
        }

        let mut e_f = vec![0.0f64; n];
        for i in 0..n {
            for (pos, &k) in self.rows_by_module[i].iter().enumerate() {
                let u_i = data.inputs[k][i];
                let f_hat = model
                    .output_transform
                    .apply(model.surrogates[i].forward_scalar(u_i)?);
                e_f[i] = e_f[i].max((f_hat - self.true_f[i][pos]).abs());
            }
            e_f[i] /= self.max_f[i];
        }

        let e_theta = self
            .theta
            .iter()
            .zip(model.theta_hat.iter())
            .map(|(&t, &th)| (th - t).abs() / t)
            .collect();

        Ok(MetricsRecord { epoch, loss: loss(model, data)?, e_g, e_f, e_theta })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composition::{Provenance, UniModularInputSet};
    use crate::hill::HillFunction;
    use crate::nnet::Mlp;
    use crate::train::ModularModel;

    /// Hand-built three-sample check of the metric formulas.
    #[test]
    fn metric_definitions_on_hand_built_dataset() {
        let truth = GroundTruth {
            functions: vec![
                HillFunction::activating(1.0, 1.0, 1.0, 0.5).unwrap(),
                HillFunction::repressing(1.0, 1.0, 1.0, 0.5).unwrap(),
            ],
            theta: vec![2.0, 4.0],
            input_set: UniModularInputSet::unit(2),
            seed: 0,
        };
        // Three samples: one varying u1, one varying u2, one at the anchor.
        let inputs = vec![vec![0.25, 1.0], vec![1.0, 0.5], vec![1.0, 1.0]];
        let outputs: Vec<Vec<f64>> =
            inputs.iter().map(|u| truth.global_output(u).unwrap()).collect();
        let data = Dataset { inputs, outputs, provenance: Provenance::Unimodular };

        // Constant-zero surrogates make predictions identically zero, so
        // E_G_i = max_k G_i / max_k G_i = 1 and E_f_i = max_k f_i / max_k f_i = 1.
        let model = ModularModel::with_fixed_theta(
            vec![Mlp::zeros(&[1, 4, 1]).unwrap(), Mlp::zeros(&[1, 4, 1]).unwrap()],
            vec![2.0, 4.0],
        )
        .unwrap();

        let ctx = MetricsContext::new(&data, &truth).unwrap();
        let rec = ctx.compute(&model, &data, 7).unwrap();
        assert_eq!(rec.epoch, 7);
        assert!((rec.e_g[0] - 1.0).abs() < 1e-15);
        assert!((rec.e_g[1] - 1.0).abs() < 1e-15);
        assert!((rec.e_f[0] - 1.0).abs() < 1e-15);
        assert!((rec.e_f[1] - 1.0).abs() < 1e-15);
        assert_eq!(rec.e_theta, vec![0.0, 0.0]);

        // Shift theta_hat and check E_theta literally.
        let mut shifted = model;
        shifted.theta_hat = vec![2.2, 3.0];
        let rec = ctx.compute(&shifted, &data, 8).unwrap();
        assert!((rec.e_theta[0] - 0.1).abs() < 1e-12);
        assert!((rec.e_theta[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn anchor_rows_count_for_every_module() {
        let truth = GroundTruth::two_module_example(0);
        let inputs = vec![vec![1.0, 1.0]];
        let outputs = vec![truth.global_output(&[1.0, 1.0]).unwrap()];
        let data = Dataset { inputs, outputs, provenance: Provenance::Unimodular };
        let ctx = MetricsContext::new(&data, &truth).unwrap();
        assert_eq!(ctx.rows_by_module, vec![vec![0], vec![0]]);
    }
}
