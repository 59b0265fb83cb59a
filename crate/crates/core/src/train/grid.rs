//! Pointwise relative-error surfaces on a uniform evaluation lattice.
//!
//! For a trained model `M` and ground truth `G`, each lattice point gets
//! `|M(u)_i - G_i(u)| / G_i(u)` per output. Points where `G_i(u) = 0` carry an
//! undefined marker and are excluded from aggregates. The lattice includes
//! interval endpoints, unlike the randomly sampled training data.

use crate::config::GroundTruth;
use crate::error::{Error, Result};
use crate::train::Predict;

/// Relative-error surface over a lattice.
#[derive(Debug, Clone)]
pub struct GridEvaluation {
    pub points_per_axis: usize,
    pub inputs: Vec<Vec<f64>>,
    /// `rel_err[k][i]` is the pointwise relative error of output `i` at
    /// lattice point `k`, or `None` where the true output vanishes.
    pub rel_err: Vec<Vec<Option<f64>>>,
}

impl GridEvaluation {
    /// Median of all defined (point, output) errors at points selected by
    /// `filter` over the input vector. `None` when nothing is defined.
    pub fn pooled_median<F: Fn(&[f64]) -> bool>(&self, filter: F) -> Option<f64> {
        let mut vals: Vec<f64> = self
            .inputs
            .iter()
            .zip(self.rel_err.iter())
            .filter(|(u, _)| filter(u))
            .flat_map(|(_, errs)| errs.iter().filter_map(|e| *e))
            .collect();
        if vals.is_empty() {
            return None;
        }
        vals.sort_by(|a, b| a.partial_cmp(b).expect("errors are finite"));
        let n = vals.len();
        Some(if n % 2 == 1 { vals[n / 2] } else { 0.5 * (vals[n / 2 - 1] + vals[n / 2]) })
    }

    /// Median over the full lattice.
    pub fn median(&self) -> Option<f64> {
        self.pooled_median(|_| true)
    }

    pub fn undefined_points(&self) -> usize {
        self.rel_err.iter().flatten().filter(|e| e.is_none()).count()
    }
}

/// Evaluate a model against the ground truth on a `points_per_axis`-per-axis
/// lattice over the input intervals (endpoints included). Two modules give
/// the usual square grid; other dimensions produce the flat cartesian table.
pub fn evaluate_grid<M: Predict + ?Sized>(
    model: &M,
    truth: &GroundTruth,
    points_per_axis: usize,
) -> Result<GridEvaluation> {
    if points_per_axis < 2 {
        return Err(Error::InvalidConfig(
            "grid evaluation needs at least 2 points per axis".into(),
        ));
    }
    let n = truth.n_modules();
    if model.input_dim() != n || model.output_dim() != n {
        return Err(Error::Shape(format!(
            "model is {}-in/{}-out, ground truth has {n} modules",
            model.input_dim(),
            model.output_dim()
        )));
    }
    let inputs = truth.input_set.grid(points_per_axis);
    let mut rel_err = Vec::with_capacity(inputs.len());
    for u in &inputs {
        let g = truth.global_output(u)?;
        let pred = model.predict(u)?;
        rel_err.push(
            g.iter()
                .zip(pred.iter())
                .map(|(&gi, &pi)| if gi == 0.0 { None } else { Some((pi - gi).abs() / gi) })
                .collect(),
        );
    }
    Ok(GridEvaluation { points_per_axis, inputs, rel_err })
}
