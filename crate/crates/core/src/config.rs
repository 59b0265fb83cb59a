//! Ground-truth system descriptions, serializable to JSON.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::composition::{ResourceCompositionMap, UniModularInputSet};
use crate::error::Result;
use crate::hill::HillFunction;

/// A fully specified ground-truth system: one Hill function per module, the
/// composition parameters, the uni-modular input region, and the sampling
/// seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub functions: Vec<HillFunction>,
    pub theta: Vec<f64>,
    pub input_set: UniModularInputSet,
    pub seed: u64,
}

impl GroundTruth {
    pub fn validate(&self) -> Result<()> {
        for f in &self.functions {
            f.validate()?;
        }
        self.map()?.validate()?;
        self.input_set.validate()?;
        if self.functions.len() != self.theta.len()
            || self.functions.len() != self.input_set.n_modules()
        {
            return Err(crate::error::Error::Shape(format!(
                "ground truth sizes disagree: {} functions, {} theta, {} input modules",
                self.functions.len(),
                self.theta.len(),
                self.input_set.n_modules()
            )));
        }
        Ok(())
    }

    pub fn n_modules(&self) -> usize {
        self.functions.len()
    }

    pub fn map(&self) -> Result<ResourceCompositionMap> {
        ResourceCompositionMap::new(self.theta.clone())
    }

    /// Single-module reference system: activating Hill
    /// (0.797, 0.494, 4, 0.443) behind the scalar map with theta = 1.
    pub fn single_module_example(seed: u64) -> Self {
        GroundTruth {
            functions: vec![HillFunction::activating(0.797, 0.494, 4.0, 0.443)
                .expect("reference parameters are valid")],
            theta: vec![1.0],
            input_set: UniModularInputSet::unit(1),
            seed,
        }
    }

    /// Two-module reference system: activating Hill (0.326, 0.952, 4, 0.176)
    /// and repressing Hill (0.261, 0.415, 2, 0.192) sharing one resource pool
    /// with theta = (0.703, 0.204).
    pub fn two_module_example(seed: u64) -> Self {
        GroundTruth {
            functions: vec![
                HillFunction::activating(0.326, 0.952, 4.0, 0.176)
                    .expect("reference parameters are valid"),
                HillFunction::repressing(0.261, 0.415, 2.0, 0.192)
                    .expect("reference parameters are valid"),
            ],
            theta: vec![0.703, 0.204],
            input_set: UniModularInputSet::unit(2),
            seed,
        }
    }

    /// True module outputs `f_i(u_i)` for an input vector.
    pub fn module_outputs(&self, u: &[f64]) -> Vec<f64> {
        self.functions.iter().zip(u.iter()).map(|(f, &ui)| f.eval(ui)).collect()
    }

    /// True composed output `G(f_1(u_1), ..., f_n(u_n))`.
    pub fn global_output(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.map()?.eval(&self.module_outputs(u))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::save_json_pretty(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let truth: GroundTruth = crate::io::load_json(path)?;
        truth.validate()?;
        Ok(truth)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples_validate() {
        GroundTruth::single_module_example(1).validate().unwrap();
        GroundTruth::two_module_example(1).validate().unwrap();
    }

    #[test]
    fn json_roundtrip() {
        let truth = GroundTruth::two_module_example(42);
        let text = serde_json::to_string(&truth).unwrap();
        let back: GroundTruth = serde_json::from_str(&text).unwrap();
        assert_eq!(truth, back);
    }

    #[test]
    fn global_output_positive_on_unit_square() {
        let truth = GroundTruth::two_module_example(0);
        for &u in &[[0.0, 0.0], [1.0, 1.0], [0.3, 0.8]] {
            let g = truth.global_output(&u).unwrap();
            assert!(g.iter().all(|&v| v > 0.0), "outputs must stay positive: {g:?}");
        }
    }
}
