//! Resource-sharing composition maps, uni-modular input sets, and datasets.
//!
//! A system of `n` modules with outputs `y_i` feeds a composition map whose
//! i-th component is `theta_i * y_i / (1 + sum_j y_j)`. The denominator is the
//! signature of modules competing for a shared finite resource pool. Training
//! data is drawn from the uni-modular input set: one module input varies over
//! its interval while all others sit at anchor values.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hill::HillFunction;

/// The rational map `G_i(y) = theta_i * y_i / (1 + sum_j y_j)`.
///
/// For nonnegative module outputs every component lies in `[0, theta_i)`, and
/// the single-module case reduces to the scalar map `theta * y / (1 + y)`,
/// which is strictly increasing on `y >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceCompositionMap {
    pub theta: Vec<f64>,
}

impl ResourceCompositionMap {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        let map = ResourceCompositionMap { theta };
        map.validate()?;
        Ok(map)
    }

    pub fn validate(&self) -> Result<()> {
        if self.theta.is_empty() {
            return Err(Error::InvalidParameter("composition map needs >= 1 module".into()));
        }
        for (i, t) in self.theta.iter().enumerate() {
            if !(*t > 0.0) || !t.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "theta[{i}] must be > 0 and finite, got {t}"
                )));
            }
        }
        Ok(())
    }

    pub fn n_modules(&self) -> usize {
        self.theta.len()
    }

    /// Evaluate all output components for module outputs `y`.
    pub fn eval(&self, y: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.theta.len()];
        self.eval_into(y, &mut out)?;
        Ok(out)
    }

    /// Evaluate into a caller-provided buffer (hot path for training).
    pub fn eval_into(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.theta.len();
        if y.len() != n || out.len() != n {
            return Err(Error::Shape(format!(
                "composition map expects {n} module outputs, got {} (out {})",
                y.len(),
                out.len()
            )));
        }
        let mut denom = 1.0;
        for (i, yi) in y.iter().enumerate() {
            if !(*yi >= 0.0) {
                return Err(Error::Domain(format!("module output y[{i}] = {yi} is negative")));
            }
            denom += yi;
        }
        for i in 0..n {
            out[i] = self.theta[i] * y[i] / denom;
        }
        Ok(())
    }

    /// Single-module scalar form `theta * y / (1 + y)`.
    pub fn eval_scalar(&self, y: f64) -> Result<f64> {
        if self.theta.len() != 1 {
            return Err(Error::Shape(format!(
                "scalar evaluation needs a single-module map, this one has {}",
                self.theta.len()
            )));
        }
        Ok(self.eval(&[y])?[0])
    }
}

/// Classification of a point against a [`UniModularInputSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    /// All coordinates pinned at the anchor; belongs to every module's slice.
    Anchor,
    /// Module `i` varies, all other coordinates pinned at the anchor.
    Block(usize),
    NotMember,
}

/// The union of axis-aligned slices `{u : u_i in [a_i, b_i], u_j = anchor_j for j != i}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniModularInputSet {
    pub intervals: Vec<[f64; 2]>,
    pub anchor: Vec<f64>,
}

impl UniModularInputSet {
    pub fn new(intervals: Vec<[f64; 2]>, anchor: Vec<f64>) -> Result<Self> {
        let set = UniModularInputSet { intervals, anchor };
        set.validate()?;
        Ok(set)
    }

    /// `[0, 1]` intervals for every module with the anchor at the right endpoints.
    pub fn unit(n_modules: usize) -> Self {
        UniModularInputSet {
            intervals: vec![[0.0, 1.0]; n_modules],
            anchor: vec![1.0; n_modules],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.intervals.is_empty() {
            return Err(Error::InvalidParameter("input set needs >= 1 module".into()));
        }
        if self.anchor.len() != self.intervals.len() {
            return Err(Error::Shape(format!(
                "anchor has {} entries for {} intervals",
                self.anchor.len(),
                self.intervals.len()
            )));
        }
        for (i, iv) in self.intervals.iter().enumerate() {
            if !(iv[0] < iv[1]) {
                return Err(Error::InvalidParameter(format!(
                    "interval {i} must satisfy a < b, got [{}, {}]",
                    iv[0], iv[1]
                )));
            }
            if !(self.anchor[i] >= iv[0] && self.anchor[i] <= iv[1]) {
                return Err(Error::InvalidParameter(format!(
                    "anchor[{i}] = {} outside [{}, {}]",
                    self.anchor[i], iv[0], iv[1]
                )));
            }
        }
        Ok(())
    }

    pub fn n_modules(&self) -> usize {
        self.intervals.len()
    }

    /// Membership test. Pinned coordinates are compared exactly: points of the
    /// set are constructed (or round-tripped through full-precision CSV) with
    /// anchor coordinates copied bit-for-bit.
    pub fn classify(&self, u: &[f64]) -> Membership {
        if u.len() != self.anchor.len() {
            return Membership::NotMember;
        }
        let mut varying = None;
        for (j, (&uj, &aj)) in u.iter().zip(self.anchor.iter()).enumerate() {
            if uj != aj {
                if varying.is_some() {
                    return Membership::NotMember;
                }
                varying = Some(j);
            }
        }
        match varying {
            None => Membership::Anchor,
            Some(j) => {
                let [a, b] = self.intervals[j];
                if u[j] >= a && u[j] <= b {
                    Membership::Block(j)
                } else {
                    Membership::NotMember
                }
            }
        }
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        self.classify(u) != Membership::NotMember
    }

    /// Draw `per_module` i.i.d. uniform points per module, block-major: all
    /// module-1 points first, then module-2, and so on. Within block `i` only
    /// coordinate `i` varies; all others are pinned at the anchor.
    /// Deterministic for a given seed.
    pub fn sample(&self, per_module: usize, seed: u64) -> Vec<Vec<f64>> {
        let n = self.n_modules();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = Vec::with_capacity(n * per_module);
        for i in 0..n {
            let [a, b] = self.intervals[i];
            for _ in 0..per_module {
                let mut u = self.anchor.clone();
                u[i] = rng.random_range(a..b);
                points.push(u);
            }
        }
        points
    }

    /// Uniform lattice with `points_per_axis` values per axis, endpoints
    /// included, in row-major order (last axis fastest).
    pub fn grid(&self, points_per_axis: usize) -> Vec<Vec<f64>> {
        let n = self.n_modules();
        let axes: Vec<Vec<f64>> = self
            .intervals
            .iter()
            .map(|&[a, b]| lattice(a, b, points_per_axis))
            .collect();
        let total = points_per_axis.pow(n as u32);
        let mut points = Vec::with_capacity(total);
        let mut idx = vec![0usize; n];
        for _ in 0..total {
            points.push((0..n).map(|j| axes[j][idx[j]]).collect());
            for j in (0..n).rev() {
                idx[j] += 1;
                if idx[j] < points_per_axis {
                    break;
                }
                idx[j] = 0;
            }
        }
        points
    }
}

/// Evenly spaced values on `[a, b]` including both endpoints.
pub fn lattice(a: f64, b: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2, "lattice needs at least two points");
    (0..count)
        .map(|k| a + (b - a) * k as f64 / (count - 1) as f64)
        .collect()
}

/// How a dataset's inputs were produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Unimodular,
    Grid,
    Custom,
}

/// Paired inputs and outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub outputs: Vec<Vec<f64>>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.first().map_or(0, Vec::len)
    }

    pub fn output_dim(&self) -> usize {
        self.outputs.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        if self.inputs.len() != self.outputs.len() {
            return Err(Error::Shape(format!(
                "dataset has {} inputs but {} outputs",
                self.inputs.len(),
                self.outputs.len()
            )));
        }
        let n = self.input_dim();
        let m = self.output_dim();
        for (k, (u, y)) in self.inputs.iter().zip(self.outputs.iter()).enumerate() {
            if u.len() != n || y.len() != m {
                return Err(Error::Shape(format!("dataset row {k} has inconsistent width")));
            }
        }
        Ok(())
    }

    /// Mark the dataset uni-modular when every input passes the membership
    /// test against `set` (used after reading back from CSV, which carries no
    /// provenance column).
    pub fn reclassify(&mut self, set: &UniModularInputSet) {
        if !self.is_empty() && self.inputs.iter().all(|u| set.contains(u)) {
            self.provenance = Provenance::Unimodular;
        }
    }
}

/// Compose ground-truth module functions with the composition map to produce
/// noiseless training pairs: `outputs[k] = G(f_1(u_1k), ..., f_n(u_nk))`.
pub fn generate_dataset(
    functions: &[HillFunction],
    map: &ResourceCompositionMap,
    inputs: Vec<Vec<f64>>,
    provenance: Provenance,
) -> Result<Dataset> {
    let n = map.n_modules();
    if functions.len() != n {
        return Err(Error::Shape(format!(
            "{} module functions for a {n}-module map",
            functions.len()
        )));
    }
    let mut outputs = Vec::with_capacity(inputs.len());
    let mut y = vec![0.0; n];
    for (k, u) in inputs.iter().enumerate() {
        if u.len() != n {
            return Err(Error::Shape(format!(
                "input {k} has dimension {}, expected {n}",
                u.len()
            )));
        }
        for i in 0..n {
            y[i] = functions[i].eval(u[i]);
        }
        outputs.push(map.eval(&y)?);
    }
    Ok(Dataset { inputs, outputs, provenance })
}
