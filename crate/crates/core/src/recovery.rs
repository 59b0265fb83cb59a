//! Closed-form algebraic identification for the two-module system, plus the
//! constructive counterexample showing why a single module with unknown
//! scaling is not identifiable.
//!
//! With two probe inputs per module, the eight composed-output measurements
//! determine the composition parameters and the module function values
//! uniquely; `recover` inverts the measurement map step by step
//! (theta_1, theta_2, then the anchor values f_2(1), f_1(1), then the probe
//! values from output ratios) and serves as the exact oracle for the
//! identifiability tests.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Denominators smaller than this trigger the degenerate-probe error.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

/// Eight composed-output measurements taken at two probe inputs per module,
/// with all other inputs pinned at the anchor.
///
/// `g_values` ordering: `[G11_1, G21_1, G12_1, G22_1, G11_2, G21_2, G12_2,
/// G22_2]`, where `Gij_k` is output `i` measured while module `j`'s input
/// sits at its k-th probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeMeasurements {
    /// `probes[j] = [u_j^1, u_j^2]`, the two inputs used for module `j+1`.
    pub probes: [[f64; 2]; 2],
    pub g_values: [f64; 8],
}

impl ProbeMeasurements {
    pub fn validate(&self) -> Result<()> {
        if self.g_values.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidParameter("non-finite measurement".into()));
        }
        for (j, p) in self.probes.iter().enumerate() {
            if p[0] == p[1] {
                return Err(Error::InvalidParameter(format!(
                    "module {} probes coincide at {}",
                    j + 1,
                    p[0]
                )));
            }
        }
        Ok(())
    }
}

/// The unknowns of the two-module system at the probe points: composition
/// parameters and module function values at `(u^1, u^2, anchor)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveredSystem {
    pub theta: [f64; 2],
    /// `f_1` at `(u_1^1, u_1^2, 1)`.
    pub f1_at: [f64; 3],
    /// `f_2` at `(u_2^1, u_2^2, 1)`.
    pub f2_at: [f64; 3],
}

/// The measurement map: evaluates the eight composed outputs from the system
/// unknowns. Errors if a composition denominator vanishes.
pub fn forward_map(x: &RecoveredSystem) -> Result<[f64; 8]> {
    let [t1, t2] = x.theta;
    let f1_anchor = x.f1_at[2];
    let f2_anchor = x.f2_at[2];
    let mut g = [0.0; 8];
    for k in 0..2 {
        let d1 = 1.0 + x.f1_at[k] + f2_anchor;
        let d2 = 1.0 + f1_anchor + x.f2_at[k];
        if d1.abs() < DEGENERACY_THRESHOLD || d2.abs() < DEGENERACY_THRESHOLD {
            return Err(Error::Singular(format!(
                "composition denominator vanishes at probe {}",
                k + 1
            )));
        }
        g[4 * k] = t1 * x.f1_at[k] / d1;
        g[4 * k + 1] = t2 * f2_anchor / d1;
        g[4 * k + 2] = t1 * f1_anchor / d2;
        g[4 * k + 3] = t2 * x.f2_at[k] / d2;
    }
    Ok(g)
}

fn check_denominator(v: f64, module: usize, detail: &str) -> Result<f64> {
    if v.abs() < DEGENERACY_THRESHOLD {
        Err(Error::DegenerateProbes { module, detail: detail.to_string() })
    } else {
        Ok(v)
    }
}

/// Invert the measurement map. The Lemma hypotheses (distinct probe
/// responses per module, nonzero composition parameters) surface as
/// degenerate-probe errors through the divisions they would break.
pub fn recover(m: &ProbeMeasurements) -> Result<RecoveredSystem> {
    m.validate()?;
    let [g11_1, g21_1, g12_1, g22_1, g11_2, g21_2, g12_2, g22_2] = m.g_values;

    // Output-2 measurements on module 1's slice share the factor
    // theta_2 * f_2(1); if they vanish the ratios below are meaningless.
    check_denominator(g21_1, 2, "output 2 vanishes on module 1's slice")?;
    check_denominator(g21_2, 2, "output 2 vanishes on module 1's slice")?;
    check_denominator(g12_1, 1, "output 1 vanishes on module 2's slice")?;
    check_denominator(g12_2, 1, "output 1 vanishes on module 2's slice")?;

    // r1j = (theta_1/theta_2) * f_1(u_1^j) / f_2(1), and symmetrically r2k.
    let r1 = [g11_1 / g21_1, g11_2 / g21_2];
    let r2 = [g22_1 / g12_1, g22_2 / g12_2];

    let den1 = check_denominator(
        1.0 / g21_1 - 1.0 / g21_2,
        1,
        "probe responses for module 1 coincide",
    )?;
    let theta1 = (r1[0] - r1[1]) / den1;

    let den2 = check_denominator(
        1.0 / g12_1 - 1.0 / g12_2,
        2,
        "probe responses for module 2 coincide",
    )?;
    let theta2 = (r2[0] - r2[1]) / den2;

    check_denominator(theta1, 1, "recovered theta_1 is zero")?;
    check_denominator(theta2, 2, "recovered theta_2 is zero")?;

    // theta_2 / G21^j = 1/f_2(1) + 1 + (theta_2/theta_1) * r1j, solved for
    // the anchor values.
    let inv_f2_anchor = check_denominator(
        theta2 / g21_1 - 1.0 - (theta2 / theta1) * r1[0],
        2,
        "anchor value f_2(1) diverges",
    )?;
    let f2_anchor = 1.0 / inv_f2_anchor;
    let inv_f1_anchor = check_denominator(
        theta1 / g12_1 - 1.0 - (theta1 / theta2) * r2[0],
        1,
        "anchor value f_1(1) diverges",
    )?;
    let f1_anchor = 1.0 / inv_f1_anchor;

    let f1_at = [
        (theta2 / theta1) * r1[0] * f2_anchor,
        (theta2 / theta1) * r1[1] * f2_anchor,
        f1_anchor,
    ];
    let f2_at = [
        (theta1 / theta2) * r2[0] * f1_anchor,
        (theta1 / theta2) * r2[1] * f1_anchor,
        f2_anchor,
    ];

    Ok(RecoveredSystem { theta: [theta1, theta2], f1_at, f2_at })
}

/// Max relative residual of `forward_map(x)` against the measurements.
pub fn roundtrip_residual(m: &ProbeMeasurements, x: &RecoveredSystem) -> Result<f64> {
    let g = forward_map(x)?;
    Ok(g.iter()
        .zip(m.g_values.iter())
        .map(|(a, b)| (a - b).abs() / b.abs().max(1e-300))
        .fold(0.0, f64::max))
}

/// Pointwise value of the aliasing function: the unique `fh` with
/// `theta_hat * fh / (1 + fh) = theta * f / (1 + f)`.
pub fn counterexample_transform(theta: f64, theta_hat: f64, f_value: f64) -> f64 {
    (theta / theta_hat) * f_value / (1.0 + ((theta_hat - theta) / theta_hat) * f_value)
}

/// A module function indistinguishable from `f` through the scalar
/// composition map once the parameter is misattributed as `theta_hat`.
pub struct Counterexample<F: Fn(f64) -> f64> {
    pub theta: f64,
    pub theta_hat: f64,
    f: F,
}

impl<F: Fn(f64) -> f64> Counterexample<F> {
    pub fn eval(&self, u: f64) -> f64 {
        counterexample_transform(self.theta, self.theta_hat, (self.f)(u))
    }

    pub fn base(&self, u: f64) -> f64 {
        (self.f)(u)
    }
}

/// Build the aliasing pair for `theta_hat != theta`. Solving the composed
/// outputs for `fh` gives `fh = (theta/theta_hat) f / (1 + ((theta_hat -
/// theta)/theta_hat) f)`, valid wherever that denominator stays positive on
/// `[0, 1]`; the denominator is scanned on a fine lattice at construction.
pub fn counterexample_pair<F: Fn(f64) -> f64>(
    theta: f64,
    theta_hat: f64,
    f: F,
) -> Result<Counterexample<F>> {
    if !(theta > 0.0) || !(theta_hat > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "composition parameters must be positive, got theta = {theta}, \
             theta_hat = {theta_hat}"
        )));
    }
    let slope = (theta_hat - theta) / theta_hat;
    const SCAN: usize = 4097;
    for k in 0..SCAN {
        let u = k as f64 / (SCAN - 1) as f64;
        let denom = 1.0 + slope * f(u);
        if denom <= 1e-9 {
            return Err(Error::InvalidPair(format!(
                "construction denominator {denom:.3e} at u = {u} is not positive"
            )));
        }
    }
    Ok(Counterexample { theta, theta_hat, f })
}

/// Report from randomized injectivity probing of the measurement map.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InjectivityReport {
    pub trials: usize,
    /// Violations of either the separation bound or the round trip.
    pub violations: usize,
    pub max_roundtrip_rel_err: f64,
    pub min_output_separation: f64,
}

impl InjectivityReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

fn sample_admissible(rng: &mut ChaCha8Rng) -> RecoveredSystem {
    // Hypothesis-respecting ranges: function values well away from zero and
    // probe responses separated, parameters bounded away from zero.
    let mut pair = || loop {
        let a: f64 = rng.random_range(0.05..3.0);
        let b: f64 = rng.random_range(0.05..3.0);
        if (a - b).abs() >= 0.05 {
            return (a, b);
        }
    };
    let (f1a, f1b) = pair();
    let (f2a, f2b) = pair();
    let f1_anchor = rng.random_range(0.05..3.0);
    let f2_anchor = rng.random_range(0.05..3.0);
    let theta = [rng.random_range(0.1..3.0), rng.random_range(0.1..3.0)];
    RecoveredSystem {
        theta,
        f1_at: [f1a, f1b, f1_anchor],
        f2_at: [f2a, f2b, f2_anchor],
    }
}

fn rel_err_inf(a: &RecoveredSystem, b: &RecoveredSystem) -> f64 {
    let pairs = a
        .theta
        .iter()
        .zip(b.theta.iter())
        .chain(a.f1_at.iter().zip(b.f1_at.iter()))
        .chain(a.f2_at.iter().zip(b.f2_at.iter()));
    pairs
        .map(|(x, y)| (x - y).abs() / y.abs().max(1e-300))
        .fold(0.0, f64::max)
}

fn dist_inf(a: &RecoveredSystem, b: &RecoveredSystem) -> f64 {
    a.theta
        .iter()
        .zip(b.theta.iter())
        .chain(a.f1_at.iter().zip(b.f1_at.iter()))
        .chain(a.f2_at.iter().zip(b.f2_at.iter()))
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Sample random admissible pairs `x != x'`, require the measurement map to
/// separate them, and require `recover(forward_map(x))` to reproduce `x` to
/// 1e-9 relative. A violation is counted, not raised.
pub fn injectivity_probe(trials: usize, seed: u64) -> Result<InjectivityReport> {
    if trials == 0 {
        return Err(Error::InvalidConfig("injectivity probe needs >= 1 trial".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = InjectivityReport {
        trials,
        violations: 0,
        max_roundtrip_rel_err: 0.0,
        min_output_separation: f64::INFINITY,
    };
    let probes = [[0.25, 0.75], [0.25, 0.75]];
    for _ in 0..trials {
        let x = sample_admissible(&mut rng);
        let y = forward_map(&x)?;

        let x2 = loop {
            let cand = sample_admissible(&mut rng);
            if dist_inf(&cand, &x) > 1e-6 {
                break cand;
            }
        };
        let y2 = forward_map(&x2)?;
        let sep = y
            .iter()
            .zip(y2.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        // Distinct admissible points must produce distinct measurements;
        // the bound is scaled far below the sampled point separation.
        if sep <= 1e-12 * dist_inf(&x2, &x).max(1.0) {
            report.violations += 1;
        }
        report.min_output_separation = report.min_output_separation.min(sep);

        match recover(&ProbeMeasurements { probes, g_values: y }) {
            Ok(rec) => {
                let err = rel_err_inf(&rec, &x);
                report.max_roundtrip_rel_err = report.max_roundtrip_rel_err.max(err);
                if err > 1e-9 {
                    report.violations += 1;
                }
            }
            Err(_) => report.violations += 1,
        }
    }
    Ok(report)
}
