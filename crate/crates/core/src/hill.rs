//! Parametric Hill regulatory functions.
//!
//! These saturating rational functions serve as the ground-truth input/output
//! maps of individual modules: increasing in the input for an activator,
//! decreasing for a repressor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Direction of regulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HillKind {
    Activating,
    Repressing,
}

/// A Hill function `basal + amplitude * r/(1+r)` (activating) or
/// `basal + amplitude / (1+r)` (repressing), with `r = (u/half_point)^coefficient`.
///
/// With `basal > 0` the function never vanishes, which the two-module
/// identifiability results rely on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HillFunction {
    pub kind: HillKind,
    pub amplitude: f64,
    pub half_point: f64,
    pub coefficient: f64,
    pub basal: f64,
}

impl HillFunction {
    pub fn new(
        kind: HillKind,
        amplitude: f64,
        half_point: f64,
        coefficient: f64,
        basal: f64,
    ) -> Result<Self> {
        let f = HillFunction { kind, amplitude, half_point, coefficient, basal };
        f.validate()?;
        Ok(f)
    }

    pub fn activating(amplitude: f64, half_point: f64, coefficient: f64, basal: f64) -> Result<Self> {
        Self::new(HillKind::Activating, amplitude, half_point, coefficient, basal)
    }

    pub fn repressing(amplitude: f64, half_point: f64, coefficient: f64, basal: f64) -> Result<Self> {
        Self::new(HillKind::Repressing, amplitude, half_point, coefficient, basal)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_point > 0.0) || !self.half_point.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "hill half_point must be > 0, got {}",
                self.half_point
            )));
        }
        if !(self.coefficient > 0.0) || !self.coefficient.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "hill coefficient must be > 0, got {}",
                self.coefficient
            )));
        }
        if !(self.amplitude >= 0.0) || !self.amplitude.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "hill amplitude must be >= 0, got {}",
                self.amplitude
            )));
        }
        if !(self.basal >= 0.0) || !self.basal.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "hill basal must be >= 0, got {}",
                self.basal
            )));
        }
        Ok(())
    }

    /// Evaluate at `u`. Intended for `u ∈ [0, 1]`; any nonnegative `u` is fine.
    pub fn eval(&self, u: f64) -> f64 {
        debug_assert!(u >= 0.0, "hill input must be nonnegative");
        let r = (u / self.half_point).powf(self.coefficient);
        match self.kind {
            HillKind::Activating => self.basal + self.amplitude * r / (1.0 + r),
            HillKind::Repressing => self.basal + self.amplitude / (1.0 + r),
        }
    }

    /// Supremum over `[0, 1]`: at `u = 1` for an activator, `u = 0` for a repressor.
    pub fn max_on_unit_interval(&self) -> f64 {
        match self.kind {
            HillKind::Activating => self.eval(1.0),
            HillKind::Repressing => self.eval(0.0),
        }
    }

    /// Infimum over `[0, 1]`.
    pub fn min_on_unit_interval(&self) -> f64 {
        match self.kind {
            HillKind::Activating => self.eval(0.0),
            HillKind::Repressing => self.eval(1.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Reference activating Hill (0.797, 0.494, 4, 0.443) evaluated with a
    // 50-digit scalar oracle.
    const ACT_AT_ONE: f64 = 1.1952035913007696;
    const ACT_AT_HALF: f64 = 0.8511199778696884;
    // Reference repressing Hill (0.261, 0.415, 2, 0.192) at u = 1.
    const REP_AT_ONE: f64 = 0.23034649917891190;

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn activating_vanishing_term_at_zero() {
        let h = HillFunction::activating(0.797, 0.494, 4.0, 0.443).unwrap();
        assert_eq!(h.eval(0.0), 0.443);
    }

    #[test]
    fn activating_matches_oracle_at_one() {
        let h = HillFunction::activating(0.797, 0.494, 4.0, 0.443).unwrap();
        assert!(rel_err(h.eval(1.0), ACT_AT_ONE) < 1e-14);
        assert!(rel_err(h.eval(0.5), ACT_AT_HALF) < 1e-14);
    }

    #[test]
    fn repressing_matches_oracle_at_one() {
        let h = HillFunction::repressing(0.261, 0.415, 2.0, 0.192).unwrap();
        assert!(rel_err(h.eval(1.0), REP_AT_ONE) < 1e-14);
    }

    #[test]
    fn repressing_at_zero_is_basal_plus_amplitude() {
        let h = HillFunction::repressing(0.261, 0.415, 2.0, 0.192).unwrap();
        assert_eq!(h.eval(0.0), 0.192 + 0.261);
    }

    #[test]
    fn rejects_nonpositive_half_point_and_coefficient() {
        assert!(HillFunction::activating(1.0, 0.0, 2.0, 0.1).is_err());
        assert!(HillFunction::activating(1.0, -1.0, 2.0, 0.1).is_err());
        assert!(HillFunction::activating(1.0, 0.5, 0.0, 0.1).is_err());
        assert!(HillFunction::repressing(-0.1, 0.5, 2.0, 0.1).is_err());
        assert!(HillFunction::repressing(0.1, 0.5, 2.0, -0.2).is_err());
    }

    proptest! {
        #[test]
        fn bounded_between_basal_and_basal_plus_amplitude(
            amp in 0.0..2.0f64,
            half in 0.05..2.0f64,
            c in 0.2..6.0f64,
            basal in 0.0..1.0f64,
            u in 0.0..=1.0f64,
            activating in proptest::bool::ANY,
        ) {
            let kind = if activating { HillKind::Activating } else { HillKind::Repressing };
            let h = HillFunction::new(kind, amp, half, c, basal).unwrap();
            let v = h.eval(u);
            prop_assert!(v >= basal - 1e-12);
            prop_assert!(v <= basal + amp + 1e-12);
        }

        #[test]
        fn monotone_in_stated_direction(
            amp in 0.01..2.0f64,
            half in 0.05..2.0f64,
            c in 0.2..6.0f64,
            basal in 0.0..1.0f64,
            a in 0.0..=1.0f64,
            b in 0.0..=1.0f64,
        ) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let act = HillFunction::activating(amp, half, c, basal).unwrap();
            let rep = HillFunction::repressing(amp, half, c, basal).unwrap();
            prop_assert!(act.eval(lo) <= act.eval(hi) + 1e-12);
            prop_assert!(rep.eval(lo) >= rep.eval(hi) - 1e-12);
        }

        #[test]
        fn positive_whenever_basal_positive(
            amp in 0.0..2.0f64,
            half in 0.05..2.0f64,
            c in 0.2..6.0f64,
            basal in 1e-9..1.0f64,
            u in 0.0..=1.0f64,
        ) {
            let h = HillFunction::activating(amp, half, c, basal).unwrap();
            prop_assert!(h.eval(u) > 0.0);
        }
    }
}
