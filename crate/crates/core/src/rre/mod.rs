//! Mass-action model of transcription/translation modules sharing a finite
//! ribosome pool, its steady states, and the quasi-steady-state reduction to
//! the rational composition map.
//!
//! Each module transcribes mRNA at a regulator-controlled rate, mRNA
//! reversibly binds ribosomes, and the bound complex produces protein; a
//! lumped host module competes for the same ribosomes. Eliminating free
//! ribosomes through the conservation law and setting the binding complexes
//! to equilibrium yields module outputs of the form
//! `theta_i * f_i(u_i) / (1 + sum_j f_j(u_j))`, the map the learning stack
//! assumes.

pub mod solve;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hill::HillFunction;

pub use solve::{steady_state, SteadyStateMethod, SteadyStateOptions};

/// Rates and copy number of one transcriptional module.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleRates {
    /// Transcription regulator (the module's intrinsic response to its input).
    pub regulator: HillFunction,
    /// Gene copy concentration.
    pub dna: f64,
    /// Ribosome-mRNA association rate (1/(concentration * time)).
    pub binding: f64,
    /// Complex dissociation rate (1/time).
    pub unbinding: f64,
    /// Translation (catalytic) rate of the bound complex (1/time).
    pub catalytic: f64,
    /// Protein decay rate (1/time).
    pub protein_decay: f64,
    /// Free-mRNA decay rate (1/time).
    pub mrna_decay: f64,
}

/// The lumped host expression load: constant transcription feeding one mRNA
/// species that competes for ribosomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HostRates {
    /// Constitutive transcription rate (1/time).
    pub transcription: f64,
    /// Host gene concentration.
    pub dna: f64,
    pub binding: f64,
    pub unbinding: f64,
    pub catalytic: f64,
    pub protein_decay: f64,
    pub mrna_decay: f64,
}

/// Full parameter set: per-module rates, host rates, shared ribosome pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RreParameters {
    pub modules: Vec<ModuleRates>,
    pub host: HostRates,
    pub total_ribosome: f64,
}

/// Concentrations of one expression unit: protein, free mRNA, and the
/// ribosome-mRNA complex.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SpeciesTriple {
    pub protein: f64,
    pub mrna: f64,
    pub complex: f64,
}

/// Full system state: per-module species plus the host species. Free
/// ribosome is not stored; it is eliminated through the conservation law
/// `free = total - sum of complexes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RreState {
    pub modules: Vec<SpeciesTriple>,
    pub host: SpeciesTriple,
}

impl RreState {
    pub fn zeros(n_modules: usize) -> Self {
        RreState {
            modules: vec![SpeciesTriple::default(); n_modules],
            host: SpeciesTriple::default(),
        }
    }

    pub fn dim(&self) -> usize {
        3 * self.modules.len() + 3
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.dim());
        for m in &self.modules {
            x.extend_from_slice(&[m.protein, m.mrna, m.complex]);
        }
        x.extend_from_slice(&[self.host.protein, self.host.mrna, self.host.complex]);
        x
    }

    pub fn from_flat(n_modules: usize, x: &[f64]) -> Result<Self> {
        if x.len() != 3 * n_modules + 3 {
            return Err(Error::Shape(format!(
                "state vector has {} entries for {} modules",
                x.len(),
                n_modules
            )));
        }
        let modules = (0..n_modules)
            .map(|i| SpeciesTriple {
                protein: x[3 * i],
                mrna: x[3 * i + 1],
                complex: x[3 * i + 2],
            })
            .collect();
        let host = SpeciesTriple {
            protein: x[3 * n_modules],
            mrna: x[3 * n_modules + 1],
            complex: x[3 * n_modules + 2],
        };
        Ok(RreState { modules, host })
    }

    /// Free ribosome under the conservation law.
    pub fn free_ribosome(&self, total: f64) -> f64 {
        total - self.bound_ribosome()
    }

    pub fn bound_ribosome(&self) -> f64 {
        self.modules.iter().map(|m| m.complex).sum::<f64>() + self.host.complex
    }

    /// Module protein outputs.
    pub fn outputs(&self) -> Vec<f64> {
        self.modules.iter().map(|m| m.protein).collect()
    }
}

/// Which dissociation constant the reduction uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BindingConstant {
    /// `(unbinding + catalytic) / binding`: the exact stationary constant of
    /// the bound complex, catalytic turnover included.
    Effective,
    /// `unbinding / binding`: the pure binding equilibrium, i.e. the limit of
    /// the effective constant as exchange becomes infinitely fast relative
    /// to catalysis. Invariant under joint scaling of binding and unbinding.
    FastExchangeLimit,
}

/// Parameters of the reduced composition-map model: output scales
/// `theta_i = catalytic_i * total_ribosome / protein_decay_i` and the factor
/// turning each regulator into the effective module function
/// `f_i(u) = f_scale_i * regulator_i(u)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedModel {
    pub theta: Vec<f64>,
    pub f_scale: Vec<f64>,
    /// `1 + host mRNA load`, the normalization absorbed into `f_scale`.
    pub host_load: f64,
}

impl ReducedModel {
    /// Effective module functions at regulator values `fbar`.
    pub fn module_functions(&self, fbar: &[f64]) -> Vec<f64> {
        self.f_scale.iter().zip(fbar.iter()).map(|(s, f)| s * f).collect()
    }

    /// Composed prediction `theta_i * f_i / (1 + sum_j f_j)`.
    pub fn predict(&self, fbar: &[f64]) -> Result<Vec<f64>> {
        if fbar.len() != self.theta.len() {
            return Err(Error::Shape(format!(
                "{} regulator values for {} modules",
                fbar.len(),
                self.theta.len()
            )));
        }
        let f = self.module_functions(fbar);
        let denom = 1.0 + f.iter().sum::<f64>();
        Ok(f.iter().zip(self.theta.iter()).map(|(fi, ti)| ti * fi / denom).collect())
    }
}

impl RreParameters {
    pub fn n_modules(&self) -> usize {
        self.modules.len()
    }

    pub fn dim(&self) -> usize {
        3 * self.modules.len() + 3
    }

    pub fn validate(&self) -> Result<()> {
        if self.modules.is_empty() {
            return Err(Error::InvalidParameter("need at least one module".into()));
        }
        if !(self.total_ribosome > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "total ribosome must be > 0, got {}",
                self.total_ribosome
            )));
        }
        let nonneg = |name: &str, v: f64| -> Result<()> {
            if !(v >= 0.0) || !v.is_finite() {
                Err(Error::InvalidParameter(format!("{name} must be >= 0, got {v}")))
            } else {
                Ok(())
            }
        };
        for (i, m) in self.modules.iter().enumerate() {
            m.regulator.validate()?;
            nonneg(&format!("module {i} dna"), m.dna)?;
            nonneg(&format!("module {i} binding"), m.binding)?;
            nonneg(&format!("module {i} unbinding"), m.unbinding)?;
            nonneg(&format!("module {i} catalytic"), m.catalytic)?;
            nonneg(&format!("module {i} protein_decay"), m.protein_decay)?;
            nonneg(&format!("module {i} mrna_decay"), m.mrna_decay)?;
        }
        nonneg("host transcription", self.host.transcription)?;
        nonneg("host dna", self.host.dna)?;
        nonneg("host binding", self.host.binding)?;
        nonneg("host unbinding", self.host.unbinding)?;
        nonneg("host catalytic", self.host.catalytic)?;
        nonneg("host protein_decay", self.host.protein_decay)?;
        nonneg("host mrna_decay", self.host.mrna_decay)?;
        Ok(())
    }

    /// Ratio of the slowest binding/unbinding rate to the fastest catalytic,
    /// decay, or transcription rate. Large values mean ribosome exchange is
    /// fast relative to gene expression.
    pub fn separation_factor(&self) -> f64 {
        let rt = self.total_ribosome;
        let mut fast = f64::INFINITY;
        let mut slow = f64::NEG_INFINITY;
        for m in &self.modules {
            fast = fast.min(rt * m.binding).min(m.unbinding);
            slow = slow
                .max(m.catalytic)
                .max(m.protein_decay)
                .max(m.mrna_decay)
                .max(m.regulator.max_on_unit_interval());
        }
        fast = fast.min(rt * self.host.binding).min(self.host.unbinding);
        slow = slow
            .max(self.host.catalytic)
            .max(self.host.protein_decay)
            .max(self.host.mrna_decay)
            .max(self.host.transcription);
        fast / slow
    }

    /// Copy with all binding and unbinding rates (modules and host) scaled by
    /// `factor`, leaving every other rate untouched.
    pub fn scale_binding(&self, factor: f64) -> Self {
        let mut scaled = self.clone();
        for m in &mut scaled.modules {
            m.binding *= factor;
            m.unbinding *= factor;
        }
        scaled.host.binding *= factor;
        scaled.host.unbinding *= factor;
        scaled
    }

    /// Regulator values `fbar_i(u_i)`.
    pub fn regulator_values(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.n_modules() {
            return Err(Error::Shape(format!(
                "{} inputs for {} modules",
                u.len(),
                self.n_modules()
            )));
        }
        Ok(self.modules.iter().zip(u.iter()).map(|(m, &ui)| m.regulator.eval(ui)).collect())
    }

    /// Reference single-module parameter set. Chosen so the ribosome-exchange
    /// separation factor is 1e3 and the reduced model lands on
    /// `theta = 1` with module function values of order 0.1-1.
    pub fn default_single() -> Self {
        RreParameters {
            modules: vec![ModuleRates {
                regulator: HillFunction::activating(0.797, 0.494, 4.0, 0.443)
                    .expect("reference parameters are valid"),
                dna: 0.4,
                binding: 1.0e4,
                unbinding: 2.0e3,
                catalytic: 1.0,
                protein_decay: 0.5,
                mrna_decay: 2.0,
            }],
            host: HostRates {
                transcription: 0.04,
                dna: 10.0,
                binding: 1.0e4,
                unbinding: 2.0e3,
                catalytic: 1.0,
                protein_decay: 0.5,
                mrna_decay: 2.0,
            },
            total_ribosome: 0.5,
        }
    }

    /// Reference two-module parameter set: one activating, one repressing
    /// regulator competing for the same pool.
    pub fn default_two_module() -> Self {
        let mut params = Self::default_single();
        params.modules[0].regulator = HillFunction::activating(0.326, 0.952, 4.0, 0.176)
            .expect("reference parameters are valid");
        let mut second = params.modules[0].clone();
        second.regulator = HillFunction::repressing(0.261, 0.415, 2.0, 0.192)
            .expect("reference parameters are valid");
        params.modules.push(second);
        params
    }
}

/// Exact mass-action right-hand sides with free ribosome eliminated through
/// the conservation law. Errors if the bound complexes exceed the pool.
pub fn rre_rhs(state: &RreState, params: &RreParameters, u: &[f64]) -> Result<RreState> {
    let n = params.n_modules();
    if state.modules.len() != n {
        return Err(Error::Shape(format!(
            "state has {} modules, parameters have {n}",
            state.modules.len()
        )));
    }
    let fbar = params.regulator_values(u)?;
    let free = state.free_ribosome(params.total_ribosome);
    if free < 0.0 {
        return Err(Error::State(format!(
            "bound ribosome {} exceeds the total pool {}",
            state.bound_ribosome(),
            params.total_ribosome
        )));
    }
    let mut out = RreState::zeros(n);
    for i in 0..n {
        let p = &params.modules[i];
        let s = &state.modules[i];
        let bind = p.binding * s.mrna * free;
        let release = (p.unbinding + p.catalytic) * s.complex;
        out.modules[i] = SpeciesTriple {
            protein: p.catalytic * s.complex - p.protein_decay * s.protein,
            mrna: fbar[i] * p.dna - bind + release - p.mrna_decay * s.mrna,
            complex: bind - release,
        };
    }
    let h = &params.host;
    let s = &state.host;
    let bind = h.binding * s.mrna * free;
    let release = (h.unbinding + h.catalytic) * s.complex;
    out.host = SpeciesTriple {
        protein: h.catalytic * s.complex - h.protein_decay * s.protein,
        mrna: h.transcription * h.dna - bind + release - h.mrna_decay * s.mrna,
        complex: bind - release,
    };
    Ok(out)
}

fn dissociation(unbinding: f64, catalytic: f64, binding: f64, which: BindingConstant) -> Result<f64> {
    if !(binding > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "binding rate must be > 0 for the reduction, got {binding}"
        )));
    }
    Ok(match which {
        BindingConstant::Effective => (unbinding + catalytic) / binding,
        BindingConstant::FastExchangeLimit => unbinding / binding,
    })
}

/// Reduce with a chosen dissociation constant.
pub fn qssa_reduce_with(params: &RreParameters, which: BindingConstant) -> Result<ReducedModel> {
    params.validate()?;
    let k_host = dissociation(
        params.host.unbinding,
        params.host.catalytic,
        params.host.binding,
        which,
    )?;
    if !(params.host.mrna_decay > 0.0) {
        return Err(Error::InvalidParameter("host mrna decay must be > 0".into()));
    }
    let host_load =
        1.0 + params.host.transcription * params.host.dna / (params.host.mrna_decay * k_host);
    let mut theta = Vec::with_capacity(params.n_modules());
    let mut f_scale = Vec::with_capacity(params.n_modules());
    for (i, m) in params.modules.iter().enumerate() {
        if !(m.protein_decay > 0.0) || !(m.mrna_decay > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "module {i} decay rates must be > 0 for the reduction"
            )));
        }
        let k = dissociation(m.unbinding, m.catalytic, m.binding, which)?;
        theta.push(m.catalytic * params.total_ribosome / m.protein_decay);
        f_scale.push(m.dna / (m.mrna_decay * k) / host_load);
    }
    Ok(ReducedModel { theta, f_scale, host_load })
}

/// Quasi-steady-state reduction with the effective dissociation constant
/// `(unbinding + catalytic) / binding`:
/// `theta_i = catalytic_i * R_T / protein_decay_i` and
/// `f_i(u) = [dna_i / (mrna_decay_i * K_i)] / host_load * regulator_i(u)`.
pub fn qssa_reduce(params: &RreParameters) -> Result<ReducedModel> {
    qssa_reduce_with(params, BindingConstant::Effective)
}

/// Exact steady state by back-substitution: free mRNA balances transcription
/// against decay, complexes sit at their stationary ratio, free ribosome
/// follows from conservation, proteins from catalysis against decay.
pub fn closed_form_steady_state(params: &RreParameters, u: &[f64]) -> Result<RreState> {
    params.validate()?;
    let n = params.n_modules();
    let fbar = params.regulator_values(u)?;
    let mut mrna = Vec::with_capacity(n);
    let mut k_eff = Vec::with_capacity(n);
    for (i, m) in params.modules.iter().enumerate() {
        if !(m.mrna_decay > 0.0) || !(m.protein_decay > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "module {i} decay rates must be > 0 for a finite steady state"
            )));
        }
        mrna.push(fbar[i] * m.dna / m.mrna_decay);
        k_eff.push(dissociation(m.unbinding, m.catalytic, m.binding, BindingConstant::Effective)?);
    }
    let h = &params.host;
    if !(h.mrna_decay > 0.0) || !(h.protein_decay > 0.0) {
        return Err(Error::InvalidParameter(
            "host decay rates must be > 0 for a finite steady state".into(),
        ));
    }
    let host_mrna = h.transcription * h.dna / h.mrna_decay;
    let k_host = dissociation(h.unbinding, h.catalytic, h.binding, BindingConstant::Effective)?;

    let mut load = 1.0 + host_mrna / k_host;
    for i in 0..n {
        load += mrna[i] / k_eff[i];
    }
    let free = params.total_ribosome / load;

    let mut state = RreState::zeros(n);
    for i in 0..n {
        let m = &params.modules[i];
        let complex = mrna[i] * free / k_eff[i];
        state.modules[i] = SpeciesTriple {
            protein: m.catalytic * complex / m.protein_decay,
            mrna: mrna[i],
            complex,
        };
    }
    let host_complex = host_mrna * free / k_host;
    state.host = SpeciesTriple {
        protein: h.catalytic * host_complex / h.protein_decay,
        mrna: host_mrna,
        complex: host_complex,
    };
    Ok(state)
}

/// Right-hand side of the reduced model for a single module: protein, module
/// mRNA, host mRNA, with the complexes equilibrated away.
pub fn reduced_rhs_single(params: &RreParameters, u: f64, state: &[f64; 3]) -> Result<[f64; 3]> {
    if params.n_modules() != 1 {
        return Err(Error::Shape("reduced 3-state form is for one module".into()));
    }
    let m = &params.modules[0];
    let h = &params.host;
    let k = dissociation(m.unbinding, m.catalytic, m.binding, BindingConstant::Effective)?;
    let k_host = dissociation(h.unbinding, h.catalytic, h.binding, BindingConstant::Effective)?;
    let [protein, mrna, host_mrna] = *state;
    let free = params.total_ribosome / (1.0 + mrna / k + host_mrna / k_host);
    Ok([
        m.catalytic * (mrna / k) * free - m.protein_decay * protein,
        m.regulator.eval(u) * m.dna - m.mrna_decay * mrna,
        h.transcription * h.dna - h.mrna_decay * host_mrna,
    ])
}

/// One row of a separation sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub factor: f64,
    pub max_rel_discrepancy: f64,
}

/// Scale the binding/unbinding rates by each factor and measure how far the
/// full model's steady-state outputs sit from the scale-invariant
/// fast-exchange reduced model.
///
/// The reduction with the effective constant reproduces the full steady
/// state identically (the stationary equations are triangular), so the
/// quantity that the "much faster exchange" assumption actually drives to
/// zero is the distance to the fast-exchange limit; it shrinks like
/// `catalytic / (factor * unbinding)`.
pub fn separation_sweep(params: &RreParameters, factors: &[f64]) -> Result<Vec<SweepEntry>> {
    params.validate()?;
    for &f in factors {
        if !(f > 0.0) {
            return Err(Error::InvalidParameter(format!("sweep factor must be > 0, got {f}")));
        }
    }
    let limit = qssa_reduce_with(params, BindingConstant::FastExchangeLimit)?;
    let n = params.n_modules();
    let u_grid = crate::composition::lattice(0.0, 1.0, 20);
    let opts = SteadyStateOptions::default();
    let mut entries = Vec::with_capacity(factors.len());
    for &factor in factors {
        let scaled = params.scale_binding(factor);
        let mut worst = 0.0f64;
        for &t in &u_grid {
            let u = vec![t; n];
            let full = steady_state(&scaled, &u, SteadyStateMethod::Newton, &opts)?;
            let fbar = scaled.regulator_values(&u)?;
            let reduced = limit.predict(&fbar)?;
            for (yf, yr) in full.outputs().iter().zip(reduced.iter()) {
                if *yr > 0.0 {
                    worst = worst.max((yf - yr).abs() / yr);
                }
            }
        }
        entries.push(SweepEntry { factor, max_rel_discrepancy: worst });
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_single_meets_design_targets() {
        let p = RreParameters::default_single();
        p.validate().unwrap();
        assert!(p.separation_factor() >= 1e3, "factor {}", p.separation_factor());
        let red = qssa_reduce(&p).unwrap();
        assert!((red.theta[0] - 1.0).abs() < 1e-12);
        // Module function values of order 0.1-1 across the input range.
        let lo = red.f_scale[0] * p.modules[0].regulator.min_on_unit_interval();
        let hi = red.f_scale[0] * p.modules[0].regulator.max_on_unit_interval();
        assert!(lo > 0.1 && hi < 1.0, "f range [{lo}, {hi}]");
    }

    #[test]
    fn rhs_from_rest_is_production_only() {
        let p = RreParameters::default_single();
        let state = RreState::zeros(1);
        let d = rre_rhs(&state, &p, &[0.5]).unwrap();
        assert!(d.modules[0].mrna > 0.0, "transcription must fire");
        assert!(d.host.mrna > 0.0);
        assert_eq!(d.modules[0].protein, 0.0);
        assert_eq!(d.modules[0].complex, 0.0);
        assert_eq!(d.host.protein, 0.0);
        assert_eq!(d.host.complex, 0.0);
    }

    #[test]
    fn rhs_vanishes_at_closed_form_equilibrium() {
        let p = RreParameters::default_single();
        for &u in &[0.0, 0.3, 1.0] {
            let eq = closed_form_steady_state(&p, &[u]).unwrap();
            let d = rre_rhs(&eq, &p, &[u]).unwrap();
            // Residuals scaled by the largest one-sided flux in the system.
            let scale = p.modules[0].binding * eq.modules[0].mrna
                * eq.free_ribosome(p.total_ribosome);
            for v in d.to_flat() {
                assert!(v.abs() <= 1e-8 * scale.max(1.0), "residual {v} at u={u}");
            }
        }
    }

    #[test]
    fn no_ribosome_means_no_protein_production() {
        let mut p = RreParameters::default_single();
        p.total_ribosome = 1e-12;
        let eq = closed_form_steady_state(&p, &[1.0]).unwrap();
        assert!(eq.modules[0].protein < 1e-10);
        // With the pool at zero the production term vanishes identically.
        let state = RreState::zeros(1);
        let mut p0 = p.clone();
        p0.total_ribosome = f64::MIN_POSITIVE;
        let d = rre_rhs(&state, &p0, &[1.0]).unwrap();
        assert_eq!(d.modules[0].protein, 0.0);
    }

    #[test]
    fn conservation_violation_is_state_error() {
        let p = RreParameters::default_single();
        let mut state = RreState::zeros(1);
        state.modules[0].complex = p.total_ribosome + 1.0;
        assert!(matches!(rre_rhs(&state, &p, &[0.5]), Err(Error::State(_))));
    }

    #[test]
    fn zero_regulator_means_zero_module_output() {
        let mut p = RreParameters::default_single();
        p.modules[0].regulator = HillFunction::activating(1.0, 0.5, 2.0, 0.0).unwrap();
        let eq = closed_form_steady_state(&p, &[0.0]).unwrap();
        assert_eq!(eq.modules[0].mrna, 0.0);
        assert_eq!(eq.modules[0].protein, 0.0);
        assert!(eq.host.protein > 0.0, "host keeps expressing");
    }

    #[test]
    fn reduction_without_host_load_is_plain_scaling() {
        let mut p = RreParameters::default_single();
        p.host.dna = 0.0;
        let red = qssa_reduce(&p).unwrap();
        assert_eq!(red.host_load, 1.0);
        let m = &p.modules[0];
        let k = (m.unbinding + m.catalytic) / m.binding;
        assert!((red.f_scale[0] - m.dna / (m.mrna_decay * k)).abs() < 1e-15);
    }

    #[test]
    fn doubling_ribosome_doubles_theta_only() {
        let p = RreParameters::default_single();
        let mut p2 = p.clone();
        p2.total_ribosome *= 2.0;
        let a = qssa_reduce(&p).unwrap();
        let b = qssa_reduce(&p2).unwrap();
        assert!((b.theta[0] - 2.0 * a.theta[0]).abs() < 1e-12);
        assert_eq!(a.f_scale, b.f_scale);
        assert_eq!(a.host_load, b.host_load);
    }

    #[test]
    fn zero_binding_rate_rejected_by_reduction() {
        let mut p = RreParameters::default_single();
        p.modules[0].binding = 0.0;
        assert!(matches!(qssa_reduce(&p), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn closed_form_matches_reduced_prediction_exactly() {
        // The stationary equations are triangular, so the full steady state
        // and the effective-constant reduction agree to rounding.
        let p = RreParameters::default_two_module();
        let red = qssa_reduce(&p).unwrap();
        for &t in &[0.0, 0.4, 1.0] {
            let u = [t, t];
            let eq = closed_form_steady_state(&p, &u).unwrap();
            let pred = red.predict(&p.regulator_values(&u).unwrap()).unwrap();
            for (a, b) in eq.outputs().iter().zip(pred.iter()) {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-12), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn scale_binding_identity_factor_is_noop() {
        let p = RreParameters::default_single();
        assert_eq!(p.scale_binding(1.0), p);
        assert_eq!(p.scale_binding(1.0).scale_binding(1.0), p);
    }

    #[test]
    fn reduced_jacobian_is_upper_triangular_with_negative_diagonal() {
        // Order (protein, module mRNA, host mRNA); finite differences.
        let p = RreParameters::default_single();
        let u = 0.7;
        let eq = closed_form_steady_state(&p, &[u]).unwrap();
        let x0 = [eq.modules[0].protein, eq.modules[0].mrna, eq.host.mrna];
        let mut jac = [[0.0f64; 3]; 3];
        for j in 0..3 {
            let h = 1e-7 * x0[j].abs().max(1e-7);
            let mut xp = x0;
            xp[j] += h;
            let mut xm = x0;
            xm[j] -= h;
            let fp = reduced_rhs_single(&p, u, &xp).unwrap();
            let fm = reduced_rhs_single(&p, u, &xm).unwrap();
            for i in 0..3 {
                jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        let scale = jac.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..3 {
            assert!(jac[i][i] < 0.0, "diagonal {i} = {}", jac[i][i]);
            for j in 0..i {
                assert!(
                    jac[i][j].abs() <= 1e-6 * scale,
                    "lower entry ({i},{j}) = {} should vanish",
                    jac[i][j]
                );
            }
        }
    }
}
