//! Structure-aware system identification for modules coupled through a
//! shared-resource composition map.
//!
//! The toolkit learns the input/output functions of individual modules and
//! the composition parameters from system-level measurements taken while one
//! module input varies at a time, and contrasts that structured model with a
//! monolithic network on inputs far from the training region. It also ships
//! the exact algebraic recovery for the two-module map, the counterexample
//! showing why a lone module with unknown scaling cannot be identified, and
//! a mass-action simulator validating that the rational composition map is
//! the steady state of ribosome-sharing gene expression.
//!
//! Entry points:
//! - [`composition`]: ground-truth maps, uni-modular input sets, datasets;
//! - [`nnet`]: the feedforward surrogate with exact reverse-mode gradients;
//! - [`train`]: structured/monolithic training and evaluation surfaces;
//! - [`recovery`]: closed-form identification and the aliasing construction;
//! - [`rre`]: the mass-action model, steady states, and its reduction;
//! - [`experiment`]: the preset experiment pipelines behind the CLI.

pub mod composition;
pub mod config;
pub mod error;
pub mod experiment;
pub mod gradcheck;
pub mod hill;
pub mod io;
pub mod nnet;
pub mod recovery;
pub mod rre;
pub mod train;

pub use composition::{
    generate_dataset, Dataset, Membership, Provenance, ResourceCompositionMap,
    UniModularInputSet,
};
pub use config::GroundTruth;
pub use error::{Error, Result};
pub use experiment::{preset, run, run_preset, ExperimentConfig, ExperimentKind, PresetName};
pub use hill::{HillFunction, HillKind};
pub use nnet::{adam_step, AdamState, Mlp};
pub use recovery::{
    counterexample_pair, forward_map, injectivity_probe, recover, ProbeMeasurements,
    RecoveredSystem,
};
pub use rre::{
    closed_form_steady_state, qssa_reduce, rre_rhs, separation_sweep, steady_state,
    RreParameters, RreState, SteadyStateMethod,
};
pub use train::{
    evaluate_grid, loss, train_modular, train_monolithic, MetricsRecord, ModularModel,
    MonolithicModel,
};
