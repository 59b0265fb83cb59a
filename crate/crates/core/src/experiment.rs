//! Experiment configurations, presets, and the run dispatcher behind the CLI.
//!
//! A run resolves its configuration, produces its artifacts (CSV/JSON files
//! under the output directory), and writes a manifest echoing the resolved
//! configuration together with the final metrics. Artifact bytes are
//! deterministic for a fixed seed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::composition::{generate_dataset, lattice, Dataset, Provenance};
use crate::config::GroundTruth;
use crate::error::{Error, Result};
use crate::hill::HillFunction;
use crate::io;
use crate::nnet::Mlp;
use crate::recovery::{counterexample_pair, recover, roundtrip_residual, ProbeMeasurements};
use crate::rre::{
    qssa_reduce, separation_sweep, steady_state, RreParameters, SteadyStateMethod,
    SteadyStateOptions,
};
use crate::train::{
    evaluate_grid, loss, train_modular, train_monolithic, ModularModel, MonolithicModel,
    OutputTransform, TrainOptions,
};

/// What a run does.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    SingleModule,
    TwoModuleModular,
    TwoModuleMonolithic,
    GridEval,
    Recover,
    Counterexample,
    Rre,
}

/// Resolved run configuration. Unused fields are ignored by kinds that do
/// not need them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub out_dir: PathBuf,
    /// Manifest file name inside `out_dir`.
    pub manifest_name: String,
    pub dataset: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub probes: Option<PathBuf>,
    pub rre_params: Option<PathBuf>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub log_stride: usize,
    pub grid_points: usize,
    pub per_module: usize,
    pub arch: Vec<usize>,
    /// Initial value of each learnable composition parameter.
    pub theta_init: f64,
    /// Learn the composition parameters; `None` picks the kind's default
    /// (known theta for the single-module run, learnable for two modules).
    pub train_theta: Option<bool>,
    pub softplus_output: bool,
    /// Counterexample demonstration parameters.
    pub theta_true: f64,
    pub theta_alias: f64,
    pub eval_points: usize,
    pub sweep_factors: Vec<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: ExperimentKind::SingleModule,
            out_dir: PathBuf::from("out"),
            manifest_name: "manifest.json".to_string(),
            dataset: None,
            truth: None,
            checkpoint: None,
            probes: None,
            rre_params: None,
            epochs: 1000,
            learning_rate: 0.1,
            seed: 1,
            log_stride: 100,
            grid_points: 100,
            per_module: 100,
            arch: vec![1, 20, 20, 20, 20, 1],
            theta_init: 3.0,
            train_theta: None,
            softplus_output: false,
            theta_true: 5.0,
            theta_alias: 2.0,
            eval_points: 1000,
            sweep_factors: vec![10.0, 100.0, 1000.0, 1e6],
        }
    }
}

impl ExperimentConfig {
    /// Check referenced input paths and create the output directory.
    pub fn prepare(&self) -> Result<()> {
        for path in [&self.dataset, &self.truth, &self.checkpoint, &self.probes, &self.rre_params]
            .into_iter()
            .flatten()
        {
            if !path.exists() {
                return Err(Error::InvalidConfig(format!(
                    "input path does not exist: {}",
                    path.display()
                )));
            }
        }
        std::fs::create_dir_all(&self.out_dir)?;
        Ok(())
    }

    fn train_theta_effective(&self) -> bool {
        self.train_theta.unwrap_or(match self.kind {
            ExperimentKind::SingleModule => false,
            _ => true,
        })
    }
}

/// The named experiment presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetName {
    Fig3,
    Fig4,
    Fig5,
    RreCheck,
}

impl FromStr for PresetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fig3" => Ok(PresetName::Fig3),
            "fig4" => Ok(PresetName::Fig4),
            "fig5" => Ok(PresetName::Fig5),
            "rre_check" | "rre-check" => Ok(PresetName::RreCheck),
            other => Err(Error::InvalidConfig(format!(
                "unknown preset {other:?}; expected fig3, fig4, fig5, or rre_check"
            ))),
        }
    }
}

impl PresetName {
    pub fn dir_name(&self) -> &'static str {
        match self {
            PresetName::Fig3 => "fig3",
            PresetName::Fig4 => "fig4",
            PresetName::Fig5 => "fig5",
            PresetName::RreCheck => "rre_check",
        }
    }
}

/// Published hyperparameters per preset. Every field can still be overridden
/// by flag before running.
pub fn preset(name: PresetName) -> ExperimentConfig {
    let base = ExperimentConfig::default();
    match name {
        PresetName::Fig3 => ExperimentConfig {
            kind: ExperimentKind::SingleModule,
            out_dir: PathBuf::from("out/fig3"),
            epochs: 1000,
            learning_rate: 0.1,
            per_module: 100,
            arch: vec![1, 20, 20, 20, 20, 1],
            log_stride: 10,
            ..base
        },
        PresetName::Fig4 => ExperimentConfig {
            kind: ExperimentKind::TwoModuleModular,
            out_dir: PathBuf::from("out/fig4"),
            epochs: 84_000,
            learning_rate: 0.005,
            per_module: 100,
            arch: vec![1, 20, 20, 20, 20, 1],
            theta_init: 3.0,
            log_stride: 100,
            ..base
        },
        PresetName::Fig5 => ExperimentConfig {
            kind: ExperimentKind::TwoModuleMonolithic,
            out_dir: PathBuf::from("out/fig5"),
            epochs: 8_000,
            learning_rate: 0.001,
            arch: vec![2, 50, 50, 50, 50, 2],
            grid_points: 100,
            log_stride: 100,
            ..base
        },
        PresetName::RreCheck => ExperimentConfig {
            kind: ExperimentKind::Rre,
            out_dir: PathBuf::from("out/rre_check"),
            grid_points: 20,
            sweep_factors: vec![10.0, 100.0, 1000.0, 1e6],
            ..base
        },
    }
}

/// Saved model state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub model: String,
    pub nets: Vec<Mlp>,
    pub theta_hat: Option<Vec<f64>>,
    #[serde(default)]
    pub train_theta: bool,
    #[serde(default)]
    pub output_transform: OutputTransform,
    pub seed: u64,
    pub epoch: u64,
}

impl Checkpoint {
    pub fn from_modular(model: &ModularModel, seed: u64, epoch: u64) -> Self {
        Checkpoint {
            model: "modular".to_string(),
            nets: model.surrogates.clone(),
            theta_hat: Some(model.theta_hat.clone()),
            train_theta: model.train_theta,
            output_transform: model.output_transform,
            seed,
            epoch,
        }
    }

    pub fn from_monolithic(model: &MonolithicModel, seed: u64, epoch: u64) -> Self {
        Checkpoint {
            model: "monolithic".to_string(),
            nets: vec![model.net.clone()],
            theta_hat: None,
            train_theta: false,
            output_transform: OutputTransform::Identity,
            seed,
            epoch,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let ckpt: Checkpoint = io::load_json(path)?;
        for net in &ckpt.nets {
            net.validate()?;
        }
        Ok(ckpt)
    }

    pub fn into_modular(self) -> Result<ModularModel> {
        if self.model != "modular" {
            return Err(Error::InvalidConfig(format!(
                "checkpoint holds a {:?} model, expected modular",
                self.model
            )));
        }
        let theta = self.theta_hat.ok_or_else(|| {
            Error::InvalidConfig("modular checkpoint lacks theta_hat".into())
        })?;
        let mut model = ModularModel::with_fixed_theta(self.nets, theta)?;
        model.train_theta = self.train_theta;
        model.output_transform = self.output_transform;
        Ok(model)
    }

    pub fn into_monolithic(self) -> Result<MonolithicModel> {
        if self.model != "monolithic" {
            return Err(Error::InvalidConfig(format!(
                "checkpoint holds a {:?} model, expected monolithic",
                self.model
            )));
        }
        let mut nets = self.nets;
        if nets.len() != 1 {
            return Err(Error::InvalidConfig(format!(
                "monolithic checkpoint must hold one network, found {}",
                nets.len()
            )));
        }
        Ok(MonolithicModel::new(nets.remove(0)))
    }
}

/// Run record written next to the artifacts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub crate_version: String,
    pub derived_seeds: BTreeMap<String, u64>,
    pub artifacts: Vec<String>,
    pub final_metrics: serde_json::Value,
    pub wall_time_seconds: f64,
}

/// Dispatch a configuration to its implementation. Artifacts land in
/// `config.out_dir`; the manifest is written last.
pub fn run(config: &ExperimentConfig) -> Result<Manifest> {
    config.prepare()?;
    let started = Instant::now();
    let mut manifest = Manifest {
        config: config.clone(),
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        derived_seeds: BTreeMap::new(),
        artifacts: Vec::new(),
        final_metrics: serde_json::Value::Null,
        wall_time_seconds: 0.0,
    };
    match config.kind {
        ExperimentKind::SingleModule | ExperimentKind::TwoModuleModular => {
            run_modular_training(config, &mut manifest)?
        }
        ExperimentKind::TwoModuleMonolithic => run_monolithic_training(config, &mut manifest)?,
        ExperimentKind::GridEval => run_grid_eval(config, &mut manifest)?,
        ExperimentKind::Recover => run_recover(config, &mut manifest)?,
        ExperimentKind::Counterexample => run_counterexample(config, &mut manifest)?,
        ExperimentKind::Rre => run_rre(config, &mut manifest)?,
    }
    manifest.wall_time_seconds = started.elapsed().as_secs_f64();
    let manifest_path = config.out_dir.join(&config.manifest_name);
    io::save_json_pretty(&manifest_path, &manifest)?;
    Ok(manifest)
}

fn load_truth(config: &ExperimentConfig, default_modules: usize) -> Result<GroundTruth> {
    match &config.truth {
        Some(path) => GroundTruth::load(path),
        None => Ok(match default_modules {
            1 => GroundTruth::single_module_example(config.seed),
            2 => GroundTruth::two_module_example(config.seed),
            n => {
                return Err(Error::InvalidConfig(format!(
                    "no built-in ground truth for {n} modules; pass --truth"
                )))
            }
        }),
    }
}

fn load_or_generate_dataset(
    config: &ExperimentConfig,
    truth: &GroundTruth,
    manifest: &mut Manifest,
) -> Result<Dataset> {
    match &config.dataset {
        Some(path) => {
            let mut data = io::read_dataset_csv(path)?;
            data.reclassify(&truth.input_set);
            Ok(data)
        }
        None => {
            let inputs = truth.input_set.sample(config.per_module, config.seed);
            let data = generate_dataset(
                &truth.functions,
                &truth.map()?,
                inputs,
                Provenance::Unimodular,
            )?;
            let path = config.out_dir.join("dataset.csv");
            io::write_dataset_csv(&path, &data)?;
            manifest.artifacts.push("dataset.csv".into());
            Ok(data)
        }
    }
}

fn write_truth_copy(
    config: &ExperimentConfig,
    truth: &GroundTruth,
    manifest: &mut Manifest,
) -> Result<()> {
    if config.truth.is_none() {
        truth.save(&config.out_dir.join("truth.json"))?;
        manifest.artifacts.push("truth.json".into());
    }
    Ok(())
}

fn run_modular_training(config: &ExperimentConfig, manifest: &mut Manifest) -> Result<()> {
    let default_modules = match config.kind {
        ExperimentKind::SingleModule => 1,
        _ => 2,
    };
    let truth = load_truth(config, default_modules)?;
    let n = truth.n_modules();
    write_truth_copy(config, &truth, manifest)?;
    let data = load_or_generate_dataset(config, &truth, manifest)?;

    if config.arch.first() != Some(&1) || config.arch.last() != Some(&1) {
        return Err(Error::InvalidConfig(format!(
            "modular surrogates map a scalar to a scalar; arch {:?} does not",
            config.arch
        )));
    }
    let mut nets = Vec::with_capacity(n);
    for i in 0..n {
        let net_seed = config.seed + 1 + i as u64;
        manifest.derived_seeds.insert(format!("surrogate_{}", i + 1), net_seed);
        nets.push(Mlp::kaiming(&config.arch, net_seed)?);
    }
    let mut model = if config.train_theta_effective() {
        ModularModel::new(nets, config.theta_init)?
    } else {
        // Composition parameters are known exactly in this setting.
        ModularModel::with_fixed_theta(nets, truth.theta.clone())?
    };
    if config.softplus_output {
        model.output_transform = OutputTransform::Softplus;
    }

    let opts = TrainOptions {
        epochs: config.epochs,
        learning_rate: config.learning_rate,
        log_stride: config.log_stride,
    };
    let records = train_modular(&mut model, &data, &truth, &opts)?;

    io::write_metrics_csv(&config.out_dir.join("metrics.csv"), &records)?;
    manifest.artifacts.push("metrics.csv".into());

    let ckpt = Checkpoint::from_modular(&model, config.seed, config.epochs as u64);
    io::save_json_pretty(&config.out_dir.join("checkpoint.json"), &ckpt)?;
    manifest.artifacts.push("checkpoint.json".into());

    if model.train_theta {
        io::save_json_pretty(
            &config.out_dir.join("theta_hat.json"),
            &serde_json::json!({ "theta_hat": model.theta_hat, "theta_true": truth.theta }),
        )?;
        manifest.artifacts.push("theta_hat.json".into());
    }

    write_surrogate_comparison(config, &truth, &model, manifest)?;

    let fhat_min = model.min_surrogate_outputs(201)?;
    if fhat_min.iter().any(|&v| v < 0.0) {
        eprintln!(
            "note: a surrogate dips negative on the evaluation grid (minima {fhat_min:?}); \
             the positivity assumption behind exact recovery is violated there"
        );
    }

    let last = records.last();
    manifest.final_metrics = serde_json::json!({
        "final_epoch": last.map(|r| r.epoch),
        "loss": last.map(|r| r.loss),
        "e_g": last.map(|r| r.e_g.clone()),
        "e_f": last.map(|r| r.e_f.clone()),
        "e_theta": last.map(|r| r.e_theta.clone()),
        "theta_hat": model.theta_hat,
        "surrogate_min_on_grid": fhat_min,
    });
    Ok(())
}

/// Side-by-side true and learned module functions on a fine lattice.
fn write_surrogate_comparison(
    config: &ExperimentConfig,
    truth: &GroundTruth,
    model: &ModularModel,
    manifest: &mut Manifest,
) -> Result<()> {
    let n = truth.n_modules();
    let grid = lattice(0.0, 1.0, 201);
    let mut header = vec!["u".to_string()];
    for i in 1..=n {
        header.push(format!("f_{i}"));
        header.push(format!("f_hat_{i}"));
    }
    let mut out = header.join(",");
    out.push('\n');
    for &u in &grid {
        let mut row = vec![io::fmt_f64(u)];
        for i in 0..n {
            let f = truth.functions[i].eval(u);
            let fh = model
                .output_transform
                .apply(model.surrogates[i].forward_scalar(u)?);
            row.push(io::fmt_f64(f));
            row.push(io::fmt_f64(fh));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(config.out_dir.join("fhat_comparison.csv"), out)?;
    manifest.artifacts.push("fhat_comparison.csv".into());
    Ok(())
}

fn run_monolithic_training(config: &ExperimentConfig, manifest: &mut Manifest) -> Result<()> {
    let truth = load_truth(config, 2)?;
    write_truth_copy(config, &truth, manifest)?;
    let data = load_or_generate_dataset(config, &truth, manifest)?;
    let n = truth.n_modules();
    if config.arch.first() != Some(&n) || config.arch.last() != Some(&n) {
        return Err(Error::InvalidConfig(format!(
            "monolithic arch {:?} must map {n} inputs to {n} outputs",
            config.arch
        )));
    }
    let net_seed = config.seed + 1 + n as u64;
    manifest.derived_seeds.insert("monolithic".into(), net_seed);
    let mut model = MonolithicModel::new(Mlp::kaiming(&config.arch, net_seed)?);
    let opts = TrainOptions {
        epochs: config.epochs,
        learning_rate: config.learning_rate,
        log_stride: config.log_stride,
    };
    let history = train_monolithic(&mut model, &data, &opts)?;

    io::write_loss_csv(&config.out_dir.join("loss_history.csv"), &history)?;
    manifest.artifacts.push("loss_history.csv".into());
    let ckpt = Checkpoint::from_monolithic(&model, config.seed, config.epochs as u64);
    io::save_json_pretty(&config.out_dir.join("checkpoint.json"), &ckpt)?;
    manifest.artifacts.push("checkpoint.json".into());

    manifest.final_metrics = serde_json::json!({
        "final_epoch": history.last().map(|r| r.epoch),
        "final_loss": history.last().map(|r| r.loss),
        "training_loss": loss(&model, &data)?,
    });
    Ok(())
}

fn run_grid_eval(config: &ExperimentConfig, manifest: &mut Manifest) -> Result<()> {
    let ckpt_path = config.checkpoint.as_ref().ok_or_else(|| {
        Error::InvalidConfig("grid evaluation needs --checkpoint".into())
    })?;
    let ckpt = Checkpoint::load(ckpt_path)?;
    let truth = load_truth(config, 2)?;
    let tag = ckpt.model.clone();
    let surface = match tag.as_str() {
        "modular" => evaluate_grid(&ckpt.into_modular()?, &truth, config.grid_points)?,
        "monolithic" => evaluate_grid(&ckpt.into_monolithic()?, &truth, config.grid_points)?,
        other => {
            return Err(Error::InvalidConfig(format!("unknown checkpoint model {other:?}")))
        }
    };
    let file = format!("surface_{tag}.csv");
    io::write_surface_csv(&config.out_dir.join(&file), &surface)?;
    manifest.artifacts.push(file);

    let median_full = surface.median();
    let median_low = surface.pooled_median(|u| u.iter().cloned().fold(f64::INFINITY, f64::min) <= 0.5);
    manifest.final_metrics = serde_json::json!({
        "model": tag,
        "grid_points_per_axis": surface.points_per_axis,
        "median_rel_err_full": median_full,
        "median_rel_err_min_input_below_half": median_low,
        "undefined_points": surface.undefined_points(),
    });
    Ok(())
}

fn run_recover(config: &ExperimentConfig, manifest: &mut Manifest) -> Result<()> {
    let probes_path = config.probes.as_ref().ok_or_else(|| {
        Error::InvalidConfig("recover needs a probe measurement JSON (--probes)".into())
    })?;
    let measurements: ProbeMeasurements = io::load_json(probes_path)?;
    let recovered = recover(&measurements)?;
    let residual = roundtrip_residual(&measurements, &recovered)?;
    io::save_json_pretty(
        &config.out_dir.join("recovered.json"),
        &serde_json::json!({
            "theta": recovered.theta,
            "f1_at": recovered.f1_at,
            "f2_at": recovered.f2_at,
            "probes": measurements.probes,
            "roundtrip_residual": residual,
        }),
    )?;
    manifest.artifacts.push("recovered.json".into());
    manifest.final_metrics = serde_json::json!({
        "theta": recovered.theta,
        "roundtrip_residual": residual,
    });
    Ok(())
}

fn run_counterexample(config: &ExperimentConfig, manifest: &mut Manifest) -> Result<()> {
    let (theta, theta_hat) = (config.theta_true, config.theta_alias);
    // The demonstration's base function u/(1+u), a coefficient-1 Hill curve.
    let base = HillFunction::activating(1.0, 1.0, 1.0, 0.0)?;
    let pair = counterexample_pair(theta, theta_hat, move |u| base.eval(u))?;

    let points = config.eval_points.max(2);
    let grid = lattice(0.0, 1.0, points);
    let mut out = String::from("u,f,f_hat,G,G_hat\n");
    let mut max_identity_gap = 0.0f64;
    let mut max_function_gap = 0.0f64;
    for &u in &grid {
        let f = pair.base(u);
        let fh = pair.eval(u);
        let g = theta * f / (1.0 + f);
        let gh = theta_hat * fh / (1.0 + fh);
        max_identity_gap = max_identity_gap.max((g - gh).abs());
        max_function_gap = max_function_gap.max((f - fh).abs());
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            io::fmt_f64(u),
            io::fmt_f64(f),
            io::fmt_f64(fh),
            io::fmt_f64(g),
            io::fmt_f64(gh)
        ));
    }
    std::fs::write(config.out_dir.join("counterexample.csv"), out)?;
    manifest.artifacts.push("counterexample.csv".into());

    manifest.final_metrics = serde_json::json!({
        "theta": theta,
        "theta_alias": theta_hat,
        "points": points,
        "max_identity_gap": max_identity_gap,
        "max_function_gap": max_function_gap,
    });
    io::save_json_pretty(
        &config.out_dir.join("counterexample_report.json"),
        &manifest.final_metrics,
    )?;
    manifest.artifacts.push("counterexample_report.json".into());
    Ok(())
}

fn run_rre(config: &ExperimentConfig, manifest: &mut Manifest) -> Result<()> {
    let params: RreParameters = match &config.rre_params {
        Some(path) => {
            let p: RreParameters = io::load_json(path)?;
            p.validate()?;
            p
        }
        None => RreParameters::default_single(),
    };
    let n = params.n_modules();
    let opts = SteadyStateOptions::default();

    // Steady-state table over the input lattice (diagonal for n > 1).
    let grid = lattice(0.0, 1.0, config.grid_points.max(2));
    let mut header: Vec<String> = (1..=n).map(|i| format!("u_{i}")).collect();
    header.extend((1..=n).map(|i| format!("Y_{i}")));
    header.push("Y_cell".to_string());
    let mut out = header.join(",");
    out.push('\n');
    for &t in &grid {
        let u = vec![t; n];
        let state = steady_state(&params, &u, SteadyStateMethod::Newton, &opts)?;
        let mut row: Vec<String> = u.iter().map(|&v| io::fmt_f64(v)).collect();
        row.extend(state.outputs().iter().map(|&v| io::fmt_f64(v)));
        row.push(io::fmt_f64(state.host.protein));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(config.out_dir.join("steady_states.csv"), out)?;
    manifest.artifacts.push("steady_states.csv".into());

    // Agreement of both solution routes at a few inputs.
    let mut method_gap = 0.0f64;
    for &t in &[0.0, 0.5, 1.0] {
        let u = vec![t; n];
        let a = steady_state(&params, &u, SteadyStateMethod::Integrate, &opts)?;
        let b = steady_state(&params, &u, SteadyStateMethod::Newton, &opts)?;
        for (x, y) in a.to_flat().iter().zip(b.to_flat().iter()) {
            method_gap = method_gap.max((x - y).abs() / y.abs().max(1e-12));
        }
    }

    // Reduction report plus the binding-rate sweep.
    let reduced = qssa_reduce(&params)?;
    let mut max_reduction_gap = 0.0f64;
    for &t in &grid {
        let u = vec![t; n];
        let full = steady_state(&params, &u, SteadyStateMethod::Newton, &opts)?;
        let pred = reduced.predict(&params.regulator_values(&u)?)?;
        for (a, b) in full.outputs().iter().zip(pred.iter()) {
            if *b > 0.0 {
                max_reduction_gap = max_reduction_gap.max((a - b).abs() / b);
            }
        }
    }
    let sweep = separation_sweep(&params, &config.sweep_factors)?;
    let mut sweep_csv = String::from("factor,max_rel_discrepancy\n");
    for e in &sweep {
        sweep_csv.push_str(&format!(
            "{},{}\n",
            io::fmt_f64(e.factor),
            io::fmt_f64(e.max_rel_discrepancy)
        ));
    }
    std::fs::write(config.out_dir.join("sweep.csv"), sweep_csv)?;
    manifest.artifacts.push("sweep.csv".into());

    let report = serde_json::json!({
        "theta": reduced.theta,
        "f_scale": reduced.f_scale,
        "host_load": reduced.host_load,
        "separation_factor": params.separation_factor(),
        "max_reduction_rel_gap": max_reduction_gap,
        "integrate_vs_newton_rel_gap": method_gap,
        "sweep": sweep,
    });
    io::save_json_pretty(&config.out_dir.join("reduction_report.json"), &report)?;
    manifest.artifacts.push("reduction_report.json".into());
    manifest.final_metrics = report;
    Ok(())
}

/// Flag overrides applied on top of a preset.
#[derive(Debug, Clone, Default)]
pub struct PresetOverrides {
    pub out_root: Option<PathBuf>,
    pub seed: Option<u64>,
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub log_stride: Option<usize>,
    pub grid_points: Option<usize>,
}

impl PresetOverrides {
    fn apply(&self, mut config: ExperimentConfig) -> ExperimentConfig {
        if let Some(root) = &self.out_root {
            let leaf = config.out_dir.file_name().map(PathBuf::from).unwrap_or_default();
            config.out_dir = root.join(leaf);
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(epochs) = self.epochs {
            config.epochs = epochs;
        }
        if let Some(lr) = self.learning_rate {
            config.learning_rate = lr;
        }
        if let Some(stride) = self.log_stride {
            config.log_stride = stride;
        }
        if let Some(g) = self.grid_points {
            config.grid_points = g;
        }
        config
    }
}

/// Run a named preset end to end; the two-model comparison preset trains the
/// monolithic baseline against the modular run's data and evaluates both
/// models on the grid (training the modular model first if its checkpoint is
/// missing).
pub fn run_preset(name: PresetName, overrides: &PresetOverrides) -> Result<Vec<Manifest>> {
    match name {
        PresetName::Fig3 | PresetName::Fig4 | PresetName::RreCheck => {
            Ok(vec![run(&overrides.apply(preset(name)))?])
        }
        PresetName::Fig5 => {
            let mut manifests = Vec::new();
            let modular_cfg = overrides.apply(preset(PresetName::Fig4));
            let modular_ckpt = modular_cfg.out_dir.join("checkpoint.json");
            if !modular_ckpt.exists() {
                eprintln!(
                    "note: modular checkpoint {} not found; training it first",
                    modular_ckpt.display()
                );
                manifests.extend(run_preset(PresetName::Fig4, overrides)?);
            }
            let mut mono_cfg = overrides.apply(preset(PresetName::Fig5));
            mono_cfg.dataset = Some(modular_cfg.out_dir.join("dataset.csv"));
            mono_cfg.truth = Some(modular_cfg.out_dir.join("truth.json"));
            manifests.push(run(&mono_cfg)?);

            for (ckpt, manifest_name) in [
                (modular_ckpt, "manifest_eval_modular.json"),
                (mono_cfg.out_dir.join("checkpoint.json"), "manifest_eval_monolithic.json"),
            ] {
                let eval_cfg = ExperimentConfig {
                    kind: ExperimentKind::GridEval,
                    out_dir: mono_cfg.out_dir.clone(),
                    manifest_name: manifest_name.to_string(),
                    checkpoint: Some(ckpt),
                    truth: Some(modular_cfg.out_dir.join("truth.json")),
                    grid_points: mono_cfg.grid_points,
                    seed: mono_cfg.seed,
                    ..ExperimentConfig::default()
                };
                manifests.push(run(&eval_cfg)?);
            }
            Ok(manifests)
        }
    }
}

/// Spread of a final metric across seeds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepStat {
    pub metric: String,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

/// Run a preset once per seed and summarize the spread of its final scalar
/// metrics. Each seed's artifacts land under `<out_root>/seed_<n>/`.
pub fn seed_sweep(
    name: PresetName,
    seeds: &[u64],
    base: &PresetOverrides,
) -> Result<Vec<SweepStat>> {
    if seeds.is_empty() {
        return Err(Error::InvalidConfig("seed sweep needs at least one seed".into()));
    }
    let root = base.out_root.clone().unwrap_or_else(|| PathBuf::from("out"));
    let mut per_metric: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for &seed in seeds {
        let overrides = PresetOverrides {
            out_root: Some(root.join(format!("seed_{seed}"))),
            seed: Some(seed),
            ..base.clone()
        };
        for manifest in run_preset(name, &overrides)? {
            collect_scalars("", &manifest.final_metrics, &mut per_metric);
        }
    }
    let stats: Vec<SweepStat> = per_metric
        .into_iter()
        .map(|(metric, values)| {
            let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            SweepStat { metric, min, max, mean }
        })
        .collect();
    io::save_json_pretty(
        &root.join("seed_sweep.json"),
        &serde_json::json!({ "preset": name.dir_name(), "seeds": seeds, "stats": stats }),
    )?;
    Ok(stats)
}

fn collect_scalars(
    prefix: &str,
    value: &serde_json::Value,
    out: &mut BTreeMap<String, Vec<f64>>,
) {
    match value {
        serde_json::Value::Number(n) => {
            if let Some(v) = n.as_f64() {
                out.entry(prefix.to_string()).or_default().push(v);
            }
        }
        serde_json::Value::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                collect_scalars(&format!("{prefix}[{i}]"), item, out);
            }
        }
        serde_json::Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                collect_scalars(&key, v, out);
            }
        }
        _ => {}
    }
}
