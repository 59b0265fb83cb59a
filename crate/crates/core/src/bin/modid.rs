//! Command-line entry point: data generation, training, evaluation,
//! closed-form recovery, the non-identifiability demonstration, mass-action
//! simulation, gradient checking, and the named experiment presets.
//!
//! Exit codes: 0 success, 2 configuration errors, 3 numerical failures (a
//! diagnostic JSON lands in the output directory).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use modid::composition::{generate_dataset, Provenance};
use modid::config::GroundTruth;
use modid::error::Error;
use modid::experiment::{
    run, run_preset, ExperimentConfig, ExperimentKind, PresetName, PresetOverrides,
};
use modid::gradcheck::{check_random_instances, GradCheckConfig};
use modid::io;

#[derive(Parser)]
#[command(
    name = "modid",
    version,
    about = "Structure-aware system identification for resource-coupled modules"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,

    /// Seed for sampling and initialization.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Metric logging stride in epochs (0 disables logging).
    #[arg(long, global = true)]
    log_stride: Option<usize>,
}

#[derive(Args, Clone, Default)]
struct TrainFlags {
    /// Training dataset CSV (generated from the ground truth when omitted).
    #[arg(long)]
    dataset: Option<PathBuf>,

    /// Ground-truth JSON (a built-in reference system when omitted).
    #[arg(long)]
    truth: Option<PathBuf>,

    #[arg(long)]
    epochs: Option<usize>,

    #[arg(long)]
    lr: Option<f64>,

    /// Network layer sizes, e.g. 1,20,20,20,20,1.
    #[arg(long, value_delimiter = ',')]
    arch: Option<Vec<usize>>,

    /// Initial value for each learnable composition parameter.
    #[arg(long)]
    theta_init: Option<f64>,

    /// Force the composition parameters to be learnable (or not).
    #[arg(long)]
    train_theta: Option<bool>,

    /// Pass surrogate outputs through softplus to keep them positive.
    #[arg(long, default_value_t = false)]
    softplus: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample a uni-modular training set and write it as CSV.
    GenData {
        /// Ground-truth JSON (a built-in reference system when omitted).
        #[arg(long)]
        truth: Option<PathBuf>,

        /// Number of modules of the built-in reference system (1 or 2).
        #[arg(long, default_value_t = 2)]
        modules: usize,

        /// Uniform samples per module.
        #[arg(long, default_value_t = 100)]
        per_module: usize,
    },

    /// Train the structured modular model or the monolithic baseline.
    Train {
        /// Model family: modular or monolithic.
        #[arg(long, default_value = "modular")]
        model: String,

        /// Number of modules (picks the built-in reference truth).
        #[arg(long, default_value_t = 2)]
        modules: usize,

        #[command(flatten)]
        flags: TrainFlags,
    },

    /// Evaluate a checkpoint against the ground truth on a uniform lattice.
    EvalGrid {
        #[arg(long)]
        checkpoint: PathBuf,

        #[arg(long)]
        truth: Option<PathBuf>,

        /// Lattice points per axis.
        #[arg(long, default_value_t = 100)]
        grid: usize,
    },

    /// Invert eight probe measurements into composition parameters and
    /// module function values.
    Recover {
        /// JSON with `probes` ([[u1a,u1b],[u2a,u2b]]) and `g_values` (8 reals).
        #[arg(long)]
        input: PathBuf,
    },

    /// Demonstrate the aliasing pair: same composed output, different
    /// module function, once the composition parameter is misattributed.
    Counterexample {
        #[arg(long, default_value_t = 5.0)]
        theta: f64,

        #[arg(long = "theta-hat", default_value_t = 2.0)]
        theta_hat: f64,

        /// Evaluation points on [0, 1].
        #[arg(long, default_value_t = 1000)]
        points: usize,
    },

    /// Solve the mass-action model's steady states and validate the
    /// reduction to the composition map.
    SimulateRre {
        /// Parameter JSON (the built-in single-module set when omitted).
        #[arg(long)]
        params: Option<PathBuf>,

        /// Input lattice size.
        #[arg(long, default_value_t = 20)]
        grid: usize,

        /// Binding-rate scale factors for the separation sweep.
        #[arg(long, value_delimiter = ',')]
        factors: Option<Vec<f64>>,
    },

    /// Compare reverse-mode gradients against central finite differences on
    /// random networks and batches.
    GradCheck {
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },

    /// Run a named experiment preset (fig3, fig4, fig5, rre_check).
    Preset {
        name: String,

        #[arg(long)]
        epochs: Option<usize>,

        #[arg(long)]
        lr: Option<f64>,

        #[arg(long)]
        grid: Option<usize>,
    },

    /// Re-run a preset across seeds and report the spread of final metrics.
    SeedSweep {
        /// Preset to sweep.
        #[arg(long, default_value = "fig3")]
        preset: String,

        /// Seeds to run, e.g. 1,2,3.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        seeds: Vec<u64>,

        #[arg(long)]
        epochs: Option<usize>,

        #[arg(long)]
        lr: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err((err, out_dir)) => {
            eprintln!("error: {err}");
            let code = err.exit_code();
            if code == 3 {
                if let Some(dir) = out_dir {
                    let _ = std::fs::create_dir_all(&dir);
                    let diag = serde_json::json!({
                        "error": err.to_string(),
                        "kind": "numerical_failure",
                    });
                    let path = dir.join("diagnostic.json");
                    if io::save_json_pretty(&path, &diag).is_ok() {
                        eprintln!("diagnostic written to {}", path.display());
                    }
                }
            }
            ExitCode::from(code as u8)
        }
    }
}

type CmdResult = std::result::Result<(), (Error, Option<PathBuf>)>;

fn dispatch(cli: Cli) -> CmdResult {
    // A config file provides the base; flags layer on top.
    let base: Option<ExperimentConfig> = match &cli.config {
        Some(path) => {
            Some(io::load_json(path).map_err(|e| (e, None))?)
        }
        None => None,
    };
    let out_dir = cli.out.clone();
    let fail_dir = out_dir.clone().or_else(|| base.as_ref().map(|c| c.out_dir.clone()));

    let apply_globals = |mut cfg: ExperimentConfig| -> ExperimentConfig {
        if let Some(seed) = cli.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &cli.out {
            cfg.out_dir = out.clone();
        }
        if let Some(stride) = cli.log_stride {
            cfg.log_stride = stride;
        }
        cfg
    };

    match cli.cmd {
        Cmd::GenData { truth, modules, per_module } => {
            let mut cfg = base.unwrap_or_default();
            cfg = apply_globals(cfg);
            cfg.truth = truth.or(cfg.truth);
            cfg.per_module = per_module;
            let err_dir = Some(cfg.out_dir.clone());
            gen_data(&cfg, modules).map_err(|e| (e, err_dir))
        }
        Cmd::Train { model, modules, flags } => {
            let mut cfg = base.unwrap_or_else(|| {
                let mut c = ExperimentConfig::default();
                c.kind = match (model.as_str(), modules) {
                    ("modular", 1) => ExperimentKind::SingleModule,
                    ("modular", _) => ExperimentKind::TwoModuleModular,
                    _ => ExperimentKind::TwoModuleMonolithic,
                };
                match c.kind {
                    ExperimentKind::SingleModule => {
                        c.epochs = 1000;
                        c.learning_rate = 0.1;
                    }
                    ExperimentKind::TwoModuleModular => {
                        c.epochs = 84_000;
                        c.learning_rate = 0.005;
                    }
                    ExperimentKind::TwoModuleMonolithic => {
                        c.epochs = 8_000;
                        c.learning_rate = 0.001;
                        c.arch = vec![2, 50, 50, 50, 50, 2];
                    }
                    _ => unreachable!(),
                }
                c
            });
            if model != "modular" && model != "monolithic" {
                return Err((
                    Error::InvalidConfig(format!(
                        "unknown model {model:?}; expected modular or monolithic"
                    )),
                    None,
                ));
            }
            cfg = apply_globals(cfg);
            cfg.dataset = flags.dataset.or(cfg.dataset);
            cfg.truth = flags.truth.or(cfg.truth);
            if let Some(e) = flags.epochs {
                cfg.epochs = e;
            }
            if let Some(lr) = flags.lr {
                cfg.learning_rate = lr;
            }
            if let Some(arch) = flags.arch {
                cfg.arch = arch;
            }
            if let Some(t) = flags.theta_init {
                cfg.theta_init = t;
            }
            if flags.train_theta.is_some() {
                cfg.train_theta = flags.train_theta;
            }
            cfg.softplus_output = flags.softplus;
            let err_dir = Some(cfg.out_dir.clone());
            run(&cfg).map(summarize).map_err(|e| (e, err_dir))
        }
        Cmd::EvalGrid { checkpoint, truth, grid } => {
            let mut cfg = base.unwrap_or_default();
            cfg.kind = ExperimentKind::GridEval;
            cfg = apply_globals(cfg);
            cfg.checkpoint = Some(checkpoint);
            cfg.truth = truth.or(cfg.truth);
            cfg.grid_points = grid;
            let err_dir = Some(cfg.out_dir.clone());
            run(&cfg).map(summarize).map_err(|e| (e, err_dir))
        }
        Cmd::Recover { input } => {
            let mut cfg = base.unwrap_or_default();
            cfg.kind = ExperimentKind::Recover;
            cfg = apply_globals(cfg);
            cfg.probes = Some(input);
            let err_dir = Some(cfg.out_dir.clone());
            run(&cfg).map(summarize).map_err(|e| (e, err_dir))
        }
        Cmd::Counterexample { theta, theta_hat, points } => {
            let mut cfg = base.unwrap_or_default();
            cfg.kind = ExperimentKind::Counterexample;
            cfg = apply_globals(cfg);
            cfg.theta_true = theta;
            cfg.theta_alias = theta_hat;
            cfg.eval_points = points;
            let err_dir = Some(cfg.out_dir.clone());
            run(&cfg).map(summarize).map_err(|e| (e, err_dir))
        }
        Cmd::SimulateRre { params, grid, factors } => {
            let mut cfg = base.unwrap_or_default();
            cfg.kind = ExperimentKind::Rre;
            cfg = apply_globals(cfg);
            cfg.rre_params = params.or(cfg.rre_params);
            cfg.grid_points = grid;
            if let Some(f) = factors {
                cfg.sweep_factors = f;
            }
            let err_dir = Some(cfg.out_dir.clone());
            run(&cfg).map(summarize).map_err(|e| (e, err_dir))
        }
        Cmd::GradCheck { trials } => {
            let cfg = GradCheckConfig {
                trials,
                seed: cli.seed.unwrap_or(GradCheckConfig::default().seed),
                ..Default::default()
            };
            let report = check_random_instances(&cfg).map_err(|e| (e, fail_dir.clone()))?;
            println!(
                "gradcheck: {} trials, {} parameters, max rel err {:.3e}, \
                 max abs err {:.3e}, {} resampled, {} failures",
                report.trials,
                report.params_checked,
                report.max_rel_err,
                report.max_abs_err,
                report.resampled,
                report.failures
            );
            if let Some(dir) = &out_dir {
                std::fs::create_dir_all(dir).map_err(|e| (Error::Io(e), None))?;
                io::save_json_pretty(&dir.join("gradcheck_report.json"), &serde_json::json!({
                    "trials": report.trials,
                    "params_checked": report.params_checked,
                    "max_rel_err": report.max_rel_err,
                    "max_abs_err": report.max_abs_err,
                    "resampled": report.resampled,
                    "failures": report.failures,
                }))
                .map_err(|e| (e, None))?;
            }
            if report.passed() {
                Ok(())
            } else {
                Err((
                    Error::Convergence(format!(
                        "{} gradient entries disagree with finite differences",
                        report.failures
                    )),
                    fail_dir,
                ))
            }
        }
        Cmd::Preset { name, epochs, lr, grid } => {
            let preset_name: PresetName = name.parse().map_err(|e| (e, None))?;
            let overrides = PresetOverrides {
                out_root: out_dir.clone(),
                seed: cli.seed,
                epochs,
                learning_rate: lr,
                log_stride: cli.log_stride,
                grid_points: grid,
            };
            let manifests =
                run_preset(preset_name, &overrides).map_err(|e| (e, fail_dir.clone()))?;
            for m in manifests {
                summarize(m);
            }
            Ok(())
        }
    }
}

fn summarize(manifest: modid::experiment::Manifest) {
    println!(
        "done: {:?} -> {} ({:.2}s)",
        manifest.config.kind,
        manifest.config.out_dir.display(),
        manifest.wall_time_seconds
    );
    if !manifest.final_metrics.is_null() {
        println!("  {}", manifest.final_metrics);
    }
}

fn gen_data(cfg: &ExperimentConfig, modules: usize) -> modid::error::Result<()> {
    cfg.prepare()?;
    let truth = match &cfg.truth {
        Some(path) => GroundTruth::load(path)?,
        None => match modules {
            1 => GroundTruth::single_module_example(cfg.seed),
            2 => GroundTruth::two_module_example(cfg.seed),
            n => {
                return Err(Error::InvalidConfig(format!(
                    "no built-in ground truth for {n} modules; pass --truth"
                )))
            }
        },
    };
    let inputs = truth.input_set.sample(cfg.per_module, cfg.seed);
    let data = generate_dataset(&truth.functions, &truth.map()?, inputs, Provenance::Unimodular)?;
    io::write_dataset_csv(&cfg.out_dir.join("dataset.csv"), &data)?;
    truth.save(&cfg.out_dir.join("truth.json"))?;
    println!(
        "wrote {} pairs to {}",
        data.len(),
        cfg.out_dir.join("dataset.csv").display()
    );
    Ok(())
}
