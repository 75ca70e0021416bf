//! Command-line front end: `generate`, `train`, `plot` and `check-grads`.
//!
//! Exit codes: 0 on success, 1 on usage or input errors, 2 on numeric
//! failures (diverged runs, failed gradient checks).

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{BcdError, Result};
use crate::experiment::{finding3_configs, prepare_problem, run_suite, ExperimentConfig, MaskMode, RunOutcome, Scenario};
use crate::gradient::{GradCheckProblem, GRAD_TOLERANCE};
use crate::io::{load_dataset, save_dataset, DatasetManifest};
use crate::plot::plot_scenario;
use crate::sampler::{NodeMode, ValueMode, DEFAULT_SETS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "latent-bcd", version, about = "Bayesian causal discovery in a linearly projected latent SCM")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a ground-truth SCM and write a dataset directory.
    Generate(GenerateArgs),
    /// Train one suite of seeds, from a scenario preset or a saved dataset.
    Train(TrainArgs),
    /// Render per-metric SVG panels from a scenario output directory.
    Plot(PlotArgs),
    /// Compare exact gradients with central finite differences.
    CheckGrads(CheckGradsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NodeModeArg {
    Single,
    Multi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ValueModeArg {
    Fixed,
    Uniform,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Number of latent nodes.
    #[arg(long, default_value_t = 6)]
    pub d: usize,
    /// Observed dimension.
    #[arg(long = "D", default_value_t = 10)]
    pub big_d: usize,
    /// Expected edges per node of the ER graph.
    #[arg(long, default_value_t = 2.0)]
    pub er: f64,
    /// Noise standard deviation of every node.
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,
    /// Observational rows.
    #[arg(long, default_value_t = 600)]
    pub n_obs: usize,
    /// Interventional rows.
    #[arg(long, default_value_t = 0)]
    pub n_int: usize,
    /// Nodes per intervention set.
    #[arg(long, value_enum, default_value_t = NodeModeArg::Single)]
    pub node_mode: NodeModeArg,
    /// How intervention values are chosen.
    #[arg(long, value_enum, default_value_t = ValueModeArg::Fixed)]
    pub value_mode: ValueModeArg,
    /// Intervention value in fixed mode.
    #[arg(long, default_value_t = 100.0)]
    pub value: f64,
    /// Lower bound in uniform mode.
    #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
    pub lo: f64,
    /// Upper bound in uniform mode.
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    pub hi: f64,
    /// Number of intervention sets; must divide --n-int.
    #[arg(long, default_value_t = DEFAULT_SETS)]
    pub sets: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output dataset directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Preset: finding1, finding2_obs, finding2_mixed, finding3_sweep,
    /// finding4_fixed, finding4_uniform, or custom (requires --data).
    #[arg(long)]
    pub scenario: Option<String>,
    /// Dataset directory written by `generate`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Number of seeds; runs seeds 0..N.
    #[arg(long)]
    pub seeds: Option<u64>,
    /// Add the KL term against the ground-truth observational joint.
    #[arg(long)]
    pub supervised: bool,
    /// Learnable entries: full or single_edge.
    #[arg(long)]
    pub mask: Option<String>,
    /// Steps between metric evaluations.
    #[arg(long)]
    pub eval_every: Option<usize>,
    /// Rows per step; defaults to the full dataset.
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub kl_weight: Option<f64>,
    /// Output root; results go to <out>/<scenario>/<seed>/.
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Scenario directory holding <seed>/metrics.csv files.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Comma-separated metrics: eshd, auroc, mse_L, kl, mse_X.
    #[arg(long, default_value = "eshd,auroc,mse_L,kl")]
    pub metrics: String,
    /// Image format; only svg is supported.
    #[arg(long, default_value = "svg")]
    pub format: String,
    /// Output directory; defaults to --in.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckGradsArgs {
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    #[arg(long = "D", default_value_t = 4)]
    pub big_d: usize,
    /// Include the KL term.
    #[arg(long)]
    pub supervised: bool,
    /// Finite-difference step, in [1e-7, 1e-3].
    #[arg(long, default_value_t = 1e-5)]
    pub h: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Maps an error to its exit code.
pub fn exit_code(e: &BcdError) -> i32 {
    match e {
        BcdError::Numeric(_) | BcdError::NotPositiveDefinite(_) => EXIT_NUMERIC,
        _ => EXIT_USAGE,
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(&a, out),
        Command::Train(a) => cmd_train(&a, out),
        Command::Plot(a) => cmd_plot(&a, out),
        Command::CheckGrads(a) => cmd_check_grads(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn io_err(e: std::io::Error) -> BcdError {
    BcdError::Io {
        path: "<stdout>".into(),
        source: e,
    }
}

pub fn cmd_generate(a: &GenerateArgs, out: &mut dyn Write) -> Result<i32> {
    let config = ExperimentConfig {
        d: a.d,
        big_d: a.big_d,
        er_edges_per_node: a.er,
        sigma_gt: a.sigma,
        n_obs: a.n_obs,
        n_int: a.n_int,
        node_mode: match a.node_mode {
            NodeModeArg::Single => NodeMode::Single,
            NodeModeArg::Multi => NodeMode::Multi,
        },
        value_mode: match a.value_mode {
            ValueModeArg::Fixed => ValueMode::Fixed { value: a.value },
            ValueModeArg::Uniform => ValueMode::Uniform { lo: a.lo, hi: a.hi },
        },
        sets: a.sets,
        ..ExperimentConfig::default()
    };
    let problem = prepare_problem(&config, a.seed)?;
    let manifest = DatasetManifest {
        d: a.d,
        big_d: a.big_d,
        er_edges_per_node: a.er,
        sigma: a.sigma,
        spec: config.dataset_spec(),
        seed: a.seed,
    };
    save_dataset(&a.out, &problem.data, &problem.scm, &manifest)?;
    writeln!(
        out,
        "wrote {} rows ({} observational, {} edges in ground truth) to {}",
        problem.data.n(),
        problem.data.n_observational(),
        problem.scm.l_gt.edge_count(),
        a.out.display()
    )
    .map_err(io_err)?;
    Ok(EXIT_OK)
}

/// Resolves train flags into the configs to run and their output directories.
pub fn train_plan(a: &TrainArgs) -> Result<Vec<(ExperimentConfig, PathBuf)>> {
    let scenario = match (&a.scenario, &a.data) {
        (Some(s), _) => s.parse::<Scenario>()?,
        (None, Some(_)) => Scenario::Custom,
        (None, None) => return Err(BcdError::arg("train needs --scenario or --data")),
    };
    let mut config = ExperimentConfig::preset(scenario);
    match (&a.data, scenario) {
        (Some(dir), Scenario::Custom) => {
            let (_, scm, manifest) = load_dataset(dir)?;
            config.d = scm.d();
            config.big_d = scm.big_d();
            config.er_edges_per_node = manifest.er_edges_per_node;
            config.sigma_gt = scm.sigma_gt;
            config.n_obs = manifest.spec.n_obs;
            config.n_int = manifest.spec.n_int;
            config.node_mode = manifest.spec.node_mode;
            config.value_mode = manifest.spec.value_mode;
            config.sets = manifest.spec.sets;
            config.data_dir = Some(dir.clone());
        }
        (None, Scenario::Custom) => return Err(BcdError::arg("the custom scenario needs --data")),
        (Some(_), _) => return Err(BcdError::arg("--data only combines with --scenario custom")),
        (None, _) => {}
    }
    if let Some(v) = a.steps {
        config.steps = v;
    }
    if let Some(v) = a.lr {
        config.lr = v;
    }
    if let Some(n) = a.seeds {
        config.seeds = (0..n).collect();
    }
    if a.supervised {
        config.supervised = true;
    }
    if let Some(m) = &a.mask {
        config.mask_mode = m.parse::<MaskMode>()?;
    }
    if let Some(v) = a.eval_every {
        config.eval_every = v;
    }
    if a.batch_size.is_some() {
        config.batch_size = a.batch_size;
    }
    if let Some(v) = a.kl_weight {
        config.kl_weight = v;
    }
    config.validate()?;
    if config.seeds.is_empty() {
        return Err(BcdError::arg("--seeds must be at least 1"));
    }

    let root = a.out.join(scenario.name());
    Ok(if scenario == Scenario::Finding3Sweep {
        finding3_configs(&config)
            .into_iter()
            .map(|c| {
                let dir = root.join(format!("n_obs_{}", c.n_obs));
                (c, dir)
            })
            .collect()
    } else {
        vec![(config, root)]
    })
}

pub fn cmd_train(a: &TrainArgs, out: &mut dyn Write) -> Result<i32> {
    let mut code = EXIT_OK;
    for (config, dir) in train_plan(a)? {
        let suite = run_suite(&config, Some(&dir))?;
        writeln!(out, "{} -> {}", config.scenario, dir.display()).map_err(io_err)?;
        for s in &suite.seeds {
            let line = match &s.result {
                Ok(run) => {
                    let status = match &run.outcome {
                        RunOutcome::Completed => "completed".to_owned(),
                        RunOutcome::Diverged { step, reason } => {
                            code = EXIT_NUMERIC;
                            format!("diverged at step {step}: {reason}")
                        }
                    };
                    match run.final_metrics() {
                        Some(f) => format!(
                            "seed {}: step {} eshd {:.4} auroc {:.4} mse_L {:.6} kl {:.6} mse_X {:.6} ({status}{})",
                            s.seed,
                            f.step,
                            f.eshd,
                            f.auroc,
                            f.mse_l,
                            f.kl_true_learned,
                            f.mse_x,
                            if s.resumed { ", resumed" } else { "" }
                        ),
                        None => format!("seed {}: no metrics ({status})", s.seed),
                    }
                }
                Err(e) => {
                    code = code.max(EXIT_USAGE);
                    format!("seed {}: failed: {e}", s.seed)
                }
            };
            writeln!(out, "{line}").map_err(io_err)?;
        }
        if let (Some(e), Some(a)) = (suite.final_spread("eshd"), suite.final_spread("auroc")) {
            writeln!(out, "median final eshd {:.4}, auroc {:.4}", e.median, a.median).map_err(io_err)?;
        }
    }
    Ok(code)
}

pub fn cmd_plot(a: &PlotArgs, out: &mut dyn Write) -> Result<i32> {
    if a.format != "svg" {
        return Err(BcdError::arg(format!("unsupported format {:?}; only svg", a.format)));
    }
    let metrics: Vec<&str> = a.metrics.split(',').map(str::trim).filter(|m| !m.is_empty()).collect();
    if metrics.is_empty() {
        return Err(BcdError::arg("--metrics is empty"));
    }
    let dest = a.out.clone().unwrap_or_else(|| a.input.clone());
    for series in plot_scenario(&a.input, &metrics, &dest)? {
        writeln!(out, "{}: {} points -> {}", series.name, series.len(), dest.join(format!("{}.svg", series.name)).display())
            .map_err(io_err)?;
    }
    Ok(EXIT_OK)
}

pub fn cmd_check_grads(a: &CheckGradsArgs, out: &mut dyn Write) -> Result<i32> {
    let report = GradCheckProblem::random(a.d, a.big_d, a.seed)?.check(a.supervised, a.h)?;
    writeln!(out, "{}", serde_json::to_string_pretty(&report)?).map_err(io_err)?;
    Ok(if report.max_rel_err < GRAD_TOLERANCE { EXIT_OK } else { EXIT_NUMERIC })
}
