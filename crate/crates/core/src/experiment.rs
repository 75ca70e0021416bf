//! Seeded training runs, multi-seed suites with on-disk results, and the
//! intervention-budget sweep.
//!
//! Every random draw comes from a ChaCha8 stream derived from the run seed:
//! one stream each for the ground truth, the dataset and the initial
//! posterior, and one stream per training step and per evaluation step.
//! A run can therefore be resumed from a checkpoint at any step without
//! replaying earlier draws.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{BcdError, Result};
use crate::gradient::{grad_total_loss, optimizer_step, Adam, LossInputs, ParamLayout};
use crate::graph_scm::{FreeMask, GroundTruthScm};
use crate::io::load_dataset;
use crate::metrics::{evaluate, MetricsRecord, EDGE_THRESHOLD, METRIC_SAMPLES};
use crate::objective::DEFAULT_KL_WEIGHT;
use crate::posterior::{init_posterior, NoiseDraws, PosteriorParams};
use crate::sampler::{generate_dataset, Dataset, DatasetSpec, NodeMode, ValueMode, DEFAULT_SETS};

const STREAM_SCM: u64 = 0;
const STREAM_DATA: u64 = 1;
const STREAM_INIT: u64 = 2;
const STREAM_TRAIN: u64 = 1 << 32;
const STREAM_EVAL: u64 = 2 << 32;

/// Observational amounts of the observational-data sweep.
pub const FINDING3_N_OBS: [usize; 3] = [600, 1800, 3600];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Finding1,
    Finding2Obs,
    Finding2Mixed,
    Finding3Sweep,
    Finding4Fixed,
    Finding4Uniform,
    Custom,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::Finding1,
        Scenario::Finding2Obs,
        Scenario::Finding2Mixed,
        Scenario::Finding3Sweep,
        Scenario::Finding4Fixed,
        Scenario::Finding4Uniform,
        Scenario::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Finding1 => "finding1",
            Scenario::Finding2Obs => "finding2_obs",
            Scenario::Finding2Mixed => "finding2_mixed",
            Scenario::Finding3Sweep => "finding3_sweep",
            Scenario::Finding4Fixed => "finding4_fixed",
            Scenario::Finding4Uniform => "finding4_uniform",
            Scenario::Custom => "custom",
        }
    }
}

impl FromStr for Scenario {
    type Err = BcdError;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| BcdError::arg(format!("unknown scenario {s:?}")))
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskMode {
    /// Every below-diagonal entry is learnable.
    Full,
    /// Only the last edge `(d-1, d-2)` is learnable; the rest is fixed to the truth.
    SingleEdge,
}

impl FromStr for MaskMode {
    type Err = BcdError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(MaskMode::Full),
            "single_edge" | "single-edge" => Ok(MaskMode::SingleEdge),
            _ => Err(BcdError::arg(format!("unknown mask mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub d: usize,
    #[serde(rename = "D")]
    pub big_d: usize,
    pub er_edges_per_node: f64,
    pub sigma_gt: f64,
    pub steps: usize,
    pub lr: f64,
    pub seeds: Vec<u64>,
    pub n_obs: usize,
    pub n_int: usize,
    pub node_mode: NodeMode,
    pub value_mode: ValueMode,
    pub sets: usize,
    pub supervised: bool,
    pub mask_mode: MaskMode,
    /// `None` trains on the full dataset every step.
    pub batch_size: Option<usize>,
    pub eval_every: usize,
    pub kl_weight: f64,
    pub eval_samples: usize,
    pub tau: f64,
    /// Train on a saved dataset instead of generating one per seed.
    pub data_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scenario: Scenario::Custom,
            d: 6,
            big_d: 10,
            er_edges_per_node: 2.0,
            sigma_gt: 0.1,
            steps: 5000,
            lr: 0.002,
            seeds: (0..20).collect(),
            n_obs: 600,
            n_int: 0,
            node_mode: NodeMode::Single,
            value_mode: ValueMode::Fixed { value: 100.0 },
            sets: DEFAULT_SETS,
            supervised: false,
            mask_mode: MaskMode::Full,
            batch_size: None,
            eval_every: 50,
            kl_weight: DEFAULT_KL_WEIGHT,
            eval_samples: METRIC_SAMPLES,
            tau: EDGE_THRESHOLD,
            data_dir: None,
        }
    }
}

impl ExperimentConfig {
    /// The configuration of a named scenario. `finding3_sweep` starts at the
    /// smallest observational amount; see [`FINDING3_N_OBS`].
    pub fn preset(scenario: Scenario) -> Self {
        let base = ExperimentConfig {
            scenario,
            ..Self::default()
        };
        match scenario {
            Scenario::Finding1 => ExperimentConfig {
                supervised: true,
                n_obs: 600,
                ..base
            },
            Scenario::Finding2Obs => ExperimentConfig {
                mask_mode: MaskMode::SingleEdge,
                n_obs: 1800,
                ..base
            },
            Scenario::Finding2Mixed => ExperimentConfig {
                mask_mode: MaskMode::SingleEdge,
                n_obs: 900,
                n_int: 900,
                node_mode: NodeMode::Single,
                value_mode: ValueMode::Fixed { value: 100.0 },
                ..base
            },
            Scenario::Finding3Sweep => ExperimentConfig {
                n_obs: FINDING3_N_OBS[0],
                ..base
            },
            Scenario::Finding4Fixed => ExperimentConfig {
                n_obs: 300,
                n_int: 3300,
                node_mode: NodeMode::Multi,
                value_mode: ValueMode::Fixed { value: 100.0 },
                ..base
            },
            Scenario::Finding4Uniform => ExperimentConfig {
                n_obs: 300,
                n_int: 3300,
                node_mode: NodeMode::Multi,
                value_mode: ValueMode::Uniform { lo: -10.0, hi: 10.0 },
                ..base
            },
            Scenario::Custom => base,
        }
    }

    pub fn dataset_spec(&self) -> DatasetSpec {
        DatasetSpec {
            n_obs: self.n_obs,
            n_int: self.n_int,
            node_mode: self.node_mode,
            value_mode: self.value_mode,
            sets: self.sets,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(BcdError::arg(format!("need d >= 2, got {}", self.d)));
        }
        if self.big_d < self.d {
            return Err(BcdError::arg(format!("need D >= d, got D={} d={}", self.big_d, self.d)));
        }
        if self.eval_every == 0 {
            return Err(BcdError::arg("eval_every must be positive"));
        }
        if self.eval_samples == 0 {
            return Err(BcdError::arg("eval_samples must be positive"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(BcdError::arg(format!("learning rate must be positive, got {}", self.lr)));
        }
        if !(self.sigma_gt > 0.0 && self.sigma_gt.is_finite()) {
            return Err(BcdError::arg(format!("sigma must be positive, got {}", self.sigma_gt)));
        }
        if !(self.kl_weight >= 0.0 && self.kl_weight.is_finite()) {
            return Err(BcdError::arg(format!("kl_weight must be nonnegative, got {}", self.kl_weight)));
        }
        if self.batch_size == Some(0) {
            return Err(BcdError::arg("batch_size must be positive"));
        }
        if self.data_dir.is_none() && self.n_obs + self.n_int == 0 {
            return Err(BcdError::arg("dataset would be empty (n_obs = n_int = 0)"));
        }
        self.value_mode.validate()
    }

    fn mask(&self) -> Result<FreeMask> {
        match self.mask_mode {
            MaskMode::Full => Ok(FreeMask::full(self.d)),
            MaskMode::SingleEdge => FreeMask::single_edge(self.d),
        }
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Ground truth and training data of one run.
#[derive(Debug, Clone)]
pub struct Problem {
    pub scm: GroundTruthScm,
    pub data: Dataset,
}

/// Generates (or loads) the problem instance of `seed`.
pub fn prepare_problem(config: &ExperimentConfig, seed: u64) -> Result<Problem> {
    config.validate()?;
    if let Some(dir) = &config.data_dir {
        let (data, scm, _) = load_dataset(dir)?;
        if scm.d() != config.d || scm.big_d() != config.big_d {
            return Err(BcdError::dim(format!(
                "dataset has d={} D={}, config has d={} D={}",
                scm.d(),
                scm.big_d(),
                config.d,
                config.big_d
            )));
        }
        return Ok(Problem { scm, data });
    }
    let scm = GroundTruthScm::generate(
        config.d,
        config.big_d,
        config.er_edges_per_node,
        config.sigma_gt,
        &mut stream(seed, STREAM_SCM),
    )?;
    let data = generate_dataset(&scm, &config.dataset_spec(), &mut stream(seed, STREAM_DATA))?;
    Ok(Problem { scm, data })
}

/// Initial posterior of `seed`. Entries outside the mask are fixed to the truth.
pub fn initial_posterior(config: &ExperimentConfig, seed: u64, scm: &GroundTruthScm) -> Result<PosteriorParams> {
    init_posterior(
        config.mask()?,
        scm.l_gt.clone(),
        config.d,
        config.big_d,
        &mut stream(seed, STREAM_INIT),
    )
}

/// Optimizer state after `step` completed updates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub step: usize,
    pub params: PosteriorParams,
    pub adam: Adam,
}

impl Checkpoint {
    pub fn fresh(params: PosteriorParams, lr: f64) -> Result<Self> {
        let n = ParamLayout::of(&params).len();
        Ok(Checkpoint {
            step: 0,
            params,
            adam: Adam::new(lr, n)?,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string(self)?).map_err(|e| BcdError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| BcdError::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunOutcome {
    Completed,
    /// Stopped at `step` because the loss or a metric became non-finite.
    Diverged { step: usize, reason: String },
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub seed: u64,
    pub config: ExperimentConfig,
    pub trajectory: Vec<MetricsRecord>,
    pub checkpoint: Checkpoint,
    pub outcome: RunOutcome,
    pub seconds: f64,
}

impl RunResult {
    pub fn final_metrics(&self) -> Option<&MetricsRecord> {
        self.trajectory.last()
    }
}

fn batch(data: &Dataset, size: Option<usize>, rng: &mut ChaCha8Rng) -> Option<(DMatrix<f64>, crate::sampler::InterventionLabels)> {
    let n = data.n();
    match size {
        Some(b) if b < n => {
            let mut rows = index::sample(rng, n, b).into_vec();
            rows.sort_unstable();
            let x = data.x.select_rows(&rows);
            Some((x, data.labels.select(&rows)))
        }
        _ => None,
    }
}

fn is_eval_step(step: usize, config: &ExperimentConfig) -> bool {
    step.is_multiple_of(config.eval_every) || step == config.steps
}

fn eval_at(config: &ExperimentConfig, seed: u64, step: usize, problem: &Problem, params: &PosteriorParams) -> Result<MetricsRecord> {
    evaluate(
        step,
        params,
        &problem.scm,
        &problem.data,
        config.eval_samples,
        config.tau,
        &mut stream(seed, STREAM_EVAL + step as u64),
    )
}

/// Continues training from `start` up to `config.steps`, evaluating at
/// step 0, every `eval_every` steps and at the final step.
pub fn train_from(config: &ExperimentConfig, seed: u64, problem: &Problem, start: Checkpoint) -> Result<RunResult> {
    config.validate()?;
    let clock = Instant::now();
    let mut state = start;
    let mut trajectory = Vec::new();
    let supervision = config.supervised.then_some(&problem.scm);
    let n_free = state.params.mu_l.len();

    let finish = |state: Checkpoint, trajectory: Vec<MetricsRecord>, outcome: RunOutcome| RunResult {
        seed,
        config: config.clone(),
        trajectory,
        checkpoint: state,
        outcome,
        seconds: clock.elapsed().as_secs_f64(),
    };

    if state.step == 0 {
        match eval_at(config, seed, 0, problem, &state.params) {
            Ok(rec) if rec.is_finite() => trajectory.push(rec),
            Ok(rec) => {
                return Ok(finish(state, trajectory, diverged(0, format!("non-finite metrics {rec:?}"))));
            }
            Err(e) => return Ok(finish(state, trajectory, diverged(0, e.to_string()))),
        }
    }

    while state.step < config.steps {
        let step = state.step + 1;
        let mut rng = stream(seed, STREAM_TRAIN + step as u64);
        let sub = batch(&problem.data, config.batch_size, &mut rng);
        let (x, labels) = match &sub {
            Some((x, l)) => (x, l),
            None => (&problem.data.x, &problem.data.labels),
        };
        let noise = NoiseDraws::draw(n_free, x.nrows(), config.d, &mut rng);
        let inputs = LossInputs {
            perm: &problem.scm.perm,
            x,
            labels,
            noise: &noise,
            supervision,
            kl_weight: config.kl_weight,
        };
        let (loss, grad) = match grad_total_loss(&state.params, &inputs) {
            Ok(v) => v,
            Err(e) => return Ok(finish(state, trajectory, diverged(step, e.to_string()))),
        };
        if !loss.total.is_finite() || grad.values.iter().any(|g| !g.is_finite()) {
            let reason = format!("non-finite loss or gradient (mse_x={}, kl={:?})", loss.mse_x, loss.kl_joint);
            return Ok(finish(state, trajectory, diverged(step, reason)));
        }
        optimizer_step(&mut state.params, &grad, &mut state.adam)?;
        state.step = step;

        if is_eval_step(step, config) {
            match eval_at(config, seed, step, problem, &state.params) {
                Ok(rec) if rec.is_finite() => trajectory.push(rec),
                Ok(rec) => {
                    return Ok(finish(state, trajectory, diverged(step, format!("non-finite metrics {rec:?}"))));
                }
                Err(e) => return Ok(finish(state, trajectory, diverged(step, e.to_string()))),
            }
        }
    }
    Ok(finish(state, trajectory, RunOutcome::Completed))
}

fn diverged(step: usize, reason: String) -> RunOutcome {
    RunOutcome::Diverged { step, reason }
}

/// One complete, deterministic run for `seed`.
pub fn run_training(config: &ExperimentConfig, seed: u64) -> Result<RunResult> {
    let problem = prepare_problem(config, seed)?;
    let params = initial_posterior(config, seed, &problem.scm)?;
    train_from(config, seed, &problem, Checkpoint::fresh(params, config.lr)?)
}

pub fn write_metrics_csv(path: &Path, records: &[MetricsRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if records.is_empty() {
        w.write_record(crate::metrics::METRICS_HEADER)?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| BcdError::io(path, e))
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricsRecord>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header != crate::metrics::METRICS_HEADER {
        return Err(BcdError::Format {
            path: path.display().to_string(),
            reason: format!("unexpected header {header:?}"),
        });
    }
    rdr.deserialize().map(|r| r.map_err(BcdError::from)).collect()
}

/// Contents of `<seed>/manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub seed: u64,
    pub config: ExperimentConfig,
    pub outcome: RunOutcome,
    pub steps_completed: usize,
    pub seconds: f64,
}

/// Writes `metrics.csv`, `checkpoint.json` and `manifest.json` into `dir`.
pub fn save_run(dir: &Path, run: &RunResult) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| BcdError::io(dir, e))?;
    write_metrics_csv(&dir.join("metrics.csv"), &run.trajectory)?;
    run.checkpoint.save(&dir.join("checkpoint.json"))?;
    let manifest = RunManifest {
        seed: run.seed,
        config: run.config.clone(),
        outcome: run.outcome.clone(),
        steps_completed: run.checkpoint.step,
        seconds: run.seconds,
    };
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(|e| BcdError::io(&path, e))
}

/// Reloads a finished run if its manifest matches `config`.
pub fn load_finished_run(dir: &Path, config: &ExperimentConfig) -> Option<RunResult> {
    let text = fs::read_to_string(dir.join("manifest.json")).ok()?;
    let manifest: RunManifest = serde_json::from_str(&text).ok()?;
    if manifest.config != *config {
        return None;
    }
    let trajectory = read_metrics_csv(&dir.join("metrics.csv")).ok()?;
    let checkpoint = Checkpoint::load(&dir.join("checkpoint.json")).ok()?;
    Some(RunResult {
        seed: manifest.seed,
        config: manifest.config,
        trajectory,
        checkpoint,
        outcome: manifest.outcome,
        seconds: manifest.seconds,
    })
}

/// Quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty slice");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Median and interquartile range of one metric at one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

impl Spread {
    pub fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Spread {
            median: quantile(&v, 0.5),
            q1: quantile(&v, 0.25),
            q3: quantile(&v, 0.75),
        }
    }
}

pub const SUMMARY_METRICS: [&str; 5] = ["eshd", "auroc", "mse_L", "kl_true_learned", "mse_X"];

/// Aggregates at one step over every seed that reached it.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub step: usize,
    pub n_seeds: usize,
    pub spreads: Vec<Spread>,
}

/// Per-step aggregates of `metrics` over trajectories.
pub fn summarize(trajectories: &[&[MetricsRecord]], metrics: &[&str]) -> Result<Vec<SummaryRow>> {
    let mut steps: Vec<usize> = trajectories.iter().flat_map(|t| t.iter().map(|r| r.step)).collect();
    steps.sort_unstable();
    steps.dedup();
    let mut rows = Vec::with_capacity(steps.len());
    for step in steps {
        let at: Vec<&MetricsRecord> = trajectories
            .iter()
            .filter_map(|t| t.iter().find(|r| r.step == step))
            .collect();
        let mut spreads = Vec::with_capacity(metrics.len());
        for m in metrics {
            let values: Vec<f64> = at
                .iter()
                .map(|r| r.get(m).ok_or_else(|| BcdError::arg(format!("unknown metric {m:?}"))))
                .collect::<Result<_>>()?;
            spreads.push(Spread::of(&values));
        }
        rows.push(SummaryRow {
            step,
            n_seeds: at.len(),
            spreads,
        });
    }
    Ok(rows)
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow], metrics: &[&str]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["step".to_owned(), "n_seeds".to_owned()];
    for m in metrics {
        header.extend([format!("{m}_median"), format!("{m}_q1"), format!("{m}_q3")]);
    }
    w.write_record(&header)?;
    for row in rows {
        let mut rec = vec![row.step.to_string(), row.n_seeds.to_string()];
        for s in &row.spreads {
            rec.extend([s.median.to_string(), s.q1.to_string(), s.q3.to_string()]);
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| BcdError::io(path, e))
}

/// Result of one seed inside a suite.
#[derive(Debug)]
pub struct SeedReport {
    pub seed: u64,
    pub resumed: bool,
    pub result: std::result::Result<RunResult, String>,
}

#[derive(Debug)]
pub struct SuiteSummary {
    pub scenario: Scenario,
    pub seeds: Vec<SeedReport>,
    pub rows: Vec<SummaryRow>,
}

impl SuiteSummary {
    pub fn runs(&self) -> impl Iterator<Item = &RunResult> {
        self.seeds.iter().filter_map(|s| s.result.as_ref().ok())
    }

    /// Median and quartiles of a metric over the seeds' last records.
    pub fn final_spread(&self, metric: &str) -> Option<Spread> {
        let values: Vec<f64> = self
            .runs()
            .filter_map(|r| r.final_metrics().and_then(|m| m.get(metric)))
            .collect();
        (!values.is_empty()).then(|| Spread::of(&values))
    }

    pub fn any_failed(&self) -> bool {
        self.seeds
            .iter()
            .any(|s| !matches!(&s.result, Ok(r) if r.outcome == RunOutcome::Completed))
    }
}

/// Runs every seed of `config` in parallel. With `out`, results land in
/// `<out>/<seed>/` and seeds whose manifest already matches are reloaded
/// instead of recomputed; `<out>/summary.csv` holds the aggregates.
pub fn run_suite(config: &ExperimentConfig, out: Option<&Path>) -> Result<SuiteSummary> {
    config.validate()?;
    if config.seeds.is_empty() {
        return Err(BcdError::arg("suite needs at least one seed"));
    }
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|e| BcdError::io(dir, e))?;
    }
    let seeds: Vec<SeedReport> = config
        .seeds
        .par_iter()
        .map(|&seed| {
            let seed_dir = out.map(|d| d.join(seed.to_string()));
            if let Some(run) = seed_dir.as_deref().and_then(|d| load_finished_run(d, config)) {
                return SeedReport {
                    seed,
                    resumed: true,
                    result: Ok(run),
                };
            }
            let result = run_training(config, seed).and_then(|run| {
                if let Some(dir) = &seed_dir {
                    save_run(dir, &run)?;
                }
                Ok(run)
            });
            SeedReport {
                seed,
                resumed: false,
                result: result.map_err(|e| e.to_string()),
            }
        })
        .collect();
    let trajectories: Vec<&[MetricsRecord]> = seeds
        .iter()
        .filter_map(|s| s.result.as_ref().ok().map(|r| r.trajectory.as_slice()))
        .collect();
    let rows = summarize(&trajectories, &SUMMARY_METRICS)?;
    if let Some(dir) = out {
        write_summary_csv(&dir.join("summary.csv"), &rows, &SUMMARY_METRICS)?;
    }
    Ok(SuiteSummary {
        scenario: config.scenario,
        seeds,
        rows,
    })
}

/// One retraining per interventional budget. The ground truth, the
/// observational rows and the initial posterior are shared across budgets.
pub fn sweep_interventional(config: &ExperimentConfig, seed: u64, int_budgets: &[usize]) -> Result<Vec<RunResult>> {
    if int_budgets.windows(2).any(|w| w[0] > w[1]) {
        return Err(BcdError::arg("interventional budgets must be ascending"));
    }
    int_budgets
        .iter()
        .map(|&n_int| {
            let cfg = ExperimentConfig {
                n_int,
                ..config.clone()
            };
            run_training(&cfg, seed)
        })
        .collect()
}

/// Configs of the observational-amount sweep, one per entry of [`FINDING3_N_OBS`].
pub fn finding3_configs(base: &ExperimentConfig) -> Vec<ExperimentConfig> {
    FINDING3_N_OBS
        .iter()
        .map(|&n_obs| ExperimentConfig {
            n_obs,
            n_int: 0,
            ..base.clone()
        })
        .collect()
}
