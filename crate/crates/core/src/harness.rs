//! Batch evaluation over seed lists and config sweeps.
//!
//! Output files per run directory:
//!
//! - `episodes.jsonl`: one [`EpisodeRecord`] per line, in seed-list order.
//! - `coverage_curve.csv`: `step,mean,std` for steps `1..=steps`. An episode
//!   that ended earlier contributes its final coverage to later steps. `std`
//!   is the population standard deviation.
//! - `interventions.csv`: `seed,rate`, with rate = interventions / steps.
//!
//! A sweep writes one such directory per variant plus `summary.csv`.
//! Every aggregate is a pure fold over the episode records, so outputs are
//! identical for identical inputs regardless of the worker count.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::EnvConfig;
use crate::episode::{run_episode, EpisodeRecord, RunError};
use crate::error::{ConfigError, WeightsError};
use crate::policy::{PolicyFactory, PolicySpec};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("loading policy weights")]
    Weights(#[from] WeightsError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("episode with seed {seed}")]
    Episode { seed: u64, source: RunError },
    #[error("{}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub label: String,
    pub seeds: Vec<u64>,
    /// Mean coverage after steps `1..=steps`; nondecreasing.
    pub coverage_mean: Vec<f64>,
    pub coverage_std: Vec<f64>,
    /// Per episode, in seed order.
    pub intervention_rates: Vec<f64>,
    pub final_coverage: Vec<f64>,
}

impl RunSummary {
    pub fn median_intervention_rate(&self) -> f64 {
        median(&self.intervention_rates)
    }

    pub fn mean_intervention_rate(&self) -> f64 {
        mean(&self.intervention_rates)
    }

    pub fn mean_final_coverage(&self) -> f64 {
        mean(&self.final_coverage)
    }

    /// First step at which mean coverage reaches `level`.
    pub fn steps_to_coverage(&self, level: f64) -> Option<usize> {
        self.coverage_mean.iter().position(|&c| c >= level).map(|i| i + 1)
    }
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Midpoint of the two central values for even lengths.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Coverage of `record` after `step` steps (0 = after the initial scan).
pub fn coverage_at(record: &EpisodeRecord, step: usize) -> f64 {
    match step {
        0 => record.initial_coverage,
        s if s <= record.steps.len() => record.steps[s - 1].coverage,
        _ => record.final_coverage,
    }
}

pub fn summarize(label: &str, records: &[EpisodeRecord], steps: usize) -> RunSummary {
    let n = records.len() as f64;
    let mut coverage_mean = Vec::with_capacity(steps);
    let mut coverage_std = Vec::with_capacity(steps);
    for s in 1..=steps {
        let values: Vec<f64> = records.iter().map(|r| coverage_at(r, s)).collect();
        let m = mean(&values);
        let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
        coverage_mean.push(m);
        coverage_std.push(var.sqrt());
    }
    RunSummary {
        label: label.to_string(),
        seeds: records.iter().map(|r| r.seed).collect(),
        coverage_mean,
        coverage_std,
        intervention_rates: records.iter().map(|r| r.intervention_rate).collect(),
        final_coverage: records.iter().map(|r| r.final_coverage).collect(),
    }
}

/// `count` consecutive seeds starting at `base`.
pub fn seed_range(base: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|i| base.wrapping_add(i)).collect()
}

/// Runs one episode per seed, at most `steps` steps each, on `workers`
/// threads (0 = all cores). Records come back in seed order.
pub fn run_episodes(
    config: &EnvConfig,
    factory: &PolicyFactory,
    seeds: &[u64],
    steps: usize,
    workers: usize,
) -> Result<Vec<EpisodeRecord>, HarnessError> {
    config.validate()?;
    let run = |&seed: &u64| {
        let mut policy = factory.make(seed);
        run_episode(config, seed, policy.as_mut(), steps)
            .map_err(|source| HarnessError::Episode { seed, source })
    };
    if workers == 1 {
        return seeds.iter().map(run).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Invalid(format!("worker pool: {e}")))?;
    pool.install(|| seeds.par_iter().map(run).collect())
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_path_buf(), source }
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<fs::File>) -> io::Result<()>) -> Result<(), HarnessError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    body(&mut out).and_then(|()| out.flush()).map_err(io_err(path))
}

pub fn write_run(out_dir: &Path, records: &[EpisodeRecord], summary: &RunSummary) -> Result<(), HarnessError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    write_file(&out_dir.join("episodes.jsonl"), |out| {
        for record in records {
            serde_json::to_writer(&mut *out, record)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    })?;
    write_file(&out_dir.join("coverage_curve.csv"), |out| {
        writeln!(out, "step,mean,std")?;
        for (i, (m, s)) in summary.coverage_mean.iter().zip(&summary.coverage_std).enumerate() {
            writeln!(out, "{},{m},{s}", i + 1)?;
        }
        Ok(())
    })?;
    write_file(&out_dir.join("interventions.csv"), |out| {
        writeln!(out, "seed,rate")?;
        for record in records {
            writeln!(out, "{},{}", record.seed, record.intervention_rate)?;
        }
        Ok(())
    })
}

/// Reads back an `episodes.jsonl` file.
pub fn read_episodes(path: &Path) -> Result<Vec<EpisodeRecord>, HarnessError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l).map_err(|e| HarnessError::Io {
                path: path.to_path_buf(),
                source: io::Error::new(io::ErrorKind::InvalidData, e),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalPlan {
    pub policy: PolicySpec,
    pub seeds: Vec<u64>,
    pub steps: usize,
    pub workers: usize,
}

impl EvalPlan {
    fn check(&self) -> Result<(), HarnessError> {
        if self.seeds.is_empty() {
            return Err(HarnessError::Invalid("no seeds".into()));
        }
        if self.steps == 0 {
            return Err(HarnessError::Invalid("steps must be positive".into()));
        }
        Ok(())
    }
}

/// Evaluates one config; writes the run files when `out_dir` is given.
pub fn run_eval(
    config: &EnvConfig,
    plan: &EvalPlan,
    out_dir: Option<&Path>,
) -> Result<RunSummary, HarnessError> {
    plan.check()?;
    config.validate()?;
    let factory = PolicyFactory::load(&plan.policy)?;
    eval_with(config, &factory, plan, "eval", out_dir)
}

fn eval_with(
    config: &EnvConfig,
    factory: &PolicyFactory,
    plan: &EvalPlan,
    label: &str,
    out_dir: Option<&Path>,
) -> Result<RunSummary, HarnessError> {
    let records = run_episodes(config, factory, &plan.seeds, plan.steps, plan.workers)?;
    let summary = summarize(label, &records, plan.steps);
    if let Some(dir) = out_dir {
        write_run(dir, &records, &summary)?;
    }
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sweep {
    /// Square maps with these side lengths; trunk count unchanged.
    MapSize(Vec<usize>),
    TreeCount(Vec<usize>),
}

impl Sweep {
    /// `(label, config)` per variant.
    pub fn variants(&self, base: &EnvConfig) -> Vec<(String, EnvConfig)> {
        match self {
            Sweep::MapSize(sizes) => sizes
                .iter()
                .map(|&s| (format!("map_{s}"), EnvConfig { height: s, width: s, ..base.clone() }))
                .collect(),
            Sweep::TreeCount(counts) => counts
                .iter()
                .map(|&n| (format!("trees_{n}"), EnvConfig { trunks: n, ..base.clone() }))
                .collect(),
        }
    }
}

/// Evaluates every variant of `sweep` with the same seeds. Variant `label`
/// goes to `out_dir/label/`, plus `out_dir/summary.csv` with columns
/// `label,episodes,mean_final_coverage,mean_intervention_rate,median_intervention_rate,steps_to_80`.
pub fn run_sweep(
    base: &EnvConfig,
    sweep: &Sweep,
    plan: &EvalPlan,
    out_dir: Option<&Path>,
) -> Result<Vec<RunSummary>, HarnessError> {
    plan.check()?;
    let variants = sweep.variants(base);
    if variants.is_empty() {
        return Err(HarnessError::Invalid("empty sweep".into()));
    }
    for (_, config) in &variants {
        config.validate()?;
    }
    let factory = PolicyFactory::load(&plan.policy)?;
    let mut summaries = Vec::with_capacity(variants.len());
    for (label, config) in &variants {
        let dir = out_dir.map(|d| d.join(label));
        summaries.push(eval_with(config, &factory, plan, label, dir.as_deref())?);
    }
    if let Some(dir) = out_dir {
        write_file(&dir.join("summary.csv"), |out| {
            writeln!(
                out,
                "label,episodes,mean_final_coverage,mean_intervention_rate,median_intervention_rate,steps_to_80"
            )?;
            for s in &summaries {
                let reach = s.steps_to_coverage(0.8).map_or(String::new(), |n| n.to_string());
                writeln!(
                    out,
                    "{},{},{},{},{},{reach}",
                    s.label,
                    s.seeds.len(),
                    s.mean_final_coverage(),
                    s.mean_intervention_rate(),
                    s.median_intervention_rate(),
                )?;
            }
            Ok(())
        })?;
    }
    Ok(summaries)
}
