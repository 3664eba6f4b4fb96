//! Calibration, single runs and Monte-Carlo sweeps.

use std::collections::BTreeMap;
use std::path::Path;

use erbo_core::detector::Calibration;
use erbo_core::episode::{run_calibration, run_episode, EpisodeConfig, Policy, RunRecord};
use rayon::prelude::*;

use crate::config::{trigger_for, ScenarioConfig, SweepConfig};
use crate::error::{io_err, HarnessError, Result};
use crate::output::{self, num, opt};
use crate::stats::percentile_sorted;

/// Where a scenario's upper error limit came from.
#[derive(Debug, Clone, PartialEq)]
pub enum UleSource {
    Explicit,
    Calibrated(Calibration),
}

pub fn resolve_ule(s: &ScenarioConfig) -> Result<(f64, UleSource)> {
    if let Some(u) = s.ule {
        return Ok((u, UleSource::Explicit));
    }
    let spec = s.spec().map_err(HarnessError::Usage)?;
    let c = s.calibration;
    let (cal, _) = run_calibration(&spec, c.steps, c.rho, c.method.into())?;
    Ok((cal.threshold, UleSource::Calibrated(cal)))
}

pub fn episode_config(s: &ScenarioConfig, policy: Policy, ule: f64, coast_steps: usize, retrigger: bool) -> EpisodeConfig {
    let mut cfg = EpisodeConfig::new(policy, trigger_for(s, ule));
    cfg.coast_steps = coast_steps;
    cfg.retrigger = retrigger;
    cfg
}

pub fn run_single(s: &ScenarioConfig, policy: Policy, ule: f64, seed: u64) -> Result<RunRecord> {
    let spec = s.spec().map_err(HarnessError::Usage)?;
    Ok(run_episode(&spec, &episode_config(s, policy, ule, 60, false), seed)?)
}

#[derive(Debug, Clone)]
pub struct SweepRun {
    pub scenario: String,
    pub seed: u64,
    pub ule: f64,
    pub record: RunRecord,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scenario: String,
    pub policy: Policy,
    pub reps: u64,
    pub successes: u64,
}

impl SummaryRow {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.reps as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub scenario: String,
    pub policy: Policy,
    pub k: usize,
    pub n: usize,
    pub error: [f64; 3],
    pub rate: [f64; 3],
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub ules: Vec<(String, f64, UleSource)>,
    pub runs: Vec<SweepRun>,
    pub summary: Vec<SummaryRow>,
    pub aggregate: Vec<AggregateRow>,
}

/// Label used for the pooled rows of the aggregate table.
pub const ALL_SCENARIOS: &str = "all";

/// Runs every (scenario, policy, seed) cell. Results are ordered by cell,
/// independent of the worker count.
pub fn run_sweep(cfg: &SweepConfig, jobs: Option<usize>) -> Result<SweepResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| HarnessError::Usage(format!("thread pool: {e}")))?;

    let ules: Vec<(String, f64, UleSource)> = pool.install(|| {
        cfg.scenarios
            .par_iter()
            .map(|s| resolve_ule(s).map(|(u, src)| (s.name.clone(), u, src)))
            .collect::<Result<_>>()
    })?;

    let mut cells = Vec::new();
    for (s, (_, ule, _)) in cfg.scenarios.iter().zip(&ules) {
        for &p in &cfg.policies {
            for seed in 0..cfg.reps {
                cells.push((s, p, *ule, seed));
            }
        }
    }
    let runs: Vec<SweepRun> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(s, p, ule, seed)| {
                let spec = s.spec().map_err(HarnessError::Usage)?;
                let record = run_episode(&spec, &episode_config(s, p, ule, cfg.coast_steps, cfg.retrigger), seed)?;
                Ok(SweepRun { scenario: s.name.clone(), seed, ule, record })
            })
            .collect::<Result<_>>()
    })?;

    let summary = summarize(&runs);
    let horizon = erbo_core::responder::ResponderConfig::default().horizon;
    let aggregate = aggregate(&runs, horizon);
    Ok(SweepResult { ules, runs, summary, aggregate })
}

pub fn summarize(runs: &[SweepRun]) -> Vec<SummaryRow> {
    let mut rows: Vec<SummaryRow> = Vec::new();
    for r in runs {
        match rows.iter_mut().find(|x| x.scenario == r.scenario && x.policy == r.record.policy) {
            Some(row) => {
                row.reps += 1;
                row.successes += r.record.success as u64;
            }
            None => rows.push(SummaryRow {
                scenario: r.scenario.clone(),
                policy: r.record.policy,
                reps: 1,
                successes: r.record.success as u64,
            }),
        }
    }
    rows
}

/// Per-step quartiles of error and error-rate over the `horizon` steps that
/// follow each trigger, per (scenario, policy) and pooled over scenarios.
pub fn aggregate(runs: &[SweepRun], horizon: usize) -> Vec<AggregateRow> {
    // (scenario, policy) -> per-k samples; insertion order preserved via a key list
    let mut order: Vec<(String, Policy)> = Vec::new();
    let mut samples: BTreeMap<(String, Policy), Vec<(Vec<f64>, Vec<f64>)>> = BTreeMap::new();
    for r in runs {
        let rows = r.record.from_trigger();
        for scenario in [r.scenario.as_str(), ALL_SCENARIOS] {
            let key = (scenario.to_string(), r.record.policy);
            let slot = samples.entry(key.clone()).or_insert_with(|| {
                order.push(key);
                vec![(Vec::new(), Vec::new()); horizon]
            });
            for (k, row) in rows.iter().take(horizon).enumerate() {
                if let Some(rate) = row.rate {
                    slot[k].0.push(row.error);
                    slot[k].1.push(rate);
                }
            }
        }
    }
    // pooled rows after the per-scenario ones
    order.sort_by_key(|(s, _)| s == ALL_SCENARIOS);
    let mut out = Vec::new();
    for key in order {
        for (k, (mut e, mut r)) in samples.remove(&key).unwrap_or_default().into_iter().enumerate() {
            if e.is_empty() {
                continue;
            }
            e.sort_by(f64::total_cmp);
            r.sort_by(f64::total_cmp);
            let q = |v: &[f64]| [percentile_sorted(v, 0.25), percentile_sorted(v, 0.5), percentile_sorted(v, 0.75)];
            out.push(AggregateRow { scenario: key.0.clone(), policy: key.1, k, n: e.len(), error: q(&e), rate: q(&r) });
        }
    }
    out
}

pub fn run_file_name(scenario: &str, policy: Policy, seed: u64) -> String {
    format!("{scenario}__{}__{seed}.csv", policy.name())
}

/// Writes `runs/`, `runs.csv`, `summary.csv`, `aggregate.csv` and `thresholds.csv` under `out`.
pub fn write_sweep(result: &SweepResult, out: &Path) -> Result<()> {
    let runs_dir = out.join("runs");
    std::fs::create_dir_all(&runs_dir).map_err(io_err(&runs_dir))?;
    for r in &result.runs {
        output::write_trace(&runs_dir.join(run_file_name(&r.scenario, r.record.policy, r.seed)), &r.record.trace)?;
    }
    output::write_csv(
        &out.join("runs.csv"),
        &output::RUNS_HEADER,
        result.runs.iter().map(|r| {
            vec![
                r.scenario.clone(),
                r.record.policy.name().to_string(),
                r.seed.to_string(),
                r.record.success.to_string(),
                r.record.collided.to_string(),
                r.record.off_road.to_string(),
                opt(r.record.trigger_step),
                opt(r.record.trigger_distance),
                num(r.ule),
            ]
        }),
    )?;
    write_summary(&out.join("summary.csv"), &result.summary)?;
    output::write_csv(
        &out.join("aggregate.csv"),
        &output::AGGREGATE_HEADER,
        result.aggregate.iter().map(|a| {
            let mut f = vec![a.scenario.clone(), a.policy.name().to_string(), a.k.to_string(), a.n.to_string()];
            f.extend(a.error.iter().chain(&a.rate).map(|v| num(*v)));
            f
        }),
    )?;
    output::write_csv(
        &out.join("thresholds.csv"),
        &["scenario", "ule", "source"],
        result.ules.iter().map(|(s, u, src)| {
            let src = match src {
                UleSource::Explicit => "explicit".to_string(),
                UleSource::Calibrated(c) => format!("calibrated rho={}", c.rho),
            };
            vec![s.clone(), num(*u), src]
        }),
    )
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    output::write_csv(
        path,
        &output::SUMMARY_HEADER,
        rows.iter().map(|r| {
            vec![
                r.scenario.clone(),
                r.policy.name().to_string(),
                r.reps.to_string(),
                r.successes.to_string(),
                num(r.success_rate()),
            ]
        }),
    )
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut rdr = csv::Reader::from_path(path).map_err(crate::error::csv_err(path))?;
    let bad = |msg: String| HarnessError::Config { path: path.into(), msg };
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(crate::error::csv_err(path))?;
        let field = |i: usize| rec.get(i).ok_or_else(|| bad(format!("short row: {rec:?}")));
        let policy = Policy::from_name(field(1)?).ok_or_else(|| bad(format!("unknown policy in {rec:?}")))?;
        let int = |i: usize| -> Result<u64> { field(i)?.parse().map_err(|_| bad(format!("bad integer in {rec:?}"))) };
        out.push(SummaryRow { scenario: field(0)?.to_string(), policy, reps: int(2)?, successes: int(3)? });
    }
    Ok(out)
}

/// Success-rate table: one row per scenario, one column per policy, plus a mean row.
pub fn format_report(rows: &[SummaryRow]) -> String {
    let mut policies: Vec<Policy> = rows.iter().map(|r| r.policy).collect();
    policies.sort();
    policies.dedup();
    let mut scenarios: Vec<&str> = Vec::new();
    for r in rows {
        if !scenarios.contains(&r.scenario.as_str()) {
            scenarios.push(&r.scenario);
        }
    }
    let width = scenarios.iter().map(|s| s.len()).max().unwrap_or(0).max(8);
    let mut s = format!("{:<width$}", "scenario");
    for p in &policies {
        s += &format!(" {:>10}", p.name());
    }
    s.push('\n');
    for sc in &scenarios {
        s += &format!("{sc:<width$}");
        for p in &policies {
            match rows.iter().find(|r| r.scenario == *sc && r.policy == *p) {
                Some(r) => s += &format!(" {:>9.1}%", 100.0 * r.success_rate()),
                None => s += &format!(" {:>10}", "-"),
            }
        }
        s.push('\n');
    }
    s += &format!("{:<width$}", "mean");
    for p in &policies {
        let rates: Vec<f64> = rows.iter().filter(|r| r.policy == *p).map(SummaryRow::success_rate).collect();
        s += &format!(" {:>9.1}%", 100.0 * rates.iter().sum::<f64>() / rates.len() as f64);
    }
    s.push('\n');
    s
}
