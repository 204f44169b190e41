//! Repeated seeded trials over the 2×2 bias grid.
//!
//! Trial seeds are `seed::trial_seed(base_seed, dataset_index, trial_index)`
//! (SplitMix64 folding, see [`crate::seed`]). Within a trial the sampling and
//! splitting streams are derived from the trial seed, so any (dataset, trial)
//! cell can be recomputed in isolation and trials may run in any order.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bias::{build_dataset, BiasSpec};
use crate::config::{EvalSplit, Experiment, ExperimentConfig};
use crate::datagen::{generate_population, make_base_dataset_a, make_base_dataset_b, ScoredRecord};
use crate::error::{Error, Result};
use crate::metrics::{audit, GroupedOutcomes, Metric, MetricReport, Outcome, Status};
use crate::model::{fit, predict, split};
use crate::seed;

/// Base dataset for the configured experiment.
pub fn prepare_base(config: &ExperimentConfig) -> Result<Vec<ScoredRecord>> {
    let pop = generate_population(&config.population)?;
    match config.experiment {
        Experiment::A => make_base_dataset_a(&pop, config.base_seed),
        Experiment::B => Ok(make_base_dataset_b(&pop)),
    }
}

/// One build → split → fit → predict → audit pass.
pub fn run_trial(config: &ExperimentConfig, spec: BiasSpec, trial_seed: u64) -> Result<MetricReport> {
    config.validate()?;
    let base = prepare_base(config)?;
    run_trial_on_base(config, &base, spec, trial_seed)
}

pub fn run_trial_on_base(
    config: &ExperimentConfig,
    base: &[ScoredRecord],
    spec: BiasSpec,
    trial_seed: u64,
) -> Result<MetricReport> {
    let data = build_dataset(
        base,
        spec,
        &config.policies(),
        seed::derive(trial_seed, &[seed::STREAM_SAMPLE]),
    )?;
    let (train, test) = split(
        &data,
        config.model.train_fraction,
        seed::derive(trial_seed, &[seed::STREAM_SPLIT]),
    )?;
    let model = fit(&train, &config.model)?;
    let eval = match config.evaluate_on {
        EvalSplit::Test => &test,
        EvalSplit::Train => &train,
    };
    let records: Vec<ScoredRecord> = eval.iter().map(|r| r.record.clone()).collect();
    let preds = predict(&model, &records, config.model.prediction_threshold)?;
    let outcomes = eval
        .iter()
        .zip(preds.score_hat.iter().zip(&preds.label_hat))
        .map(|(r, (&score_hat, &label_hat))| Outcome {
            group: r.record.group,
            label: r.label,
            score_hat,
            label_hat,
        })
        .collect();
    Ok(audit(&GroupedOutcomes::new(outcomes)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub report: Option<MetricReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    /// Mean over defined trial values.
    pub mean: Option<f64>,
    /// Sample standard deviation over defined values; 0 for a single value.
    pub std: Option<f64>,
    pub values: Vec<Option<f64>>,
    pub undefined_count: usize,
}

impl MetricSummary {
    pub fn from_values(values: Vec<Option<f64>>) -> Self {
        let defined: Vec<f64> = values.iter().flatten().copied().collect();
        let undefined_count = values.len() - defined.len();
        let (mean, std) = match defined.len() {
            0 => (None, None),
            1 => (Some(defined[0]), Some(0.0)),
            k => {
                let m = defined.iter().sum::<f64>() / k as f64;
                let var = defined.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (k - 1) as f64;
                (Some(m), Some(var.sqrt()))
            }
        };
        MetricSummary {
            mean,
            std,
            values,
            undefined_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetResult {
    pub dataset: usize,
    pub bias: BiasSpec,
    pub metrics: BTreeMap<Metric, MetricSummary>,
    pub failed_trials: usize,
    pub trials: Vec<TrialRecord>,
}

impl DatasetResult {
    pub fn mean(&self, metric: Metric) -> Option<f64> {
        self.metrics.get(&metric).and_then(|s| s.mean)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub datasets: Vec<DatasetResult>,
}

impl ExperimentReport {
    pub fn dataset(&self, index: usize) -> Option<&DatasetResult> {
        self.datasets.iter().find(|d| d.dataset == index)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Flat `dataset,metric,trial,value,status` rows.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["dataset", "metric", "trial", "value", "status"])?;
        for d in &self.datasets {
            for t in &d.trials {
                for m in Metric::ALL {
                    let (value, status) = match &t.report {
                        Some(r) => {
                            let v = r.get(m);
                            (v.value.map(crate::io::fmt_real).unwrap_or_default(), v.status)
                        }
                        None => (String::new(), Status::Error),
                    };
                    let status = serde_json::to_value(status)?;
                    w.write_record([
                        d.dataset.to_string(),
                        m.name().to_string(),
                        t.trial.to_string(),
                        value,
                        status.as_str().unwrap_or_default().to_string(),
                    ])?;
                }
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Aggregates one dataset's trials. Trials may be in any order.
pub fn summarize(dataset: usize, mut trials: Vec<TrialRecord>) -> DatasetResult {
    trials.sort_by_key(|t| t.trial);
    let bias = BiasSpec::from_dataset_index(dataset).expect("dataset index in 1..=4");
    let metrics = Metric::ALL
        .into_iter()
        .map(|m| {
            let values = trials
                .iter()
                .map(|t| t.report.as_ref().and_then(|r| r.value(m)))
                .collect();
            (m, MetricSummary::from_values(values))
        })
        .collect();
    DatasetResult {
        dataset,
        bias,
        metrics,
        failed_trials: trials.iter().filter(|t| t.report.is_none()).count(),
        trials,
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let base = prepare_base(config)?;

    let jobs: Vec<(BiasSpec, usize)> = BiasSpec::ALL
        .iter()
        .flat_map(|&spec| (0..config.trials).map(move |t| (spec, t)))
        .collect();
    let records: Vec<(usize, TrialRecord)> = jobs
        .into_par_iter()
        .map(|(spec, trial)| {
            let dataset = spec.dataset_index();
            let seed = seed::trial_seed(config.base_seed, dataset as u64, trial as u64);
            let (report, error) = match run_trial_on_base(config, &base, spec, seed) {
                Ok(r) => (Some(r), None),
                Err(e) => (None, Some(e.to_string())),
            };
            (
                dataset,
                TrialRecord {
                    trial,
                    seed,
                    report,
                    error,
                },
            )
        })
        .collect();

    let mut by_dataset: BTreeMap<usize, Vec<TrialRecord>> = BTreeMap::new();
    for (d, r) in records {
        by_dataset.entry(d).or_default().push(r);
    }
    let datasets: Vec<DatasetResult> = by_dataset
        .into_iter()
        .map(|(d, trials)| summarize(d, trials))
        .collect();
    for d in &datasets {
        if d.failed_trials == d.trials.len() {
            let first = d.trials.iter().find_map(|t| t.error.clone()).unwrap_or_default();
            return Err(Error::Experiment(format!(
                "every trial of dataset {} failed; first error: {first}",
                d.dataset
            )));
        }
    }
    Ok(ExperimentReport {
        config: config.clone(),
        datasets,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub metric: Metric,
    /// Dataset indices, least biased first.
    pub order: Vec<usize>,
    /// Datasets with no defined mean for the metric.
    pub excluded: Vec<usize>,
}

/// Orders datasets by `|mean − fair point|`, ties broken by dataset index.
pub fn rank_datasets(report: &ExperimentReport, metric: Metric) -> Ranking {
    let fair = metric.fair_point();
    let mut scored = Vec::new();
    let mut excluded = Vec::new();
    for d in &report.datasets {
        match d.mean(metric) {
            Some(m) => scored.push((d.dataset, (m - fair).abs())),
            None => excluded.push(d.dataset),
        }
    }
    scored.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    excluded.sort_unstable();
    Ranking {
        metric,
        order: scored.into_iter().map(|(d, _)| d).collect(),
        excluded,
    }
}
