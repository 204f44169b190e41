//! Train/test splitting and the elastic-net logistic classifier.

mod elastic_net;
mod split;

pub use elastic_net::{sigmoid, soft_threshold, softplus, ElasticNetProblem, Solution};
pub use split::split;

use serde::{Deserialize, Serialize};

use crate::bias::LabeledRecord;
use crate::datagen::ScoredRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    pub lambda: f64,
    /// Elastic-net mix; 1 is pure L1.
    pub alpha: f64,
    pub max_iters: usize,
    pub tolerance: f64,
    pub train_fraction: f64,
    /// Adds the group indicator as a model input.
    pub include_group_feature: bool,
    pub prediction_threshold: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            lambda: 1e-3,
            alpha: 0.5,
            max_iters: 1000,
            tolerance: 1e-7,
            train_fraction: 0.7,
            include_group_feature: false,
            prediction_threshold: 0.5,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::validation("lambda", format!("{} is not a nonnegative real", self.lambda)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::validation("alpha", format!("{} is not in [0, 1]", self.alpha)));
        }
        if self.max_iters == 0 {
            return Err(Error::validation("max_iters", "must be positive"));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::validation("tolerance", format!("{} is not positive", self.tolerance)));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::validation(
                "train_fraction",
                format!("{} is not in (0, 1)", self.train_fraction),
            ));
        }
        if !(0.0..=1.0).contains(&self.prediction_threshold) {
            return Err(Error::validation(
                "prediction_threshold",
                format!("{} is not in [0, 1]", self.prediction_threshold),
            ));
        }
        Ok(())
    }
}

/// A fitted classifier. Coefficients apply to standardized inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub feature_means: Vec<f64>,
    pub feature_scales: Vec<f64>,
    pub params: ModelParams,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    pub score_hat: Vec<f64>,
    pub label_hat: Vec<u8>,
}

/// Model inputs for one record: its features, then the group indicator if requested.
pub fn design_row(record: &ScoredRecord, include_group: bool) -> Vec<f64> {
    let mut row = record.features.clone();
    if include_group {
        row.push(record.group.indicator());
    }
    row
}

fn standardize(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
    let n = rows.len() as f64;
    let p = rows[0].len();
    let mut means = vec![0.0; p];
    for row in rows {
        for (m, x) in means.iter_mut().zip(row) {
            *m += x;
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    let mut scales = vec![0.0; p];
    for row in rows {
        for ((s, x), m) in scales.iter_mut().zip(row).zip(&means) {
            *s += (x - m) * (x - m);
        }
    }
    for s in scales.iter_mut() {
        *s = (*s / n).sqrt();
        if s.is_nan() || *s <= 1e-12 {
            *s = 1.0;
        }
    }
    let columns = (0..p)
        .map(|j| rows.iter().map(|r| (r[j] - means[j]) / scales[j]).collect())
        .collect();
    (means, scales, columns)
}

/// Fits the model and returns the optimizer's objective trace alongside it.
pub fn fit_traced(train: &[LabeledRecord], params: &ModelParams) -> Result<(Model, Vec<f64>)> {
    params.validate()?;
    if train.is_empty() {
        return Err(Error::DegenerateDataset("training set is empty".into()));
    }
    let rows: Vec<Vec<f64>> = train
        .iter()
        .map(|r| design_row(&r.record, params.include_group_feature))
        .collect();
    let p = rows[0].len();
    if p == 0 {
        return Err(Error::validation("features", "model has no input features"));
    }
    if let Some(bad) = rows.iter().find(|r| r.len() != p) {
        return Err(Error::DimensionMismatch {
            expected: p,
            actual: bad.len(),
        });
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("non-finite feature value in training data".into()));
    }

    let (feature_means, feature_scales, columns) = standardize(&rows);
    let problem = ElasticNetProblem {
        columns,
        y: train.iter().map(|r| f64::from(r.label)).collect(),
        lambda: params.lambda,
        alpha: params.alpha,
    };
    let sol = problem.solve(params.max_iters, params.tolerance)?;
    let model = Model {
        coefficients: sol.coefficients,
        intercept: sol.intercept,
        feature_means,
        feature_scales,
        params: params.clone(),
        converged: sol.converged,
        iterations: sol.iterations,
    };
    Ok((model, sol.objective_trace))
}

pub fn fit(train: &[LabeledRecord], params: &ModelParams) -> Result<Model> {
    fit_traced(train, params).map(|(m, _)| m)
}

impl Model {
    pub fn n_inputs(&self) -> usize {
        self.coefficients.len()
    }

    /// Number of record features the model expects.
    pub fn record_dim(&self) -> usize {
        self.n_inputs() - usize::from(self.params.include_group_feature)
    }

    pub fn score(&self, record: &ScoredRecord) -> Result<f64> {
        if record.features.len() != self.record_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.record_dim(),
                actual: record.features.len(),
            });
        }
        let row = design_row(record, self.params.include_group_feature);
        let eta = row
            .iter()
            .zip(&self.coefficients)
            .zip(self.feature_means.iter().zip(&self.feature_scales))
            .map(|((x, b), (m, s))| b * (x - m) / s)
            .sum::<f64>()
            + self.intercept;
        Ok(sigmoid(eta))
    }

    /// Coefficients and intercept on the original feature scale.
    pub fn raw_coefficients(&self) -> (Vec<f64>, f64) {
        let beta: Vec<f64> = self
            .coefficients
            .iter()
            .zip(&self.feature_scales)
            .map(|(b, s)| b / s)
            .collect();
        let shift: f64 = beta.iter().zip(&self.feature_means).map(|(b, m)| b * m).sum();
        (beta, self.intercept - shift)
    }
}

/// Scores records; `label_hat` is 1 iff `score_hat ≥ threshold`.
pub fn predict(model: &Model, records: &[ScoredRecord], threshold: f64) -> Result<Predictions> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::validation("prediction_threshold", format!("{threshold} is not in [0, 1]")));
    }
    let score_hat = records.iter().map(|r| model.score(r)).collect::<Result<Vec<_>>>()?;
    let label_hat = score_hat.iter().map(|&s| u8::from(s >= threshold)).collect();
    Ok(Predictions {
        score_hat,
        label_hat,
    })
}
