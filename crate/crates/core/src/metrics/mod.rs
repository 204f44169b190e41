//! Group-fairness metrics over (S, Y, ŷ, Ŷ).
//!
//! Mean score difference and residual difference use the continuous score
//! ŷ; the remaining four metrics use the thresholded prediction Ŷ. Every
//! difference is taken as protected group (S = 1) minus reference group.

mod info;

pub use info::{entropy, nmi_from_counts, JointCounts, Nmi};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::datagen::Group;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub group: Group,
    /// Label the model was trained against.
    pub label: u8,
    pub score_hat: f64,
    pub label_hat: u8,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroupedOutcomes {
    pub records: Vec<Outcome>,
}

impl GroupedOutcomes {
    pub fn new(records: Vec<Outcome>) -> Result<Self> {
        for r in &records {
            if r.label > 1 {
                return Err(Error::validation("label", format!("{} is not binary", r.label)));
            }
            if r.label_hat > 1 {
                return Err(Error::validation("label_hat", format!("{} is not binary", r.label_hat)));
            }
            if !(0.0..=1.0).contains(&r.score_hat) {
                return Err(Error::validation("score_hat", format!("{} is not in [0, 1]", r.score_hat)));
            }
        }
        Ok(GroupedOutcomes { records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `counts[s][y][ŷ]`.
    pub fn cell_counts(&self) -> [[[u64; 2]; 2]; 2] {
        let mut c = [[[0; 2]; 2]; 2];
        for r in &self.records {
            c[r.group.index()][r.label as usize][r.label_hat as usize] += 1;
        }
        c
    }

    pub fn joint_counts(&self) -> JointCounts {
        JointCounts::from_pairs(self.records.iter().map(|r| (r.label_hat, r.group.index())))
    }

    fn group_mean(&self, group: Group, f: impl Fn(&Outcome) -> f64) -> Result<f64> {
        let (sum, n) = self
            .records
            .iter()
            .filter(|r| r.group == group)
            .fold((0.0, 0usize), |(s, n), r| (s + f(r), n + 1));
        if n == 0 {
            return Err(Error::UndefinedMetric(format!(
                "group S={} has no records",
                group.index()
            )));
        }
        Ok(sum / n as f64)
    }

    fn positive_rate(&self, group: Group, label: Option<u8>) -> Result<f64> {
        let mut n = 0u64;
        let mut k = 0u64;
        for r in self.records.iter().filter(|r| r.group == group) {
            if label.is_none_or(|y| r.label == y) {
                n += 1;
                k += u64::from(r.label_hat);
            }
        }
        if n == 0 {
            return Err(Error::UndefinedMetric(match label {
                Some(y) => format!("cell (S={}, Y={y}) is empty", group.index()),
                None => format!("group S={} has no records", group.index()),
            }));
        }
        Ok(k as f64 / n as f64)
    }

    fn require_both_groups(&self) -> Result<()> {
        for g in [Group::Reference, Group::Protected] {
            if !self.records.iter().any(|r| r.group == g) {
                return Err(Error::UndefinedMetric(format!(
                    "group S={} has no records",
                    g.index()
                )));
            }
        }
        Ok(())
    }
}

/// `E{ŷ | S=1} − E{ŷ | S=0}`.
pub fn mean_score_difference(data: &GroupedOutcomes) -> Result<f64> {
    let f = |r: &Outcome| r.score_hat;
    Ok(data.group_mean(Group::Protected, f)? - data.group_mean(Group::Reference, f)?)
}

/// `E{ŷ − Y | S=1} − E{ŷ − Y | S=0}`.
pub fn residual_difference(data: &GroupedOutcomes) -> Result<f64> {
    let f = |r: &Outcome| r.score_hat - f64::from(r.label);
    Ok(data.group_mean(Group::Protected, f)? - data.group_mean(Group::Reference, f)?)
}

/// Difference in true-positive rates.
pub fn equal_opportunity_difference(data: &GroupedOutcomes) -> Result<f64> {
    Ok(data.positive_rate(Group::Protected, Some(1))?
        - data.positive_rate(Group::Reference, Some(1))?)
}

/// Difference in false-positive rates.
pub fn equal_misopportunity_difference(data: &GroupedOutcomes) -> Result<f64> {
    Ok(data.positive_rate(Group::Protected, Some(0))?
        - data.positive_rate(Group::Reference, Some(0))?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ratio {
    Defined(f64),
    /// The reference group's positive-prediction rate is 0.
    Undefined,
}

impl Ratio {
    pub fn value(self) -> Option<f64> {
        match self {
            Ratio::Defined(v) => Some(v),
            Ratio::Undefined => None,
        }
    }
}

/// `Pr{Ŷ=1 | S=1} / Pr{Ŷ=1 | S=0}`.
pub fn disparate_impact(data: &GroupedOutcomes) -> Result<Ratio> {
    let num = data.positive_rate(Group::Protected, None)?;
    let den = data.positive_rate(Group::Reference, None)?;
    if den == 0.0 {
        return Ok(Ratio::Undefined);
    }
    Ok(Ratio::Defined(num / den))
}

pub fn normalized_mutual_information(data: &GroupedOutcomes) -> Result<Nmi> {
    if data.is_empty() {
        return Err(Error::validation("data", "no records"));
    }
    data.require_both_groups()?;
    nmi_from_counts(&data.joint_counts())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    MeanScoreDiff,
    ResidualDiff,
    EqualOpportunityDiff,
    EqualMisopportunityDiff,
    DisparateImpact,
    Nmi,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::MeanScoreDiff,
        Metric::ResidualDiff,
        Metric::EqualOpportunityDiff,
        Metric::EqualMisopportunityDiff,
        Metric::DisparateImpact,
        Metric::Nmi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::MeanScoreDiff => "mean_score_diff",
            Metric::ResidualDiff => "residual_diff",
            Metric::EqualOpportunityDiff => "equal_opportunity_diff",
            Metric::EqualMisopportunityDiff => "equal_misopportunity_diff",
            Metric::DisparateImpact => "disparate_impact",
            Metric::Nmi => "nmi",
        }
    }

    /// Value that indicates non-discrimination.
    pub fn fair_point(self) -> f64 {
        match self {
            Metric::DisparateImpact => 1.0,
            _ => 0.0,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::validation("metric", format!("unknown metric `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Undefined,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub value: Option<f64>,
    pub status: Status,
    pub detail: String,
}

impl MetricValue {
    fn ok(value: f64) -> Self {
        MetricValue {
            value: Some(value),
            status: Status::Ok,
            detail: String::new(),
        }
    }

    fn from_result(r: Result<f64>) -> Self {
        match r {
            Ok(v) => Self::ok(v),
            Err(e) => Self::failed(&e),
        }
    }

    fn failed(e: &Error) -> Self {
        let status = match e {
            Error::UndefinedMetric(msg) if msg.contains("cell") => Status::Undefined,
            _ => Status::Error,
        };
        MetricValue {
            value: None,
            status,
            detail: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCount {
    pub group: u8,
    pub label: u8,
    pub predicted: u8,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub mean_score_diff: MetricValue,
    pub residual_diff: MetricValue,
    pub equal_opportunity_diff: MetricValue,
    pub equal_misopportunity_diff: MetricValue,
    pub disparate_impact: MetricValue,
    pub nmi: MetricValue,
    pub cell_counts: Vec<CellCount>,
}

impl MetricReport {
    pub fn get(&self, metric: Metric) -> &MetricValue {
        match metric {
            Metric::MeanScoreDiff => &self.mean_score_diff,
            Metric::ResidualDiff => &self.residual_diff,
            Metric::EqualOpportunityDiff => &self.equal_opportunity_diff,
            Metric::EqualMisopportunityDiff => &self.equal_misopportunity_diff,
            Metric::DisparateImpact => &self.disparate_impact,
            Metric::Nmi => &self.nmi,
        }
    }

    pub fn value(&self, metric: Metric) -> Option<f64> {
        self.get(metric).value
    }

    /// `counts[s][y][ŷ]` rebuilt from the flat list.
    pub fn counts(&self) -> [[[u64; 2]; 2]; 2] {
        let mut c = [[[0; 2]; 2]; 2];
        for cell in &self.cell_counts {
            c[cell.group as usize][cell.label as usize][cell.predicted as usize] = cell.count;
        }
        c
    }
}

/// All six metrics. Failures are recorded per metric, never replaced by numbers.
pub fn audit(data: &GroupedOutcomes) -> MetricReport {
    let counts = data.cell_counts();
    let mut cell_counts = Vec::with_capacity(8);
    for (s, by_label) in counts.iter().enumerate() {
        for (y, by_pred) in by_label.iter().enumerate() {
            for (yhat, &count) in by_pred.iter().enumerate() {
                cell_counts.push(CellCount {
                    group: s as u8,
                    label: y as u8,
                    predicted: yhat as u8,
                    count,
                });
            }
        }
    }

    let disparate_impact = match disparate_impact(data) {
        Ok(Ratio::Defined(v)) => MetricValue::ok(v),
        Ok(Ratio::Undefined) => MetricValue {
            value: None,
            status: Status::Undefined,
            detail: "reference group has no positive predictions".into(),
        },
        Err(e) => MetricValue::failed(&e),
    };
    let nmi = match normalized_mutual_information(data) {
        Ok(Nmi {
            value,
            degenerate: true,
        }) => MetricValue {
            value: Some(value),
            status: Status::Ok,
            detail: "zero-entropy margin; defined as 0".into(),
        },
        Ok(n) => MetricValue::ok(n.value),
        Err(e) => MetricValue::failed(&e),
    };

    MetricReport {
        mean_score_diff: MetricValue::from_result(mean_score_difference(data)),
        residual_diff: MetricValue::from_result(residual_difference(data)),
        equal_opportunity_diff: MetricValue::from_result(equal_opportunity_difference(data)),
        equal_misopportunity_diff: MetricValue::from_result(equal_misopportunity_difference(data)),
        disparate_impact,
        nmi,
        cell_counts,
    }
}

/// Expands confusion counts into records with binary scores (ŷ = Ŷ).
pub fn outcomes_from_confusion(
    protected: [u64; 4],
    reference: [u64; 4],
) -> GroupedOutcomes {
    let mut records = Vec::new();
    for (group, [tp, fn_, fp, tn]) in [(Group::Protected, protected), (Group::Reference, reference)] {
        for (label, label_hat, n) in [(1, 1, tp), (1, 0, fn_), (0, 1, fp), (0, 0, tn)] {
            for _ in 0..n {
                records.push(Outcome {
                    group,
                    label,
                    score_hat: f64::from(label_hat),
                    label_hat,
                });
            }
        }
    }
    GroupedOutcomes { records }
}
