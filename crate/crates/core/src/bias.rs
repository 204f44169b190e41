//! Causal label-bias and sample-bias operators.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::datagen::{Group, ScoredRecord};
use crate::error::{Error, Result};
use crate::seed;

/// Per-group score thresholds: label = 1 iff score ≥ threshold of the record's group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelPolicy {
    pub threshold_group0: f64,
    pub threshold_group1: f64,
}

impl LabelPolicy {
    pub fn new(threshold_group0: f64, threshold_group1: f64) -> Result<Self> {
        let p = LabelPolicy {
            threshold_group0,
            threshold_group1,
        };
        p.validate()?;
        Ok(p)
    }

    /// Reference group labeled at 0.3, protected group at 0.7.
    pub fn biased() -> Self {
        LabelPolicy {
            threshold_group0: 0.3,
            threshold_group1: 0.7,
        }
    }

    /// Both groups labeled at 0.5.
    pub fn unbiased() -> Self {
        LabelPolicy {
            threshold_group0: 0.5,
            threshold_group1: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_unit("threshold_group0", self.threshold_group0)?;
        check_unit("threshold_group1", self.threshold_group1)
    }

    pub fn threshold(&self, group: Group) -> f64 {
        match group {
            Group::Reference => self.threshold_group0,
            Group::Protected => self.threshold_group1,
        }
    }

    pub fn label(&self, record: &ScoredRecord) -> u8 {
        u8::from(record.score >= self.threshold(record.group))
    }
}

/// Inclusion probabilities by group and by score band (`score ≥ cutoff` is high).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplePolicy {
    pub cutoff: f64,
    pub p_group0_high: f64,
    pub p_group0_low: f64,
    pub p_group1_high: f64,
    pub p_group1_low: f64,
}

impl SamplePolicy {
    /// High-scoring reference records kept at 0.8, low-scoring at 0.2,
    /// protected records always kept.
    pub fn biased() -> Self {
        SamplePolicy {
            cutoff: 0.5,
            p_group0_high: 0.8,
            p_group0_low: 0.2,
            p_group1_high: 1.0,
            p_group1_low: 1.0,
        }
    }

    /// Flat inclusion probability 0.5.
    pub fn unbiased() -> Self {
        Self::uniform(0.5)
    }

    /// Flat inclusion probability `p`; `uniform(1.0)` keeps everything.
    pub fn uniform(p: f64) -> Self {
        SamplePolicy {
            cutoff: 0.5,
            p_group0_high: p,
            p_group0_low: p,
            p_group1_high: p,
            p_group1_low: p,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_unit("cutoff", self.cutoff)?;
        check_unit("p_group0_high", self.p_group0_high)?;
        check_unit("p_group0_low", self.p_group0_low)?;
        check_unit("p_group1_high", self.p_group1_high)?;
        check_unit("p_group1_low", self.p_group1_low)
    }

    pub fn inclusion_probability(&self, record: &ScoredRecord) -> f64 {
        let high = record.score >= self.cutoff;
        match (record.group, high) {
            (Group::Reference, true) => self.p_group0_high,
            (Group::Reference, false) => self.p_group0_low,
            (Group::Protected, true) => self.p_group1_high,
            (Group::Protected, false) => self.p_group1_low,
        }
    }
}

fn check_unit(field: &'static str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::validation(field, format!("{x} is not in [0, 1]")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRecord {
    pub record: ScoredRecord,
    pub label: u8,
}

/// Which cell of the 2×2 bias grid to materialize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BiasSpec {
    pub sample_bias: bool,
    pub label_bias: bool,
}

impl BiasSpec {
    /// Datasets 1–4 in grid order.
    pub const ALL: [BiasSpec; 4] = [
        BiasSpec::new(false, false),
        BiasSpec::new(true, false),
        BiasSpec::new(false, true),
        BiasSpec::new(true, true),
    ];

    pub const fn new(sample_bias: bool, label_bias: bool) -> Self {
        BiasSpec {
            sample_bias,
            label_bias,
        }
    }

    /// 1-based dataset number: 1 none, 2 sample, 3 label, 4 both.
    pub fn dataset_index(&self) -> usize {
        1 + usize::from(self.sample_bias) + 2 * usize::from(self.label_bias)
    }

    pub fn from_dataset_index(i: usize) -> Option<Self> {
        (1..=4).contains(&i).then(|| Self::ALL[i - 1])
    }
}

pub fn apply_label_policy(pop: &[ScoredRecord], policy: &LabelPolicy) -> Vec<LabeledRecord> {
    pop.iter()
        .map(|r| LabeledRecord {
            label: policy.label(r),
            record: r.clone(),
        })
        .collect()
}

/// Keeps each record independently with its policy probability.
pub fn apply_sample_policy(
    pop: &[ScoredRecord],
    policy: &SamplePolicy,
    seed: u64,
) -> Vec<ScoredRecord> {
    let mut rng = seed::rng(seed);
    pop.iter()
        .filter(|r| {
            // One draw per record keeps the stream aligned with input order.
            let u: f64 = rng.random();
            u < policy.inclusion_probability(r)
        })
        .cloned()
        .collect()
}

/// The four policies that define the bias grid, plus the minimum cell size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiasPolicies {
    pub biased_label_policy: LabelPolicy,
    pub unbiased_label_policy: LabelPolicy,
    pub biased_sample_policy: SamplePolicy,
    pub unbiased_sample_policy: SamplePolicy,
    /// Minimum records per (group, label) cell.
    pub min_cell: usize,
}

impl Default for BiasPolicies {
    fn default() -> Self {
        BiasPolicies {
            biased_label_policy: LabelPolicy::biased(),
            unbiased_label_policy: LabelPolicy::unbiased(),
            biased_sample_policy: SamplePolicy::biased(),
            unbiased_sample_policy: SamplePolicy::unbiased(),
            min_cell: 10,
        }
    }
}

impl BiasPolicies {
    pub fn validate(&self) -> Result<()> {
        self.biased_label_policy.validate()?;
        self.unbiased_label_policy.validate()?;
        self.biased_sample_policy.validate()?;
        self.unbiased_sample_policy.validate()
    }
}

/// `counts[group][label]`.
pub fn cell_counts(data: &[LabeledRecord]) -> [[usize; 2]; 2] {
    let mut counts = [[0; 2]; 2];
    for r in data {
        counts[r.record.group.index()][r.label as usize] += 1;
    }
    counts
}

/// Samples, then labels, according to `spec`.
pub fn build_dataset(
    pop: &[ScoredRecord],
    spec: BiasSpec,
    policies: &BiasPolicies,
    seed: u64,
) -> Result<Vec<LabeledRecord>> {
    let sample_policy = if spec.sample_bias {
        &policies.biased_sample_policy
    } else {
        &policies.unbiased_sample_policy
    };
    let label_policy = if spec.label_bias {
        &policies.biased_label_policy
    } else {
        &policies.unbiased_label_policy
    };
    let sampled = apply_sample_policy(pop, sample_policy, seed);
    let data = apply_label_policy(&sampled, label_policy);

    let counts = cell_counts(&data);
    for (g, row) in counts.iter().enumerate() {
        for (y, &n) in row.iter().enumerate() {
            if n < policies.min_cell {
                return Err(Error::DegenerateDataset(format!(
                    "dataset {} has {n} records in cell (group={g}, label={y}); minimum is {}",
                    spec.dataset_index(),
                    policies.min_cell
                )));
            }
        }
    }
    Ok(data)
}
