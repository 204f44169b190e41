//! Synthetic scored populations.
//!
//! Scores are drawn per group from a Beta distribution in mean/concentration
//! form, `Beta(μκ, (1−μ)κ)`, with μ solved by bisection so that the mass at or
//! above 0.5 equals the group's target positive rate. Informative features are
//! noisy linear functions of `logit(score)`; the last feature is a proxy that
//! correlates with group membership.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};
use crate::seed;

/// Binary protected attribute. `Protected` is S = 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Group {
    Reference,
    Protected,
}

impl Group {
    pub fn index(self) -> usize {
        match self {
            Group::Reference => 0,
            Group::Protected => 1,
        }
    }

    pub fn from_index(i: u8) -> Option<Group> {
        match i {
            0 => Some(Group::Reference),
            1 => Some(Group::Protected),
            _ => None,
        }
    }

    pub fn indicator(self) -> f64 {
        self.index() as f64
    }

    pub fn flipped(self) -> Group {
        match self {
            Group::Reference => Group::Protected,
            Group::Protected => Group::Reference,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredRecord {
    pub id: u64,
    pub group: Group,
    pub features: Vec<f64>,
    /// Ground-truth likelihood in [0, 1].
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationSpec {
    pub n_group0: usize,
    pub n_group1: usize,
    pub target_positive_rate_group0: f64,
    pub target_positive_rate_group1: f64,
    pub feature_dim: usize,
    pub proxy_strength: f64,
    pub noise_scale: f64,
    /// κ in `Beta(μκ, (1−μ)κ)`. Small values push scores toward 0 and 1.
    #[serde(default = "default_concentration")]
    pub score_concentration: f64,
    pub seed: u64,
}

fn default_concentration() -> f64 {
    0.4
}

impl Default for PopulationSpec {
    /// Table-1 marginals (10,653 / 119,340 records, positive rates
    /// 1,296/10,653 and 64,536/119,340) scaled down three-fold.
    fn default() -> Self {
        PopulationSpec {
            n_group0: 39_780,
            n_group1: 3_551,
            target_positive_rate_group0: 64_536.0 / 119_340.0,
            target_positive_rate_group1: 1_296.0 / 10_653.0,
            feature_dim: 4,
            proxy_strength: 0.5,
            noise_scale: 5.0,
            score_concentration: default_concentration(),
            seed: 20_190_101,
        }
    }
}

impl PopulationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_group0 == 0 {
            return Err(Error::validation("n_group0", "must be positive"));
        }
        if self.n_group1 == 0 {
            return Err(Error::validation("n_group1", "must be positive"));
        }
        let open_unit = |x: f64| x > 0.0 && x < 1.0;
        if !open_unit(self.target_positive_rate_group0) {
            return Err(Error::validation(
                "target_positive_rate_group0",
                format!("{} is not in (0, 1)", self.target_positive_rate_group0),
            ));
        }
        if !open_unit(self.target_positive_rate_group1) {
            return Err(Error::validation(
                "target_positive_rate_group1",
                format!("{} is not in (0, 1)", self.target_positive_rate_group1),
            ));
        }
        if self.feature_dim < 2 {
            return Err(Error::validation(
                "feature_dim",
                format!("{} < 2; need one informative and one proxy feature", self.feature_dim),
            ));
        }
        if !(0.0..=1.0).contains(&self.proxy_strength) {
            return Err(Error::validation(
                "proxy_strength",
                format!("{} is not in [0, 1]", self.proxy_strength),
            ));
        }
        if !(self.noise_scale.is_finite() && self.noise_scale > 0.0) {
            return Err(Error::validation(
                "noise_scale",
                format!("{} is not a positive real", self.noise_scale),
            ));
        }
        if !(self.score_concentration.is_finite() && self.score_concentration > 0.0) {
            return Err(Error::validation(
                "score_concentration",
                format!("{} is not a positive real", self.score_concentration),
            ));
        }
        Ok(())
    }

    pub fn total(&self) -> usize {
        self.n_group0 + self.n_group1
    }
}

pub(crate) const SCORE_CLAMP: f64 = 1e-6;

pub fn clamped_logit(score: f64) -> f64 {
    let p = score.clamp(SCORE_CLAMP, 1.0 - SCORE_CLAMP);
    (p / (1.0 - p)).ln()
}

/// Beta shape parameters `(a, b)` with concentration `kappa` whose upper tail
/// `Pr{X ≥ 0.5}` equals `rate`.
pub fn calibrate_beta(rate: f64, kappa: f64) -> (f64, f64) {
    let shapes = |mean: f64| (mean * kappa, (1.0 - mean) * kappa);
    let tail = |mean: f64| {
        let (a, b) = shapes(mean);
        1.0 - beta_reg(a, b, 0.5)
    };
    // The upper tail is increasing in the mean.
    let (mut lo, mut hi) = (1e-9, 1.0 - 1e-9);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if tail(mid) < rate {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    shapes(0.5 * (lo + hi))
}

pub fn generate_population(spec: &PopulationSpec) -> Result<Vec<ScoredRecord>> {
    spec.validate()?;
    let mut rng = seed::rng(spec.seed);
    let n = spec.total();

    let mut groups: Vec<Group> = std::iter::repeat_n(Group::Reference, spec.n_group0)
        .chain(std::iter::repeat_n(Group::Protected, spec.n_group1))
        .collect();
    groups.shuffle(&mut rng);

    let informative = spec.feature_dim - 1;
    let loadings: Vec<f64> = (0..informative).map(|_| rng.random_range(0.5..1.5)).collect();

    let beta_for = |rate: f64| -> Result<Beta<f64>> {
        let (a, b) = calibrate_beta(rate, spec.score_concentration);
        Beta::new(a, b).map_err(|e| Error::Numerical(format!("beta({a}, {b}): {e}")))
    };
    let dists = [
        beta_for(spec.target_positive_rate_group0)?,
        beta_for(spec.target_positive_rate_group1)?,
    ];

    // Proxy = ρ·z(group) + √(1−ρ²)·ε has population correlation ρ with group.
    let share1 = spec.n_group1 as f64 / n as f64;
    let group_sd = (share1 * (1.0 - share1)).sqrt();
    let rho = spec.proxy_strength;
    let residual_weight = (1.0 - rho * rho).sqrt();

    let records = groups
        .into_iter()
        .enumerate()
        .map(|(i, group)| {
            let score: f64 = dists[group.index()].sample(&mut rng);
            let score = score.clamp(0.0, 1.0);
            let z = clamped_logit(score);
            let mut features = Vec::with_capacity(spec.feature_dim);
            for &a in &loadings {
                let eps: f64 = rng.sample(StandardNormal);
                features.push(a * z + spec.noise_scale * eps);
            }
            let eps: f64 = rng.sample(StandardNormal);
            let standardized = (group.indicator() - share1) / group_sd;
            features.push(rho * standardized + residual_weight * eps);
            ScoredRecord {
                id: i as u64,
                group,
                features,
                score,
            }
        })
        .collect();
    Ok(records)
}

/// Experiment A base: the reference-group records, each reassigned to a group
/// by an independent fair coin. Scores and features are untouched.
pub fn make_base_dataset_a(pop: &[ScoredRecord], seed: u64) -> Result<Vec<ScoredRecord>> {
    let mut rng = seed::rng(seed::derive(seed, &[seed::STREAM_REASSIGN]));
    let out: Vec<ScoredRecord> = pop
        .iter()
        .filter(|r| r.group == Group::Reference)
        .map(|r| {
            let group = if rng.random_bool(0.5) {
                Group::Protected
            } else {
                Group::Reference
            };
            ScoredRecord {
                group,
                ..r.clone()
            }
        })
        .collect();
    if out.is_empty() {
        return Err(Error::EmptySelection(
            "population has no group-0 records to build the Experiment A base".into(),
        ));
    }
    Ok(out)
}

/// Experiment B base: the population as is.
pub fn make_base_dataset_b(pop: &[ScoredRecord]) -> Vec<ScoredRecord> {
    pop.to_vec()
}

/// Per-group `(count, positives at score ≥ 0.5)`.
pub fn group_summary(pop: &[ScoredRecord]) -> [(usize, usize); 2] {
    let mut out = [(0, 0); 2];
    for r in pop {
        let cell = &mut out[r.group.index()];
        cell.0 += 1;
        if r.score >= 0.5 {
            cell.1 += 1;
        }
    }
    out
}
