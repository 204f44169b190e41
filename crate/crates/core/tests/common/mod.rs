//! Independent record-by-record metric implementation shared by test targets.
#![allow(dead_code)]

use biasaudit::datagen::Group;
use biasaudit::metrics::{Metric, MetricReport, Outcome, Status};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Brute-force values, `None` where a conditioning set is empty or DI's
/// denominator is zero. NMI is computed with base-2 logarithms.
pub struct Oracle {
    pub mean_score_diff: Option<f64>,
    pub residual_diff: Option<f64>,
    pub equal_opportunity_diff: Option<f64>,
    pub equal_misopportunity_diff: Option<f64>,
    pub disparate_impact: Option<f64>,
    pub nmi: Option<f64>,
}

fn conditional_mean(
    data: &[Outcome],
    keep: impl Fn(&Outcome) -> bool,
    value: impl Fn(&Outcome) -> f64,
) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for r in data {
        if keep(r) {
            sum += value(r);
            n += 1;
        }
    }
    if n == 0 {
        None
    } else {
        Some(sum / n as f64)
    }
}

pub fn oracle(data: &[Outcome]) -> Oracle {
    let s1 = |r: &Outcome| r.group == Group::Protected;
    let s0 = |r: &Outcome| r.group == Group::Reference;
    let diff = |a: Option<f64>, b: Option<f64>| Some(a? - b?);

    let score = |r: &Outcome| r.score_hat;
    let resid = |r: &Outcome| r.score_hat - r.label as f64;
    let pos = |r: &Outcome| r.label_hat as f64;

    let mean_score_diff = diff(conditional_mean(data, s1, score), conditional_mean(data, s0, score));
    let residual_diff = diff(conditional_mean(data, s1, resid), conditional_mean(data, s0, resid));
    let equal_opportunity_diff = diff(
        conditional_mean(data, |r| s1(r) && r.label == 1, pos),
        conditional_mean(data, |r| s0(r) && r.label == 1, pos),
    );
    let equal_misopportunity_diff = diff(
        conditional_mean(data, |r| s1(r) && r.label == 0, pos),
        conditional_mean(data, |r| s0(r) && r.label == 0, pos),
    );
    let disparate_impact = match (conditional_mean(data, s1, pos), conditional_mean(data, s0, pos)) {
        (Some(a), Some(b)) if b > 0.0 => Some(a / b),
        _ => None,
    };

    let has_both = data.iter().any(s1) && data.iter().any(s0);
    let nmi = has_both.then(|| {
        let n = data.len() as f64;
        let mut counts = [[0u64; 2]; 2];
        for r in data {
            counts[r.label_hat as usize][r.group.index()] += 1;
        }
        let joint = counts.map(|row| row.map(|c| c as f64 / n));
        let py = [joint[0][0] + joint[0][1], joint[1][0] + joint[1][1]];
        let ps = [joint[0][0] + joint[1][0], joint[0][1] + joint[1][1]];
        let h = |p: [f64; 2]| -> f64 {
            p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum()
        };
        let (hy, hs) = (h(py), h(ps));
        if hy == 0.0 || hs == 0.0 {
            return 0.0;
        }
        let mut mi = 0.0;
        for y in 0..2 {
            for s in 0..2 {
                if joint[y][s] > 0.0 {
                    mi += joint[y][s] * (joint[y][s] / (py[y] * ps[s])).log2();
                }
            }
        }
        (mi / (hy * hs).sqrt()).clamp(0.0, 1.0)
    });

    Oracle {
        mean_score_diff,
        residual_diff,
        equal_opportunity_diff,
        equal_misopportunity_diff,
        disparate_impact,
        nmi,
    }
}

pub fn random_dataset(rng: &mut ChaCha8Rng) -> Vec<Outcome> {
    let n = rng.random_range(1..=200);
    // Skewed cell probabilities make empty cells and degenerate margins common.
    let p_group = rng.random_range(0.0..1.0);
    let p_label = rng.random_range(0.0..1.0);
    let p_pred = rng.random_range(0.0..1.0);
    (0..n)
        .map(|_| {
            let group = if rng.random_bool(p_group) { Group::Protected } else { Group::Reference };
            let label = u8::from(rng.random_bool(p_label));
            let score_hat: f64 = if rng.random_bool(p_pred) {
                rng.random_range(0.5..=1.0)
            } else {
                rng.random_range(0.0..0.5)
            };
            Outcome {
                group,
                label,
                score_hat,
                label_hat: u8::from(score_hat >= 0.5),
            }
        })
        .collect()
}

pub fn max_abs_error(report: &MetricReport, want: &Oracle) -> f64 {
    let pairs = [
        (Metric::MeanScoreDiff, want.mean_score_diff),
        (Metric::ResidualDiff, want.residual_diff),
        (Metric::EqualOpportunityDiff, want.equal_opportunity_diff),
        (Metric::EqualMisopportunityDiff, want.equal_misopportunity_diff),
        (Metric::DisparateImpact, want.disparate_impact),
        (Metric::Nmi, want.nmi),
    ];
    let mut worst: f64 = 0.0;
    for (m, expected) in pairs {
        let got = report.value(m);
        match (got, expected) {
            (Some(a), Some(b)) => worst = worst.max((a - b).abs()),
            (None, None) => assert_ne!(report.get(m).status, Status::Ok, "{m}"),
            _ => panic!("{m}: library {got:?} vs oracle {expected:?}"),
        }
    }
    worst
}


use biasaudit::bias::LabeledRecord;
use biasaudit::model::{design_row, ElasticNetProblem, Model};

/// The standardized problem a fitted model was trained on.
pub fn problem_for(model: &Model, train: &[LabeledRecord]) -> ElasticNetProblem {
    let p = model.n_inputs();
    let rows: Vec<Vec<f64>> = train
        .iter()
        .map(|r| design_row(&r.record, model.params.include_group_feature))
        .collect();
    ElasticNetProblem {
        columns: (0..p)
            .map(|j| {
                rows.iter()
                    .map(|r| (r[j] - model.feature_means[j]) / model.feature_scales[j])
                    .collect()
            })
            .collect(),
        y: train.iter().map(|r| r.label as f64).collect(),
        lambda: model.params.lambda,
        alpha: model.params.alpha,
    }
}
