//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};

use biasaudit::bias::{apply_label_policy, apply_sample_policy, LabelPolicy, SamplePolicy};
use biasaudit::config::{Experiment, ExperimentConfig};
use biasaudit::datagen::{generate_population, Group, PopulationSpec, ScoredRecord};
use biasaudit::harness::{run_experiment, ExperimentReport};
use biasaudit::metrics::{audit, nmi_from_counts, outcomes_from_confusion, GroupedOutcomes, JointCounts, Metric};
use biasaudit::model::{fit_traced, ModelParams};
use common::{max_abs_error, oracle, problem_for, random_dataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn deviation(metric: Metric, value: f64) -> f64 {
    (value - metric.fair_point()).abs()
}

fn mean(report: &ExperimentReport, dataset: usize, metric: Metric) -> Result<f64, String> {
    report
        .dataset(dataset)
        .and_then(|d| d.mean(metric))
        .ok_or_else(|| format!("dataset {dataset} has no mean for {metric}"))
}

fn metric_oracle_suite() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let data = random_dataset(&mut rng);
        let report = audit(&GroupedOutcomes::new(data.clone()).map_err(|e| e.to_string())?);
        worst = worst.max(max_abs_error(&report, &oracle(&data)));
    }
    ensure(worst <= 1e-12, format!("max abs error {worst:e} > 1e-12"))?;
    Ok(format!("1000 datasets, max abs error {worst:e}"))
}

fn fixture_values() -> Check {
    let report = audit(&outcomes_from_confusion([20, 30, 10, 40], [45, 5, 25, 25]));
    let get = |m: Metric| report.value(m).ok_or(format!("{m} undefined"));
    let eo = get(Metric::EqualOpportunityDiff)?;
    let emo = get(Metric::EqualMisopportunityDiff)?;
    let di = get(Metric::DisparateImpact)?;
    let res = get(Metric::ResidualDiff)?;
    let nmi = get(Metric::Nmi)?;
    ensure((eo + 0.5).abs() < 1e-12, format!("equal opportunity {eo}"))?;
    ensure((emo + 0.3).abs() < 1e-12, format!("equal mis-opportunity {emo}"))?;
    ensure((di - 3.0 / 7.0).abs() < 1e-12, format!("disparate impact {di}"))?;
    ensure((res + 0.4).abs() < 1e-12, format!("residual difference {res}"))?;
    ensure((nmi - 0.1187).abs() <= 1e-3, format!("nmi {nmi}"))?;
    Ok(format!("EO={eo:.4} EMO={emo:.4} DI={di:.4} residual={res:.4} NMI={nmi:.4}"))
}

fn experiment_a_dataset1_least_biased(a: &ExperimentReport) -> Check {
    let mut worst_margin = f64::INFINITY;
    for m in Metric::ALL {
        let d1 = deviation(m, mean(a, 1, m)?);
        for d in 2..=4 {
            let other = deviation(m, mean(a, d, m)?);
            ensure(d1 < other, format!("{m}: |dev| dataset 1 = {d1:.5} ≥ dataset {d} = {other:.5}"))?;
            worst_margin = worst_margin.min(other - d1);
        }
    }
    Ok(format!("smallest margin {worst_margin:.4}"))
}

fn experiment_a_dataset4_most_biased(a: &ExperimentReport) -> Check {
    let mut worst_margin = f64::INFINITY;
    for m in Metric::ALL.into_iter().filter(|&m| m != Metric::ResidualDiff) {
        let d4 = deviation(m, mean(a, 4, m)?);
        for d in 1..=3 {
            let other = deviation(m, mean(a, d, m)?);
            ensure(d4 > other, format!("{m}: |dev| dataset 4 = {d4:.5} ≤ dataset {d} = {other:.5}"))?;
            worst_margin = worst_margin.min(d4 - other);
        }
    }
    Ok(format!("smallest margin {worst_margin:.4}"))
}

fn experiment_b_unfair_without_injection(b: &ExperimentReport) -> Check {
    let di = mean(b, 1, Metric::DisparateImpact)?;
    let msd = mean(b, 1, Metric::MeanScoreDiff)?;
    ensure((di - 1.0).abs() > 0.2, format!("|DI − 1| = {:.4} ≤ 0.2", (di - 1.0).abs()))?;
    ensure(msd.abs() > 0.05, format!("|mean score diff| = {:.4} ≤ 0.05", msd.abs()))?;
    Ok(format!("dataset 1: DI={di:.4}, mean score diff={msd:.4}"))
}

fn experiment_b_label_bias_insensitive(b: &ExperimentReport) -> Check {
    let mut parts = Vec::new();
    for m in [Metric::MeanScoreDiff, Metric::EqualOpportunityDiff, Metric::DisparateImpact, Metric::Nmi] {
        let d1 = mean(b, 1, m)?;
        let label_shift = (mean(b, 3, m)? - d1).abs();
        let sample_shift = (mean(b, 2, m)? - d1).abs();
        ensure(
            label_shift < sample_shift,
            format!("{m}: |D3 − D1| = {label_shift:.5} ≥ |D2 − D1| = {sample_shift:.5}"),
        )?;
        parts.push(format!("{m} {label_shift:.3}<{sample_shift:.3}"));
    }
    Ok(parts.join(", "))
}

fn elastic_net_gradient_and_optimality() -> Check {
    let pop = generate_population(&PopulationSpec {
        n_group0: 1500,
        n_group1: 1500,
        seed: 5,
        ..PopulationSpec::default()
    })
    .map_err(|e| e.to_string())?;
    let train = apply_label_policy(&pop, &LabelPolicy::unbiased());
    let params = ModelParams {
        include_group_feature: true,
        lambda: 0.01,
        ..ModelParams::default()
    };
    let (model, trace) = fit_traced(&train, &params).map_err(|e| e.to_string())?;
    ensure(model.converged, "optimizer did not converge")?;
    ensure(
        trace.windows(2).all(|w| w[1] <= w[0] + 1e-12),
        "objective increased between iterations",
    )?;
    let prob = problem_for(&model, &train);
    let kkt = prob.kkt_violation(model.intercept, &model.coefficients);
    ensure(kkt < 1e-6, format!("subgradient violation {kkt:e}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let b0: f64 = rng.random_range(-2.0..2.0);
        let beta: Vec<f64> = (0..prob.p()).map(|_| rng.random_range(-2.0..2.0)).collect();
        let (g0, g) = prob.smooth_gradient(b0, &beta);
        let mut err = ((prob.smooth_value(b0 + h, &beta) - prob.smooth_value(b0 - h, &beta)) / (2.0 * h) - g0).powi(2);
        let mut norm = g0 * g0;
        for j in 0..prob.p() {
            let (mut up, mut down) = (beta.clone(), beta.clone());
            up[j] += h;
            down[j] -= h;
            let fd = (prob.smooth_value(b0, &up) - prob.smooth_value(b0, &down)) / (2.0 * h);
            err += (fd - g[j]).powi(2);
            norm += g[j] * g[j];
        }
        worst = worst.max((err / norm).sqrt());
    }
    ensure(worst < 1e-5, format!("gradient relative error {worst:e}"))?;
    Ok(format!("max relative gradient error {worst:e}, KKT violation {kkt:e}"))
}

fn sampling_statistics() -> Check {
    let n = 100_000usize;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pop: Vec<ScoredRecord> = (0..n)
        .map(|i| ScoredRecord {
            id: i as u64,
            group: if i % 2 == 0 { Group::Reference } else { Group::Protected },
            features: vec![0.0, 0.0],
            score: rng.random_range(0.0..=1.0),
        })
        .collect();
    let mut worst_z: f64 = 0.0;
    for (name, policy) in [("biased", SamplePolicy::biased()), ("unbiased", SamplePolicy::unbiased())] {
        let kept = apply_sample_policy(&pop, &policy, 11);
        let mut total = [[0usize; 2]; 2];
        let mut hits = [[0usize; 2]; 2];
        for r in &pop {
            total[r.group.index()][usize::from(r.score >= policy.cutoff)] += 1;
        }
        for r in &kept {
            hits[r.group.index()][usize::from(r.score >= policy.cutoff)] += 1;
        }
        for g in 0..2 {
            for band in 0..2 {
                let probe = ScoredRecord {
                    id: 0,
                    group: Group::from_index(g as u8).unwrap(),
                    features: vec![],
                    score: if band == 1 { 1.0 } else { 0.0 },
                };
                let p = policy.inclusion_probability(&probe);
                let m = total[g][band] as f64;
                let expected = m * p;
                let sd = (m * p * (1.0 - p)).sqrt();
                let dev = (hits[g][band] as f64 - expected).abs();
                if sd == 0.0 {
                    ensure(dev == 0.0, format!("{name} (group {g}, band {band}): p={p} but {dev} off"))?;
                } else {
                    ensure(
                        dev <= 3.0 * sd,
                        format!("{name} (group {g}, band {band}): {dev:.1} > 3σ = {:.1}", 3.0 * sd),
                    )?;
                    worst_z = worst_z.max(dev / sd);
                }
            }
        }
    }
    Ok(format!("largest deviation {worst_z:.2}σ"))
}

fn cli_experiment_is_deterministic() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = dir.path().join("experiment_A.cfg");
    std::fs::write(&cfg, biasaudit::config::EXPERIMENT_A_CFG).map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for run in 0..2 {
        let out = dir.path().join(format!("run{run}.json"));
        let status = Command::new(env!("CARGO_BIN_EXE_biasaudit"))
            .args(["experiment", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.success(), format!("run {run} exited with {}", status.status))?;
        outputs.push(std::fs::read(&out).map_err(|e| e.to_string())?);
    }
    ensure(outputs[0] == outputs[1], "JSON reports differ")?;
    Ok(format!("two runs, {} identical bytes", outputs[0].len()))
}

fn nmi_properties() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut checked = 0;
    for _ in 0..2000 {
        let counts = JointCounts {
            n: [[0u64; 2]; 2].map(|row| row.map(|_| rng.random_range(0..80))),
        };
        if counts.total() == 0 {
            continue;
        }
        let v = nmi_from_counts(&counts).map_err(|e| e.to_string())?.value;
        ensure((0.0..=1.0).contains(&v), format!("NMI {v} outside [0, 1]"))?;
        let t = nmi_from_counts(&counts.transposed()).map_err(|e| e.to_string())?.value;
        ensure((v - t).abs() <= 1e-12, format!("symmetry: {v} vs {t}"))?;

        // Base-2 evaluation through the independent oracle.
        let mut records = Vec::new();
        for (y, row) in counts.n.iter().enumerate() {
            for (s, &k) in row.iter().enumerate() {
                for _ in 0..k {
                    records.push(biasaudit::metrics::Outcome {
                        group: Group::from_index(s as u8).unwrap(),
                        label: 0,
                        score_hat: y as f64,
                        label_hat: y as u8,
                    });
                }
            }
        }
        if let Some(base2) = oracle(&records).nmi {
            ensure((v - base2).abs() <= 1e-12, format!("log base: {v} vs {base2}"))?;
        }
        checked += 1;
    }
    for _ in 0..500 {
        let a = [rng.random_range(1..30u64), rng.random_range(1..30u64)];
        let b = [rng.random_range(1..30u64), rng.random_range(1..30u64)];
        let product = JointCounts {
            n: [[a[0] * b[0], a[0] * b[1]], [a[1] * b[0], a[1] * b[1]]],
        };
        let v = nmi_from_counts(&product).map_err(|e| e.to_string())?.value;
        ensure(v.abs() <= 1e-12, format!("product distribution NMI {v:e}"))?;
    }
    Ok(format!("{checked} random joints + 500 product joints"))
}

fn main() -> ExitCode {
    let mut results: Vec<(&str, Check)> = Vec::new();
    let mut run = |name: &'static str, f: &dyn Fn() -> Check| {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d.as_str()),
            Err(d) => ("FAIL", d.as_str()),
        };
        println!("[{tag}] {name}: {detail}");
        results.push((name, outcome));
    };

    run("metric oracle suite", &metric_oracle_suite);
    run("fixture values", &fixture_values);

    let a = run_experiment(&ExperimentConfig::bundled(Experiment::A));
    let b = run_experiment(&ExperimentConfig::bundled(Experiment::B));
    match (&a, &b) {
        (Ok(a), Ok(b)) => {
            run("experiment A: dataset 1 least biased", &|| experiment_a_dataset1_least_biased(a));
            run("experiment A: dataset 4 most biased (except residuals)", &|| {
                experiment_a_dataset4_most_biased(a)
            });
            run("experiment B: bias detected in dataset 1", &|| experiment_b_unfair_without_injection(b));
            run("experiment B: label-bias insensitivity", &|| experiment_b_label_bias_insensitive(b));
        }
        _ => {
            let msg = format!("experiment failed: A={:?} B={:?}", a.as_ref().err(), b.as_ref().err());
            for name in [
                "experiment A: dataset 1 least biased",
                "experiment A: dataset 4 most biased (except residuals)",
                "experiment B: bias detected in dataset 1",
                "experiment B: label-bias insensitivity",
            ] {
                let m = msg.clone();
                run(name, &move || Err(m.clone()));
            }
        }
    }

    run("elastic-net gradient and optimality", &elastic_net_gradient_and_optimality);
    run("sampling policy statistics", &sampling_statistics);
    run("determinism of experiment reports", &cli_experiment_is_deterministic);
    run("NMI properties", &nmi_properties);

    let failed = results.iter().filter(|(_, r)| r.is_err()).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
