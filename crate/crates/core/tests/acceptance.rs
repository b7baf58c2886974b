//! End-to-end acceptance checks. Each test writes one `criterion N: PASS|FAIL`
//! line straight to stderr (bypassing the test harness capture) so the
//! verdicts show up in a plain `cargo test` log.

mod common;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::sync::OnceLock;

use bagscore::data::{load_concrete, train_test_split};
use bagscore::ensemble::{train_ensemble, MlpSpec, TrainConfig};
use bagscore::kde::{bagging_score, estimate_density, KdeConfig};
use bagscore::metrics::{evaluate_aggregators, mae, mape, r2, rmse};
use bagscore::{aggregate_mean, aggregate_median, Aggregator};

use common::*;

fn verdict(n: usize, ok: bool, detail: &str) {
    let line = format!(
        "criterion {n}: {} ({detail})\n",
        if ok { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn concrete_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/concrete_data.csv")
}

// Training-based criteria only run once the gradient check has passed.
fn gradients_verified() -> bool {
    static CHECK: OnceLock<(bool, String)> = OnceLock::new();
    CHECK.get_or_init(gradient_check).0
}

fn gradient_check() -> (bool, String) {
    let mut rng = test_rng(606);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let spec = random_tiny_spec(&mut rng);
        let params = random_params(&spec, &mut rng);
        let rows = 3 + rng.below(6);
        let xs: Vec<f64> = (0..rows * spec.input_dim)
            .map(|_| rng.uniform_in(-2.0, 2.0))
            .collect();
        let ys: Vec<f64> = (0..rows).map(|_| rng.uniform_in(-2.0, 2.0)).collect();
        worst = worst.max(max_gradient_error(&spec, &params, &xs, &ys, 1e-5, 1e-7));
    }
    (
        worst <= 1e-4,
        format!("50 networks, worst relative error {worst:.3e}"),
    )
}

#[test]
fn criterion_1_concrete_aggregator_ranking() {
    assert!(gradients_verified(), "gradient check must pass first");
    let data = load_concrete(concrete_path()).unwrap();
    let spec = MlpSpec::alternating(data.n_cols());
    let config = TrainConfig::default();
    let kde = KdeConfig::default();
    let (mut ordered, mut mae_ok, mut r2_ok) = (0, 0, 0);
    let mut details = Vec::new();
    for split_seed in 0..5u64 {
        let (train, test) = train_test_split(&data, split_seed, 0.1).unwrap();
        let model = train_ensemble(&spec, 100, &train, &config).unwrap();
        let report = evaluate_aggregators(&model, &test, &kde).unwrap();
        let (mean, median, bs) = (
            report.get(Aggregator::Mean),
            report.get(Aggregator::Median),
            report.get(Aggregator::BaggingScore),
        );
        ordered += (bs.rmse <= median.rmse && median.rmse <= mean.rmse) as usize;
        mae_ok += (bs.mae <= mean.mae) as usize;
        r2_ok += (bs.r2 >= 0.85) as usize;
        let line = format!(
            "seed {split_seed}: rmse mean/median/bs {:.4}/{:.4}/{:.4}, mae mean/bs {:.4}/{:.4}, bs r2 {:.4}",
            mean.rmse, median.rmse, bs.rmse, mean.mae, bs.mae, bs.r2
        );
        let _ = std::io::stderr().write_all(format!("  {line}\n").as_bytes());
        details.push(line);
    }
    let ok = ordered >= 3 && mae_ok == 5 && r2_ok >= 3;
    verdict(
        1,
        ok,
        &format!("rmse ordering {ordered}/5 (need 3), bs mae <= mean mae {mae_ok}/5 (need 5), bs r2 >= 0.85 {r2_ok}/5 (need 3)"),
    );
    assert!(ok, "{}", details.join("\n"));
}

#[test]
fn criterion_2_constant_sets() {
    let kde = KdeConfig::default();
    let mut failures = 0;
    for &c in &[0.0, 1.0, -3.25, 1e-300, 7.5e12, -0.1] {
        for n in [1usize, 2, 3, 10, 100, 1000] {
            let r = bagging_score(&vec![c; n], &kde).unwrap();
            if r.representative != c || r.score != 1.0 {
                failures += 1;
            }
        }
    }
    verdict(
        2,
        failures == 0,
        &format!("36 constant sets, {failures} mismatches"),
    );
    assert_eq!(failures, 0);
}

#[test]
fn criterion_3_matches_brute_force() {
    let kde = KdeConfig::default();
    let mut rng = test_rng(303);
    let (mut worst, mut argmax_diff, mut shape_diff) = (0.0f64, 0, 0);
    for _ in 0..1000 {
        let values = random_cluster_set(&mut rng);
        let grid = estimate_density(&values, &kde).unwrap();
        let oracle = brute_force_density(&values);
        if grid.positions != oracle.positions {
            shape_diff += 1;
            continue;
        }
        for (a, b) in grid.densities.iter().zip(&oracle.densities) {
            worst = worst.max((a - b).abs());
        }
        argmax_diff += (grid.argmax() != oracle.argmax()) as usize;
    }
    let ok = worst <= 1e-12 && argmax_diff == 0 && shape_diff == 0;
    verdict(
        3,
        ok,
        &format!("1000 sets, max |diff| {worst:.2e}, grid mismatches {shape_diff}, argmax mismatches {argmax_diff}"),
    );
    assert!(ok);
}

#[test]
fn criterion_4_affine_equivariance() {
    let kde = KdeConfig::default();
    let mut rng = test_rng(404);
    let (mut rep_fail, mut score_fail, mut worst_score) = (0, 0, 0.0f64);
    for _ in 0..200 {
        let values = random_cluster_set(&mut rng);
        let a = rng.uniform_in(0.1, 10.0);
        let b = rng.uniform_in(-100.0, 100.0);
        let moved: Vec<f64> = values.iter().map(|y| a * y + b).collect();
        let base = bagging_score(&values, &kde).unwrap();
        let r = bagging_score(&moved, &kde).unwrap();
        let step = estimate_density(&values, &kde).unwrap().step;
        if (r.representative - (a * base.representative + b)).abs() > a * step {
            rep_fail += 1;
        }
        let d = (r.score - base.score).abs();
        worst_score = worst_score.max(d);
        score_fail += (d > 1e-9) as usize;
    }
    let ok = rep_fail == 0 && score_fail == 0;
    verdict(
        4,
        ok,
        &format!("200 sets, representative off by more than a step {rep_fail}, score drift > 1e-9 {score_fail} (max {worst_score:.2e})"),
    );
    assert!(ok);
}

#[test]
fn criterion_5_mode_seeking_on_skewed_sets() {
    let kde = KdeConfig::default();
    let mut rng = test_rng(505);
    let (mut ordered, mut closer) = (0, 0);
    for _ in 0..100 {
        let m = rng.uniform_in(-50.0, 50.0);
        let scale = rng.uniform_in(1.0, 20.0);
        let n = 50 + rng.below(451);
        let values = skewed_set(&mut rng, m, scale, n);
        let bs = bagging_score(&values, &kde).unwrap().representative;
        let median = aggregate_median(&values).unwrap();
        let mean = aggregate_mean(&values).unwrap();
        ordered += ((bs - m).abs() <= (median - m).abs() && (median - m).abs() <= (mean - m).abs())
            as usize;
        closer += ((bs - m).abs() < (mean - m).abs()) as usize;
    }
    let ok = ordered >= 95 && closer == 100;
    verdict(
        5,
        ok,
        &format!("100 sets, |bs-m| <= |median-m| <= |mean-m| in {ordered} (need 95), |bs-m| < |mean-m| in {closer} (need 100)"),
    );
    assert!(ok);
}

#[test]
fn criterion_6_gradient_check() {
    static CHECK: OnceLock<(bool, String)> = OnceLock::new();
    let (ok, detail) = CHECK.get_or_init(gradient_check);
    verdict(6, *ok, detail);
    assert!(*ok);
}

#[test]
fn criterion_7_metric_examples() {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;
    let checks = [
        close(r2(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0),
        close(r2(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).unwrap(), 0.0),
        close(rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 12.5f64.sqrt()),
        close(mape(&[100.0, 200.0], &[110.0, 180.0]).unwrap(), 10.0),
        close(mae(&[1.0, -1.0], &[0.0, 0.0]).unwrap(), 1.0),
        r2(&[5.0, 5.0, 5.0], &[5.0, 5.0, 5.0]).is_err(),
        matches!(
            mape(&[1.0, 0.0], &[1.0, 1.0]),
            Err(bagscore::Error::ZeroTarget { row: 1 })
        ),
        matches!(
            rmse(&[1.0, 2.0], &[1.0]),
            Err(bagscore::Error::LengthMismatch { .. })
        ),
    ];
    let failed = checks.iter().filter(|c| !**c).count();
    verdict(
        7,
        failed == 0,
        &format!("{} examples, {failed} failed", checks.len()),
    );
    assert_eq!(failed, 0);
}

#[test]
fn criterion_8_reproducible_runs() {
    assert!(gradients_verified(), "gradient check must pass first");
    let dir = tempfile::tempdir().unwrap();
    let dataset = concrete_path();
    let dataset = dataset.to_str().unwrap();
    let run_pair = |name: &str, threads: usize| {
        let out = dir.path().join(name);
        let out = out.to_str().unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            bagscore::cli::run([
                "bagscore",
                "--out-dir",
                out,
                "--seed",
                "2",
                "train",
                "--dataset",
                dataset,
                "--n-nets",
                "6",
                "--epochs",
                "40",
            ])
            .unwrap();
            bagscore::cli::run([
                "bagscore",
                "--out-dir",
                out,
                "compare",
                "--model",
                &format!("{out}/model.bsm"),
                "--dataset",
                dataset,
            ])
            .unwrap();
        });
        ["model.bsm", "report.csv", "predictions.csv"]
            .map(|f| fs::read(dir.path().join(name).join(f)).unwrap())
    };
    let a = run_pair("a", 1);
    let b = run_pair("b", 4);
    let same = a.iter().zip(&b).filter(|(x, y)| x == y).count();
    verdict(
        8,
        same == 3,
        &format!("model, report and predictions byte-identical across runs: {same}/3"),
    );
    assert_eq!(same, 3);
}
