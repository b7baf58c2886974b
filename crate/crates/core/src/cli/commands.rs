use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use super::manifest::RunManifest;
use super::{
    CommonArgs, CompareArgs, DensityArgs, KdeArgs, SyntheticArgs, TrainArgs, TrainingArgs,
};
use crate::aggregate::{aggregate_mean, aggregate_median, Aggregator};
use crate::data::{
    file_sha256, generate_synthetic, load_csv, train_test_split, write_csv, GroundTruth,
    SyntheticSpec,
};
use crate::ensemble::{
    load_model, predict_ensemble, save_model, train_ensemble_with, Activation, EnsembleModel,
    MlpSpec, Schedule, TrainConfig,
};
use crate::error::{Error, Result};
use crate::kde::{bagging_score_with_grid, KdeConfig};
use crate::metrics::{evaluate_aggregators, sig6, EvalReport};

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn kde_config(args: &KdeArgs, manifest: &mut RunManifest) -> Result<KdeConfig<f64>> {
    let cfg = KdeConfig::new(
        args.grid_divisor,
        args.bandwidth_divisor,
        args.window_factor,
    )?;
    manifest
        .set("grid_divisor", cfg.grid_divisor)
        .set("bandwidth_divisor", cfg.bandwidth_divisor)
        .set("window_factor", cfg.window_half_width_factor);
    Ok(cfg)
}

fn network_setup(
    input_dim: usize,
    args: &TrainingArgs,
    common: &CommonArgs,
    manifest: &mut RunManifest,
) -> Result<(MlpSpec, TrainConfig<f64>, Vec<u64>)> {
    let activations = args
        .activations
        .iter()
        .map(|a| a.parse::<Activation>())
        .collect::<Result<Vec<_>>>()?;
    let spec = MlpSpec::new(input_dim, args.hidden.clone(), activations)?;
    let config = TrainConfig {
        epochs: args.epochs,
        learning_rate: args.learning_rate,
        batch_size: args.batch_size,
        val_fraction: args.val_fraction,
        patience: args.patience,
    };
    config.validate()?;
    let n_nets = args.n_nets.unwrap_or_else(|| common.preset.n_nets());
    if n_nets == 0 {
        return Err(Error::invalid("--n-nets must be positive"));
    }
    let seeds: Vec<u64> = (0..n_nets as u64).map(|i| args.seed_base + i).collect();
    let widths: Vec<String> = spec.hidden_widths.iter().map(|w| w.to_string()).collect();
    let acts: Vec<String> = spec.activations.iter().map(|a| a.to_string()).collect();
    manifest
        .set("preset", format!("{:?}", common.preset).to_lowercase())
        .set("n_nets", n_nets)
        .set("seed_base", args.seed_base)
        .set("hidden", widths.join(","))
        .set("activations", acts.join(","))
        .set("epochs", config.epochs)
        .set("learning_rate", config.learning_rate)
        .set("batch_size", config.batch_size)
        .set("patience", config.patience)
        .set("val_fraction", config.val_fraction);
    Ok((spec, config, seeds))
}

/// Trains an ensemble on the training split and writes the model file.
pub fn cmd_train(common: &CommonArgs, args: &TrainArgs) -> Result<PathBuf> {
    let mut manifest = RunManifest::new("train");
    let data = load_csv(&args.dataset)?;
    let digest = file_sha256(&args.dataset)?;
    let split_seed = common.seed.unwrap_or(0);
    let (train, test) = train_test_split(&data, split_seed, args.test_fraction)?;
    manifest
        .set("dataset", args.dataset.display())
        .set("dataset_sha256", &digest)
        .set("split_seed", split_seed)
        .set("test_fraction", args.test_fraction)
        .set("n_train", train.n_rows())
        .set("n_test", test.n_rows());
    let (spec, config, seeds) =
        network_setup(data.n_cols(), &args.training, common, &mut manifest)?;

    log::info!(
        "training {} members on {} rows",
        seeds.len(),
        train.n_rows()
    );
    let mut model = train_ensemble_with(&spec, &seeds, &train, &config, Schedule::Parallel)?;
    model
        .metadata
        .insert("split_seed".into(), split_seed.to_string());
    model
        .metadata
        .insert("test_fraction".into(), args.test_fraction.to_string());
    model.metadata.insert("dataset_sha256".into(), digest);

    let path = common.out_dir.join(&args.model_name);
    save_model(&model, &path)?;
    manifest
        .set("model", path.display())
        .set("model_sha256", file_sha256(&path)?);
    manifest.write(&common.out_dir)?;
    println!("wrote {} ({} members)", path.display(), model.len());
    Ok(path)
}

/// Evaluates the three aggregators on the model's test split.
pub fn cmd_compare(common: &CommonArgs, args: &CompareArgs) -> Result<EvalReport<f64>> {
    let mut manifest = RunManifest::new("compare");
    let model = load_model(&args.model)?;
    let data = load_csv(&args.dataset)?;
    let digest = file_sha256(&args.dataset)?;
    if let Some(trained_on) = model.metadata.get("dataset_sha256") {
        if *trained_on != digest {
            log::warn!(
                "{} differs from the dataset the model was trained on",
                args.dataset.display()
            );
        }
    }
    let recorded = |key: &str| model.metadata.get(key).and_then(|v| v.parse::<f64>().ok());
    let split_seed = match common.seed {
        Some(s) => s,
        None => recorded("split_seed").map(|s| s as u64).unwrap_or(0),
    };
    let test_fraction = args
        .test_fraction
        .or_else(|| recorded("test_fraction"))
        .unwrap_or(0.1);
    let (_, test) = train_test_split(&data, split_seed, test_fraction)?;
    if test.n_cols() != model.spec.input_dim {
        return Err(Error::invalid(format!(
            "dataset has {} features, model expects {}",
            test.n_cols(),
            model.spec.input_dim
        )));
    }
    manifest
        .set("model", args.model.display())
        .set("model_sha256", file_sha256(&args.model)?)
        .set("n_members", model.len())
        .set("dataset", args.dataset.display())
        .set("dataset_sha256", &digest)
        .set("split_seed", split_seed)
        .set("test_fraction", test_fraction)
        .set("n_test", test.n_rows());
    let kde = kde_config(&args.kde, &mut manifest)?;

    let report = evaluate_aggregators(&model, &test, &kde)?;

    let text = report.to_text();
    let out = &common.out_dir;
    std::fs::write(out.join("report.txt"), &text)
        .map_err(|e| Error::io(out.join("report.txt"), e))?;
    let csv_path = out.join("report.csv");
    report
        .write_csv(create(&csv_path)?)
        .map_err(|e| Error::io(&csv_path, e))?;
    let pred_path = out.join("predictions.csv");
    report
        .write_predictions_csv(create(&pred_path)?)
        .map_err(|e| Error::io(&pred_path, e))?;
    manifest
        .set("report_txt", out.join("report.txt").display())
        .set("report_csv", csv_path.display())
        .set("predictions_csv", pred_path.display());
    manifest.write(out)?;
    print!("{text}");
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensitySummary {
    pub mean: f64,
    pub median: f64,
    pub representative: f64,
    pub score: f64,
    pub n_predictions: usize,
}

impl DensitySummary {
    pub fn line(&self) -> String {
        format!(
            "n={} mean={} median={} bs={} score={}",
            self.n_predictions, self.mean, self.median, self.representative, self.score
        )
    }
}

/// Writes the estimated density of one input's prediction set.
///
/// A prediction set without spread has no grid; its CSV holds the single
/// point `(value, 1)`.
pub fn cmd_density(common: &CommonArgs, args: &DensityArgs) -> Result<DensitySummary> {
    let mut manifest = RunManifest::new("density");
    let model = load_model(&args.model)?;
    manifest
        .set("model", args.model.display())
        .set("model_sha256", file_sha256(&args.model)?);
    let x: Vec<f64> = match (&args.x, args.row, &args.dataset) {
        (Some(x), _, _) => x.clone(),
        (None, Some(row), Some(path)) => {
            let data = load_csv(path)?;
            if row >= data.n_rows() {
                return Err(Error::invalid(format!(
                    "row {row} out of range ({} rows)",
                    data.n_rows()
                )));
            }
            manifest
                .set("dataset", path.display())
                .set("dataset_sha256", file_sha256(path)?)
                .set("row", row);
            data.row(row).to_vec()
        }
        _ => return Err(Error::invalid("give either --x or --dataset with --row")),
    };
    let xs: Vec<String> = x.iter().map(|v| v.to_string()).collect();
    manifest.set("x", xs.join(","));
    let kde = kde_config(&args.kde, &mut manifest)?;

    let set = predict_ensemble(&model, &x)?;
    let values = set.values();
    let (result, grid) = bagging_score_with_grid(values, &kde)?;
    let summary = DensitySummary {
        mean: aggregate_mean(values)?,
        median: aggregate_median(values)?,
        representative: result.representative,
        score: result.score,
        n_predictions: values.len(),
    };

    let path = common.out_dir.join(&args.output);
    let write = |path: &Path| -> std::io::Result<()> {
        let file = File::create(path)?;
        match &grid {
            Some(g) => g.write_csv(BufWriter::new(file)),
            None => {
                use std::io::Write;
                let mut w = BufWriter::new(file);
                writeln!(w, "position,density")?;
                writeln!(w, "{:.16e},{:.16e}", result.representative, result.score)?;
                w.flush()
            }
        }
    };
    write(&path).map_err(|e| Error::io(&path, e))?;
    manifest
        .set("density_csv", path.display())
        .set("summary", summary.line());
    manifest.write(&common.out_dir)?;
    println!("{}", summary.line());
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryOutcome {
    pub x: f64,
    pub truth: f64,
    pub mean: f64,
    pub median: f64,
    pub representative: f64,
    pub score: f64,
}

impl QueryOutcome {
    pub fn abs_error(&self, agg: Aggregator) -> f64 {
        let v = match agg {
            Aggregator::Mean => self.mean,
            Aggregator::Median => self.median,
            Aggregator::BaggingScore => self.representative,
        };
        (v - self.truth).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticOutcome {
    pub queries: Vec<QueryOutcome>,
}

impl SyntheticOutcome {
    pub fn mean_abs_error(&self, agg: Aggregator) -> f64 {
        self.queries.iter().map(|q| q.abs_error(agg)).sum::<f64>() / self.queries.len() as f64
    }
}

fn synthetic_spec(args: &SyntheticArgs) -> Result<SyntheticSpec> {
    let function: GroundTruth = args.function.parse()?;
    if args.domain.len() != 2 {
        return Err(Error::invalid("--domain takes lo,hi"));
    }
    if !args.gap.len().is_multiple_of(2) {
        return Err(Error::invalid("--gap takes lo,hi pairs"));
    }
    let gaps = if args.no_gap {
        Vec::new()
    } else if args.gap.is_empty() {
        SyntheticSpec::default().gaps
    } else {
        args.gap.chunks(2).map(|p| (p[0], p[1])).collect()
    };
    let spec = SyntheticSpec {
        function,
        domain: (args.domain[0], args.domain[1]),
        n_train: args.n_train,
        noise_std: args.noise,
        gaps,
    };
    spec.validate()?;
    Ok(spec)
}

/// Evenly spaced interior points of the gaps (or of the domain).
fn query_points(spec: &SyntheticSpec, args: &SyntheticArgs) -> Vec<f64> {
    if !args.query.is_empty() {
        return args.query.clone();
    }
    let regions = if spec.gaps.is_empty() {
        vec![spec.domain]
    } else {
        spec.gaps.clone()
    };
    let per_region = (args.queries / regions.len()).max(1);
    regions
        .iter()
        .flat_map(|&(a, b)| {
            (1..=per_region).map(move |k| a + (b - a) * k as f64 / (per_region + 1) as f64)
        })
        .collect()
}

/// Trains on gapped synthetic data and compares aggregators at query points.
pub fn cmd_synthetic(common: &CommonArgs, args: &SyntheticArgs) -> Result<SyntheticOutcome> {
    let mut manifest = RunManifest::new("synthetic");
    let spec = synthetic_spec(args)?;
    let data_seed = common.seed.unwrap_or(0);
    let gaps: Vec<String> = spec.gaps.iter().map(|(a, b)| format!("{a}:{b}")).collect();
    manifest
        .set("function", spec.function)
        .set("domain", format!("{}:{}", spec.domain.0, spec.domain.1))
        .set("n_train", spec.n_train)
        .set("noise", spec.noise_std)
        .set("gaps", gaps.join(" "))
        .set("data_seed", data_seed);
    let data = generate_synthetic(&spec, data_seed)?;
    let (net, config, seeds) = network_setup(1, &args.training, common, &mut manifest)?;
    let kde = kde_config(&args.kde, &mut manifest)?;
    let queries = query_points(&spec, args);
    if queries.is_empty() {
        return Err(Error::invalid("no query points"));
    }

    let model: EnsembleModel<f64> =
        train_ensemble_with(&net, &seeds, &data, &config, Schedule::Parallel)?;
    let mut outcomes = Vec::with_capacity(queries.len());
    for &x in &queries {
        let set = predict_ensemble(&model, &[x])?;
        let values = set.values();
        let (bs, _) = bagging_score_with_grid(values, &kde)?;
        outcomes.push(QueryOutcome {
            x,
            truth: spec.function.eval(x),
            mean: aggregate_mean(values)?,
            median: aggregate_median(values)?,
            representative: bs.representative,
            score: bs.score,
        });
    }
    let outcome = SyntheticOutcome { queries: outcomes };

    let out = &common.out_dir;
    let train_path = out.join("synthetic_train.csv");
    write_csv(&data, &train_path)?;
    let q_path = out.join("synthetic_queries.csv");
    let s_path = out.join("synthetic_summary.csv");
    let write = || -> std::io::Result<()> {
        use std::io::Write;
        let mut q = BufWriter::new(File::create(&q_path)?);
        writeln!(q, "x,truth,mean,median,bs,score,err_mean,err_median,err_bs")?;
        for r in &outcome.queries {
            writeln!(
                q,
                "{},{},{},{},{},{},{},{},{}",
                r.x,
                r.truth,
                r.mean,
                r.median,
                r.representative,
                r.score,
                r.abs_error(Aggregator::Mean),
                r.abs_error(Aggregator::Median),
                r.abs_error(Aggregator::BaggingScore)
            )?;
        }
        q.flush()?;
        let mut s = BufWriter::new(File::create(&s_path)?);
        writeln!(s, "aggregator,mean_abs_error")?;
        for agg in Aggregator::ALL {
            writeln!(s, "{},{}", agg.label(), outcome.mean_abs_error(agg))?;
        }
        s.flush()
    };
    write().map_err(|e| Error::io(out, e))?;
    manifest
        .set("train_csv", train_path.display())
        .set("queries_csv", q_path.display())
        .set("summary_csv", s_path.display());
    manifest.write(out)?;

    println!(
        "{:>10} {:>10} {:>10} {:>10} {:>10} {:>8}",
        "x", "truth", "|mean|", "|median|", "|bs|", "score"
    );
    for r in &outcome.queries {
        println!(
            "{:>10} {:>10} {:>10} {:>10} {:>10} {:>8}",
            sig6(r.x),
            sig6(r.truth),
            sig6(r.abs_error(Aggregator::Mean)),
            sig6(r.abs_error(Aggregator::Median)),
            sig6(r.abs_error(Aggregator::BaggingScore)),
            sig6(r.score)
        );
    }
    for agg in Aggregator::ALL {
        println!(
            "mean |{} - f(x)| = {}",
            agg.label(),
            sig6(outcome.mean_abs_error(agg))
        );
    }
    Ok(outcome)
}
