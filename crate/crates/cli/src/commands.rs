use std::fs;
use std::path::{Path, PathBuf};

use factorlens::analysis::export::{
    association_csv, heatmap_csv, spectrum_chart, spectrum_csv, sweep_chart, sweep_csv, write_heatmap_pgm,
    write_image_pgm,
};
use factorlens::analysis::{
    factor_digit_association, latent_images, neuron_heatmap, rank_sweep, spectrum, SpectrumReport, SweepReport,
};
use factorlens::bundle::{read_bundle, read_manifest};
use factorlens::nmf::{fit_best_of, read_factors, write_fit, CoupledDataset, SolverConfig};
use factorlens_refnet::{capture_activations, load_mnist, read_params, train_one_epoch, write_params, TrainRegime};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{
    AssocArgs, CaptureArgs, FactorizeArgs, HeatmapArgs, LatentArgs, Precision, SpectraArgs, SweepArgs, TrainArgs,
};
use crate::error::CliError;

type Result<T = ()> = std::result::Result<T, CliError>;

pub const TRAIN_REPORT_FILE: &str = "train.json";

fn mnist_dir(given: &Option<PathBuf>) -> Result<PathBuf> {
    let dir = given.clone().ok_or_else(|| {
        CliError::Usage("no MNIST directory: pass --mnist-dir or set FACTORLENS_MNIST_DIR".into())
    })?;
    if !dir.is_dir() {
        return Err(CliError::Usage(format!("MNIST directory not found: {}", dir.display())));
    }
    Ok(dir)
}

fn create_dir(dir: &Path) -> Result {
    fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))
}

fn write_text(path: &Path, text: &str) -> Result {
    fs::write(path, text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn write_json<V: Serialize>(path: &Path, value: &V) -> Result {
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    write_text(path, &(text + "\n"))
}

fn solver_config(rank: usize, seed: u64, max_iter: usize, eps: f64, rel_tol: f64) -> SolverConfig {
    SolverConfig {
        rank,
        seed,
        max_iter,
        eps,
        rel_tol,
        ..SolverConfig::default()
    }
}

#[derive(Serialize)]
struct TrainReport<'a> {
    regime: &'a TrainRegime,
    epochs: usize,
    train_samples: usize,
    test_images: usize,
    test_accuracy: f64,
    per_class_recall: &'a [f64],
    predictions: &'a [usize],
    batch_losses: &'a [f64],
}

pub fn train(args: &TrainArgs) -> Result {
    let regime = TrainRegime {
        fraction: args.fraction,
        class_subset: args.classes.clone(),
        shuffle: args.shuffle,
        first_class: args.first_class,
        seed: args.seed,
        learning_rate: args.learning_rate,
        batch_size: args.batch_size,
    };
    regime.validate()?;
    let mnist = load_mnist(&mnist_dir(&args.mnist_dir)?)?;
    eprintln!("training on {} candidate images", mnist.train.len());
    let outcome = train_one_epoch(&regime, &mnist.train, &mnist.test)?;
    write_params(&args.out, &outcome.params)?;
    write_json(
        &args.out.join(TRAIN_REPORT_FILE),
        &TrainReport {
            regime: &regime,
            epochs: 1,
            train_samples: outcome.train_samples,
            test_images: outcome.test.images,
            test_accuracy: outcome.test.accuracy,
            per_class_recall: &outcome.test.per_class_recall,
            predictions: &outcome.test.predictions,
            batch_losses: &outcome.batch_losses,
        },
    )?;
    println!(
        "{}",
        json!({
            "train_samples": outcome.train_samples,
            "test_accuracy": outcome.test.accuracy,
            "per_class_recall": outcome.test.per_class_recall,
        })
    );
    Ok(())
}

pub fn capture(args: &CaptureArgs) -> Result {
    if args.limit == 0 {
        return Err(CliError::Usage("--limit must be at least 1".into()));
    }
    let params = read_params(&args.model)?;
    let mnist = load_mnist(&mnist_dir(&args.mnist_dir)?)?;
    let mut bundle = capture_activations(&params, &mnist.test, args.limit)?;
    let report_path = args.model.join(TRAIN_REPORT_FILE);
    if let Ok(text) = fs::read_to_string(&report_path) {
        let report: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", report_path.display())))?;
        bundle.meta.regime = report.get("regime").cloned().unwrap_or(Value::Null);
        bundle.meta.test_accuracy = report.get("test_accuracy").and_then(Value::as_f64);
    }
    bundle.write(&args.out)?;
    println!("{}", json!({ "images": bundle.image_count(), "bundle": args.out }));
    Ok(())
}

pub fn factorize(args: &FactorizeArgs) -> Result {
    let config = solver_config(args.rank, args.seed, args.max_iter, args.eps, args.rel_tol);
    config.validate()?;
    let (data, _) = read_bundle::<f64>(&args.bundle)?;
    let summary = match args.precision {
        Precision::F64 => {
            let fit = fit_best_of(&data, &config, args.restarts)?;
            write_fit(&args.out, &fit, &config)?;
            json!({ "rmse": fit.rmse, "seed": fit.seed, "iterations": fit.iterations_run, "converged": fit.converged })
        }
        Precision::F32 => {
            let fit = fit_best_of(&data.cast::<f32>(), &config, args.restarts)?;
            write_fit(&args.out, &fit, &config)?;
            json!({ "rmse": fit.rmse, "seed": fit.seed, "iterations": fit.iterations_run, "converged": fit.converged })
        }
    };
    println!("{summary}");
    Ok(())
}

fn sweep_one(data: &CoupledDataset<f64>, label: &str, args: &SweepArgs) -> Result<SweepReport> {
    let base = solver_config(args.ranks[0], args.seed, args.max_iter, args.eps, args.rel_tol);
    base.validate()?;
    let jobs = args.jobs.max(1);
    Ok(match args.precision {
        Precision::F64 => rank_sweep(data, label, &args.ranks, args.restarts, &base, jobs)?,
        Precision::F32 => rank_sweep(&data.cast::<f32>(), label, &args.ranks, args.restarts, &base, jobs)?,
    })
}

pub fn sweep(args: &SweepArgs) -> Result {
    if args.ranks.is_empty() {
        return Err(CliError::Usage("--ranks must list at least one rank".into()));
    }
    create_dir(&args.out)?;
    let mut reports = Vec::new();
    for bundle in &args.bundle {
        let (data, _) = read_bundle::<f64>(Path::new(bundle))?;
        let report = sweep_one(&data, bundle, args)?;
        for e in &report.entries {
            println!("{}", json!({ "bundle": bundle, "rank": e.rank, "rmse": e.rmse, "best_seed": e.seed }));
        }
        reports.push(report);
    }
    write_text(&args.out.join("sweep.csv"), &sweep_csv(&reports))?;
    write_json(&args.out.join("sweep.json"), &reports)?;
    write_text(&args.out.join("sweep.svg"), &sweep_chart(&reports).to_svg())
}

pub fn spectra(args: &SpectraArgs) -> Result {
    create_dir(&args.out)?;
    let mut reports = Vec::new();
    let mut tails = serde_json::Map::new();
    for bundle in &args.bundle {
        let (data, _) = read_bundle::<f64>(Path::new(bundle))?;
        let mut layers = Vec::new();
        for j in 0..data.activations().len() {
            let a = &data.activations()[j];
            let k = args.k.min(a.rows()).min(a.cols());
            layers.push(spectrum(&data, j, k, args.tol, args.max_iter)?);
        }
        let tail: Vec<f64> = layers.iter().map(|l| l.tail_mass(args.tail_index)).collect();
        println!("{}", json!({ "bundle": bundle, "tail_index": args.tail_index, "tail_mass": tail }));
        tails.insert(bundle.clone(), json!(tail));
        reports.push(SpectrumReport {
            label: bundle.clone(),
            layers,
        });
    }
    write_text(&args.out.join("spectra.csv"), &spectrum_csv(&reports))?;
    write_json(
        &args.out.join("spectra.json"),
        &json!({ "tail_index": args.tail_index, "tail_mass": tails, "reports": reports }),
    )?;
    let layers = reports.iter().map(|r| r.layers.len()).max().unwrap_or(0);
    for j in 0..layers {
        write_text(
            &args.out.join(format!("spectra_layer{j}.svg")),
            &spectrum_chart(&reports, j).to_svg(),
        )?;
    }
    Ok(())
}

pub fn heatmap(args: &HeatmapArgs) -> Result {
    if args.cell == 0 {
        return Err(CliError::Usage("--cell must be at least 1".into()));
    }
    let factors = read_factors::<f64>(&args.factors)?;
    let map = neuron_heatmap(&factors, args.layer)?;
    create_dir(&args.out)?;
    let stem = format!("heatmap_layer{}", args.layer);
    write_heatmap_pgm(&args.out.join(format!("{stem}.pgm")), &map, args.cell)?;
    write_text(&args.out.join(format!("{stem}.csv")), &heatmap_csv(&map))?;
    let dead = (0..map.rows)
        .filter(|&r| (0..map.cols).all(|c| map.get(r, c) == 0.0))
        .count();
    let summary = json!({
        "layer": args.layer,
        "neurons": map.rows,
        "factors": map.cols,
        "threshold": args.threshold,
        "active_factors": map.active_factors(args.threshold),
        "dead_neurons": dead,
        "column_max": (0..map.cols).map(|c| map.column_max(c)).collect::<Vec<_>>(),
    });
    write_json(&args.out.join(format!("{stem}.json")), &summary)?;
    println!("{summary}");
    Ok(())
}

pub fn latent(args: &LatentArgs) -> Result {
    if args.cell == 0 {
        return Err(CliError::Usage("--cell must be at least 1".into()));
    }
    let factors = read_factors::<f64>(&args.factors)?;
    let images = latent_images(&factors, args.channel, args.height, args.width)?;
    create_dir(&args.out)?;
    for (r, img) in images.iter().enumerate() {
        write_image_pgm(&args.out.join(format!("latent_{r:02}.pgm")), img, args.cell)?;
    }
    println!("{}", json!({ "images": images.len(), "out": args.out }));
    Ok(())
}

pub fn assoc(args: &AssocArgs) -> Result {
    let factors = read_factors::<f64>(&args.factors)?;
    let labels = read_manifest(&args.bundle)?.labels.ok_or_else(|| {
        CliError::Usage(format!("bundle {} carries no labels", args.bundle.display()))
    })?;
    let table = factor_digit_association(&factors, &labels)?;
    create_dir(&args.out)?;
    write_text(&args.out.join("association.csv"), &association_csv(&table))?;
    let ranked: Vec<Value> = (0..table.weights.len())
        .map(|r| {
            let top: Vec<Value> = table
                .ranked_classes(r)
                .into_iter()
                .take(3)
                .map(|(c, w)| json!([c, w]))
                .collect();
            json!({ "factor": r, "top_classes": top })
        })
        .collect();
    let dominant: Vec<Option<usize>> = (0..table.classes as u32).map(|c| table.dominant_factor(c)).collect();
    let summary = json!({ "factors": ranked, "dominant_factor_per_class": dominant });
    write_json(&args.out.join("association.json"), &summary)?;
    println!("{summary}");
    Ok(())
}
