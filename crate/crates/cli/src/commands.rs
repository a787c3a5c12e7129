use std::path::{Path, PathBuf};

use genconv::data::{
    gen_toy_dataset, load_dataset_dir, load_modelnet10, write_dataset_dir, LabeledCloud, ToyConfig, MODELNET_POINTS,
};
use genconv::numeric::ParameterCount;
use genconv::rng::derive_seed;
use genconv::train::{
    evaluate, load_checkpoint, save_checkpoint, train as run_training, write_confusion_csv, write_epoch_log, Evaluation,
    Model, ModelConfig, TrainingState,
};
use genconv::viz::{bench_scaling, doubling_ratios, probe_filter, write_bench_csv, write_image, BenchLayer, Colormap};
use genconv::{Error, Result};

use crate::run_config::{DataSection, RunConfig};
use crate::{BenchArgs, ColormapArg, ConfigArgs, DataArgs, EvalArgs, GenToyArgs, Preset, TrainArgs, VisualizeArgs};

pub const CHECKPOINT_FILE: &str = "model.gckp";
pub const EPOCH_LOG_FILE: &str = "epochs.csv";
pub const CONFUSION_FILE: &str = "confusion.csv";

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.to_path_buf(), source: e })
}

struct Dataset {
    train: Vec<LabeledCloud<f32>>,
    test: Vec<LabeledCloud<f32>>,
    class_names: Vec<String>,
}

fn merge_data(section: &DataSection, args: &DataArgs) -> DataSection {
    let mut out = section.clone();
    if args.data.is_some() || args.modelnet10.is_some() {
        out.dataset = args.data.clone();
        out.modelnet10 = args.modelnet10.clone();
    }
    if args.points.is_some() {
        out.points = args.points;
    }
    out
}

fn load_data(section: &DataSection, seed: u64) -> Result<Dataset> {
    match (&section.dataset, &section.modelnet10) {
        (Some(dir), None) => {
            let d = load_dataset_dir(dir)?;
            Ok(Dataset { train: d.train, test: d.test, class_names: d.class_names })
        }
        (None, Some(root)) => {
            let points = section.points.unwrap_or(MODELNET_POINTS);
            let d = load_modelnet10(root, points, derive_seed(seed, genconv::rng::STREAM_DATA))?;
            if !d.report.failures.is_empty() {
                eprintln!("skipped {} unreadable meshes", d.report.failures.len());
                for (path, why) in &d.report.failures {
                    log::warn!("{}: {why}", path.display());
                }
            }
            Ok(Dataset { train: d.train, test: d.test, class_names: d.class_names })
        }
        (Some(_), Some(_)) => {
            Err(Error::Config { layer: None, message: "set only one of data.dataset and data.modelnet10".into() })
        }
        (None, None) => Err(Error::Config {
            layer: None,
            message: "no dataset given; pass --data/--modelnet10 or set [data] in the config".into(),
        }),
    }
}

fn check_compatible(config: &ModelConfig, data: &Dataset) -> Result<()> {
    for item in data.train.iter().chain(&data.test) {
        let c = &item.cloud;
        if c.spatial_dims() != config.spatial_dims || c.feature_dims() != config.input_features {
            return Err(Error::Data(format!(
                "dataset holds {}-D clouds with {} features; the model expects {}-D with {}",
                c.spatial_dims(),
                c.feature_dims(),
                config.spatial_dims,
                config.input_features
            )));
        }
        if item.label >= config.num_classes {
            return Err(Error::Data(format!("label {} but the model has {} classes", item.label, config.num_classes)));
        }
    }
    Ok(())
}

fn report_eval(eval: &Evaluation, out: &Path, class_names: &[String]) -> Result<()> {
    println!("test accuracy: {:.4} ({}/{})", eval.accuracy, eval.correct, eval.total);
    let path = out.join(CONFUSION_FILE);
    write_confusion_csv(&path, eval, class_names)?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn gen_toy(args: &GenToyArgs) -> Result<()> {
    let cfg = ToyConfig { n_points: args.points, ..ToyConfig::default() };
    let train = gen_toy_dataset::<f32>(args.n_train, &cfg, derive_seed(args.seed, "train"))?;
    let test = gen_toy_dataset::<f32>(args.n_test, &cfg, derive_seed(args.seed, "test"))?;
    create_dir(&args.out)?;
    let entries = write_dataset_dir(&args.out, &train, &test)?;
    println!("wrote {} clouds to {}", entries.len(), args.out.display());
    Ok(())
}

pub fn print_config(args: &ConfigArgs) -> Result<()> {
    let cfg = match args.preset {
        Preset::Toy => RunConfig::toy(),
        Preset::Modelnet10 => RunConfig::modelnet10(),
    };
    print!("{}", cfg.to_toml());
    Ok(())
}

pub fn train(args: &TrainArgs) -> Result<()> {
    let run = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::toy(),
    };
    let out = args.out.clone().or(run.output.dir.clone()).unwrap_or_else(|| PathBuf::from("runs/train"));
    let checkpoint_path = out.join(CHECKPOINT_FILE);

    let (mut model, mut state) = if args.resume && checkpoint_path.exists() {
        let ckpt = load_checkpoint::<f32>(&checkpoint_path)?;
        println!("resuming from {} after epoch {}", checkpoint_path.display(), ckpt.state.epoch);
        (ckpt.model, ckpt.state)
    } else {
        let mut config = run.model.clone();
        if let Some(seed) = args.seed {
            config.seed = seed;
        }
        if let Some(k) = args.k {
            config.layers.iter_mut().for_each(|l| l.k = k);
        }
        let model = Model::<f32>::build(&config)?;
        let state = TrainingState::new(&model);
        (model, state)
    };
    if let Some(epochs) = args.epochs {
        model.set_epochs(epochs);
    }
    model.config().validate()?;

    let data = load_data(&merge_data(&run.data, &args.data), model.config().seed)?;
    check_compatible(model.config(), &data)?;
    println!("parameters: {}", model.parameter_count());
    println!("train clouds: {}, test clouds: {}", data.train.len(), data.test.len());
    create_dir(&out)?;

    let records = run_training(&mut model, &mut state, &data.train, |r| {
        println!(
            "epoch {:>3}  loss {:.5}  train acc {:.4}  ({:.1}s)",
            r.epoch, r.mean_loss, r.train_acc, r.wall_seconds
        );
    })?;
    if let Some(last) = records.last() {
        println!("final train accuracy: {:.4}", last.train_acc);
    }
    save_checkpoint(&model, &state, &checkpoint_path)?;
    write_epoch_log(&out.join(EPOCH_LOG_FILE), &records)?;
    println!("wrote {}", checkpoint_path.display());
    if !data.test.is_empty() {
        let eval = evaluate(&model, &data.test)?;
        report_eval(&eval, &out, &data.class_names)?;
    }
    Ok(())
}

pub fn eval(args: &EvalArgs) -> Result<()> {
    let ckpt = load_checkpoint::<f32>(&args.checkpoint)?;
    let mut model = ckpt.model;
    if let Some(k) = args.k {
        model.set_k(k);
    }
    let section = match &args.config {
        Some(path) => RunConfig::load(path)?.data,
        None => DataSection::default(),
    };
    let data = load_data(&merge_data(&section, &args.data), model.config().seed)?;
    check_compatible(model.config(), &data)?;
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| args.checkpoint.parent().map(Path::to_path_buf).unwrap_or_default());
    create_dir(&out)?;
    let eval = evaluate(&model, &data.test)?;
    report_eval(&eval, &out, &data.class_names)
}

pub fn visualize(args: &VisualizeArgs) -> Result<()> {
    let model = load_checkpoint::<f32>(&args.checkpoint)?.model;
    let layers = model.layers().len();
    let filter = model
        .filter(args.layer)
        .ok_or_else(|| Error::InvalidArgument(format!("layer {} out of range: {layers} layers plus the head at {layers}", args.layer)))?;
    let channels: Vec<usize> = match args.channel {
        Some(c) => vec![c],
        None => (0..filter.output_width()).collect(),
    };
    let colormap = match args.colormap {
        ColormapArg::Gray => Colormap::Gray,
        ColormapArg::Diverging => Colormap::Diverging,
    };
    let out = args.out.clone().unwrap_or_else(|| {
        args.checkpoint.parent().map(Path::to_path_buf).unwrap_or_default().join("filters")
    });
    create_dir(&out)?;
    let spatial = model.config().spatial_dims;
    for c in channels {
        let img = probe_filter(filter, spatial, c, args.extent, args.resolution, None)?;
        let path = out.join(format!("layer{}_channel{:02}.{}", args.layer, c, colormap.extension()));
        write_image(&img, &path, colormap)?;
        println!("wrote {} (range {:.4} to {:.4})", path.display(), img.min, img.max);
    }
    Ok(())
}

pub fn bench(args: &BenchArgs) -> Result<()> {
    let rows = bench_scaling(&args.counts, args.k, &BenchLayer::default(), args.reps, args.seed)?;
    create_dir(&args.out)?;
    let path = args.out.join("bench.csv");
    write_bench_csv(&path, &rows)?;
    println!("{:>8} {:>12} {:>12}", "N", "knn_ms", "forward_ms");
    for r in &rows {
        println!("{:>8} {:>12.3} {:>12.3}", r.n, r.knn_ms, r.forward_ms);
    }
    for (n, knn, fwd) in doubling_ratios(&rows) {
        println!("ratio at N={n}: knn {knn:.3}, forward {fwd:.3}");
    }
    println!("wrote {}", path.display());
    Ok(())
}
