use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use radar_gesture::cnn::{checkpoint, evaluate, InitScheme, Profile, TrainConfig};
use radar_gesture::pipeline::{
    build_dataset, export_heatmap, run_experiment, split, sweep, write_confusion_csv, write_sweep_csv, Dataset,
    DatasetConfig, SweepAxis, SweepConfig, TfMethod,
};
use radar_gesture::{Error, Result};

#[derive(Parser)]
#[command(name = "radar-gesture", version, about = "Simulated Doppler radar gesture recognition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a synthetic dataset
    Synth {
        #[command(flatten)]
        data: DataArgs,
        /// Output directory for manifest.json and samples.f32
        #[arg(long)]
        out: PathBuf,
    },
    /// Export stored maps as heatmaps
    Inspect {
        #[arg(long)]
        data: PathBuf,
        /// Comma-separated sample indices
        #[arg(long, value_delimiter = ',', default_value = "0")]
        indices: Vec<usize>,
        #[arg(long, default_value = "pgm", value_parser = ["pgm", "csv"])]
        format: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a network on a stored dataset
    Train {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        train: TrainArgs,
        /// Directory for metrics.csv, confusion.csv and model.gmc
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a checkpoint on the test split of a dataset
    Eval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Seed of the split used for training
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.8)]
        train_fraction: f64,
    },
    /// Repeat dataset build and training over distances or scales
    Sweep {
        #[arg(long, value_parser = ["distance", "scale"])]
        axis: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Number of seeds, run as 0..N
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        train: TrainArgs,
        /// CSV summary path; printed to stdout when absent
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct DataArgs {
    #[arg(long, default_value_t = 4)]
    classes: usize,
    #[arg(long, default_value_t = 25)]
    per_class: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.2")]
    distances: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.2")]
    scales: Vec<f64>,
    /// SNR at the 0.1 m reference distance
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    snr_db: f64,
    /// Use the same SNR at every distance
    #[arg(long)]
    flat_snr: bool,
    #[arg(long, default_value = "stft", value_parser = ["stft", "cwt"])]
    tf: String,
    /// Map size as ROWSxCOLS
    #[arg(long, default_value = "64x64")]
    dims: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, default_value = "desk", value_parser = ["desk", "full"])]
    profile: String,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, default_value_t = 0.9)]
    momentum: f64,
    #[arg(long, default_value_t = 0.0005)]
    weight_decay: f64,
    #[arg(long, default_value_t = 16)]
    batch: usize,
    #[arg(long = "train-seed", default_value_t = 0)]
    train_seed: u64,
    #[arg(long, default_value_t = 0.8)]
    train_fraction: f64,
    /// Weight initialisation: small-gaussian (N(0, 0.005^2), unit biases) or fan-in (N(0, 1/fan_in), zero biases)
    #[arg(long, default_value = "fan-in", value_parser = ["small-gaussian", "fan-in"])]
    init: String,
}

fn parse_dims(s: &str) -> Result<[usize; 2]> {
    let bad = || Error::domain(format!("dims must look like 64x64, got `{s}`"));
    let (r, c) = s.split_once('x').ok_or_else(bad)?;
    Ok([r.trim().parse().map_err(|_| bad())?, c.trim().parse().map_err(|_| bad())?])
}

impl DataArgs {
    fn config(&self) -> Result<DatasetConfig> {
        let cfg = DatasetConfig {
            classes: self.classes,
            per_class: self.per_class,
            distances: self.distances.clone(),
            scales: self.scales.clone(),
            snr_db: self.snr_db,
            range_scaled_snr: !self.flat_snr,
            tf: TfMethod::parse(&self.tf)?,
            dims: parse_dims(&self.dims)?,
            seed: self.seed,
            ..DatasetConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl TrainArgs {
    fn profile(&self) -> Profile {
        if self.profile == "full" {
            Profile::Full
        } else {
            Profile::Desk
        }
    }

    fn config(&self) -> Result<TrainConfig> {
        let cfg = TrainConfig {
            lr0: self.lr,
            momentum: self.momentum,
            weight_decay: self.weight_decay,
            max_epochs: self.epochs,
            batch_size: self.batch,
            seed: self.train_seed,
            init: InitScheme::parse(&self.init)?,
            ..TrainConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth { data, out } => {
            let ds = build_dataset(&data.config()?)?;
            ds.save(&out)?;
            println!("wrote {} samples to {}", ds.len(), out.display());
        }
        Command::Inspect { data, indices, format, out } => {
            let ds = Dataset::load(&data)?;
            fs::create_dir_all(&out)?;
            for i in indices {
                for rx in 0..2 {
                    let path = out.join(format!("sample{i:05}_rx{}.{format}", rx + 1));
                    export_heatmap(&ds.map(i, rx)?, &path)?;
                    println!("{}", path.display());
                }
            }
        }
        Command::Train { data, train, out } => {
            let ds = Dataset::load(&data)?;
            let cfg = train.config()?;
            let sp = split(&ds.labels(), train.train_fraction, train.train_seed)?;
            let res = run_experiment(&ds, &sp, train.profile(), &cfg, Some(&out))?;
            for m in &res.history {
                println!(
                    "epoch {:>3}  lr {:<8}  train loss {:.4} acc {:.3}  test loss {:.4} acc {:.3}",
                    m.epoch, m.lr, m.train_loss, m.train_acc, m.val_loss, m.val_acc
                );
            }
            println!(
                "best epoch {} test accuracy {:.4} ({:?})",
                res.best_epoch, res.test_accuracy, res.stop_reason
            );
        }
        Command::Eval { data, checkpoint: path, seed, train_fraction } => {
            let ds = Dataset::load(&data)?;
            let model = checkpoint::load(&path)?;
            if model.spec.input_shape != ds.sample_shape() {
                return Err(Error::shape(format!(
                    "model expects {:?}, dataset holds {:?}",
                    model.spec.input_shape,
                    ds.sample_shape()
                )));
            }
            let sp = split(&ds.labels(), train_fraction, seed)?;
            let norm = ds.normalization(&sp.train)?;
            let eval = evaluate(&model, &ds.examples(&sp.test, &norm)?)?;
            println!("test samples {} accuracy {:.4} loss {:.4}", sp.test.len(), eval.accuracy, eval.loss);
            write_confusion_csv(&eval.confusion, std::io::stdout())?;
        }
        Command::Sweep { axis, values, seeds, data, train, out } => {
            let axis = SweepAxis::parse(&axis)?;
            let base = SweepConfig {
                dataset: data.config()?,
                train: train.config()?,
                profile: train.profile(),
                train_fraction: train.train_fraction,
            };
            let seed_list: Vec<u64> = (0..seeds).collect();
            let rows = sweep(&base, axis, &values, &seed_list)?;
            match out {
                Some(path) => write_sweep_csv(axis, &rows, fs::File::create(path)?)?,
                None => write_sweep_csv(axis, &rows, std::io::stdout())?,
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
