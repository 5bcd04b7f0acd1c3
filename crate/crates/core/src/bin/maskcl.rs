use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use maskcl::cli::{self, DatasetSpec, RunConfig, MNIST_DIR_ENV};
use maskcl::continual::{Method, MethodConfig};
use maskcl::data::BlobSpec;
use maskcl::perturb::TargetPolicy;

/// Class-incremental training with masked softmax.
///
/// Runs one method over several seeds and writes a results JSON, or
/// summarizes existing results with --summarize.
#[derive(Parser, Debug)]
#[command(name = "maskcl", version)]
struct Args {
    /// mnist or blobs.
    #[arg(long, default_value = "mnist")]
    dataset: String,
    /// Directory with the four MNIST IDX files.
    #[arg(long, env = MNIST_DIR_ENV)]
    mnist_dir: Option<PathBuf>,
    #[arg(long, default_value = "SGD")]
    method: String,
    #[arg(long, default_value_t = 0)]
    buffer: usize,
    /// Overrides the tuned learning rate.
    #[arg(long)]
    lr: Option<f64>,
    /// DER++ logit-matching weight.
    #[arg(long)]
    alpha: Option<f64>,
    /// DER++ replayed-label weight.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    cfgm_alpha: Option<f64>,
    #[arg(long)]
    cfgm_weight: Option<f64>,
    /// uniform or round_robin.
    #[arg(long)]
    cfgm_policy: Option<String>,
    /// Leave pseudo-samples unclipped.
    #[arg(long)]
    no_cfgm_clip: bool,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    replay_batch: Option<usize>,
    /// Comma-separated hidden widths.
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    #[arg(long)]
    mask_replay: bool,
    #[arg(long)]
    mask_distill: bool,
    #[arg(long, default_value_t = 2)]
    classes_per_task: usize,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seeds: Vec<u64>,
    /// Results JSON path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Summarize these result files instead of training.
    #[arg(long, num_args = 1.., conflicts_with = "out")]
    summarize: Vec<PathBuf>,
    /// With --summarize, also write the table as CSV.
    #[arg(long, requires = "summarize")]
    csv: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    blob_classes: usize,
    #[arg(long, default_value_t = 16)]
    blob_dims: usize,
    #[arg(long, default_value_t = 0.08)]
    blob_std: f64,
    #[arg(long, default_value_t = 200)]
    blob_per_class: usize,
    #[arg(long, default_value_t = 0)]
    blob_seed: u64,
}

fn build(args: &Args) -> maskcl::Result<RunConfig> {
    let method: Method = args.method.parse()?;
    let mut m = MethodConfig::defaults(method, args.buffer);
    m.buffer_capacity = args.buffer;
    if let Some(v) = args.lr {
        m.lr = v;
    }
    if let Some(v) = args.alpha {
        m.derpp_alpha = v;
    }
    if let Some(v) = args.beta {
        m.derpp_beta = v;
    }
    if let Some(v) = args.cfgm_alpha {
        m.cfgm_alpha = v;
    }
    if let Some(v) = args.cfgm_weight {
        m.cfgm_weight = v;
    }
    if let Some(p) = &args.cfgm_policy {
        m.cfgm_policy = match p.as_str() {
            "uniform" => TargetPolicy::Uniform,
            "round_robin" => TargetPolicy::RoundRobin,
            _ => return Err(maskcl::Error::config(format!("unknown cfgm policy '{p}'"))),
        };
    }
    if args.no_cfgm_clip {
        m.cfgm_clip = None;
    }
    if let Some(v) = args.epochs {
        m.epochs_per_task = v;
    }
    if let Some(v) = args.batch {
        m.batch_size = v;
    }
    if let Some(v) = args.replay_batch {
        m.replay_batch_size = v;
    }
    if let Some(h) = &args.hidden {
        m.hidden = h.clone();
    }
    m.mask_replay = args.mask_replay;
    m.mask_distill = args.mask_distill;

    let dataset = match args.dataset.as_str() {
        "mnist" => DatasetSpec::Mnist {
            dir: args.mnist_dir.clone().unwrap_or_else(cli::default_mnist_dir),
        },
        "blobs" => DatasetSpec::Blobs(BlobSpec::separated(
            args.blob_classes,
            args.blob_dims,
            args.blob_std,
            args.blob_per_class,
            args.blob_seed,
        )),
        other => return Err(maskcl::Error::config(format!("unknown dataset '{other}'"))),
    };
    Ok(RunConfig {
        dataset,
        classes_per_task: args.classes_per_task,
        method: m,
        seeds: args.seeds.clone(),
        out: args.out.clone(),
    })
}

fn main() -> ExitCode {
    let args = Args::parse();
    let outcome = if args.summarize.is_empty() {
        build(&args).and_then(|cfg| cli::run(&cfg)).and_then(|r| {
            let s = cli::summarize(std::slice::from_ref(&r))?;
            print!("{s}");
            Ok(())
        })
    } else {
        cli::summarize_files(&args.summarize).and_then(|s| {
            print!("{s}");
            if let Some(path) = &args.csv {
                std::fs::write(path, s.to_csv()).map_err(|e| maskcl::Error::io(path, e))?;
            }
            Ok(())
        })
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("maskcl: {e}");
            ExitCode::from(match e {
                maskcl::Error::Config(_) => 2,
                _ => 1,
            })
        }
    }
}
