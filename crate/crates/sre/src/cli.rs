//! The `sre` command line.
//!
//! Every command prints exactly one JSON document on stdout; progress and
//! tables go to stderr. Exit codes: 0 success, 1 operational error, 2 a
//! checked property does not hold.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use sre_core::data::{LabeledDataset, Labels};
use sre_core::eval::{equivariance_error, argmax, evaluate, Protocol};
use sre_core::kernel::{kernel_param_count, standard_param_count, BandWeights};
use sre_core::loss::LossKind;
use sre_core::network::ConvKind;
use sre_core::train::train_run;
use sre_core::transform::{FlipAxis, ImageTransform};
use sre_core::{BandSpec, GridSymmetry, IndexMatrix, Network, NetworkConfig, Scalar, Tensor};

use crate::checkpoint::{ensure_matches, load_checkpoint, save_checkpoint};
use crate::config::{DataSource, Overrides, RunConfig};
use crate::pgm::{normalize, write_pgm};
use crate::protocol::{run_protocol_parallel, threads_from_env};
use crate::{Error, Result};

pub const CONFIG_FILE: &str = "config.json";
pub const REPORT_FILE: &str = "report.jsonl";
pub const CHECKPOINT_FILE: &str = "checkpoint.srec";

#[derive(Debug, Parser)]
#[command(name = "sre", version, about = "Train and check symmetric radial convolution networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a network and write config, report and checkpoint.
    Train(TrainArgs),
    /// Score a checkpoint under an evaluation protocol.
    Eval(EvalArgs),
    /// Show the band layout and expansion of one kernel.
    InspectKernel(InspectArgs),
    /// Check logit invariance and layer equivariance under exact grid symmetries.
    EquivCheck(EquivArgs),
    /// Compare parameter and multiply-add counts with the standard twin.
    Params(ParamsArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// `key=value`; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub f64: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Defaults to the dataset recorded next to the checkpoint.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value = "orig")]
    pub protocol: Protocol,
    #[arg(long, default_value = "test")]
    pub split: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub f64: bool,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 2)]
    pub dims: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EquivArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Without a checkpoint a fresh network is built from the config.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 8)]
    pub inputs: usize,
    /// Spatial extent of the random inputs.
    #[arg(long, default_value_t = 16)]
    pub size: usize,
    #[arg(long)]
    pub f64: bool,
}

#[derive(Debug, Args)]
pub struct ParamsArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, default_value_t = 28)]
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub json: Value,
}

impl Outcome {
    fn ok(json: Value) -> Self {
        Outcome { code: 0, json }
    }

    fn error(e: &Error) -> Self {
        Outcome {
            code: 1,
            json: json!({ "error": { "kind": e.kind(), "message": e.to_string() } }),
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn execute<I, S>(args: I) -> Outcome
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    eprint!("{text}");
                    Outcome::ok(json!({ "help": text }))
                }
                _ => Outcome::error(&Error::Usage(text.trim_end().to_string())),
            };
        }
    };
    let result = match cli.command {
        Command::Train(a) => cmd_train(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::InspectKernel(a) => cmd_inspect_kernel(&a),
        Command::EquivCheck(a) => cmd_equiv_check(&a),
        Command::Params(a) => cmd_params(&a),
    };
    match result {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            Outcome::error(&e)
        }
    }
}

fn overrides(c: &ConfigArgs) -> Overrides {
    Overrides {
        seed: c.seed,
        pairs: c.overrides.clone(),
        ..Overrides::default()
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Shapes the network to the data: dims, channels, outputs and loss.
fn adapt(config: &mut NetworkConfig, data: &LabeledDataset) {
    config.dims = data.dims();
    config.in_channels = data.train.channels();
    config.num_classes = data.num_outputs();
    config.loss_kind = match data.train.labels {
        Labels::MultiLabel { .. } => LossKind::Bce,
        _ => LossKind::CrossEntropy,
    };
}

pub fn cmd_train(args: &TrainArgs) -> Result<Outcome> {
    let over = Overrides {
        data: args.data.clone(),
        out: args.out.clone(),
        ..overrides(&args.config)
    };
    let mut cfg = RunConfig::resolve(args.config.config.as_deref(), &over)?;
    let source = cfg
        .data
        .clone()
        .ok_or_else(|| Error::Config("no dataset: pass --data or set \"data\"".into()))?;
    let out = cfg
        .out
        .clone()
        .ok_or_else(|| Error::Config("no output directory: pass --out or set \"out\"".into()))?;
    let data = source.load()?;
    adapt(&mut cfg.network, &data);
    cfg.network.validate()?;
    ensure_matches(&cfg.network, &data)?;
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    write_file(&out.join(CONFIG_FILE), cfg.to_pretty_json()?.as_bytes())?;
    if args.f64 {
        train_into::<f64>(&cfg, &data, &out)
    } else {
        train_into::<f32>(&cfg, &data, &out)
    }
}

fn train_into<T: Scalar>(cfg: &RunConfig, data: &LabeledDataset, out: &Path) -> Result<Outcome> {
    let start = Instant::now();
    let mut net = Network::<T>::build(&cfg.network)?;
    let report_path = out.join(REPORT_FILE);
    let file = File::create(&report_path).map_err(|e| Error::io(&report_path, e))?;
    let mut report = BufWriter::new(file);
    let epochs = cfg.train.epochs;
    let mut io_error = None;
    let result = train_run(&mut net, data, &cfg.train, |r, _| {
        eprintln!(
            "epoch {}/{epochs}  loss {:.4}  train {:.4}  val {:.4}  lr {:.5}",
            r.epoch, r.train_loss, r.train_acc, r.val_acc, r.lr
        );
        let line = serde_json::to_string(r).expect("records serialize");
        if let Err(e) = writeln!(report, "{line}").and_then(|_| report.flush()) {
            io_error = Some(e);
        }
        Ok(())
    });
    if let Some(e) = io_error {
        return Err(Error::io(&report_path, e));
    }
    let summary = result?;
    net.precompute()?;
    save_checkpoint(&net, &out.join(CHECKPOINT_FILE))?;
    let test_acc = evaluate(&net, &data.test, None)?;
    eprintln!("test accuracy {test_acc:.4}");
    Ok(Outcome::ok(json!({
        "command": "train",
        "out": out,
        "epochs": summary.records.len(),
        "final": summary.records.last(),
        "test_accuracy": test_acc,
        "precision": precision::<T>(),
        "wall_clock_s": start.elapsed().as_secs_f64(),
    })))
}

fn precision<T: Scalar>() -> &'static str {
    if std::mem::size_of::<T>() == 8 {
        "f64"
    } else {
        "f32"
    }
}

fn eval_source(args: &EvalArgs) -> Result<DataSource> {
    if let Some(p) = &args.data {
        return Ok(DataSource::Npz(p.clone()));
    }
    let dir = args.checkpoint.parent().unwrap_or(Path::new("."));
    let saved = dir.join(CONFIG_FILE);
    if saved.exists() {
        let text = std::fs::read_to_string(&saved).map_err(|e| Error::io(&saved, e))?;
        if let Some(d) = RunConfig::from_json(&text)?.data {
            return Ok(d);
        }
    }
    Err(Error::Config("no dataset: pass --data".into()))
}

pub fn cmd_eval(args: &EvalArgs) -> Result<Outcome> {
    let data = eval_source(args)?.load()?;
    if args.f64 {
        eval_with::<f64>(args, &data)
    } else {
        eval_with::<f32>(args, &data)
    }
}

fn eval_with<T: Scalar>(args: &EvalArgs, data: &LabeledDataset) -> Result<Outcome> {
    let mut net = load_checkpoint::<T>(&args.checkpoint)?;
    ensure_matches(net.config(), data)?;
    net.precompute()?;
    let split = data
        .split(&args.split)
        .ok_or_else(|| Error::Data(format!("dataset has no {:?} split", args.split)))?;
    let result = run_protocol_parallel(&net, split, args.protocol, threads_from_env())?;
    eprintln!(
        "{:?} on {}: original {:.4}, mean {:.4} over {} copies",
        args.protocol,
        args.split,
        result.original,
        result.mean,
        result.accuracies.len()
    );
    let json = serde_json::to_value(&result)?;
    if let Some(out) = &args.out {
        std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        let name = format!("eval_{}.json", serde_json::to_value(args.protocol)?.as_str().unwrap_or("protocol"));
        let mut text = serde_json::to_string_pretty(&json)?;
        text.push('\n');
        write_file(&out.join(name), text.as_bytes())?;
    }
    Ok(Outcome::ok(json))
}

/// Rows of a 2D grid, or the `k` stacked slices of a 3D one.
fn grid_rows<V: Copy>(values: &[V], k: usize) -> Vec<Vec<V>> {
    values.chunks(k).map(|r| r.to_vec()).collect()
}

pub fn cmd_inspect_kernel(args: &InspectArgs) -> Result<Outcome> {
    let spec = BandSpec::new(args.k, args.dims)?;
    let idx = IndexMatrix::new(spec);
    let (k, b) = (spec.k(), spec.bands());
    let weights: BandWeights<f64> = sre_core::kernel::init_band_weights(&idx, 1, 1, args.seed)?;
    let kernel = idx.expand(&weights.theta)?;
    let cells = spec.cells();
    eprintln!("k = {k}, {}D, b = {b}", args.dims);
    eprintln!("band map (. = zeroed corner):");
    for (r, row) in grid_rows(idx.band_of(), k).iter().enumerate() {
        if args.dims == 3 && r > 0 && r % k == 0 {
            eprintln!();
        }
        let line: Vec<String> = row
            .iter()
            .map(|c| c.map_or(".".to_string(), |j| j.to_string()))
            .collect();
        eprintln!("  {}", line.join(" "));
    }
    eprintln!("expanded kernel:");
    for (r, row) in grid_rows(kernel.data(), k).iter().enumerate() {
        if args.dims == 3 && r > 0 && r % k == 0 {
            eprintln!();
        }
        let line: Vec<String> = row.iter().map(|v| format!("{v:+.4}")).collect();
        eprintln!("  {}", line.join(" "));
    }
    let sre = kernel_param_count(1, 1, spec, false);
    let standard = standard_param_count(1, 1, spec, false);
    eprintln!("parameters per channel pair: {sre} vs {standard}");
    let mut files = Vec::new();
    if let Some(out) = &args.out {
        std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        let rows = cells / k;
        let map: Vec<u8> = idx
            .band_of()
            .iter()
            .map(|c| c.map_or(0, |j| (((j + 1) * 255) / b) as u8))
            .collect();
        let band_path = out.join("band_map.pgm");
        write_pgm(&band_path, k, rows, &map)?;
        let kernel_path = out.join("kernel.pgm");
        write_pgm(&kernel_path, k, rows, &normalize(kernel.data()))?;
        files = vec![band_path, kernel_path];
    }
    Ok(Outcome::ok(json!({
        "command": "inspect-kernel",
        "k": k,
        "dims": args.dims,
        "bands": b,
        "band_sizes": idx.band_sizes(),
        "active_cells": idx.active_cells(),
        "band_map": grid_rows(idx.band_of(), k),
        "theta": weights.theta.data(),
        "kernel": grid_rows(kernel.data(), k),
        "sre_params": sre,
        "standard_params": standard,
        "ratio": format!("{sre}/{standard}"),
        "files": files,
    })))
}

fn random_inputs<T: Scalar>(dims: &[usize], seed: u64) -> Result<Tensor<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = dims.iter().product();
    let values = (0..n).map(|_| T::from_f64(rng.random_range(-1.0..1.0))).collect();
    Ok(Tensor::from_vec(dims, values)?)
}

/// Exact transforms used for the per-layer sweep.
fn exact_transforms(dims: usize) -> Vec<ImageTransform> {
    let mut out = Vec::new();
    if dims == 2 {
        for angle in [90.0, 180.0, 270.0] {
            out.push(ImageTransform::Rotate { angle });
        }
        out.push(ImageTransform::Flip { axis: FlipAxis::Horizontal });
        out.push(ImageTransform::Flip { axis: FlipAxis::Vertical });
    } else {
        for axis in 0..3 {
            for angle in [90.0, 180.0, 270.0] {
                out.push(ImageTransform::RotateAxis { axis, angle });
            }
        }
    }
    out
}

pub fn cmd_equiv_check(args: &EquivArgs) -> Result<Outcome> {
    if args.inputs == 0 {
        return Err(Error::Config("--inputs must be positive".into()));
    }
    if args.f64 {
        equiv_with::<f64>(args)
    } else {
        equiv_with::<f32>(args)
    }
}

fn equiv_with<T: Scalar>(args: &EquivArgs) -> Result<Outcome> {
    let (mut net, source) = match &args.checkpoint {
        Some(p) => (load_checkpoint::<T>(p)?, json!(p)),
        None => {
            let cfg = RunConfig::resolve(args.config.config.as_deref(), &overrides(&args.config))?;
            (Network::<T>::build(&cfg.network)?, json!("fresh"))
        }
    };
    net.precompute()?;
    let config = net.config().clone();
    let factor = 1usize << config.downsamples();
    if args.size == 0 || args.size % factor != 0 {
        return Err(Error::Config(format!("--size must be a positive multiple of {factor}")));
    }
    let mut shape = vec![args.inputs, config.in_channels];
    shape.extend(std::iter::repeat_n(args.size, config.dims));
    let x = random_inputs::<T>(&shape, config.seed ^ 0x5eed)?;
    let base = net.predict(&x)?;
    let c = base.dims()[1];
    let tol = args.tolerance;
    let mut passed = true;

    eprintln!("{:<24} {:>14} {:>10}", "symmetry", "max |dlogit|", "violations");
    let mut logit_checks = Vec::new();
    for g in GridSymmetry::all(config.dims).into_iter().filter(|g| !g.is_identity()) {
        let moved = net.predict(&g.transform(&x)?)?;
        let mut worst = 0.0f64;
        let mut violations = 0;
        for i in 0..args.inputs {
            let (a, b) = (&base.data()[i * c..(i + 1) * c], &moved.data()[i * c..(i + 1) * c]);
            let diff = a
                .iter()
                .zip(b)
                .map(|(&p, &q)| (p.to_f64() - q.to_f64()).abs())
                .fold(0.0, f64::max);
            if diff > tol || argmax(a) != argmax(b) {
                violations += 1;
            }
            worst = worst.max(diff);
        }
        passed &= violations == 0;
        eprintln!("{:<24} {:>14.3e} {:>10}", g.label(), worst, violations);
        logit_checks.push(json!({
            "symmetry": g.label(),
            "max_abs_diff": worst,
            "violations": violations,
        }));
    }

    eprintln!("{:<8} {:<24} {:>14}", "layer", "transform", "rel. error");
    let mut layer_checks = Vec::new();
    for layer in 0..net.conv_layers().len() {
        for t in exact_transforms(config.dims) {
            let err = equivariance_error(&net, &x, &t, layer)?;
            passed &= err <= tol;
            eprintln!("{:<8} {:<24} {:>14.3e}", layer, t.describe(), err);
            layer_checks.push(json!({ "layer": layer, "transform": t.describe(), "error": err }));
        }
    }
    eprintln!("{}", if passed { "all checks passed" } else { "equivariance violated" });
    Ok(Outcome {
        code: if passed { 0 } else { 2 },
        json: json!({
            "command": "equiv-check",
            "source": source,
            "conv_kind": config.conv_kind,
            "precision": precision::<T>(),
            "tolerance": tol,
            "inputs": args.inputs,
            "size": args.size,
            "logit_checks": logit_checks,
            "layer_checks": layer_checks,
            "passed": passed,
        }),
    })
}

pub fn cmd_params(args: &ParamsArgs) -> Result<Outcome> {
    let cfg = RunConfig::resolve(args.config.config.as_deref(), &overrides(&args.config))?;
    let sre_cfg = cfg.network.twin(ConvKind::Sre);
    let sre = Network::<f32>::build(&sre_cfg)?;
    let standard = Network::<f32>::build(&sre_cfg.twin(ConvKind::Standard))?;
    let (ps, pt) = (sre.count_parameters(), standard.count_parameters());
    let (ms, mt) = (sre.inference_macs(args.size), standard.inference_macs(args.size));
    let ratio = ps.total as f64 / pt.total as f64;
    eprintln!("parameters: {} vs {} ({:.3}×)", ps.total, pt.total, ratio);
    eprintln!("inference multiply-adds at extent {}: {ms} vs {mt}", args.size);
    Ok(Outcome::ok(json!({
        "command": "params",
        "sre": ps,
        "standard": pt,
        "ratio": ratio,
        "extent": args.size,
        "macs": { "sre": ms, "standard": mt },
    })))
}
