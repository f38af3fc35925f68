//! `deepgwc` experiment runner.

mod config;
mod run;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use deepgwc::linalg::eigh_sym;
use deepgwc::model::{forward, load_checkpoint, save_checkpoint, Mode, ReductionMode};
use deepgwc::train::{gradient_check_suite, GradCheckOptions};
use deepgwc::wavelet::{basis_stats, wavelet_chebyshev, wavelet_from_eigen, WaveletMethod};
use rayon::prelude::*;
use serde::Serialize;

use config::{parse_list, ExperimentConfig, SplitSpec};
use run::{prepare, run_one, BasisStore, Sink};

const GRADCHECK_TOLERANCE: f64 = 1e-4;

#[derive(Parser)]
#[command(name = "deepgwc", version, about = "Graph wavelet convolutional network experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model and write epoch records plus a summary.
    Train(Common),
    /// Train every (mode, depth) pair.
    SweepDepth {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "2,4,8,16,32,64")]
        depths: String,
        /// Comma-separated modes; defaults to --mode.
        #[arg(long)]
        modes: Option<String>,
    },
    /// Train every (mode, label rate) pair on stratified random splits.
    SweepRate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "0.005,0.01,0.02,0.03,0.04")]
        rates: String,
        #[arg(long)]
        modes: Option<String>,
    },
    /// Density and inverse-pair residual of the wavelet basis.
    WaveletStats(Common),
    /// Finite-difference gradient check across all modes.
    Gradcheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        /// Scales analytic gradients by 1 + CORRUPT (negative control).
        #[arg(long, default_value_t = 0.0, hide = true)]
        corrupt: f64,
    },
    /// Write `<node-id>\t<label>\t<h_1..h_d>` rows from a checkpoint.
    DumpEmbeddings(Common),
}

#[derive(Args)]
struct Common {
    /// File of `key = value` lines; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset_content: Option<String>,
    #[arg(long)]
    dataset_cites: Option<String>,
    /// gcn | gwnn | appnp-like | gcnii-like | deepgwc
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    layers: Option<String>,
    #[arg(long)]
    hidden: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    filter_f: Option<String>,
    #[arg(long)]
    scale_s: Option<String>,
    #[arg(long)]
    threshold_t: Option<String>,
    #[arg(long)]
    dropout: Option<String>,
    #[arg(long)]
    lr: Option<String>,
    #[arg(long)]
    weight_decay: Option<String>,
    /// standard | rate:<r>
    #[arg(long)]
    split: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    jobs: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long)]
    patience: Option<String>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<String>,
    /// exact | cheby:<order>
    #[arg(long)]
    wavelet: Option<String>,
    /// Drop operator entries below this magnitude (defaults to threshold-t).
    #[arg(long)]
    operator_threshold: Option<String>,
    /// true | false
    #[arg(long)]
    row_normalize: Option<String>,
    /// Directory for computed bases.
    #[arg(long)]
    cache_dir: Option<String>,
    /// Checkpoint to write (train) or read (dump-embeddings).
    #[arg(long)]
    checkpoint: Option<String>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        let flags = [
            ("dataset-content", &self.dataset_content),
            ("dataset-cites", &self.dataset_cites),
            ("mode", &self.mode),
            ("layers", &self.layers),
            ("hidden", &self.hidden),
            ("alpha", &self.alpha),
            ("eta", &self.eta),
            ("gamma", &self.gamma),
            ("filter-f", &self.filter_f),
            ("scale-s", &self.scale_s),
            ("threshold-t", &self.threshold_t),
            ("dropout", &self.dropout),
            ("lr", &self.lr),
            ("weight-decay", &self.weight_decay),
            ("split", &self.split),
            ("seed", &self.seed),
            ("jobs", &self.jobs),
            ("epochs", &self.epochs),
            ("patience", &self.patience),
            ("out", &self.out),
            ("wavelet", &self.wavelet),
            ("operator-threshold", &self.operator_threshold),
            ("row-normalize", &self.row_normalize),
            ("cache-dir", &self.cache_dir),
            ("checkpoint", &self.checkpoint),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v).with_context(|| format!("--{key}"))?;
            }
        }
        if cfg.jobs == 0 {
            bail!("--jobs must be at least 1");
        }
        Ok(cfg)
    }
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?)
}

fn cmd_train(cfg: ExperimentConfig) -> Result<()> {
    let sink = Sink::open(cfg.out.as_deref())?;
    let prep = prepare(&cfg)?;
    let store = BasisStore::new(cfg.cache_dir.clone());
    let outcome = thread_pool(cfg.jobs)?.install(|| run_one("train", 0, &cfg, &prep, &store, &sink))?;
    if let Some(path) = &cfg.checkpoint {
        save_checkpoint(path, &outcome.summary.model, &outcome.params)
            .with_context(|| format!("cannot write checkpoint {}", path.display()))?;
    }
    Ok(())
}

fn sweep_modes(cfg: &ExperimentConfig, modes: Option<&str>) -> Result<Vec<ReductionMode>> {
    match modes {
        Some(m) => parse_list("modes", m),
        None => Ok(vec![cfg.mode]),
    }
}

/// Runs the given configurations, sharing one dataset and basis store.
fn sweep(command: &str, base: &ExperimentConfig, runs: Vec<ExperimentConfig>) -> Result<()> {
    let sink = Sink::open(base.out.as_deref())?;
    let prep = prepare(base)?;
    let store = BasisStore::new(base.cache_dir.clone());
    let results: Vec<Result<()>> = thread_pool(base.jobs)?.install(|| {
        runs.par_iter()
            .enumerate()
            .map(|(k, cfg)| run_one(command, k, cfg, &prep, &store, &sink).map(|_| ()))
            .collect()
    });
    let failed = results.iter().filter(|r| r.is_err()).count();
    for r in results {
        if let Err(e) = r {
            eprintln!("error: {e:#}");
        }
    }
    if failed > 0 {
        bail!("{failed} of {} runs failed", runs.len());
    }
    Ok(())
}

fn cmd_sweep_depth(cfg: ExperimentConfig, depths: &str, modes: Option<&str>) -> Result<()> {
    let depths: Vec<usize> = parse_list("depths", depths)?;
    if depths.contains(&0) {
        bail!("depths must be positive");
    }
    let mut runs = Vec::new();
    for mode in sweep_modes(&cfg, modes)? {
        for &layers in &depths {
            runs.push(ExperimentConfig {
                mode,
                layers,
                ..cfg.clone()
            });
        }
    }
    sweep("sweep-depth", &cfg, runs)
}

fn cmd_sweep_rate(cfg: ExperimentConfig, rates: &str, modes: Option<&str>) -> Result<()> {
    let rates: Vec<SplitSpec> = parse_list::<f64>("rates", rates)?
        .into_iter()
        .map(|r| format!("rate:{r}").parse().map_err(anyhow::Error::msg))
        .collect::<Result<_>>()?;
    let mut runs = Vec::new();
    for mode in sweep_modes(&cfg, modes)? {
        for &split in &rates {
            runs.push(ExperimentConfig {
                mode,
                split,
                ..cfg.clone()
            });
        }
    }
    sweep("sweep-rate", &cfg, runs)
}

#[derive(Serialize)]
#[serde(rename_all = "kebab-case")]
struct StatsLine {
    record: &'static str,
    dataset_id: String,
    nodes: usize,
    scale_s: f64,
    threshold_t: f64,
    wavelet: String,
    density_psi: f64,
    density_psi_inverse: f64,
    inverse_pair_residual: f64,
    max_offdiag_residual: f64,
    max_diag_residual: f64,
    /// Only known on the exact path.
    eigenvalue_min: Option<f64>,
    eigenvalue_max: Option<f64>,
}

fn cmd_wavelet_stats(cfg: ExperimentConfig) -> Result<()> {
    let sink = Sink::open(cfg.out.as_deref())?;
    let prep = prepare(&cfg)?;
    let (s, t) = (cfg.scale_s, cfg.threshold_t);
    let (basis, range) = thread_pool(cfg.jobs)?.install(|| -> Result<_> {
        Ok(match cfg.wavelet {
            WaveletMethod::Exact => {
                let eig = eigh_sym(&prep.bundle.laplacian_dense())?;
                let range = (eig.values.first().copied(), eig.values.last().copied());
                (wavelet_from_eigen(&eig, s, t)?, range)
            }
            WaveletMethod::Chebyshev { order } => {
                (wavelet_chebyshev(&prep.bundle, s, t, order)?, (None, None))
            }
        })
    })?;
    let stats = basis_stats(&basis)?;
    sink.emit(&StatsLine {
        record: "wavelet-stats",
        dataset_id: prep.dataset_id.clone(),
        nodes: prep.num_nodes(),
        scale_s: s,
        threshold_t: t,
        wavelet: cfg.wavelet.to_string(),
        density_psi: stats.density_psi,
        density_psi_inverse: stats.density_psi_inverse,
        inverse_pair_residual: stats.max_offdiag_residual.max(stats.max_diag_residual),
        max_offdiag_residual: stats.max_offdiag_residual,
        max_diag_residual: stats.max_diag_residual,
        eigenvalue_min: range.0,
        eigenvalue_max: range.1,
    })?;
    eprintln!(
        "density psi {:.4}%, psi inverse {:.4}%",
        100.0 * stats.density_psi,
        100.0 * stats.density_psi_inverse
    );
    Ok(())
}

#[derive(Serialize)]
#[serde(rename_all = "kebab-case")]
struct GradcheckLine<'a> {
    record: &'static str,
    mode: &'a str,
    checked: usize,
    max_rel_error: f64,
    max_abs_error: f64,
}

fn cmd_gradcheck(cfg: ExperimentConfig, samples: usize, corrupt: f64) -> Result<()> {
    let sink = Sink::open(cfg.out.as_deref())?;
    let opts = GradCheckOptions {
        samples,
        corrupt,
        seed: cfg.seed,
        ..GradCheckOptions::default()
    };
    let reports = gradient_check_suite(&ReductionMode::ALL, cfg.eta, &opts)?;
    let mut worst = 0.0f64;
    for r in &reports {
        worst = worst.max(r.max_rel_error);
        sink.emit(&GradcheckLine {
            record: "gradcheck",
            mode: &r.mode,
            checked: r.checked,
            max_rel_error: r.max_rel_error,
            max_abs_error: r.max_abs_error,
        })?;
    }
    eprintln!("max relative error {worst:.3e} (tolerance {GRADCHECK_TOLERANCE:e})");
    if !(worst <= GRADCHECK_TOLERANCE) {
        bail!("gradient check failed: max relative error {worst:.3e} exceeds {GRADCHECK_TOLERANCE:e}");
    }
    Ok(())
}

fn cmd_dump_embeddings(cfg: ExperimentConfig) -> Result<()> {
    let path = cfg
        .checkpoint
        .as_deref()
        .context("dump-embeddings needs --checkpoint")?;
    let (model, params) = load_checkpoint::<f64>(path)
        .with_context(|| format!("cannot load checkpoint {}", path.display()))?;
    let prep = prepare(&cfg)?;
    let g = &prep.dataset.graph;
    if model.input_dim != g.num_features() || model.classes != g.num_classes() {
        bail!(
            "checkpoint expects {} features and {} classes, dataset has {} and {}",
            model.input_dim,
            model.classes,
            g.num_features(),
            g.num_classes()
        );
    }
    let store = BasisStore::new(cfg.cache_dir.clone());
    let trace = thread_pool(cfg.jobs)?.install(|| -> Result<_> {
        let (op, _) = run::operator(&prep, &store, &model, &cfg)?;
        Ok(forward(&prep.features, &params, &model, &op, Mode::Eval, 0)?)
    })?;
    let h = trace.embeddings();
    let mut text = String::new();
    for i in 0..h.rows() {
        let label = &prep.dataset.class_names[g.labels()[i]];
        text.push_str(&g.node_ids()[i]);
        text.push('\t');
        text.push_str(label);
        for v in h.row(i) {
            text.push('\t');
            text.push_str(&v.to_string());
        }
        text.push('\n');
    }
    Sink::open(cfg.out.as_deref())?.write_raw(&text)?;
    Ok(())
}

fn main() -> ExitCode {
    // Later occurrences of a flag replace earlier ones.
    let command = Cli::command().mut_subcommands(|c| c.args_override_self(true));
    let cli = match Cli::from_arg_matches(&command.get_matches()) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let result = (|| -> Result<()> {
        match cli.command {
            Command::Train(c) => cmd_train(c.resolve()?),
            Command::SweepDepth {
                common,
                depths,
                modes,
            } => cmd_sweep_depth(common.resolve()?, &depths, modes.as_deref()),
            Command::SweepRate {
                common,
                rates,
                modes,
            } => cmd_sweep_rate(common.resolve()?, &rates, modes.as_deref()),
            Command::WaveletStats(c) => cmd_wavelet_stats(c.resolve()?),
            Command::Gradcheck {
                common,
                samples,
                corrupt,
            } => cmd_gradcheck(common.resolve()?, samples, corrupt),
            Command::DumpEmbeddings(c) => cmd_dump_embeddings(c.resolve()?),
        }
    })();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = std::io::stdout().flush();
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
