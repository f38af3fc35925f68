//! Dataset preparation, basis caching, record output and single runs.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::fs::File;
use std::hash::{Hash, Hasher};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use anyhow::{Context, Result};
use deepgwc::data::{load_content_cites, rate_split, row_normalize, standard_split, DatasetSplit, LoadedDataset};
use deepgwc::graph::{build_laplacian, LaplacianBundle};
use deepgwc::linalg::SparseMatrix;
use deepgwc::model::{ModelConfig, ModelParameters, ReductionMode};
use deepgwc::propagation::{assemble, FilterConfig, PropagationOperator};
use deepgwc::seed::derive_seed;
use deepgwc::train::train;
use deepgwc::wavelet::{
    load_basis, save_basis, wavelet_chebyshev, wavelet_exact, BasisKey, WaveletBasis, WaveletMethod,
};
use serde::Serialize;

use crate::config::{ExperimentConfig, SplitSpec};

const TRAIN_STREAM: u64 = 0;
const SPLIT_STREAM: u64 = 1;

/// A loaded dataset with everything runs share.
pub struct Prepared {
    pub dataset: LoadedDataset<f64>,
    pub features: SparseMatrix<f64>,
    pub bundle: LaplacianBundle<f64>,
    /// File stem plus a hash of both input files; names cached bases.
    pub dataset_id: String,
}

impl Prepared {
    pub fn num_nodes(&self) -> usize {
        self.dataset.graph.num_nodes()
    }

    pub fn model(&self, cfg: &ExperimentConfig, mode: ReductionMode) -> ModelConfig {
        let g = &self.dataset.graph;
        cfg.model(g.num_features(), g.num_classes(), mode)
    }
}

fn dataset_id(content: &Path, cites: &Path) -> Result<String> {
    let mut h = DefaultHasher::new();
    for p in [content, cites] {
        let bytes = std::fs::read(p).with_context(|| format!("cannot read {}", p.display()))?;
        bytes.hash(&mut h);
    }
    let stem = content
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    Ok(format!("{stem}-{:016x}", h.finish()))
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    let (content, cites) = cfg.dataset_paths()?;
    let dataset = load_content_cites::<f64>(content, cites)?;
    let dense = if cfg.row_normalize {
        row_normalize(dataset.graph.features())
    } else {
        dataset.graph.features().clone()
    };
    let features = SparseMatrix::from_dense(&dense, 0.0);
    let bundle = build_laplacian(&dataset.graph);
    eprintln!(
        "loaded {}: {} nodes, {} edges, {} features, {} classes ({} cites rows dropped)",
        content.display(),
        dataset.graph.num_nodes(),
        dataset.graph.num_edges(),
        dataset.graph.num_features(),
        dataset.graph.num_classes(),
        dataset.dropped_edges
    );
    Ok(Prepared {
        dataset_id: dataset_id(content, cites)?,
        dataset,
        features,
        bundle,
    })
}

/// Bases keyed by `(dataset, s, t, method)`, memoized in memory and
/// optionally on disk.
pub struct BasisStore {
    dir: Option<PathBuf>,
    memo: Mutex<HashMap<String, Arc<WaveletBasis<f64>>>>,
}

impl BasisStore {
    pub fn new(dir: Option<PathBuf>) -> Self {
        Self {
            dir,
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn get(
        &self,
        prep: &Prepared,
        s: f64,
        t: f64,
        method: WaveletMethod,
    ) -> Result<Arc<WaveletBasis<f64>>> {
        let key = BasisKey {
            dataset_id: prep.dataset_id.clone(),
            scale: s,
            threshold: t,
            method,
        };
        // Held across the computation so concurrent runs wait for one basis.
        let mut memo = self.memo.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(b) = memo.get(&key.file_name()) {
            return Ok(b.clone());
        }
        let path = self.dir.as_ref().map(|d| key.path_in(d));
        let basis = match path.as_deref().filter(|p| p.exists()) {
            Some(p) => {
                eprintln!("basis: loading {}", p.display());
                load_basis(p, &key).with_context(|| format!("cannot load basis {}", p.display()))?
            }
            None => {
                let started = Instant::now();
                let b = match method {
                    WaveletMethod::Exact => wavelet_exact(&prep.bundle, s, t)?,
                    WaveletMethod::Chebyshev { order } => wavelet_chebyshev(&prep.bundle, s, t, order)?,
                };
                eprintln!(
                    "basis: {method} s={s} t={t} density {:.4} in {:.1}s",
                    b.density_psi,
                    started.elapsed().as_secs_f64()
                );
                if let Some(p) = &path {
                    if let Some(d) = p.parent() {
                        std::fs::create_dir_all(d)
                            .with_context(|| format!("cannot create {}", d.display()))?;
                    }
                    save_basis(p, &key, &b).with_context(|| format!("cannot write {}", p.display()))?;
                }
                b
            }
        };
        let basis = Arc::new(basis);
        memo.insert(key.file_name(), basis.clone());
        Ok(basis)
    }
}

/// Line-oriented JSON output; each record is written and flushed under a
/// lock so concurrent runs never interleave.
pub struct Sink {
    out: Mutex<Box<dyn Write + Send>>,
}

impl Sink {
    pub fn open(path: Option<&Path>) -> Result<Self> {
        let out: Box<dyn Write + Send> = match path {
            Some(p) => Box::new(BufWriter::new(
                File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
            )),
            None => Box::new(std::io::stdout()),
        };
        Ok(Self {
            out: Mutex::new(out),
        })
    }

    pub fn emit(&self, record: &impl Serialize) -> Result<()> {
        let mut line = serde_json::to_string(record)?;
        line.push('\n');
        let mut out = self.out.lock().unwrap_or_else(|e| e.into_inner());
        out.write_all(line.as_bytes())?;
        out.flush()?;
        Ok(())
    }

    pub fn write_raw(&self, text: &str) -> Result<()> {
        let mut out = self.out.lock().unwrap_or_else(|e| e.into_inner());
        out.write_all(text.as_bytes())?;
        out.flush()?;
        Ok(())
    }
}

pub fn make_split(prep: &Prepared, spec: SplitSpec, seed: u64) -> Result<DatasetSplit> {
    let seed = derive_seed(seed, SPLIT_STREAM);
    Ok(match spec {
        SplitSpec::Standard => standard_split(&prep.dataset.graph, seed)?,
        SplitSpec::Rate(r) => rate_split(&prep.dataset.graph, r, seed)?,
    })
}

/// Builds `P'` for `model`, fetching the basis only when it contributes.
pub fn operator(
    prep: &Prepared,
    store: &BasisStore,
    model: &ModelConfig,
    cfg: &ExperimentConfig,
) -> Result<(PropagationOperator<f64>, Option<Arc<WaveletBasis<f64>>>)> {
    let basis = if model.gamma > 0.0 {
        Some(store.get(prep, model.scale_s, model.threshold_t, cfg.wavelet)?)
    } else {
        None
    };
    let op = assemble(
        &prep.bundle,
        basis.as_deref(),
        model.gamma,
        FilterConfig::new(model.filter_f)?,
    )?
    .sparsified(cfg.effective_operator_threshold())?;
    Ok((op, basis))
}

#[derive(Serialize)]
#[serde(rename_all = "kebab-case")]
struct EpochLine {
    record: &'static str,
    run: usize,
    epoch: usize,
    train_loss: f64,
    validation_accuracy: f64,
    test_accuracy: f64,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct Summary {
    pub record: &'static str,
    pub command: String,
    pub run: usize,
    pub mode: String,
    pub layers: usize,
    pub split: String,
    pub label_rate: f64,
    pub train_size: usize,
    pub validation_size: usize,
    pub test_size: usize,
    pub test_accuracy: f64,
    pub best_epoch: usize,
    pub best_validation_accuracy: f64,
    pub epochs_run: usize,
    pub density_psi: Option<f64>,
    pub density_psi_inverse: Option<f64>,
    pub operator_density: f64,
    pub config: ExperimentConfig,
    pub model: ModelConfig,
}

/// One training job. `cfg` already carries the run's mode, depth and split.
pub struct RunOutcome {
    pub summary: Summary,
    pub params: ModelParameters<f64>,
}

pub fn run_one(
    command: &str,
    run: usize,
    cfg: &ExperimentConfig,
    prep: &Prepared,
    store: &BasisStore,
    sink: &Sink,
) -> Result<RunOutcome> {
    let model = prep.model(cfg, cfg.mode);
    model.validate()?;
    let split = make_split(prep, cfg.split, cfg.seed)?;
    let (op, basis) = operator(prep, store, &model, cfg)?;
    let options = cfg.train_options(derive_seed(cfg.seed, TRAIN_STREAM));
    let (report, params) = train(
        &prep.features,
        prep.dataset.graph.labels(),
        &split,
        &model,
        &op,
        &options,
    )?;
    for e in &report.epochs {
        sink.emit(&EpochLine {
            record: "epoch",
            run,
            epoch: e.epoch,
            train_loss: e.train_loss,
            validation_accuracy: e.validation_accuracy,
            test_accuracy: e.test_accuracy,
        })?;
    }
    let summary = Summary {
        record: "summary",
        command: command.to_string(),
        run,
        mode: report.mode.clone(),
        layers: model.layers,
        split: cfg.split.to_string(),
        label_rate: split.label_rate,
        train_size: split.train.len(),
        validation_size: split.validation.len(),
        test_size: split.test.len(),
        test_accuracy: report.test_accuracy,
        best_epoch: report.best_epoch,
        best_validation_accuracy: report.best_validation_accuracy,
        epochs_run: report.epochs.len(),
        density_psi: basis.as_ref().map(|b| b.density_psi),
        density_psi_inverse: basis.as_ref().map(|b| b.density_psi_inverse),
        operator_density: op.density(),
        config: cfg.clone(),
        model,
    };
    sink.emit(&summary)?;
    eprintln!(
        "run {run}: {} L={} split={} test accuracy {:.4} (best epoch {}, {:.1}s)",
        summary.mode,
        summary.layers,
        summary.split,
        summary.test_accuracy,
        summary.best_epoch,
        report.wall_time_secs
    );
    Ok(RunOutcome { summary, params })
}
