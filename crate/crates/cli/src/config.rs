//! Resolved experiment settings and the `key = value` config file format.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use deepgwc::model::{ModelConfig, ReductionMode};
use deepgwc::train::{AdamConfig, Schedule, TrainOptions};
use deepgwc::wavelet::WaveletMethod;
use serde::{Serialize, Serializer};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SplitSpec {
    Standard,
    Rate(f64),
}

impl fmt::Display for SplitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitSpec::Standard => write!(f, "standard"),
            SplitSpec::Rate(r) => write!(f, "rate:{r}"),
        }
    }
}

impl FromStr for SplitSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "standard" {
            return Ok(SplitSpec::Standard);
        }
        match s.strip_prefix("rate:").map(str::parse::<f64>) {
            Some(Ok(r)) if r > 0.0 && r < 1.0 => Ok(SplitSpec::Rate(r)),
            _ => Err(format!("bad split '{s}' (expected standard or rate:<r> with 0 < r < 1)")),
        }
    }
}

fn as_string<S: Serializer, D: fmt::Display>(v: &D, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

/// Every setting a run depends on, after the config file and flags have
/// been merged.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ExperimentConfig {
    pub dataset_content: Option<PathBuf>,
    pub dataset_cites: Option<PathBuf>,
    #[serde(serialize_with = "as_string")]
    pub mode: ReductionMode,
    pub layers: usize,
    pub hidden: usize,
    pub alpha: f64,
    pub eta: f64,
    pub gamma: f64,
    pub filter_f: f64,
    pub scale_s: f64,
    pub threshold_t: f64,
    pub dropout: f64,
    pub lr: f64,
    pub weight_decay: f64,
    #[serde(serialize_with = "as_string")]
    pub split: SplitSpec,
    pub seed: u64,
    pub jobs: usize,
    pub epochs: usize,
    pub patience: usize,
    pub out: Option<PathBuf>,
    #[serde(serialize_with = "as_string")]
    pub wavelet: WaveletMethod,
    /// Entries of the assembled operator below this are dropped; `None`
    /// means `threshold-t`.
    pub operator_threshold: Option<f64>,
    pub row_normalize: bool,
    pub cache_dir: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let m = ModelConfig::cora(1, 1);
        let adam = AdamConfig::default();
        let schedule = Schedule::default();
        Self {
            dataset_content: None,
            dataset_cites: None,
            mode: ReductionMode::Deepgwc,
            layers: m.layers,
            hidden: m.hidden,
            alpha: m.alpha,
            eta: m.eta,
            gamma: m.gamma,
            filter_f: m.filter_f,
            scale_s: m.scale_s,
            threshold_t: m.threshold_t,
            dropout: m.dropout,
            lr: adam.learning_rate,
            weight_decay: adam.weight_decay,
            split: SplitSpec::Standard,
            seed: 42,
            jobs: 1,
            epochs: schedule.max_epochs,
            patience: schedule.patience,
            out: None,
            wavelet: WaveletMethod::Exact,
            operator_threshold: None,
            row_normalize: true,
            cache_dir: None,
            checkpoint: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| anyhow!("invalid value '{value}' for {key}: {e}"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => bail!("invalid value '{value}' for {key}: expected true or false"),
    }
}

impl ExperimentConfig {
    /// Sets one field by its flag name (dashes or underscores).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.replace('_', "-");
        let k = key.as_str();
        match k {
            "dataset-content" => self.dataset_content = Some(PathBuf::from(value)),
            "dataset-cites" => self.dataset_cites = Some(PathBuf::from(value)),
            "mode" => self.mode = parse(k, value)?,
            "layers" => self.layers = parse(k, value)?,
            "hidden" => self.hidden = parse(k, value)?,
            "alpha" => self.alpha = parse(k, value)?,
            "eta" => self.eta = parse(k, value)?,
            "gamma" => self.gamma = parse(k, value)?,
            "filter-f" => self.filter_f = parse(k, value)?,
            "scale-s" => self.scale_s = parse(k, value)?,
            "threshold-t" => self.threshold_t = parse(k, value)?,
            "dropout" => self.dropout = parse(k, value)?,
            "lr" => self.lr = parse(k, value)?,
            "weight-decay" => self.weight_decay = parse(k, value)?,
            "split" => self.split = parse(k, value)?,
            "seed" => self.seed = parse(k, value)?,
            "jobs" => self.jobs = parse(k, value)?,
            "epochs" => self.epochs = parse(k, value)?,
            "patience" => self.patience = parse(k, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "wavelet" => self.wavelet = parse(k, value)?,
            "operator-threshold" => self.operator_threshold = Some(parse(k, value)?),
            "row-normalize" => self.row_normalize = parse_bool(k, value)?,
            "cache-dir" => self.cache_dir = Some(PathBuf::from(value)),
            "checkpoint" => self.checkpoint = Some(PathBuf::from(value)),
            _ => bail!("unknown setting '{key}'"),
        }
        Ok(())
    }

    /// Applies `key = value` lines. Blank lines and `#` comments are skipped;
    /// values may be wrapped in double quotes.
    pub fn apply_file_text(&mut self, text: &str, origin: &Path) -> Result<()> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("{}:{}: expected key = value", origin.display(), no + 1))?;
            let value = value.trim();
            let value = value
                .strip_prefix('"')
                .and_then(|v| v.strip_suffix('"'))
                .unwrap_or(value);
            self.set(key.trim(), value)
                .with_context(|| format!("{}:{}", origin.display(), no + 1))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        self.apply_file_text(&text, path)
    }

    pub fn dataset_paths(&self) -> Result<(&Path, &Path)> {
        match (&self.dataset_content, &self.dataset_cites) {
            (Some(c), Some(e)) => Ok((c, e)),
            _ => bail!("--dataset-content and --dataset-cites are required"),
        }
    }

    pub fn effective_operator_threshold(&self) -> f64 {
        self.operator_threshold.unwrap_or(self.threshold_t)
    }

    /// Model settings for the given data shape, rewritten for `mode`.
    pub fn model(&self, input_dim: usize, classes: usize, mode: ReductionMode) -> ModelConfig {
        ModelConfig {
            layers: self.layers,
            hidden: self.hidden,
            alpha: self.alpha,
            eta: self.eta,
            gamma: self.gamma,
            filter_f: self.filter_f,
            scale_s: self.scale_s,
            threshold_t: self.threshold_t,
            dropout: self.dropout,
            classes,
            input_dim,
            beta_override: None,
        }
        .with_mode(mode)
    }

    pub fn train_options(&self, seed: u64) -> TrainOptions {
        TrainOptions {
            schedule: Schedule {
                max_epochs: self.epochs,
                patience: self.patience,
            },
            adam: AdamConfig {
                learning_rate: self.lr,
                weight_decay: self.weight_decay,
                ..AdamConfig::default()
            },
            seed,
        }
    }
}

/// Parses a comma-separated list.
pub fn parse_list<T: FromStr>(what: &str, s: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    let items: Vec<T> = s
        .split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| parse(what, x))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        bail!("{what} list is empty");
    }
    Ok(items)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_lines_override_defaults() {
        let mut c = ExperimentConfig::default();
        let text = "# comment\nlayers = 8\n\nsplit = rate:0.01  # trailing\nwavelet=cheby:20\nrow_normalize = false\nout = \"a b.jsonl\"\n";
        c.apply_file_text(text, Path::new("x.conf")).unwrap();
        assert_eq!(c.layers, 8);
        assert_eq!(c.split, SplitSpec::Rate(0.01));
        assert_eq!(c.wavelet, WaveletMethod::Chebyshev { order: 20 });
        assert!(!c.row_normalize);
        assert_eq!(c.out, Some(PathBuf::from("a b.jsonl")));
    }

    #[test]
    fn bad_lines_report_location() {
        let mut c = ExperimentConfig::default();
        let err = c
            .apply_file_text("layers = 2\nbogus = 1\n", Path::new("x.conf"))
            .unwrap_err();
        assert!(format!("{err:#}").contains("x.conf:2"));
        let err = c.apply_file_text("layers\n", Path::new("y.conf")).unwrap_err();
        assert!(err.to_string().contains("y.conf:1"));
        assert!(c.set("layers", "two").is_err());
    }

    #[test]
    fn split_specs() {
        assert_eq!("standard".parse::<SplitSpec>(), Ok(SplitSpec::Standard));
        assert_eq!("rate:0.005".parse::<SplitSpec>(), Ok(SplitSpec::Rate(0.005)));
        assert!("rate:0".parse::<SplitSpec>().is_err());
        assert!("rate:1.5".parse::<SplitSpec>().is_err());
        assert!("random".parse::<SplitSpec>().is_err());
        assert_eq!(SplitSpec::Rate(0.01).to_string(), "rate:0.01");
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list::<usize>("depths", "2, 4,8").unwrap(), vec![2, 4, 8]);
        assert!(parse_list::<usize>("depths", "").is_err());
        assert!(parse_list::<ReductionMode>("modes", "gcn,foo").is_err());
    }

    #[test]
    fn mode_rewrites_model() {
        let c = ExperimentConfig::default();
        let m = c.model(10, 3, ReductionMode::Gcn);
        assert_eq!((m.alpha, m.gamma), (0.0, 0.0));
        assert_eq!(c.model(10, 3, ReductionMode::Deepgwc).alpha, c.alpha);
    }
}
