use serde::{Deserialize, Serialize};

use super::ModelError;

/// Forces every layer's identity-mapping weight to a constant instead of
/// the `ln(1 + η/l)` schedule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BetaOverride {
    Zero,
    One,
}

impl BetaOverride {
    pub fn value(self) -> f64 {
        match self {
            BetaOverride::Zero => 0.0,
            BetaOverride::One => 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub layers: usize,
    pub hidden: usize,
    pub alpha: f64,
    pub eta: f64,
    pub gamma: f64,
    pub filter_f: f64,
    pub scale_s: f64,
    pub threshold_t: f64,
    pub dropout: f64,
    pub classes: usize,
    pub input_dim: usize,
    #[serde(default)]
    pub beta_override: Option<BetaOverride>,
}

impl ModelConfig {
    /// Cora settings from the reference experiments, sized for the given
    /// feature and class counts.
    pub fn cora(input_dim: usize, classes: usize) -> Self {
        Self {
            layers: 64,
            hidden: 64,
            alpha: 0.3,
            eta: 0.8,
            gamma: 0.4,
            filter_f: 0.4,
            scale_s: 1.0,
            threshold_t: 1e-4,
            dropout: 0.6,
            classes,
            input_dim,
            beta_override: None,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidConfig(msg));
        if self.layers == 0 {
            return bad("layers must be at least 1".into());
        }
        if self.hidden == 0 || self.classes == 0 || self.input_dim == 0 {
            return bad("hidden, classes and input_dim must be positive".into());
        }
        for (name, v) in [("alpha", self.alpha), ("gamma", self.gamma)] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return bad(format!("eta must be finite and >= 0, got {}", self.eta));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout must lie in [0, 1), got {}", self.dropout));
        }
        if !(self.filter_f.is_finite() && self.filter_f > 0.0) {
            return bad(format!("filter_f must be positive, got {}", self.filter_f));
        }
        if !(self.scale_s.is_finite() && self.scale_s > 0.0) {
            return bad(format!("scale_s must be positive, got {}", self.scale_s));
        }
        if !(self.threshold_t.is_finite() && self.threshold_t >= 0.0) {
            return bad(format!("threshold_t must be >= 0, got {}", self.threshold_t));
        }
        Ok(())
    }

    /// Identity-mapping weight `β_l` for 1-based layer `l`.
    pub fn beta(&self, l: usize) -> Result<f64, ModelError> {
        match self.beta_override {
            Some(o) => Ok(o.value()),
            None => beta_schedule(self.eta, l),
        }
    }

    /// Rewrites `alpha`, `gamma` and `beta_override` so the network reduces
    /// to the named architecture. `Deepgwc` leaves the config unchanged.
    pub fn with_mode(mut self, mode: ReductionMode) -> Self {
        match mode {
            ReductionMode::Gcn => {
                self.alpha = 0.0;
                self.gamma = 0.0;
                self.beta_override = Some(BetaOverride::One);
            }
            ReductionMode::Gwnn => {
                self.alpha = 0.0;
                self.gamma = 1.0;
                self.beta_override = Some(BetaOverride::One);
            }
            ReductionMode::AppnpLike => {
                self.gamma = 0.0;
                self.beta_override = Some(BetaOverride::Zero);
            }
            ReductionMode::GcniiLike => {
                self.gamma = 0.0;
                self.beta_override = None;
            }
            ReductionMode::Deepgwc => {}
        }
        self
    }
}

/// `β_l = ln(1 + η / l)`.
pub fn beta_schedule(eta: f64, l: usize) -> Result<f64, ModelError> {
    if l == 0 {
        return Err(ModelError::LayerIndexZero);
    }
    if !(eta.is_finite() && eta >= 0.0) {
        return Err(ModelError::InvalidConfig(format!("eta must be >= 0, got {eta}")));
    }
    Ok((eta / l as f64).ln_1p())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReductionMode {
    Gcn,
    Gwnn,
    AppnpLike,
    GcniiLike,
    Deepgwc,
}

impl ReductionMode {
    pub const ALL: [ReductionMode; 5] = [
        ReductionMode::Gcn,
        ReductionMode::Gwnn,
        ReductionMode::AppnpLike,
        ReductionMode::GcniiLike,
        ReductionMode::Deepgwc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ReductionMode::Gcn => "gcn",
            ReductionMode::Gwnn => "gwnn",
            ReductionMode::AppnpLike => "appnp-like",
            ReductionMode::GcniiLike => "gcnii-like",
            ReductionMode::Deepgwc => "deepgwc",
        }
    }
}

impl std::fmt::Display for ReductionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ReductionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gcn" => Ok(Self::Gcn),
            "gwnn" => Ok(Self::Gwnn),
            "appnp" | "appnp-like" => Ok(Self::AppnpLike),
            "gcnii" | "gcnii-like" => Ok(Self::GcniiLike),
            "deepgwc" => Ok(Self::Deepgwc),
            other => Err(format!(
                "unknown mode '{other}' (expected gcn, gwnn, appnp-like, gcnii-like or deepgwc)"
            )),
        }
    }
}

/// Which named architecture a configuration collapses to.
pub fn reduction_mode(config: &ModelConfig) -> ReductionMode {
    let beta_is_one = config.beta_override == Some(BetaOverride::One);
    let beta_is_zero = config.beta_override == Some(BetaOverride::Zero)
        || (config.beta_override.is_none() && config.eta == 0.0);
    match (config.alpha == 0.0, config.gamma) {
        (true, g) if beta_is_one && g == 0.0 => ReductionMode::Gcn,
        (true, g) if beta_is_one && g == 1.0 => ReductionMode::Gwnn,
        (false, g) if g == 0.0 && beta_is_zero => ReductionMode::AppnpLike,
        (false, g) if g == 0.0 => ReductionMode::GcniiLike,
        _ => ReductionMode::Deepgwc,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ModelConfig {
        ModelConfig::cora(10, 3)
    }

    #[test]
    fn beta_examples() {
        assert!((beta_schedule(0.8, 1).unwrap() - 0.587_786_664_902_119_1).abs() < 1e-15);
        assert!((beta_schedule(0.8, 1).unwrap() - 1.8f64.ln()).abs() < 1e-15);
        assert_eq!(beta_schedule(0.0, 7).unwrap(), 0.0);
        let b64 = beta_schedule(0.8, 64).unwrap();
        assert!((b64 - 1.0125f64.ln()).abs() < 1e-15);
        assert!((b64 - 0.012_422_519_998_557).abs() < 1e-15);
        assert_eq!(beta_schedule(0.8, 0), Err(ModelError::LayerIndexZero));
    }

    #[test]
    fn reductions() {
        let mut c = base();
        c.alpha = 0.0;
        c.gamma = 0.0;
        c.beta_override = Some(BetaOverride::One);
        assert_eq!(reduction_mode(&c), ReductionMode::Gcn);
        c.gamma = 1.0;
        assert_eq!(reduction_mode(&c), ReductionMode::Gwnn);
        c.alpha = 0.1;
        c.gamma = 0.0;
        c.beta_override = Some(BetaOverride::Zero);
        assert_eq!(reduction_mode(&c), ReductionMode::AppnpLike);
        c.beta_override = None;
        assert_eq!(reduction_mode(&c), ReductionMode::GcniiLike);
        assert_eq!(reduction_mode(&base()), ReductionMode::Deepgwc);
    }

    #[test]
    fn with_mode_round_trips_through_classifier() {
        for mode in ReductionMode::ALL {
            assert_eq!(reduction_mode(&base().with_mode(mode)), mode, "{mode}");
            assert_eq!(mode.as_str().parse::<ReductionMode>().unwrap(), mode);
        }
    }

    #[test]
    fn validation() {
        assert!(base().validate().is_ok());
        let mut c = base();
        c.dropout = 1.0;
        assert!(c.validate().is_err());
        let mut c = base();
        c.layers = 0;
        assert!(c.validate().is_err());
        let mut c = base();
        c.alpha = 1.2;
        assert!(c.validate().is_err());
    }
}
