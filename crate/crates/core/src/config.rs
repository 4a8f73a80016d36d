//! Run configuration: every tunable of the pipeline in one JSON document.
//!
//! Missing keys take their defaults; unknown keys are rejected.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cgr::CgrParams;
use crate::classify::{LogRegConfig, Metric};
use crate::kaleidoscope::KaleidoscopeParams;
use crate::Point;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("config: {0}")]
    Parse(String),
    #[error("config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub kaleidoscope: KaleidoscopeConfig,
    pub raster: RasterConfig,
    pub cgr: CgrConfig,
    pub features: FeaturesConfig,
    pub classify: ClassifyConfig,
    pub split: SplitConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KaleidoscopeConfig {
    pub depth: u32,
    pub pos: [f64; 2],
    pub angle: f64,
    pub scale: f64,
    pub memoize: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RasterConfig {
    pub width: usize,
    pub height: usize,
    pub pad_fraction: f64,
    /// Gray level of drawn lines on the white background.
    pub ink: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CgrConfig {
    pub ratio: f64,
    pub start: [f64; 2],
    pub resolution: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMode {
    Ohe,
    #[default]
    Pixels,
    Fcgr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeaturesConfig {
    pub mode: FeatureMode,
    /// One-hot length; `null` uses the longest sequence of the dataset.
    pub max_len: Option<usize>,
    pub downsample: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    #[default]
    Knn,
    Logreg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifyConfig {
    pub model: ModelKind,
    pub k: usize,
    pub metric: Metric,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitConfig {
    pub test_fraction: f64,
    pub stratified: bool,
    /// `null` uses the global seed.
    pub seed: Option<u64>,
}

impl Default for KaleidoscopeConfig {
    fn default() -> Self {
        let p = KaleidoscopeParams::default();
        Self {
            depth: p.depth,
            pos: [p.pos.x, p.pos.y],
            angle: p.angle,
            scale: p.scale,
            memoize: p.memoize,
        }
    }
}

impl Default for RasterConfig {
    fn default() -> Self {
        Self {
            width: 380,
            height: 380,
            pad_fraction: 0.05,
            ink: crate::raster::DEFAULT_INK,
        }
    }
}

impl Default for CgrConfig {
    fn default() -> Self {
        let p = CgrParams::default();
        Self {
            ratio: p.ratio,
            start: [p.start.x, p.start.y],
            resolution: 16,
        }
    }
}

impl Default for FeaturesConfig {
    fn default() -> Self {
        Self {
            mode: FeatureMode::default(),
            max_len: None,
            downsample: 10,
        }
    }
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        let lr = LogRegConfig::default();
        Self {
            model: ModelKind::default(),
            k: 5,
            metric: Metric::default(),
            learning_rate: lr.learning_rate,
            epochs: lr.epochs,
            batch_size: lr.batch_size,
        }
    }
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            test_fraction: 0.2,
            stratified: true,
            seed: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &[u8]) -> Result<Self, ConfigError> {
        let parse = |e: serde_json::Error| ConfigError::Parse(e.to_string());
        let value: serde_json::Value = serde_json::from_slice(text).map_err(parse)?;
        // serde would also accept a positional array for a struct.
        if !value.is_object() {
            return Err(ConfigError::Parse("expected a JSON object".into()));
        }
        let cfg: Self = serde_json::from_value(value).map_err(parse)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        self.kaleidoscope_params()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let r = &self.raster;
        if r.width == 0 || r.height == 0 {
            return invalid(format!("image size {}x{} must be positive", r.width, r.height));
        }
        if !(r.pad_fraction.is_finite() && r.pad_fraction >= 0.0) {
            return invalid(format!("pad_fraction must be nonnegative, got {}", r.pad_fraction));
        }
        if r.ink == crate::raster::BACKGROUND {
            return invalid("ink must differ from the white background".into());
        }
        let c = &self.cgr;
        if !(c.ratio > 0.0 && c.ratio < 1.0) {
            return invalid(format!("cgr ratio must lie in (0, 1), got {}", c.ratio));
        }
        if !c.start.iter().all(|v| (0.0..=1.0).contains(v)) {
            return invalid("cgr start must lie in the unit square".into());
        }
        if c.resolution == 0 {
            return invalid("cgr resolution must be positive".into());
        }
        let f = &self.features;
        if f.downsample == 0 {
            return invalid("downsample must be positive".into());
        }
        if f.max_len == Some(0) {
            return invalid("max_len must be positive".into());
        }
        let k = &self.classify;
        if k.k == 0 {
            return invalid("k must be at least 1".into());
        }
        if !(k.learning_rate.is_finite() && k.learning_rate > 0.0) {
            return invalid(format!("learning_rate must be positive, got {}", k.learning_rate));
        }
        if k.batch_size == 0 {
            return invalid("batch_size must be at least 1".into());
        }
        let s = &self.split;
        if !(s.test_fraction > 0.0 && s.test_fraction < 1.0) {
            return invalid(format!("test_fraction must lie in (0, 1), got {}", s.test_fraction));
        }
        Ok(())
    }

    pub fn kaleidoscope_params(&self) -> KaleidoscopeParams {
        let k = &self.kaleidoscope;
        KaleidoscopeParams {
            depth: k.depth,
            pos: Point::new(k.pos[0], k.pos[1]),
            angle: k.angle,
            scale: k.scale,
            memoize: k.memoize,
        }
    }

    pub fn cgr_params(&self) -> CgrParams {
        CgrParams {
            start: Point::new(self.cgr.start[0], self.cgr.start[1]),
            ratio: self.cgr.ratio,
        }
    }

    pub fn logreg_config(&self) -> LogRegConfig {
        LogRegConfig {
            learning_rate: self.classify.learning_rate,
            epochs: self.classify.epochs,
            batch_size: self.classify.batch_size,
            seed: self.seed,
        }
    }

    pub fn split_seed(&self) -> u64 {
        self.split.seed.unwrap_or(self.seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = RunConfig::default();
        assert_eq!(c.kaleidoscope_params(), KaleidoscopeParams::default());
        assert_eq!((c.raster.width, c.raster.height), (380, 380));
        assert_eq!(c.split.test_fraction, 0.2);
        assert_eq!(c.classify.learning_rate, 0.003);
        assert_eq!(c.classify.batch_size, 64);
        assert_eq!(c.classify.epochs, 10);
        assert_eq!(RunConfig::from_json(b"{}").unwrap(), c);
    }

    #[test]
    fn partial_documents_and_round_trip() {
        let c = RunConfig::from_json(br#"{"seed": 7, "kaleidoscope": {"depth": 2}, "split": {"seed": 3}}"#).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.kaleidoscope.depth, 2);
        assert_eq!(c.kaleidoscope.scale, 10.0);
        assert_eq!(c.split_seed(), 3);
        assert_eq!(RunConfig::from_json(c.to_json().as_bytes()).unwrap(), c);
        assert_eq!(RunConfig::from_json(br#"{"seed": 7}"#).unwrap().split_seed(), 7);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        for text in [
            &br#"{"colour": 1}"#[..],
            br#"{"raster": {"dpi": 100}}"#,
            br#"{"kaleidoscope": {"depth": 40}}"#,
            br#"{"kaleidoscope": {"scale": -1}}"#,
            br#"{"raster": {"width": 0}}"#,
            br#"{"split": {"test_fraction": 1.0}}"#,
            br#"{"classify": {"model": "svm"}}"#,
            br#"{"classify": {"k": 0}}"#,
            br#"{"features": {"downsample": 0}}"#,
            br#"{"cgr": {"ratio": 0}}"#,
            br#"[]"#,
        ] {
            assert!(RunConfig::from_json(text).is_err(), "{}", String::from_utf8_lossy(text));
        }
    }
}
