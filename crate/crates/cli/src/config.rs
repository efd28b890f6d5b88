//! Line-oriented `key = value` pipeline configuration.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use floeberg_core::geo::{ShiftFrame, DEFAULT_MAX_TIME_DIFF_MINUTES};
use floeberg_core::ingest::{DEFAULT_BIN_M, DEFAULT_MIN_CONFIDENCE};
use floeberg_core::nnet::Architecture;
use floeberg_core::runtime::Executor;
use floeberg_core::surface::SurfaceMethod;

use crate::CliError;

/// How per-class focal-loss weights are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlphaMode {
    Uniform,
    InverseFrequency,
}

impl FromStr for AlphaMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" => Ok(AlphaMode::Uniform),
            "inverse" | "inverse_frequency" => Ok(AlphaMode::InverseFrequency),
            other => Err(format!("unknown alpha mode {other:?} (uniform|inverse)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub photons: Option<PathBuf>,
    pub segments: Option<PathBuf>,
    pub labeled: Vec<PathBuf>,
    pub raster: Option<PathBuf>,
    pub shifts: Option<PathBuf>,
    pub overrides: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub output_dir: PathBuf,

    pub bin: f64,
    pub min_confidence: u8,
    pub shift: Option<String>,
    pub pair: Option<String>,
    pub shift_frame: ShiftFrame,
    pub max_time_diff: f64,

    pub classifier: Architecture,
    pub gamma: f64,
    pub alpha: AlphaMode,
    pub train_fraction: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub dropout: f64,

    pub surface_method: SurfaceMethod,
    pub window: f64,
    pub stride: f64,
    pub min_lead_length: usize,
    pub histogram_bin: f64,

    pub workers: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            photons: None,
            segments: None,
            labeled: Vec::new(),
            raster: None,
            shifts: None,
            overrides: None,
            model: None,
            output_dir: PathBuf::from("."),
            bin: DEFAULT_BIN_M,
            min_confidence: DEFAULT_MIN_CONFIDENCE,
            shift: None,
            pair: None,
            shift_frame: ShiftFrame::RasterMoves,
            max_time_diff: DEFAULT_MAX_TIME_DIFF_MINUTES,
            classifier: Architecture::Lstm,
            gamma: 2.0,
            alpha: AlphaMode::InverseFrequency,
            train_fraction: 0.8,
            epochs: 20,
            batch_size: 32,
            learning_rate: 0.003,
            dropout: 0.2,
            surface_method: SurfaceMethod::NasaWeighted,
            window: 10_000.0,
            stride: 5_000.0,
            min_lead_length: 1,
            histogram_bin: 0.02,
            workers: Executor::default_workers(),
            seed: 0,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| CliError::Validation(format!("config key {key}: {e}")))
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => CliError::MissingInput(format!("config file {} not found", path.display())),
            _ => CliError::Validation(format!("{}: {e}", path.display())),
        })?;
        Self::parse(&text)
    }

    /// Parse `key = value` lines; `#` starts a comment, blank lines are
    /// ignored, later lines win.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = PipelineConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Validation(format!("config line {}: expected key = value", n + 1)))?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let path = || Some(PathBuf::from(value));
        match key {
            "photons" => self.photons = path(),
            "segments" => self.segments = path(),
            "labeled" => self.labeled = value.split(',').map(|p| PathBuf::from(p.trim())).collect(),
            "raster" => self.raster = path(),
            "shifts" => self.shifts = path(),
            "overrides" => self.overrides = path(),
            "model" => self.model = path(),
            "output_dir" => self.output_dir = PathBuf::from(value),
            "bin" => self.bin = parse(key, value)?,
            "min_confidence" => self.min_confidence = parse(key, value)?,
            "shift" => self.shift = Some(value.to_string()),
            "pair" => self.pair = Some(value.to_string()),
            "shift_frame" => {
                self.shift_frame = match value {
                    "raster" => ShiftFrame::RasterMoves,
                    "track" => ShiftFrame::TrackMoves,
                    other => return Err(CliError::Validation(format!("shift_frame {other:?} (raster|track)"))),
                }
            }
            "max_time_diff" => self.max_time_diff = parse(key, value)?,
            "classifier" => self.classifier = parse(key, value)?,
            "gamma" => self.gamma = parse(key, value)?,
            "alpha" => self.alpha = parse(key, value)?,
            "train_fraction" => self.train_fraction = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "learning_rate" => self.learning_rate = parse(key, value)?,
            "dropout" => self.dropout = parse(key, value)?,
            "surface_method" => self.surface_method = parse(key, value)?,
            "window" => self.window = parse(key, value)?,
            "stride" => self.stride = parse(key, value)?,
            "min_lead_length" => self.min_lead_length = parse(key, value)?,
            "histogram_bin" => self.histogram_bin = parse(key, value)?,
            "workers" => self.workers = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            other => return Err(CliError::Validation(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Validation(msg));
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!("train_fraction {} not in (0, 1)", self.train_fraction));
        }
        if !(self.bin > 0.0 && self.bin.is_finite()) {
            return bad(format!("bin {} must be positive", self.bin));
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        if !(self.window > 0.0 && self.stride > 0.0) {
            return bad("window and stride must be positive".into());
        }
        if !(self.histogram_bin > 0.0) {
            return bad("histogram_bin must be positive".into());
        }
        if !(self.gamma >= 0.0) {
            return bad(format!("gamma {} must be non-negative", self.gamma));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} not in [0, 1)", self.dropout));
        }
        Ok(())
    }

    /// `explicit`, or `name` inside the output directory.
    pub fn output_path(&self, explicit: Option<&Path>, name: &str) -> PathBuf {
        explicit.map_or_else(|| self.output_dir.join(name), Path::to_path_buf)
    }
}
