//! Flat-key TOML configuration. Every key has a command-line flag of the same
//! name (underscores become dashes) that overrides the file.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;
use track_enrich::assign::{AssignConfig, DEFAULT_LOG_DENSITY_FLOOR};
use track_enrich::broadcast::DegradeConfig;
use track_enrich::evaluate::DEFAULT_PERCENTILES;
use track_enrich::forecast::ModelOrders;
use track_enrich::ingest::DEFAULT_AXIS_THRESHOLD;
use track_enrich::interpolate::DEFAULT_ALPHA;
use track_enrich::pipeline::EnrichConfig;
use track_enrich::synthetic::SyntheticConfig;

/// Longest AR, MA or exogenous lag list accepted.
const MAX_ORDER: usize = 10;

#[derive(Debug, Clone, Default, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// Ground-truth tracking CSV for the home team
    #[arg(long, global = true)]
    pub tracking_home: Option<PathBuf>,
    /// Ground-truth tracking CSV for the away team
    #[arg(long, global = true)]
    pub tracking_away: Option<PathBuf>,
    /// Event CSV matching the tracking files
    #[arg(long, global = true)]
    pub events: Option<PathBuf>,
    /// Discrete frame JSON written by simulate-broadcast
    #[arg(long, global = true)]
    pub discrete: Option<PathBuf>,
    /// 360 freeze-frame JSON, used by enrich instead of --discrete
    #[arg(long, global = true)]
    pub frames_360: Option<PathBuf>,
    /// Event JSON linked to the 360 frames
    #[arg(long, global = true)]
    pub events_360: Option<PathBuf>,
    /// Name of the home team in the 360 events
    #[arg(long, global = true)]
    pub home_team: Option<String>,
    /// Forecast model JSON
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,

    #[arg(long, global = true)]
    pub sample_period: Option<f64>,
    #[arg(long, global = true)]
    pub visibility_radius: Option<f64>,
    #[arg(long, global = true)]
    pub trim_frames: Option<usize>,
    #[arg(long, global = true)]
    pub ar_order: Option<usize>,
    #[arg(long, global = true)]
    pub ma_order: Option<usize>,
    #[arg(long, global = true)]
    pub exog_order: Option<usize>,
    #[arg(long, global = true)]
    pub grid_step: Option<f64>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Ball disagreement (m) above which a 360 frame is rejected
    #[arg(long, global = true)]
    pub axis_threshold: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub log_density_floor: Option<f64>,
    /// Comma-separated percentiles of frame error to draw
    #[arg(long, global = true, value_delimiter = ',')]
    pub percentiles: Option<Vec<f64>>,
    /// Seconds between enriched output frames
    #[arg(long, global = true)]
    pub output_step: Option<f64>,

    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub half_duration: Option<f64>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($field:ident),* $(,)?) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field; } )*
    };
}

impl Settings {
    pub fn from_file(path: &Path) -> Result<Settings, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("config {}: {e}", path.display()))
    }

    /// Values in `top` replace those here.
    pub fn overlay(mut self, top: Settings) -> Settings {
        overlay!(self, top;
            tracking_home, tracking_away, events, discrete, frames_360, events_360, home_team, model,
            output_dir, sample_period, visibility_radius, trim_frames, ar_order, ma_order, exog_order,
            grid_step, alpha, axis_threshold, log_density_floor, percentiles, output_step, seed,
            half_duration,
        );
        self
    }

    pub fn resolve(self) -> Result<PipelineConfig, String> {
        let degrade = DegradeConfig::default();
        let synth = SyntheticConfig::default();
        let orders = ModelOrders::default();
        let cfg = PipelineConfig {
            tracking_home: self.tracking_home,
            tracking_away: self.tracking_away,
            events: self.events,
            discrete: self.discrete,
            frames_360: self.frames_360,
            events_360: self.events_360,
            home_team: self.home_team,
            model: self.model,
            output_dir: self.output_dir.unwrap_or_else(|| PathBuf::from("out")),
            degrade: DegradeConfig {
                sample_period: self.sample_period.unwrap_or(degrade.sample_period),
                visibility_radius: self.visibility_radius.unwrap_or(degrade.visibility_radius),
                trim_frames: self.trim_frames.unwrap_or(degrade.trim_frames),
            },
            orders: ModelOrders {
                ar: self.ar_order.unwrap_or(orders.ar),
                ma: self.ma_order.unwrap_or(orders.ma),
                exog: self.exog_order.unwrap_or(orders.exog),
            },
            grid_step: self.grid_step.unwrap_or(1.0),
            alpha: self.alpha.unwrap_or(DEFAULT_ALPHA),
            axis_threshold: self.axis_threshold.unwrap_or(DEFAULT_AXIS_THRESHOLD),
            log_density_floor: self.log_density_floor.unwrap_or(DEFAULT_LOG_DENSITY_FLOOR),
            percentiles: self.percentiles.unwrap_or_else(|| DEFAULT_PERCENTILES.to_vec()),
            output_step: self.output_step.unwrap_or(1.0),
            synthetic: SyntheticConfig {
                seed: self.seed.unwrap_or(synth.seed),
                half_duration: self.half_duration.unwrap_or(synth.half_duration),
                ..synth
            },
        };
        cfg.check_ranges()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub tracking_home: Option<PathBuf>,
    pub tracking_away: Option<PathBuf>,
    pub events: Option<PathBuf>,
    pub discrete: Option<PathBuf>,
    pub frames_360: Option<PathBuf>,
    pub events_360: Option<PathBuf>,
    pub home_team: Option<String>,
    pub model: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub degrade: DegradeConfig,
    pub orders: ModelOrders,
    pub grid_step: f64,
    pub alpha: f64,
    pub axis_threshold: f64,
    pub log_density_floor: f64,
    pub percentiles: Vec<f64>,
    pub output_step: f64,
    pub synthetic: SyntheticConfig,
}

fn positive(name: &str, v: f64) -> Result<(), String> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(format!("{name} must be a positive number, got {v}"))
    }
}

impl PipelineConfig {
    fn check_ranges(&self) -> Result<(), String> {
        positive("sample_period", self.degrade.sample_period)?;
        positive("visibility_radius", self.degrade.visibility_radius)?;
        positive("grid_step", self.grid_step)?;
        positive("axis_threshold", self.axis_threshold)?;
        positive("output_step", self.output_step)?;
        positive("half_duration", self.synthetic.half_duration)?;
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(format!("alpha must lie in [0, 1], got {}", self.alpha));
        }
        if !self.log_density_floor.is_finite() {
            return Err(format!("log_density_floor must be finite, got {}", self.log_density_floor));
        }
        if let Some(p) = self.percentiles.iter().find(|p| !(0.0..=100.0).contains(*p)) {
            return Err(format!("percentiles must lie in [0, 100], got {p}"));
        }
        let o = self.orders;
        if o.ar > MAX_ORDER || o.ma > MAX_ORDER || o.exog > MAX_ORDER {
            return Err(format!("model orders must be at most {MAX_ORDER}, got ({}, {}, {})", o.ar, o.ma, o.exog));
        }
        Ok(())
    }

    /// An input path that must be configured and must exist.
    pub fn input<'a>(&self, key: &str, path: &'a Option<PathBuf>) -> Result<&'a Path, String> {
        let path = path.as_deref().ok_or_else(|| format!("{key} is not set"))?;
        if !path.exists() {
            return Err(format!("{key} {} does not exist", path.display()));
        }
        Ok(path)
    }

    pub fn tracking(&self) -> Result<(&Path, &Path), String> {
        Ok((
            self.input("tracking_home", &self.tracking_home)?,
            self.input("tracking_away", &self.tracking_away)?,
        ))
    }

    /// Optional input: fine when unset, an error when set but missing.
    pub fn optional_input<'a>(&self, key: &str, path: &'a Option<PathBuf>) -> Result<Option<&'a Path>, String> {
        match path {
            None => Ok(None),
            Some(_) => self.input(key, path).map(Some),
        }
    }

    pub fn model_path(&self) -> PathBuf {
        self.model.clone().unwrap_or_else(|| self.output_dir.join("model.json"))
    }

    pub fn discrete_path(&self) -> PathBuf {
        self.discrete.clone().unwrap_or_else(|| self.output_dir.join("discrete.json"))
    }

    pub fn enrich(&self) -> EnrichConfig {
        EnrichConfig { assign: AssignConfig { log_density_floor: self.log_density_floor }, alpha: self.alpha }
    }
}
