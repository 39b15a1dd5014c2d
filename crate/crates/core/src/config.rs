//! Run configuration and the plain-text `key = value` config format.
//!
//! Blank lines and lines starting with `#` are ignored. Every key maps to one
//! [`RunConfig`] field; unknown keys are rejected so typos surface early.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpeedUnit {
    Kmh,
    Mps,
}

impl SpeedUnit {
    pub fn to_mps(self, value: f64) -> f64 {
        match self {
            SpeedUnit::Kmh => value / 3.6,
            SpeedUnit::Mps => value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthUnit {
    M,
    Km,
}

impl LengthUnit {
    pub fn to_meters(self, value: f64) -> f64 {
        match self {
            LengthUnit::M => value,
            LengthUnit::Km => value * 1000.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatetimeFormat {
    /// ISO-8601 local timestamp with optional fractional seconds.
    Iso,
    /// Integer milliseconds since the Unix epoch.
    EpochMs,
}

/// Side of the driving lane on which the passing lane lies, seen in the
/// direction of travel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// Options needed to turn a raw CSV into a [`crate::Dataset`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestConfig {
    pub speed_unit: SpeedUnit,
    pub kilopost_unit: LengthUnit,
    pub datetime_format: DatetimeFormat,
    /// Kilopost (meters) mapped to x = 0. Defaults to the largest kilopost seen.
    pub kilopost_origin: Option<f64>,
    pub route_id: String,
    /// Gaps up to this length (s) are filled by linear interpolation.
    pub gap_fill_max: f64,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            speed_unit: SpeedUnit::Mps,
            kilopost_unit: LengthUnit::M,
            datetime_format: DatetimeFormat::EpochMs,
            kilopost_origin: None,
            route_id: "route".to_string(),
            gap_fill_max: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// TDB interval length (s).
    pub dt: f64,
    /// Half-width of the extraction time window around the crossing (s).
    pub window_t: f64,
    /// Half-width of the extraction space window around the crossing (m).
    pub window_x: f64,
    /// Centered moving-average window for speeds (s).
    pub smoothing_window: f64,
    /// Dead-band for lateral oscillation when locating the start time (m).
    pub eps_lat: f64,
    /// Minimum number of pre-demarcation intervals a follower needs.
    pub min_nf: usize,
    /// Maximum followers analyzed per lane.
    pub follower_cap: usize,
    pub workers: usize,
    pub speed_unit: SpeedUnit,
    pub kilopost_unit: LengthUnit,
    pub datetime_format: DatetimeFormat,
    pub kilopost_origin: Option<f64>,
    pub route_id: String,
    pub gap_fill_max: f64,
    pub driving_lane: i32,
    pub passing_lane: i32,
    pub ramp_lanes: Vec<i32>,
    pub passing_side: Side,
    /// Bin width (m) for centerline averaging.
    pub centerline_bin: f64,
    pub hist_bin_duration: f64,
    pub hist_bin_count: f64,
    pub hist_bin_magnitude: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let ingest = IngestConfig::default();
        RunConfig {
            dt: 0.5,
            window_t: 50.0,
            window_x: 500.0,
            smoothing_window: 1.0,
            eps_lat: 0.1,
            min_nf: 10,
            follower_cap: 10,
            workers: std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1),
            speed_unit: ingest.speed_unit,
            kilopost_unit: ingest.kilopost_unit,
            datetime_format: ingest.datetime_format,
            kilopost_origin: ingest.kilopost_origin,
            route_id: ingest.route_id,
            gap_fill_max: ingest.gap_fill_max,
            driving_lane: 1,
            passing_lane: 2,
            ramp_lanes: vec![3],
            passing_side: Side::Right,
            centerline_bin: 10.0,
            hist_bin_duration: 1.0,
            hist_bin_count: 1.0,
            hist_bin_magnitude: 1.0,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse {value:?}")))
}

impl RunConfig {
    pub fn ingest(&self) -> IngestConfig {
        IngestConfig {
            speed_unit: self.speed_unit,
            kilopost_unit: self.kilopost_unit,
            datetime_format: self.datetime_format,
            kilopost_origin: self.kilopost_origin,
            route_id: self.route_id.clone(),
            gap_fill_max: self.gap_fill_max,
        }
    }

    pub fn is_main_lane(&self, lane: i32) -> bool {
        lane == self.driving_lane || lane == self.passing_lane
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Parse `key = value` text on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(format!("line {}", lineno + 1), "expected `key = value`")
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "dt" => self.dt = parse_value(key, value)?,
            "window_t" => self.window_t = parse_value(key, value)?,
            "window_x" => self.window_x = parse_value(key, value)?,
            "smoothing_window" => self.smoothing_window = parse_value(key, value)?,
            "eps_lat" => self.eps_lat = parse_value(key, value)?,
            "min_nf" => self.min_nf = parse_value(key, value)?,
            "follower_cap" => self.follower_cap = parse_value(key, value)?,
            "workers" => self.workers = parse_value(key, value)?,
            "speed_unit" => {
                self.speed_unit = match value {
                    "kmh" => SpeedUnit::Kmh,
                    "mps" => SpeedUnit::Mps,
                    _ => return Err(Error::config(key, "expected `kmh` or `mps`")),
                }
            }
            "kilopost_unit" => {
                self.kilopost_unit = match value {
                    "m" => LengthUnit::M,
                    "km" => LengthUnit::Km,
                    _ => return Err(Error::config(key, "expected `m` or `km`")),
                }
            }
            "datetime_format" => {
                self.datetime_format = match value {
                    "iso" => DatetimeFormat::Iso,
                    "epoch_ms" => DatetimeFormat::EpochMs,
                    _ => return Err(Error::config(key, "expected `iso` or `epoch_ms`")),
                }
            }
            "kilopost_origin" => self.kilopost_origin = Some(parse_value(key, value)?),
            "route_id" => self.route_id = value.to_string(),
            "gap_fill_max" => self.gap_fill_max = parse_value(key, value)?,
            "driving_lane" => self.driving_lane = parse_value(key, value)?,
            "passing_lane" => self.passing_lane = parse_value(key, value)?,
            "ramp_lanes" => {
                self.ramp_lanes = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| parse_value(key, s))
                    .collect::<Result<_>>()?
            }
            "passing_side" => {
                self.passing_side = match value {
                    "left" => Side::Left,
                    "right" => Side::Right,
                    _ => return Err(Error::config(key, "expected `left` or `right`")),
                }
            }
            "centerline_bin" => self.centerline_bin = parse_value(key, value)?,
            "hist_bin_duration" => self.hist_bin_duration = parse_value(key, value)?,
            "hist_bin_count" => self.hist_bin_count = parse_value(key, value)?,
            "hist_bin_magnitude" => self.hist_bin_magnitude = parse_value(key, value)?,
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt", self.dt),
            ("window_t", self.window_t),
            ("window_x", self.window_x),
            ("smoothing_window", self.smoothing_window),
            ("eps_lat", self.eps_lat),
            ("gap_fill_max", self.gap_fill_max),
            ("centerline_bin", self.centerline_bin),
            ("hist_bin_duration", self.hist_bin_duration),
            ("hist_bin_count", self.hist_bin_count),
            ("hist_bin_magnitude", self.hist_bin_magnitude),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(key, format!("must be positive, got {v}")));
            }
        }
        if self.smoothing_window < 0.1 {
            return Err(Error::config("smoothing_window", "must be at least 0.1 s"));
        }
        for (key, v) in [
            ("min_nf", self.min_nf),
            ("follower_cap", self.follower_cap),
            ("workers", self.workers),
        ] {
            if v == 0 {
                return Err(Error::config(key, "must be positive"));
            }
        }
        if self.driving_lane == self.passing_lane {
            return Err(Error::config(
                "passing_lane",
                "driving and passing lanes must differ",
            ));
        }
        Ok(())
    }

    /// Render as `key = value` text that [`RunConfig::parse`] reads back.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let unit = |u: SpeedUnit| match u {
            SpeedUnit::Kmh => "kmh",
            SpeedUnit::Mps => "mps",
        };
        let _ = writeln!(s, "dt = {}", self.dt);
        let _ = writeln!(s, "window_t = {}", self.window_t);
        let _ = writeln!(s, "window_x = {}", self.window_x);
        let _ = writeln!(s, "smoothing_window = {}", self.smoothing_window);
        let _ = writeln!(s, "eps_lat = {}", self.eps_lat);
        let _ = writeln!(s, "min_nf = {}", self.min_nf);
        let _ = writeln!(s, "follower_cap = {}", self.follower_cap);
        let _ = writeln!(s, "workers = {}", self.workers);
        let _ = writeln!(s, "speed_unit = {}", unit(self.speed_unit));
        let _ = writeln!(
            s,
            "kilopost_unit = {}",
            match self.kilopost_unit {
                LengthUnit::M => "m",
                LengthUnit::Km => "km",
            }
        );
        let _ = writeln!(
            s,
            "datetime_format = {}",
            match self.datetime_format {
                DatetimeFormat::Iso => "iso",
                DatetimeFormat::EpochMs => "epoch_ms",
            }
        );
        if let Some(origin) = self.kilopost_origin {
            let _ = writeln!(s, "kilopost_origin = {origin}");
        }
        let _ = writeln!(s, "route_id = {}", self.route_id);
        let _ = writeln!(s, "gap_fill_max = {}", self.gap_fill_max);
        let _ = writeln!(s, "driving_lane = {}", self.driving_lane);
        let _ = writeln!(s, "passing_lane = {}", self.passing_lane);
        let ramps: Vec<String> = self.ramp_lanes.iter().map(|l| l.to_string()).collect();
        let _ = writeln!(s, "ramp_lanes = {}", ramps.join(","));
        let _ = writeln!(
            s,
            "passing_side = {}",
            match self.passing_side {
                Side::Left => "left",
                Side::Right => "right",
            }
        );
        let _ = writeln!(s, "centerline_bin = {}", self.centerline_bin);
        let _ = writeln!(s, "hist_bin_duration = {}", self.hist_bin_duration);
        let _ = writeln!(s, "hist_bin_count = {}", self.hist_bin_count);
        let _ = writeln!(s, "hist_bin_magnitude = {}", self.hist_bin_magnitude);
        s
    }
}
