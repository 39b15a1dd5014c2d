use std::path::Path;

use serde::{Deserialize, Serialize};

use super::profile::SpeedProfile;
use crate::error::{Error, Result};
use crate::newell::{D_BOUNDS, TAU_BOUNDS};

/// Where and when the subject vehicle changes lanes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Insertion {
    /// Lane-change start time (s, scene-local).
    pub time: f64,
    /// Position of the subject vehicle inside the target-lane gap between
    /// the first follower (0) and the leader (1) at `time`.
    pub gap_fraction: f64,
    pub from_lane: i32,
    pub to_lane: i32,
}

/// A two-lane scene: target lane (leader plus followers) and original lane
/// (leader, subject vehicle, followers).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub id_prefix: String,
    /// Scene length (s).
    pub duration: f64,
    /// Added to every timestamp, so scenes can share a dataset.
    pub time_offset: f64,
    pub n_target: usize,
    pub n_original: usize,
    /// Per-follower (tau, d) lists; the last entry repeats.
    pub target_tau: Vec<f64>,
    pub target_d: Vec<f64>,
    pub original_tau: Vec<f64>,
    pub original_d: Vec<f64>,
    pub sv_tau: f64,
    pub sv_d: f64,
    pub tlv_profile: Vec<(f64, f64)>,
    pub lv_profile: Vec<(f64, f64)>,
    /// Target-lane leader position at scene time 0 (m).
    pub tlv_x0: f64,
    /// Extra spacing between the target-lane leader and first follower (m).
    pub target_gap_extra: f64,
    pub insertion: Option<Insertion>,
    /// Gaussian position noise (m).
    pub noise: f64,
    /// Uniform half-width of lateral lane-keeping jitter (m).
    pub jitter: f64,
    pub seed: u64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            id_prefix: String::new(),
            duration: 120.0,
            time_offset: 0.0,
            n_target: 6,
            n_original: 6,
            target_tau: vec![1.0],
            target_d: vec![5.0],
            original_tau: vec![1.0],
            original_d: vec![5.0],
            sv_tau: 1.0,
            sv_d: 5.0,
            tlv_profile: vec![(0.0, 20.0)],
            lv_profile: vec![(0.0, 20.0)],
            tlv_x0: 1000.0,
            target_gap_extra: 0.0,
            insertion: Some(Insertion {
                time: 60.0,
                gap_fraction: 0.5,
                from_lane: 1,
                to_lane: 2,
            }),
            noise: 0.0,
            jitter: 0.05,
            seed: 0,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Scenario(format!("{key}: cannot parse {v:?}")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|s| parse_num(key, s)).collect()
}

fn parse_profile(key: &str, v: &str) -> Result<Vec<(f64, f64)>> {
    v.split(',')
        .map(|pair| {
            let (t, s) = pair
                .split_once(':')
                .ok_or_else(|| Error::Scenario(format!("{key}: expected t:speed, got {pair:?}")))?;
            Ok((parse_num(key, t)?, parse_num(key, s)?))
        })
        .collect()
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

fn fmt_profile(v: &[(f64, f64)]) -> String {
    v.iter().map(|(t, s)| format!("{t}:{s}")).collect::<Vec<_>>().join(",")
}

fn pick(list: &[f64], i: usize) -> f64 {
    list[i.min(list.len() - 1)]
}

impl ScenarioSpec {
    /// Parse `key = value` lines; `#` starts a comment. Without an
    /// `insertion_time` key the scene has no lane change.
    pub fn parse(text: &str) -> Result<Self> {
        let mut spec = ScenarioSpec {
            insertion: None,
            ..ScenarioSpec::default()
        };
        let mut ins = Insertion {
            time: 0.0,
            gap_fraction: 0.5,
            from_lane: 1,
            to_lane: 2,
        };
        let mut has_insertion = false;
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Scenario(format!("line {}: expected key = value", n + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "id_prefix" => spec.id_prefix = value.to_string(),
                "duration" => spec.duration = parse_num(key, value)?,
                "time_offset" => spec.time_offset = parse_num(key, value)?,
                "n_target" => spec.n_target = parse_num(key, value)?,
                "n_original" => spec.n_original = parse_num(key, value)?,
                "target_tau" => spec.target_tau = parse_list(key, value)?,
                "target_d" => spec.target_d = parse_list(key, value)?,
                "original_tau" => spec.original_tau = parse_list(key, value)?,
                "original_d" => spec.original_d = parse_list(key, value)?,
                "sv_tau" => spec.sv_tau = parse_num(key, value)?,
                "sv_d" => spec.sv_d = parse_num(key, value)?,
                "tlv_profile" => spec.tlv_profile = parse_profile(key, value)?,
                "lv_profile" => spec.lv_profile = parse_profile(key, value)?,
                "tlv_x0" => spec.tlv_x0 = parse_num(key, value)?,
                "target_gap_extra" => spec.target_gap_extra = parse_num(key, value)?,
                "insertion_time" => {
                    ins.time = parse_num(key, value)?;
                    has_insertion = true;
                }
                "gap_fraction" => ins.gap_fraction = parse_num(key, value)?,
                "from_lane" => ins.from_lane = parse_num(key, value)?,
                "to_lane" => ins.to_lane = parse_num(key, value)?,
                "noise" => spec.noise = parse_num(key, value)?,
                "jitter" => spec.jitter = parse_num(key, value)?,
                "seed" => spec.seed = parse_num(key, value)?,
                _ => return Err(Error::Scenario(format!("unknown key {key:?}"))),
            }
        }
        if has_insertion {
            spec.insertion = Some(ins);
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "id_prefix = {}\nduration = {}\ntime_offset = {}\nn_target = {}\nn_original = {}\n\
             target_tau = {}\ntarget_d = {}\noriginal_tau = {}\noriginal_d = {}\n\
             sv_tau = {}\nsv_d = {}\ntlv_profile = {}\nlv_profile = {}\ntlv_x0 = {}\n\
             target_gap_extra = {}\nnoise = {}\njitter = {}\nseed = {}\n",
            self.id_prefix,
            self.duration,
            self.time_offset,
            self.n_target,
            self.n_original,
            fmt_list(&self.target_tau),
            fmt_list(&self.target_d),
            fmt_list(&self.original_tau),
            fmt_list(&self.original_d),
            self.sv_tau,
            self.sv_d,
            fmt_profile(&self.tlv_profile),
            fmt_profile(&self.lv_profile),
            self.tlv_x0,
            self.target_gap_extra,
            self.noise,
            self.jitter,
            self.seed,
        );
        if let Some(ins) = &self.insertion {
            s.push_str(&format!(
                "insertion_time = {}\ngap_fraction = {}\nfrom_lane = {}\nto_lane = {}\n",
                ins.time, ins.gap_fraction, ins.from_lane, ins.to_lane
            ));
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        let lists = [
            ("target_tau", &self.target_tau),
            ("target_d", &self.target_d),
            ("original_tau", &self.original_tau),
            ("original_d", &self.original_d),
        ];
        for (key, list) in lists {
            if list.is_empty() {
                return Err(Error::Scenario(format!("{key} is empty")));
            }
        }
        let taus = self.target_tau.iter().chain(&self.original_tau).chain([&self.sv_tau]);
        if let Some(t) = taus.into_iter().find(|&&t| !TAU_BOUNDS.contains(t)) {
            return Err(Error::Scenario(format!("tau {t} outside [0.1, 5]")));
        }
        let ds = self.target_d.iter().chain(&self.original_d).chain([&self.sv_d]);
        if let Some(d) = ds.into_iter().find(|&&d| !D_BOUNDS.contains(d)) {
            return Err(Error::Scenario(format!("d {d} outside [0.1, 10]")));
        }
        if !(self.duration > 0.0) || !(self.noise >= 0.0) || !(self.jitter >= 0.0) {
            return Err(Error::Scenario("duration, noise and jitter must be non-negative".into()));
        }
        if !(self.target_gap_extra >= 0.0) {
            return Err(Error::Scenario("target_gap_extra must be non-negative".into()));
        }
        SpeedProfile::new(self.tlv_profile.clone())?;
        SpeedProfile::new(self.lv_profile.clone())?;
        if let Some(ins) = &self.insertion {
            if !(ins.gap_fraction > 0.0 && ins.gap_fraction < 1.0) {
                return Err(Error::Scenario("gap_fraction must lie in (0, 1)".into()));
            }
            if ins.from_lane == ins.to_lane {
                return Err(Error::Scenario("from_lane equals to_lane".into()));
            }
            if ![1, 2].contains(&ins.from_lane) || ![1, 2].contains(&ins.to_lane) {
                return Err(Error::Scenario("lanes must be 1 (driving) or 2 (passing)".into()));
            }
            if !(ins.time > 2.0 && ins.time + 3.0 < self.duration) {
                return Err(Error::Scenario("insertion must leave room for the 3 s maneuver".into()));
            }
        }
        Ok(())
    }

    pub fn target_params(&self, i: usize) -> (f64, f64) {
        (pick(&self.target_tau, i), pick(&self.target_d, i))
    }

    pub fn original_params(&self, i: usize) -> (f64, f64) {
        (pick(&self.original_tau, i), pick(&self.original_d, i))
    }

    /// Lanes of the original and target platoons.
    pub fn lanes(&self) -> (i32, i32) {
        self.insertion
            .as_ref()
            .map_or((1, 2), |ins| (ins.from_lane, ins.to_lane))
    }
}
