//! Result files: per-instance JSON, batch and aggregate CSVs, histograms.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::extraction::{LaneChangeInstance, RejectReason, Rejection};
use crate::impact::{Diagnostics, GlobalMagnitude, Lane, LaneImpactSummary, ThresholdBand};
use crate::pipeline::{BatchResult, CalibrationRecord, InstanceResult, LaneResult, Truncation};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FollowerSeries {
    pub tdb_pre: Vec<f64>,
    pub tdb_post: Vec<f64>,
    pub theta_pre: Vec<bool>,
    pub theta_post: Vec<bool>,
    pub ctdb: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FollowerReport {
    pub follower_index: usize,
    pub follower_id: String,
    pub demarcation: f64,
    pub n_f: usize,
    pub n_r: usize,
    pub band: ThresholdBand,
    pub omega_star: usize,
    pub k_a: Vec<usize>,
    pub upsilon: bool,
    pub t_s: Option<f64>,
    pub t_e: Option<f64>,
    pub t_a: f64,
    pub w_a: f64,
    pub diagnostics: Diagnostics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<FollowerSeries>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneReport {
    pub summary: LaneImpactSummary,
    pub reference_id: String,
    pub truncation: Option<Truncation>,
    pub followers: Vec<FollowerReport>,
    pub calibration: Vec<CalibrationRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceReport {
    pub instance: LaneChangeInstance,
    pub target: LaneReport,
    pub original: Option<LaneReport>,
    pub global: GlobalMagnitude,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDoc {
    pub schema_version: u32,
    pub instances: Vec<InstanceReport>,
    pub rejections: Vec<Rejection>,
    pub rejection_counts: BTreeMap<RejectReason, usize>,
    pub failures: Vec<(String, String)>,
}

fn lane_report(lane: &LaneResult, full: bool) -> LaneReport {
    let followers = lane
        .followers
        .iter()
        .zip(&lane.follower_ids)
        .zip(&lane.demarcation.times)
        .map(|((f, id), &t)| FollowerReport {
            follower_index: f.follower_index,
            follower_id: id.clone(),
            demarcation: t,
            n_f: f.tdb.n_f(),
            n_r: f.tdb.n_r(),
            band: f.band,
            omega_star: f.status.omega_star,
            k_a: f.k_a.clone(),
            upsilon: f.upsilon,
            t_s: f.t_s,
            t_e: f.t_e,
            t_a: f.t_a,
            w_a: f.w_a,
            diagnostics: f.diagnostics,
            series: full.then(|| FollowerSeries {
                tdb_pre: f.tdb.pre.clone(),
                tdb_post: f.tdb.post.clone(),
                theta_pre: f.status.pre.clone(),
                theta_post: f.status.post.clone(),
                ctdb: f.ctdb.clone(),
            }),
        })
        .collect();
    LaneReport {
        summary: lane.summary.clone(),
        reference_id: lane.reference_id.clone(),
        truncation: lane.truncation,
        followers,
        calibration: lane.calibration.clone(),
    }
}

impl InstanceReport {
    pub fn from_result(r: &InstanceResult, full: bool) -> Self {
        InstanceReport {
            instance: r.instance.clone(),
            target: lane_report(&r.target, full),
            original: r.original.as_ref().map(|o| lane_report(o, full)),
            global: r.global,
        }
    }

    fn lanes(&self) -> impl Iterator<Item = &LaneReport> {
        std::iter::once(&self.target).chain(self.original.as_ref())
    }
}

impl ReportDoc {
    /// Per-follower series are kept only when `full` is set.
    pub fn from_batch(batch: &BatchResult, full: bool) -> Self {
        let mut rejection_counts = BTreeMap::new();
        for r in &batch.rejections {
            *rejection_counts.entry(r.reason).or_insert(0) += 1;
        }
        ReportDoc {
            schema_version: SCHEMA_VERSION,
            instances: batch
                .results
                .iter()
                .map(|r| InstanceReport::from_result(r, full))
                .collect(),
            rejections: batch.rejections.clone(),
            rejection_counts,
            failures: batch.failures.clone(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let doc: ReportDoc = serde_json::from_str(&text)?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(Error::Report(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                doc.schema_version
            )));
        }
        Ok(doc)
    }

    fn lane_summaries(&self, lane: Lane) -> Vec<&LaneImpactSummary> {
        self.instances
            .iter()
            .flat_map(|i| i.lanes())
            .map(|l| &l.summary)
            .filter(|s| s.lane == lane)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOptions {
    pub svg: bool,
    pub hist_bin_duration: f64,
    pub hist_bin_count: f64,
    pub hist_bin_magnitude: f64,
}

impl ReportOptions {
    pub fn from_config(cfg: &RunConfig) -> Self {
        ReportOptions {
            svg: false,
            hist_bin_duration: cfg.hist_bin_duration,
            hist_bin_count: cfg.hist_bin_count,
            hist_bin_magnitude: cfg.hist_bin_magnitude,
        }
    }
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self::from_config(&RunConfig::default())
    }
}

/// Nonempty bins as `(bin start, count)`, ascending.
pub fn histogram(values: &[f64], bin: f64) -> Vec<(f64, usize)> {
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for &v in values {
        // tolerate values a hair below a bin edge from float round-off
        let k = (v / bin + 1e-9).floor() as i64;
        *counts.entry(k).or_insert(0) += 1;
    }
    counts
        .into_iter()
        .map(|(k, c)| (k as f64 * bin, c))
        .collect()
}

fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn batch_csv(doc: &ReportDoc) -> String {
    let mut s = String::from("instance_id,lane,N,N_A,W_A,T_A,t_S,t_E\n");
    for inst in &doc.instances {
        for lane in inst.lanes() {
            let m = &lane.summary;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                inst.instance.instance_id,
                m.lane.as_str(),
                m.n,
                m.n_a,
                m.w_a,
                m.t_a_total,
                opt(m.t_start),
                opt(m.t_end)
            );
        }
    }
    s
}

pub fn aggregate_csv(doc: &ReportDoc) -> String {
    let mut s = String::from("scope,instances,mean_T_A,mean_N_A,mean_W_A\n");
    for lane in [Lane::Target, Lane::Original] {
        let sums = doc.lane_summaries(lane);
        if sums.is_empty() {
            continue;
        }
        let t: Vec<f64> = sums.iter().map(|m| m.t_a_total).collect();
        let n: Vec<f64> = sums.iter().map(|m| m.n_a as f64).collect();
        let w: Vec<f64> = sums.iter().map(|m| m.w_a).collect();
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            lane.as_str(),
            sums.len(),
            opt(mean(&t)),
            opt(mean(&n)),
            opt(mean(&w))
        );
    }
    let g: Vec<f64> = doc.instances.iter().map(|i| i.global.value).collect();
    if !g.is_empty() {
        let _ = writeln!(s, "global,{},,,{}", g.len(), opt(mean(&g)));
    }
    s
}

pub fn calibration_csv(doc: &ReportDoc) -> String {
    let mut s = String::from("instance_id,lane,follower_index,tau,d,sse,flag\n");
    for inst in &doc.instances {
        for lane in inst.lanes() {
            for c in &lane.calibration {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{}",
                    inst.instance.instance_id,
                    lane.summary.lane.as_str(),
                    c.follower_index,
                    c.tau,
                    opt(c.d),
                    opt(c.sse),
                    c.flag.as_str()
                );
            }
        }
    }
    s
}

pub fn rejections_csv(doc: &ReportDoc) -> String {
    let mut s = String::from("vehicle_id,t_lane,reason\n");
    for r in &doc.rejections {
        let _ = writeln!(s, "{},{},{}", r.vehicle_id, opt(r.t_lane), r.reason.as_str());
    }
    s
}

fn histogram_csv(h: &[(f64, usize)]) -> String {
    let mut s = String::from("value,count\n");
    for (v, c) in h {
        let _ = writeln!(s, "{v},{c}");
    }
    s
}

/// Minimal bar chart of a histogram.
pub fn histogram_svg(title: &str, h: &[(f64, usize)]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 320.0;
    const PAD: f64 = 40.0;
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <text x=\"{PAD}\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">{title}</text>\n"
    );
    let max = h.iter().map(|&(_, c)| c).max().unwrap_or(0);
    if max > 0 {
        let bar = (W - 2.0 * PAD) / h.len() as f64;
        for (i, &(v, c)) in h.iter().enumerate() {
            let bh = (H - 2.0 * PAD) * c as f64 / max as f64;
            let x = PAD + i as f64 * bar;
            let y = H - PAD - bh;
            let _ = writeln!(
                s,
                "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{bh:.2}\" fill=\"#4a7ab0\"><title>{v}: {c}</title></rect>",
                (bar - 1.0).max(0.5)
            );
        }
    }
    let _ = writeln!(
        s,
        "<line x1=\"{PAD}\" y1=\"{y}\" x2=\"{x2}\" y2=\"{y}\" stroke=\"black\"/>\n</svg>",
        y = H - PAD,
        x2 = W - PAD
    );
    s
}

fn write(dir: &Path, name: &str, content: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, content).map_err(|e| Error::io(&path, e))
}

/// Write every report file for `doc` into `out`.
pub fn emit_from_doc(doc: &ReportDoc, out: &Path, opts: &ReportOptions) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write(out, "results.json", &(serde_json::to_string_pretty(doc)? + "\n"))?;
    let inst_dir = out.join("instances");
    std::fs::create_dir_all(&inst_dir).map_err(|e| Error::io(&inst_dir, e))?;
    for inst in &doc.instances {
        let name = format!("{}.json", inst.instance.instance_id);
        write(&inst_dir, &name, &(serde_json::to_string_pretty(inst)? + "\n"))?;
    }
    write(out, "batch.csv", &batch_csv(doc))?;
    write(out, "aggregate.csv", &aggregate_csv(doc))?;
    write(out, "calibration.csv", &calibration_csv(doc))?;
    write(out, "rejections.csv", &rejections_csv(doc))?;

    let mut hists: Vec<(String, Vec<(f64, usize)>)> = Vec::new();
    for lane in [Lane::Target, Lane::Original] {
        let sums = doc.lane_summaries(lane);
        let pick = |f: fn(&LaneImpactSummary) -> f64| sums.iter().map(|m| f(m)).collect::<Vec<_>>();
        let name = lane.as_str();
        hists.push((
            format!("hist_duration_{name}"),
            histogram(&pick(|m| m.t_a_total), opts.hist_bin_duration),
        ));
        hists.push((
            format!("hist_count_{name}"),
            histogram(&pick(|m| m.n_a as f64), opts.hist_bin_count),
        ));
        hists.push((
            format!("hist_magnitude_{name}"),
            histogram(&pick(|m| m.w_a), opts.hist_bin_magnitude),
        ));
    }
    let global: Vec<f64> = doc.instances.iter().map(|i| i.global.value).collect();
    hists.push((
        "hist_magnitude_global".to_string(),
        histogram(&global, opts.hist_bin_magnitude),
    ));
    for (name, h) in &hists {
        write(out, &format!("{name}.csv"), &histogram_csv(h))?;
        if opts.svg {
            write(out, &format!("{name}.svg"), &histogram_svg(name, h))?;
        }
    }
    Ok(())
}

pub fn emit_reports(batch: &BatchResult, out: &Path, full: bool, opts: &ReportOptions) -> Result<()> {
    emit_from_doc(&ReportDoc::from_batch(batch, full), out, opts)
}
