//! CSV ingest and the normalized CSV writer.
//!
//! Input columns: `vehicle_id,datetime,vehicle_type,speed,lane_id,kilopost,lat,lon`.
//! The normalized form written by [`write_dataset`] uses epoch milliseconds,
//! m/s and meters, and reads back bit-exactly with [`normalized_config`].

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDateTime;
use serde::Deserialize;

use super::types::{Dataset, Gap, TrajectoryPoint, VehicleTrack, SAMPLE_STEP};
use crate::config::{DatetimeFormat, IngestConfig, LengthUnit, SpeedUnit};
use crate::error::{Error, Result};

pub const HEADER: [&str; 8] = [
    "vehicle_id",
    "datetime",
    "vehicle_type",
    "speed",
    "lane_id",
    "kilopost",
    "lat",
    "lon",
];

const STEP_MS: i64 = 100;

#[derive(Debug, Deserialize)]
struct RawRow {
    vehicle_id: String,
    datetime: String,
    vehicle_type: String,
    speed: f64,
    lane_id: i32,
    kilopost: f64,
    lat: f64,
    lon: f64,
}

struct Sample {
    ms: i64,
    speed: f64,
    lane_id: i32,
    kilopost: f64,
    lat: f64,
    lon: f64,
}

fn parse_datetime(raw: &str, format: DatetimeFormat) -> Option<i64> {
    let raw = raw.trim();
    match format {
        DatetimeFormat::EpochMs => raw.parse().ok(),
        DatetimeFormat::Iso => ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"]
            .iter()
            .find_map(|f| NaiveDateTime::parse_from_str(raw, f).ok())
            .map(|dt| dt.and_utc().timestamp_millis()),
    }
}

pub fn parse_dataset(path: &Path, cfg: &IngestConfig) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(file, cfg)
}

pub fn read_dataset<R: Read>(reader: R, cfg: &IngestConfig) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::MalformedRow {
        line: 1,
        message: e.to_string(),
    })?;
    for col in HEADER {
        if !headers.iter().any(|h| h == col) {
            return Err(Error::MalformedRow {
                line: 1,
                message: format!("missing column `{col}`"),
            });
        }
    }

    let mut per_vehicle: BTreeMap<String, (String, Vec<Sample>)> = BTreeMap::new();
    for (index, record) in rdr.deserialize::<RawRow>().enumerate() {
        // Row n (0-based) sits on line n + 2, after the header.
        let line = index as u64 + 2;
        let row = record.map_err(|e| Error::MalformedRow {
            line: e.position().map(|p| p.line()).unwrap_or(line),
            message: e.to_string(),
        })?;
        let ms = parse_datetime(&row.datetime, cfg.datetime_format).ok_or_else(|| {
            Error::MalformedRow {
                line,
                message: format!("unparseable datetime {:?}", row.datetime),
            }
        })?;
        let speed = cfg.speed_unit.to_mps(row.speed);
        if !(speed.is_finite() && speed >= 0.0) {
            return Err(Error::MalformedRow {
                line,
                message: format!("invalid speed {}", row.speed),
            });
        }
        for (name, v) in [("kilopost", row.kilopost), ("lat", row.lat), ("lon", row.lon)] {
            if !v.is_finite() {
                return Err(Error::MalformedRow {
                    line,
                    message: format!("non-finite {name}"),
                });
            }
        }
        let entry = per_vehicle
            .entry(row.vehicle_id)
            .or_insert_with(|| (row.vehicle_type, Vec::new()));
        entry.1.push(Sample {
            ms,
            speed,
            lane_id: row.lane_id,
            kilopost: cfg.kilopost_unit.to_meters(row.kilopost),
            lat: row.lat,
            lon: row.lon,
        });
    }

    let time_origin_ms = per_vehicle
        .values()
        .flat_map(|(_, s)| s.iter().map(|s| s.ms))
        .min()
        .unwrap_or(0);
    let kilopost_origin = cfg.kilopost_origin.unwrap_or_else(|| {
        per_vehicle
            .values()
            .flat_map(|(_, s)| s.iter().map(|s| s.kilopost))
            .fold(f64::NEG_INFINITY, f64::max)
    });
    let kilopost_origin = if kilopost_origin.is_finite() {
        kilopost_origin
    } else {
        0.0
    };

    let mut dataset = Dataset::new(cfg.route_id.clone(), kilopost_origin, time_origin_ms);
    let fill_max_ms = (cfg.gap_fill_max * 1000.0).round() as i64;
    for (vehicle_id, (vehicle_type, mut samples)) in per_vehicle {
        samples.sort_by_key(|s| s.ms);
        if let Some(w) = samples.windows(2).find(|w| w[0].ms == w[1].ms) {
            return Err(Error::DuplicateSample {
                vehicle_id,
                t: (w[0].ms - time_origin_ms) as f64 / 1000.0,
            });
        }
        let mut track = VehicleTrack::new(vehicle_id, vehicle_type);
        let to_point = |ms: i64, speed, lane_id, kilopost: f64, lat, lon| TrajectoryPoint {
            t: (ms - time_origin_ms) as f64 / 1000.0,
            x: kilopost_origin - kilopost,
            speed,
            lane_id,
            lateral: None,
            kilopost,
            lat,
            lon,
        };
        for (i, s) in samples.iter().enumerate() {
            if i > 0 {
                let prev = &samples[i - 1];
                let gap = s.ms - prev.ms;
                if gap > STEP_MS && gap <= fill_max_ms {
                    let mut ms = prev.ms + STEP_MS;
                    while ms < s.ms {
                        let w = (ms - prev.ms) as f64 / gap as f64;
                        let lerp = |a: f64, b: f64| a + (b - a) * w;
                        track.points.push(to_point(
                            ms,
                            lerp(prev.speed, s.speed),
                            prev.lane_id,
                            lerp(prev.kilopost, s.kilopost),
                            lerp(prev.lat, s.lat),
                            lerp(prev.lon, s.lon),
                        ));
                        ms += STEP_MS;
                    }
                } else if gap > STEP_MS {
                    track.gaps.push(Gap {
                        start: (prev.ms - time_origin_ms) as f64 / 1000.0,
                        end: (s.ms - time_origin_ms) as f64 / 1000.0,
                    });
                }
            }
            track.points.push(to_point(
                s.ms, s.speed, s.lane_id, s.kilopost, s.lat, s.lon,
            ));
        }
        if track.points.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(Error::NonMonotoneTime {
                vehicle_id: track.vehicle_id,
            });
        }
        dataset.insert(track);
    }
    Ok(dataset)
}

/// Ingest settings that read back the output of [`write_dataset`].
pub fn normalized_config(dataset: &Dataset) -> IngestConfig {
    IngestConfig {
        speed_unit: SpeedUnit::Mps,
        kilopost_unit: LengthUnit::M,
        datetime_format: DatetimeFormat::EpochMs,
        kilopost_origin: Some(dataset.kilopost_origin),
        route_id: dataset.route_id.clone(),
        gap_fill_max: SAMPLE_STEP,
    }
}

/// Write the dataset in normalized form (epoch ms, m/s, meters).
pub fn write_dataset<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let map_err = |e: csv::Error| Error::Report(e.to_string());
    wtr.write_record(HEADER).map_err(map_err)?;
    for track in dataset.tracks.values() {
        for p in &track.points {
            let ms = dataset.time_origin_ms + (p.t * 1000.0).round() as i64;
            wtr.write_record([
                track.vehicle_id.as_str(),
                &ms.to_string(),
                track.vehicle_type.as_str(),
                &p.speed.to_string(),
                &p.lane_id.to_string(),
                &p.kilopost.to_string(),
                &p.lat.to_string(),
                &p.lon.to_string(),
            ])
            .map_err(map_err)?;
        }
    }
    wtr.flush().map_err(|e| Error::Report(e.to_string()))?;
    Ok(())
}

pub fn write_dataset_file(dataset: &Dataset, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_dataset(dataset, std::io::BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEAD: &str = "vehicle_id,datetime,vehicle_type,speed,lane_id,kilopost,lat,lon\n";

    fn cfg() -> IngestConfig {
        IngestConfig::default()
    }

    #[test]
    fn converts_kmh_and_flips_kilopost() {
        let csv = format!("{HEAD}a,1000,car,72,1,1500,35.0,139.0\n");
        let mut c = cfg();
        c.speed_unit = SpeedUnit::Kmh;
        c.kilopost_origin = Some(2000.0);
        let ds = read_dataset(csv.as_bytes(), &c).unwrap();
        let p = ds.track("a").unwrap().points[0];
        assert_eq!(p.speed, 20.0);
        assert_eq!(p.x, 500.0);
        assert_eq!(p.t, 0.0);
    }

    #[test]
    fn kilometer_kilopost_and_iso_datetime() {
        let csv = format!(
            "{HEAD}a,2019-03-01T08:00:00.100,car,10,1,1.5,35.0,139.0\n\
             a,2019-03-01 08:00:00.000,car,10,1,1.501,35.0,139.0\n"
        );
        let mut c = cfg();
        c.kilopost_unit = LengthUnit::Km;
        c.datetime_format = DatetimeFormat::Iso;
        let ds = read_dataset(csv.as_bytes(), &c).unwrap();
        let tr = ds.track("a").unwrap();
        assert_eq!(tr.points.len(), 2);
        assert_eq!(tr.points[1].t, 0.1);
        assert_eq!(ds.kilopost_origin, 1501.0);
        assert!((tr.points[1].x - 1.0).abs() < 1e-9);
    }

    #[test]
    fn malformed_row_reports_line() {
        let csv = format!("{HEAD}a,0,car,10,1,100,35,139\na,100,car,fast,1,100,35,139\n");
        match read_dataset(csv.as_bytes(), &cfg()) {
            Err(Error::MalformedRow { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_speed_rejected() {
        let csv = format!("{HEAD}a,0,car,-1,1,100,35,139\n");
        assert!(matches!(
            read_dataset(csv.as_bytes(), &cfg()),
            Err(Error::MalformedRow { line: 2, .. })
        ));
    }

    #[test]
    fn duplicate_sample_rejected() {
        let csv = format!("{HEAD}a,0,car,1,1,100,35,139\na,0,car,1,1,100,35,139\n");
        assert!(matches!(
            read_dataset(csv.as_bytes(), &cfg()),
            Err(Error::DuplicateSample { .. })
        ));
    }

    #[test]
    fn missing_column_rejected() {
        let csv = "vehicle_id,datetime\n";
        assert!(matches!(
            read_dataset(csv.as_bytes(), &cfg()),
            Err(Error::MalformedRow { line: 1, .. })
        ));
    }

    #[test]
    fn short_gaps_filled_long_gaps_recorded() {
        let csv = format!(
            "{HEAD}a,0,car,10,1,100,35,139\n\
             a,400,car,14,1,96,35,139\n\
             a,2000,car,14,1,80,35,139\n"
        );
        let ds = read_dataset(csv.as_bytes(), &cfg()).unwrap();
        let tr = ds.track("a").unwrap();
        assert_eq!(tr.points.len(), 6);
        assert!((tr.points[2].speed - 12.0).abs() < 1e-12);
        assert_eq!(tr.gaps.len(), 1);
        assert_eq!(tr.gaps[0].start, 0.4);
        assert_eq!(tr.gaps[0].end, 2.0);
    }

    #[test]
    fn rows_are_grouped_and_sorted() {
        let csv = format!(
            "{HEAD}b,100,truck,5,2,10,35,139\na,100,car,1,1,10,35,139\nb,0,truck,5,2,10.5,35,139\n"
        );
        let ds = read_dataset(csv.as_bytes(), &cfg()).unwrap();
        assert_eq!(ds.tracks.len(), 2);
        let b = ds.track("b").unwrap();
        assert_eq!(b.vehicle_type, "truck");
        assert_eq!(b.points[0].t, 0.0);
        assert_eq!(b.points[1].t, 0.1);
    }
}
