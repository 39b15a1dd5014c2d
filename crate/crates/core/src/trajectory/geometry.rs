//! Driving-lane centerline and signed lateral offsets.

use serde::{Deserialize, Serialize};

use super::types::{Dataset, VehicleTrack};
use crate::config::Side;
use crate::error::{Error, Result};

const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// Equirectangular projection of lat/lon to local east/north meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalProjection {
    pub lat0: f64,
    pub lon0: f64,
    meters_per_deg_lat: f64,
    meters_per_deg_lon: f64,
}

impl LocalProjection {
    pub fn new(lat0: f64, lon0: f64) -> Self {
        let meters_per_deg_lat = EARTH_RADIUS_M.to_radians();
        LocalProjection {
            lat0,
            lon0,
            meters_per_deg_lat,
            meters_per_deg_lon: meters_per_deg_lat * lat0.to_radians().cos(),
        }
    }

    /// Anchored at the dataset centroid.
    pub fn for_dataset(dataset: &Dataset) -> Self {
        let (lat, lon) = dataset.centroid().unwrap_or((0.0, 0.0));
        LocalProjection::new(lat, lon)
    }

    pub fn project(&self, lat: f64, lon: f64) -> (f64, f64) {
        self.delta(self.lat0, self.lon0, lat, lon)
    }

    /// East/north displacement (m) from `(lat_a, lon_a)` to `(lat_b, lon_b)`.
    pub fn delta(&self, lat_a: f64, lon_a: f64, lat_b: f64, lon_b: f64) -> (f64, f64) {
        (
            (lon_b - lon_a) * self.meters_per_deg_lon,
            (lat_b - lat_a) * self.meters_per_deg_lat,
        )
    }

    /// Inverse of [`LocalProjection::project`].
    pub fn unproject(&self, east: f64, north: f64) -> (f64, f64) {
        (
            self.lat0 + north / self.meters_per_deg_lat,
            self.lon0 + east / self.meters_per_deg_lon,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CenterlineSample {
    pub x: f64,
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneCenterline {
    pub lane_id: i32,
    pub samples: Vec<CenterlineSample>,
    pub bin_width: f64,
}

/// Average lat/lon of lane-keeping vehicles per x-bin.
///
/// Sample `x` is the bin center. Empty bins between populated ones are
/// filled by linear interpolation in bin index.
pub fn build_centerline(dataset: &Dataset, lane_id: i32, bin_width: f64) -> Result<LaneCenterline> {
    if !(bin_width > 0.0) {
        return Err(Error::config("centerline_bin", "must be positive"));
    }
    let keepers: Vec<&VehicleTrack> = dataset
        .tracks
        .values()
        .filter(|t| !t.is_empty() && t.keeps_lane() && t.points[0].lane_id == lane_id)
        .collect();
    if keepers.is_empty() {
        return Err(Error::NoLaneKeepers { lane_id });
    }

    let bin_of = |x: f64| (x / bin_width).floor() as i64;
    let (mut lo, mut hi) = (i64::MAX, i64::MIN);
    for p in keepers.iter().flat_map(|t| &t.points) {
        let b = bin_of(p.x);
        lo = lo.min(b);
        hi = hi.max(b);
    }
    let nbins = (hi - lo + 1) as usize;
    let mut sums = vec![(0.0f64, 0.0f64, 0usize); nbins];
    for p in keepers.iter().flat_map(|t| &t.points) {
        let slot = &mut sums[(bin_of(p.x) - lo) as usize];
        slot.0 += p.lat;
        slot.1 += p.lon;
        slot.2 += 1;
    }
    let mut values: Vec<Option<(f64, f64)>> = sums
        .iter()
        .map(|&(la, lo, n)| (n > 0).then(|| (la / n as f64, lo / n as f64)))
        .collect();

    let filled: Vec<usize> = (0..nbins).filter(|&i| values[i].is_some()).collect();
    for pair in filled.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let (va, vb) = (values[a].unwrap(), values[b].unwrap());
        for i in a + 1..b {
            let w = (i - a) as f64 / (b - a) as f64;
            values[i] = Some((va.0 + (vb.0 - va.0) * w, va.1 + (vb.1 - va.1) * w));
        }
    }

    let samples: Vec<CenterlineSample> = values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| {
            v.map(|(lat, lon)| CenterlineSample {
                x: (lo + i as i64) as f64 * bin_width + bin_width / 2.0,
                lat,
                lon,
            })
        })
        .collect();
    if samples.len() < 2 {
        return Err(Error::DegenerateCenterline(format!(
            "lane {lane_id} spans a single {bin_width} m bin"
        )));
    }
    Ok(LaneCenterline {
        lane_id,
        samples,
        bin_width,
    })
}

/// Centerline prepared for repeated offset queries.
#[derive(Debug, Clone)]
pub struct CenterlineGeometry<'a> {
    centerline: &'a LaneCenterline,
    projection: LocalProjection,
    /// Unit direction of travel per segment, in local meters.
    directions: Vec<(f64, f64)>,
    /// +1 when the passing lane is on the left of travel, -1 when on the right.
    sign: f64,
}

impl<'a> CenterlineGeometry<'a> {
    pub fn new(
        centerline: &'a LaneCenterline,
        projection: LocalProjection,
        passing_side: Side,
    ) -> Result<Self> {
        if centerline.samples.len() < 2 {
            return Err(Error::DegenerateCenterline("fewer than two samples".into()));
        }
        let mut directions = Vec::with_capacity(centerline.samples.len() - 1);
        for w in centerline.samples.windows(2) {
            let (e, n) = projection.delta(w[0].lat, w[0].lon, w[1].lat, w[1].lon);
            let len = e.hypot(n);
            if !(len > 1e-9) || !(w[1].x > w[0].x) {
                return Err(Error::DegenerateCenterline(format!(
                    "coincident samples at x = {}",
                    w[0].x
                )));
            }
            directions.push((e / len, n / len));
        }
        Ok(CenterlineGeometry {
            centerline,
            projection,
            directions,
            sign: match passing_side {
                Side::Left => 1.0,
                Side::Right => -1.0,
            },
        })
    }

    /// Signed perpendicular distance of `(lat, lon)` from the centerline
    /// segment bracketing `x`. End segments are extended linearly.
    pub fn offset(&self, x: f64, lat: f64, lon: f64) -> f64 {
        let s = &self.centerline.samples;
        let seg = s
            .partition_point(|c| c.x <= x)
            .saturating_sub(1)
            .min(s.len() - 2);
        let anchor = &s[seg];
        let (de, dn) = self.directions[seg];
        let (ve, vn) = self.projection.delta(anchor.lat, anchor.lon, lat, lon);
        // cross > 0 when the point lies left of the travel direction
        let cross = de * vn - dn * ve;
        self.sign * cross
    }
}

/// Fill `lateral` for every sample of `track`.
pub fn lateral_offsets(
    track: &VehicleTrack,
    centerline: &LaneCenterline,
    projection: LocalProjection,
    passing_side: Side,
) -> Result<VehicleTrack> {
    let geom = CenterlineGeometry::new(centerline, projection, passing_side)?;
    let mut out = track.clone();
    for p in &mut out.points {
        p.lateral = Some(geom.offset(p.x, p.lat, p.lon));
    }
    Ok(out)
}
