use std::path::Path;

use serde::{Deserialize, Serialize};

use super::PhotonEvent;
use crate::{io, Error, Result};

pub const DEFAULT_BIN_M: f64 = 2.0;
/// Only high-confidence signal photons are kept by default.
pub const DEFAULT_MIN_CONFIDENCE: u8 = 4;

pub const SEGMENT_HEADER: [&str; 12] = [
    "index",
    "center_along_track",
    "lat",
    "lon",
    "n_photons",
    "h_mean",
    "h_median",
    "h_std",
    "photon_rate",
    "bg_rate_mean",
    "d_photon_rate",
    "d_bg_rate",
];

/// Aggregate statistics of the photons in one along-track bin.
///
/// `index` is the bin ordinal `k` of `[k·bin, (k+1)·bin)`, so a jump of more
/// than one between neighbours marks a gap of empty bins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub index: u64,
    pub center_along_track: f64,
    #[serde(rename = "lat")]
    pub center_lat: f64,
    #[serde(rename = "lon")]
    pub center_lon: f64,
    pub n_photons: u32,
    pub h_mean: f64,
    pub h_median: f64,
    pub h_std: f64,
    pub photon_rate: f64,
    pub bg_rate_mean: f64,
    pub d_photon_rate: f64,
    pub d_bg_rate: f64,
}

/// Resample an along-track-sorted photon list into `bin`-meter segments.
///
/// Photons below `min_confidence` are dropped, empty bins produce no
/// segment, and the rate deltas are taken against the previous emitted
/// segment (zero for the first).
pub fn resample_2m(photons: &[PhotonEvent], bin: f64, min_confidence: u8) -> Result<Vec<Segment>> {
    let mut segments = resample_bins(photons, bin, min_confidence)?;
    apply_deltas(&mut segments, None);
    Ok(segments)
}

/// Per-bin statistics without the delta columns (left at zero).
pub fn resample_bins(photons: &[PhotonEvent], bin: f64, min_confidence: u8) -> Result<Vec<Segment>> {
    if !(bin.is_finite() && bin > 0.0) {
        return Err(Error::invalid(format!("bin width {bin} must be positive")));
    }
    for (i, w) in photons.windows(2).enumerate() {
        if !(w[1].along_track >= w[0].along_track) {
            return Err(Error::invalid(format!(
                "photons not sorted by along_track at position {}",
                i + 1
            )));
        }
    }
    if let Some(p) = photons.first() {
        if !(p.along_track >= 0.0) {
            return Err(Error::invalid("negative along_track distance"));
        }
    }

    let kept: Vec<&PhotonEvent> = photons
        .iter()
        .filter(|p| p.confidence >= min_confidence)
        .collect();

    let mut segments = Vec::new();
    let mut start = 0;
    while start < kept.len() {
        let k = (kept[start].along_track / bin).floor();
        let mut end = start + 1;
        while end < kept.len() && (kept[end].along_track / bin).floor() == k {
            end += 1;
        }
        segments.push(bin_stats(&kept[start..end], k as u64, bin));
        start = end;
    }
    Ok(segments)
}

fn bin_stats(group: &[&PhotonEvent], k: u64, bin: f64) -> Segment {
    let n = group.len();
    let nf = n as f64;
    let h_mean = group.iter().map(|p| p.height).sum::<f64>() / nf;
    let h_std = if n > 1 {
        let ss: f64 = group.iter().map(|p| (p.height - h_mean).powi(2)).sum();
        (ss / (nf - 1.0)).sqrt()
    } else {
        0.0
    };
    let mut heights: Vec<f64> = group.iter().map(|p| p.height).collect();
    heights.sort_by(f64::total_cmp);
    let h_median = if n % 2 == 1 {
        heights[n / 2]
    } else {
        0.5 * (heights[n / 2 - 1] + heights[n / 2])
    };

    // Longitudes are averaged relative to the first photon so that bins
    // straddling the antimeridian do not average to ~0.
    let lon0 = group[0].lon;
    let lon_offset = group
        .iter()
        .map(|p| (p.lon - lon0 + 540.0).rem_euclid(360.0) - 180.0)
        .sum::<f64>()
        / nf;
    let mut center_lon = lon0 + lon_offset;
    if center_lon > 180.0 {
        center_lon -= 360.0;
    } else if center_lon < -180.0 {
        center_lon += 360.0;
    }

    Segment {
        index: k,
        center_along_track: (k as f64 + 0.5) * bin,
        center_lat: group.iter().map(|p| p.lat).sum::<f64>() / nf,
        center_lon,
        n_photons: n as u32,
        h_mean,
        h_median,
        h_std,
        photon_rate: nf / bin,
        bg_rate_mean: group.iter().map(|p| p.background_rate).sum::<f64>() / nf,
        d_photon_rate: 0.0,
        d_bg_rate: 0.0,
    }
}

/// Fill the delta columns; `previous` is the segment emitted just before
/// `segments[0]`, if any (a chunk's halo).
pub fn apply_deltas(segments: &mut [Segment], previous: Option<&Segment>) {
    let mut prev = previous.copied();
    for s in segments.iter_mut() {
        match prev {
            Some(p) => {
                s.d_photon_rate = s.photon_rate - p.photon_rate;
                s.d_bg_rate = s.bg_rate_mean - p.bg_rate_mean;
            }
            None => {
                s.d_photon_rate = 0.0;
                s.d_bg_rate = 0.0;
            }
        }
        prev = Some(*s);
    }
}

pub fn segments_csv(segments: &[Segment]) -> Result<Vec<u8>> {
    io::csv_bytes(&SEGMENT_HEADER, segments, true)
}

pub fn write_segments(path: impl AsRef<Path>, segments: &[Segment]) -> Result<()> {
    io::write_csv(path, &SEGMENT_HEADER, segments)
}

pub fn read_segments(path: impl AsRef<Path>) -> Result<Vec<Segment>> {
    let text = io::read_to_string(path)?;
    io::check_header(&text, &SEGMENT_HEADER)?;
    let segments: Vec<Segment> = io::parse_csv(text.as_bytes(), true)?;
    for w in segments.windows(2) {
        if w[1].index <= w[0].index {
            return Err(Error::invalid(format!(
                "segments out of order at index {}",
                w[1].index
            )));
        }
    }
    Ok(segments)
}
