use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SeaSurfaceProfile;
use crate::autolabel::{LabeledSegment, SurfaceClass};
use crate::geo::NODATA;
use crate::runtime::{self, partition_with_halo, Executor};
use crate::{io, Error, Result};

pub const FREEBOARD_HEADER: [&str; 10] = [
    "index",
    "center_along_track",
    "lat",
    "lon",
    "class",
    "h_s",
    "h_ref",
    "sigma_ref",
    "h_f",
    "negative_flag",
];
pub const HISTOGRAM_HEADER: [&str; 3] = ["bin_left", "bin_right", "count"];

/// Freeboard of one segment: `h_f = h_s - h_ref`. Negative values are kept
/// and flagged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeboardRecord {
    pub index: u64,
    pub center_along_track: f64,
    pub lat: f64,
    pub lon: f64,
    pub class: Option<SurfaceClass>,
    pub h_s: f64,
    pub h_ref: f64,
    pub sigma_ref: f64,
    pub h_f: f64,
    pub negative_flag: bool,
}

fn record(l: &LabeledSegment, h_ref: f64, sigma_sq_ref: f64) -> FreeboardRecord {
    let h_s = l.segment.h_mean;
    let h_f = h_s - h_ref;
    FreeboardRecord {
        index: l.segment.index,
        center_along_track: l.segment.center_along_track,
        lat: l.segment.center_lat,
        lon: l.segment.center_lon,
        class: l.class,
        h_s,
        h_ref,
        sigma_ref: sigma_sq_ref.sqrt(),
        h_f,
        negative_flag: h_f < 0.0,
    }
}

/// Freeboard for every segment, water included.
pub fn compute_freeboard(labeled: &[LabeledSegment], profile: &SeaSurfaceProfile) -> Result<Vec<FreeboardRecord>> {
    compute_freeboard_with(&Executor::sequential(1), labeled, profile)
}

pub fn compute_freeboard_with(
    exec: &Executor,
    labeled: &[LabeledSegment],
    profile: &SeaSurfaceProfile,
) -> Result<Vec<FreeboardRecord>> {
    if profile.h_ref.len() != labeled.len() || profile.sigma_sq_ref.len() != labeled.len() {
        return Err(Error::invalid(format!(
            "profile covers {} segments, track has {}",
            profile.h_ref.len(),
            labeled.len()
        )));
    }
    let idx: Vec<usize> = (0..labeled.len()).collect();
    Ok(exec.map_items(&idx, |&i| record(&labeled[i], profile.h_ref[i], profile.sigma_sq_ref[i])))
}

#[derive(Serialize, Deserialize)]
struct FreeboardRow {
    index: u64,
    center_along_track: f64,
    lat: f64,
    lon: f64,
    class: u8,
    h_s: f64,
    h_ref: f64,
    sigma_ref: f64,
    h_f: f64,
    negative_flag: u8,
}

impl From<&FreeboardRecord> for FreeboardRow {
    fn from(r: &FreeboardRecord) -> Self {
        FreeboardRow {
            index: r.index,
            center_along_track: r.center_along_track,
            lat: r.lat,
            lon: r.lon,
            class: r.class.map_or(NODATA, SurfaceClass::code),
            h_s: r.h_s,
            h_ref: r.h_ref,
            sigma_ref: r.sigma_ref,
            h_f: r.h_f,
            negative_flag: u8::from(r.negative_flag),
        }
    }
}

pub fn freeboard_csv(exec: &Executor, records: &[FreeboardRecord]) -> Result<Vec<u8>> {
    let rows: Vec<FreeboardRow> = exec.map_items(records, |r| FreeboardRow::from(r));
    runtime::csv_chunked(exec, &FREEBOARD_HEADER, &rows)
}

pub fn read_freeboard(path: impl AsRef<Path>) -> Result<Vec<FreeboardRecord>> {
    let text = io::read_to_string(path)?;
    io::check_header(&text, &FREEBOARD_HEADER)?;
    let rows: Vec<FreeboardRow> = io::parse_csv(text.as_bytes(), true)?;
    rows.into_iter()
        .map(|r| {
            let class = match r.class {
                NODATA => None,
                c => Some(SurfaceClass::from_code(c).ok_or_else(|| Error::Parse(format!("bad class code {c}")))?),
            };
            Ok(FreeboardRecord {
                index: r.index,
                center_along_track: r.center_along_track,
                lat: r.lat,
                lon: r.lon,
                class,
                h_s: r.h_s,
                h_ref: r.h_ref,
                sigma_ref: r.sigma_ref,
                h_f: r.h_f,
                negative_flag: r.negative_flag != 0,
            })
        })
        .collect()
}

/// Fixed-width histogram; bin `k` is `[edges[k], edges[k+1])`, the last bin
/// also holds the maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn mode_bin(&self) -> usize {
        let mut best = 0;
        for (i, &c) in self.counts.iter().enumerate() {
            if c > self.counts[best] {
                best = i;
            }
        }
        best
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

struct Binning {
    min: f64,
    width: f64,
    n: usize,
}

impl Binning {
    fn new(values: impl Iterator<Item = f64>, width: f64) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::invalid(format!("bin width {width} must be positive")));
        }
        let (mut min, mut max, mut any) = (f64::INFINITY, f64::NEG_INFINITY, false);
        for v in values {
            if !v.is_finite() {
                return Err(Error::invalid("non-finite freeboard value"));
            }
            min = min.min(v);
            max = max.max(v);
            any = true;
        }
        if !any {
            return Err(Error::invalid("histogram of zero records"));
        }
        let n = (((max - min) / width).ceil() as usize).max(1);
        Ok(Binning { min, width, n })
    }

    fn bin(&self, v: f64) -> usize {
        (((v - self.min) / self.width).floor() as usize).min(self.n - 1)
    }

    fn edges(&self) -> Vec<f64> {
        (0..=self.n).map(|k| self.min + k as f64 * self.width).collect()
    }
}

pub fn freeboard_histogram(records: &[FreeboardRecord], bin_width: f64) -> Result<Histogram> {
    freeboard_histogram_par(&Executor::sequential(1), records, bin_width)
}

/// Histogram whose per-chunk counts are summed (commutative reduce).
pub fn freeboard_histogram_par(exec: &Executor, records: &[FreeboardRecord], bin_width: f64) -> Result<Histogram> {
    let binning = Binning::new(records.iter().map(|r| r.h_f), bin_width)?;
    let plan = partition_with_halo(records.len(), exec.workers(), 0);
    let (counts, _) = runtime::parallel_map_reduce(
        exec,
        &plan,
        records,
        |chunk| {
            let mut counts = vec![0u64; binning.n];
            for r in chunk.core_items() {
                counts[binning.bin(r.h_f)] += 1;
            }
            Ok(counts)
        },
        |parts| {
            let mut total = vec![0u64; binning.n];
            for p in parts {
                for (t, c) in total.iter_mut().zip(p) {
                    *t += c;
                }
            }
            Ok(total)
        },
    )?;
    Ok(Histogram {
        edges: binning.edges(),
        counts,
    })
}

pub fn histogram_csv(h: &Histogram) -> Result<Vec<u8>> {
    let rows: Vec<(f64, f64, u64)> = h
        .counts
        .iter()
        .enumerate()
        .map(|(k, &c)| (h.edges[k], h.edges[k + 1], c))
        .collect();
    io::csv_bytes(&HISTOGRAM_HEADER, &rows, true)
}
