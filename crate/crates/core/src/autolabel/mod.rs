//! Transfer of raster surface classes onto track segments, manual
//! overrides, and the chunk-parallel labeling job.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geo::{project_forward, raster_lookup, GeoPoint, LabelRaster, ShiftVector, StereoParams, NODATA};
use crate::ingest::{Segment, SEGMENT_HEADER};
use crate::runtime::{self, partition_with_halo, Executor, PhaseTimings};
use crate::{io, Error, Result};

/// Surface type of a segment. Raster codes 1, 2, 3 map to the variants in
/// order; the classifier's output index is `code - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SurfaceClass {
    ThickIce,
    ThinIce,
    OpenWater,
}

impl SurfaceClass {
    pub const ALL: [SurfaceClass; 3] = [SurfaceClass::ThickIce, SurfaceClass::ThinIce, SurfaceClass::OpenWater];

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(SurfaceClass::ThickIce),
            2 => Some(SurfaceClass::ThinIce),
            3 => Some(SurfaceClass::OpenWater),
            _ => None,
        }
    }

    pub fn code(self) -> u8 {
        self.index() as u8 + 1
    }

    pub fn index(self) -> usize {
        match self {
            SurfaceClass::ThickIce => 0,
            SurfaceClass::ThinIce => 1,
            SurfaceClass::OpenWater => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            SurfaceClass::ThickIce => "thick ice",
            SurfaceClass::ThinIce => "thin ice",
            SurfaceClass::OpenWater => "open water",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelSource {
    #[serde(rename = "a")]
    Auto,
    #[serde(rename = "m")]
    Manual,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledSegment {
    pub segment: Segment,
    /// `None` where the raster had no data.
    pub class: Option<SurfaceClass>,
    pub source: LabelSource,
}

impl LabeledSegment {
    pub fn class_code(&self) -> u8 {
        self.class.map_or(NODATA, SurfaceClass::code)
    }
}

/// Inclusive range of segment indices forced to one class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OverrideSpan {
    pub start_index: u64,
    pub end_index: u64,
    pub class: SurfaceClass,
}

/// Label one segment by projecting its center and reading the shifted raster.
pub fn label_one(s: &Segment, raster: &LabelRaster, shift: ShiftVector, params: &StereoParams) -> Result<LabeledSegment> {
    let q = project_forward(
        GeoPoint {
            lat: s.center_lat,
            lon: s.center_lon,
        },
        params,
    )?;
    Ok(LabeledSegment {
        segment: *s,
        class: SurfaceClass::from_code(raster_lookup(raster, q, shift)),
        source: LabelSource::Auto,
    })
}

pub fn label_segments(
    segments: &[Segment],
    raster: &LabelRaster,
    shift: ShiftVector,
    params: &StereoParams,
) -> Result<Vec<LabeledSegment>> {
    segments
        .iter()
        .map(|s| label_one(s, raster, shift, params))
        .collect()
}

/// Apply overrides in order; later spans win where they overlap.
pub fn apply_overrides(labeled: &[LabeledSegment], spans: &[OverrideSpan]) -> Result<Vec<LabeledSegment>> {
    let mut out = labeled.to_vec();
    if spans.is_empty() {
        return Ok(out);
    }
    let (first, last) = match (labeled.first(), labeled.last()) {
        (Some(f), Some(l)) => (f.segment.index, l.segment.index),
        _ => return Err(Error::invalid("override spans given for an empty track")),
    };
    for span in spans {
        if span.start_index > span.end_index || span.start_index < first || span.end_index > last {
            return Err(Error::invalid(format!(
                "override [{}, {}] outside segment range [{first}, {last}]",
                span.start_index, span.end_index
            )));
        }
        let lo = out.partition_point(|l| l.segment.index < span.start_index);
        let hi = out.partition_point(|l| l.segment.index <= span.end_index);
        for l in &mut out[lo..hi] {
            l.class = Some(span.class);
            l.source = LabelSource::Manual;
        }
    }
    Ok(out)
}

/// [`label_segments`] as a timed chunked job over `exec`'s workers. The
/// reduce phase formats each chunk's rows as labeled CSV and concatenates
/// them; the bytes are returned with the labels.
pub fn label_parallel(
    exec: &Executor,
    segments: &[Segment],
    raster: &LabelRaster,
    shift: ShiftVector,
    params: &StereoParams,
) -> Result<(Vec<LabeledSegment>, Vec<u8>, PhaseTimings)> {
    let plan = partition_with_halo(segments.len(), exec.workers(), 0);
    let ((labels, csv), timings) = runtime::map_combine_reduce(
        exec,
        &plan,
        segments,
        |chunk| label_segments(chunk.core_items(), raster, shift, params),
        |labels| {
            let bytes = labeled_csv_rows(&labels)?;
            Ok((labels, bytes))
        },
        |parts| {
            let mut labels = Vec::with_capacity(segments.len());
            let mut csv = labeled_csv_header();
            for (l, b) in parts {
                labels.extend(l);
                csv.extend_from_slice(&b);
            }
            Ok((labels, csv))
        },
    )?;
    Ok((labels, csv, timings))
}

// ---------------------------------------------------------------------------
// files

pub const OVERRIDE_HEADER: [&str; 3] = ["start_index", "end_index", "class"];

#[derive(Serialize, Deserialize)]
struct LabeledRow {
    index: u64,
    center_along_track: f64,
    lat: f64,
    lon: f64,
    n_photons: u32,
    h_mean: f64,
    h_median: f64,
    h_std: f64,
    photon_rate: f64,
    bg_rate_mean: f64,
    d_photon_rate: f64,
    d_bg_rate: f64,
    class: u8,
    source: LabelSource,
}

impl From<&LabeledSegment> for LabeledRow {
    fn from(l: &LabeledSegment) -> Self {
        let s = &l.segment;
        LabeledRow {
            index: s.index,
            center_along_track: s.center_along_track,
            lat: s.center_lat,
            lon: s.center_lon,
            n_photons: s.n_photons,
            h_mean: s.h_mean,
            h_median: s.h_median,
            h_std: s.h_std,
            photon_rate: s.photon_rate,
            bg_rate_mean: s.bg_rate_mean,
            d_photon_rate: s.d_photon_rate,
            d_bg_rate: s.d_bg_rate,
            class: l.class_code(),
            source: l.source,
        }
    }
}

impl TryFrom<LabeledRow> for LabeledSegment {
    type Error = Error;

    fn try_from(r: LabeledRow) -> Result<Self> {
        let class = match r.class {
            NODATA => None,
            c => Some(SurfaceClass::from_code(c).ok_or_else(|| Error::Parse(format!("bad class code {c}")))?),
        };
        Ok(LabeledSegment {
            segment: Segment {
                index: r.index,
                center_along_track: r.center_along_track,
                center_lat: r.lat,
                center_lon: r.lon,
                n_photons: r.n_photons,
                h_mean: r.h_mean,
                h_median: r.h_median,
                h_std: r.h_std,
                photon_rate: r.photon_rate,
                bg_rate_mean: r.bg_rate_mean,
                d_photon_rate: r.d_photon_rate,
                d_bg_rate: r.d_bg_rate,
            },
            class,
            source: r.source,
        })
    }
}

pub fn labeled_header() -> Vec<&'static str> {
    let mut h = SEGMENT_HEADER.to_vec();
    h.extend(["class", "source"]);
    h
}

fn labeled_csv_header() -> Vec<u8> {
    let mut line = labeled_header().join(",").into_bytes();
    line.push(b'\n');
    line
}

fn labeled_csv_rows(labeled: &[LabeledSegment]) -> Result<Vec<u8>> {
    let rows: Vec<LabeledRow> = labeled.iter().map(LabeledRow::from).collect();
    io::csv_bytes(&labeled_header(), &rows, false)
}

pub fn labeled_csv(labeled: &[LabeledSegment]) -> Result<Vec<u8>> {
    let mut out = labeled_csv_header();
    out.extend(labeled_csv_rows(labeled)?);
    Ok(out)
}

pub fn write_labeled(path: impl AsRef<Path>, labeled: &[LabeledSegment]) -> Result<()> {
    io::write_atomic(path, &labeled_csv(labeled)?)
}

pub fn parse_labeled(text: &[u8]) -> Result<Vec<LabeledSegment>> {
    io::check_header(&String::from_utf8_lossy(&text[..text.len().min(4096)]), &labeled_header())?;
    let rows: Vec<LabeledRow> = io::parse_csv(text, true)?;
    rows.into_iter().map(LabeledSegment::try_from).collect()
}

pub fn read_labeled(path: impl AsRef<Path>) -> Result<Vec<LabeledSegment>> {
    parse_labeled(&io::read_bytes(path)?)
}

pub fn read_overrides(path: impl AsRef<Path>) -> Result<Vec<OverrideSpan>> {
    let rows: Vec<(u64, u64, u8)> = io::read_csv(path)?;
    rows.into_iter()
        .map(|(start_index, end_index, code)| {
            let class = SurfaceClass::from_code(code)
                .ok_or_else(|| Error::Parse(format!("override class {code} not in 1..=3")))?;
            if start_index > end_index {
                return Err(Error::invalid(format!("override start {start_index} > end {end_index}")));
            }
            Ok(OverrideSpan {
                start_index,
                end_index,
                class,
            })
        })
        .collect()
}
