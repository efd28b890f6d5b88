use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use super::{apply_deltas, PhotonEvent, Segment, DEFAULT_BIN_M};
use crate::autolabel::SurfaceClass;
use crate::geo::{project_inverse, LabelRaster, ProjectedPoint, StereoParams, NODATA};
use crate::{io, Error, Result};

pub const TRUTH_HEADER: [&str; 3] = ["index", "class", "freeboard"];

/// Mean along-track ground speed used to synthesize photon timestamps.
const GROUND_SPEED_M_S: f64 = 6_900.0;
/// Relative scatter of the per-photon background rate.
const BACKGROUND_JITTER: f64 = 0.05;

/// Photon-return regime of one surface class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassRegime {
    /// Multiplier on the track's base photon density.
    pub density_factor: f64,
    /// Mean background photon rate, Hz.
    pub background_rate: f64,
}

impl ClassRegime {
    pub const fn of(class: SurfaceClass) -> ClassRegime {
        match class {
            SurfaceClass::ThickIce => ClassRegime {
                density_factor: 1.0,
                background_rate: 2.0e6,
            },
            SurfaceClass::ThinIce => ClassRegime {
                density_factor: 0.7,
                background_rate: 1.0e6,
            },
            SurfaceClass::OpenWater => ClassRegime {
                density_factor: 1.3,
                background_rate: 0.3e6,
            },
        }
    }
}

/// A homogeneous stretch `[start, end)` of the synthetic track.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSpan {
    #[serde(rename = "start_m")]
    pub start: f64,
    #[serde(rename = "end_m")]
    pub end: f64,
    #[serde(with = "class_code")]
    pub class: SurfaceClass,
    #[serde(rename = "freeboard_m")]
    pub freeboard: f64,
}

mod class_code {
    use super::SurfaceClass;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(c: &SurfaceClass, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(c.code())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<SurfaceClass, D::Error> {
        let code = u8::deserialize(d)?;
        SurfaceClass::from_code(code).ok_or_else(|| D::Error::custom(format!("bad class code {code}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTrackSpec {
    pub length: f64,
    pub spans: Vec<SurfaceSpan>,
    /// Base signal photons per meter (scaled per class by [`ClassRegime`]).
    pub photon_density: f64,
    pub noise_sigma: f64,
    /// Sea-level slope along track, meters per kilometer.
    pub sea_level_trend: f64,
    /// Extra low-confidence background photons, as a fraction of signal.
    pub noise_photon_fraction: f64,
    /// Projected position of along-track distance 0.
    pub start: ProjectedPoint,
    /// Track azimuth on the projected plane, degrees clockwise from +y.
    pub heading_deg: f64,
    pub seed: u64,
}

impl SyntheticTrackSpec {
    /// A spec with sensible defaults over the given spans.
    pub fn with_spans(spans: Vec<SurfaceSpan>, seed: u64) -> Self {
        let length = spans.last().map_or(0.0, |s| s.end);
        SyntheticTrackSpec {
            length,
            spans,
            photon_density: 25.0,
            noise_sigma: 0.1,
            sea_level_trend: 0.0,
            noise_photon_fraction: 0.02,
            // roughly 75°S 170°W, inside the Ross Sea
            start: ProjectedPoint::new(-285_000.0, -1_620_000.0),
            heading_deg: 90.0,
            seed,
        }
    }

    /// Random ice/lead mosaic: thick-ice floes, thin-ice patches and leads
    /// with class-typical widths and freeboards.
    pub fn random_mosaic(length: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5eed);
        let mut spans = Vec::new();
        let mut at = 0.0;
        while at < length {
            let roll: f64 = rng.random();
            let (class, width, freeboard) = if roll < 0.55 {
                (SurfaceClass::ThickIce, rng.random_range(150.0..1500.0), rng.random_range(0.25..0.6))
            } else if roll < 0.8 {
                (SurfaceClass::ThinIce, rng.random_range(60.0..500.0), rng.random_range(0.08..0.15))
            } else {
                (SurfaceClass::OpenWater, rng.random_range(40.0..400.0), 0.0)
            };
            // snap to the 2 m grid so span edges never split a bin
            let end = ((at + width) / DEFAULT_BIN_M).round() * DEFAULT_BIN_M;
            let end = end.min(length).max(at + DEFAULT_BIN_M);
            spans.push(SurfaceSpan {
                start: at,
                end,
                class,
                freeboard,
            });
            at = end;
        }
        if let Some(last) = spans.last_mut() {
            last.end = length;
        }
        Self::with_spans(spans, seed)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(Error::invalid("track length must be positive"));
        }
        if !(self.photon_density.is_finite() && self.photon_density > 0.0) {
            return Err(Error::invalid("photon density must be positive"));
        }
        if !(self.noise_sigma >= 0.0) || !(self.noise_photon_fraction >= 0.0) {
            return Err(Error::invalid("noise parameters must be non-negative"));
        }
        if !self.sea_level_trend.is_finite() {
            return Err(Error::invalid("sea level trend must be finite"));
        }
        let mut expected_start = 0.0;
        for span in &self.spans {
            if span.start != expected_start || !(span.end > span.start) {
                return Err(Error::invalid(format!(
                    "spans must partition [0, length): span [{}, {}) after {}",
                    span.start, span.end, expected_start
                )));
            }
            match span.class {
                SurfaceClass::OpenWater if span.freeboard != 0.0 => {
                    return Err(Error::invalid("open-water span with nonzero freeboard"));
                }
                _ if !(span.freeboard >= 0.0) => {
                    return Err(Error::invalid("negative span freeboard"));
                }
                _ => {}
            }
            expected_start = span.end;
        }
        if expected_start != self.length {
            return Err(Error::invalid(format!(
                "spans end at {expected_start}, track length is {}",
                self.length
            )));
        }
        Ok(())
    }

    pub fn read_spans(path: impl AsRef<Path>) -> Result<Vec<SurfaceSpan>> {
        io::read_csv(path)
    }

    pub fn write_spans(&self, path: impl AsRef<Path>) -> Result<()> {
        io::write_csv(path, &["start_m", "end_m", "class", "freeboard_m"], &self.spans)
    }

    /// Number of 2 m bins covering the track.
    pub fn n_bins(&self) -> usize {
        (self.length / DEFAULT_BIN_M).ceil() as usize
    }

    /// Class of the span containing the center of bin `k`.
    fn span_at(&self, k: usize) -> &SurfaceSpan {
        let center = (k as f64 + 0.5) * DEFAULT_BIN_M;
        let i = self.spans.partition_point(|s| s.end <= center);
        &self.spans[i.min(self.spans.len() - 1)]
    }

    /// A 2 m label raster that reproduces the spec's classes along the
    /// track, three cells wide across it. Only axis-aligned headings are
    /// supported.
    pub fn truth_raster(&self) -> Result<LabelRaster> {
        self.validate()?;
        let (sin_h, cos_h) = match self.heading_deg.rem_euclid(360.0) {
            h if h == 0.0 => (0.0, 1.0),
            h if h == 90.0 => (1.0, 0.0),
            h if h == 180.0 => (0.0, -1.0),
            h if h == 270.0 => (-1.0, 0.0),
            h => {
                return Err(Error::OutOfScope(format!(
                    "truth raster needs an axis-aligned heading, got {h} degrees"
                )))
            }
        };
        let cell = DEFAULT_BIN_M;
        let n = self.n_bins();
        let len = n as f64 * cell;
        let (x0, y0) = (self.start.x, self.start.y);
        let (x1, y1) = (x0 + len * sin_h, y0 + len * cos_h);
        let pad = 1.5 * cell;
        let (xll, ncols) = if sin_h == 0.0 { (x0 - pad, 3) } else { (x0.min(x1), n) };
        let (yll, nrows) = if cos_h == 0.0 { (y0 - pad, 3) } else { (y0.min(y1), n) };
        let mut cells = vec![NODATA; ncols * nrows];
        for r in 0..nrows {
            let cy = yll + ((nrows - 1 - r) as f64 + 0.5) * cell;
            for c in 0..ncols {
                let cx = xll + (c as f64 + 0.5) * cell;
                let along = (cx - x0) * sin_h + (cy - y0) * cos_h;
                let k = (along / cell).floor();
                if k >= 0.0 && (k as usize) < n {
                    cells[r * ncols + c] = self.span_at(k as usize).class.code();
                }
            }
        }
        LabelRaster::new(ncols, nrows, xll, yll, cell, cells)
    }

    fn sea_level(&self, along: f64) -> f64 {
        self.sea_level_trend * along / 1000.0
    }
}

/// Generated photons plus per-bin ground truth (bin `k` covers
/// `[2k, 2k + 2)` meters).
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTrack {
    pub photons: Vec<PhotonEvent>,
    pub classes: Vec<SurfaceClass>,
    pub freeboards: Vec<f64>,
    pub sea_levels: Vec<f64>,
}

#[derive(Serialize)]
struct TruthRow {
    index: usize,
    class: u8,
    freeboard: f64,
}

impl SyntheticTrack {
    pub fn truth_csv(&self) -> Result<Vec<u8>> {
        let rows: Vec<TruthRow> = self
            .classes
            .iter()
            .zip(&self.freeboards)
            .enumerate()
            .map(|(index, (c, &freeboard))| TruthRow {
                index,
                class: c.code(),
                freeboard,
            })
            .collect();
        io::csv_bytes(&TRUTH_HEADER, &rows, true)
    }
}

/// Draw a photon track from `spec`. Identical specs yield bit-identical
/// output.
pub fn synthesize_track(spec: &SyntheticTrackSpec) -> Result<SyntheticTrack> {
    spec.validate()?;
    let params = StereoParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let height_noise = Normal::new(0.0, spec.noise_sigma.max(0.0))
        .map_err(|e| Error::invalid(e.to_string()))?;
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let (sin_h, cos_h) = spec.heading_deg.to_radians().sin_cos();

    let n_bins = spec.n_bins();
    let mut classes = Vec::with_capacity(n_bins);
    let mut freeboards = Vec::with_capacity(n_bins);
    let mut sea_levels = Vec::with_capacity(n_bins);
    let mut photons = Vec::new();
    let mut span_idx = 0;

    for k in 0..n_bins {
        let lo = k as f64 * DEFAULT_BIN_M;
        let hi = (lo + DEFAULT_BIN_M).min(spec.length);
        let center = 0.5 * (lo + hi);
        while spec.spans[span_idx].end <= center {
            span_idx += 1;
        }
        let span = spec.spans[span_idx];
        classes.push(span.class);
        freeboards.push(span.freeboard);
        sea_levels.push(spec.sea_level(center));

        let regime = ClassRegime::of(span.class);
        let expected = spec.photon_density * regime.density_factor * (hi - lo);
        let n_signal = draw_count(&mut rng, expected);
        let n_noise = draw_count(&mut rng, expected * spec.noise_photon_fraction);

        let mut bin_photons: Vec<(f64, f64, u8, f64)> = Vec::with_capacity(n_signal + n_noise);
        for _ in 0..n_signal {
            let at = rng.random_range(lo..hi);
            let h = spec.sea_level(at) + span.freeboard + height_noise.sample(&mut rng);
            let bg = regime.background_rate * (1.0 + BACKGROUND_JITTER * unit.sample(&mut rng));
            bin_photons.push((at, h, 4, bg.max(0.0)));
        }
        for _ in 0..n_noise {
            let at = rng.random_range(lo..hi);
            let h = spec.sea_level(at) + rng.random_range(-5.0..15.0);
            let conf = rng.random_range(0..=2u8);
            let bg = regime.background_rate * (1.0 + BACKGROUND_JITTER * unit.sample(&mut rng));
            bin_photons.push((at, h, conf, bg.max(0.0)));
        }
        bin_photons.sort_by(|a, b| a.0.total_cmp(&b.0));

        for (at, height, confidence, background_rate) in bin_photons {
            let q = ProjectedPoint::new(spec.start.x + at * sin_h, spec.start.y + at * cos_h);
            let geo = project_inverse(q, &params)?;
            photons.push(PhotonEvent {
                delta_time: at / GROUND_SPEED_M_S,
                lat: geo.lat,
                lon: geo.lon,
                along_track: at,
                height,
                confidence,
                background_rate,
            });
        }
    }

    Ok(SyntheticTrack {
        photons,
        classes,
        freeboards,
        sea_levels,
    })
}

/// Segment-level stand-in for [`synthesize_track`]: draws each 2 m
/// segment's statistics directly instead of simulating photons. Used for
/// large throughput runs. Returns the segments and their true classes.
pub fn synthesize_segments(spec: &SyntheticTrackSpec) -> Result<(Vec<Segment>, Vec<SurfaceClass>)> {
    spec.validate()?;
    let params = StereoParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let (sin_h, cos_h) = spec.heading_deg.to_radians().sin_cos();
    let n = spec.n_bins();
    let mut segments = Vec::with_capacity(n);
    let mut classes = Vec::with_capacity(n);
    for k in 0..n {
        let span = *spec.span_at(k);
        let regime = ClassRegime::of(span.class);
        let count = draw_count(&mut rng, spec.photon_density * regime.density_factor * DEFAULT_BIN_M);
        if count == 0 {
            continue;
        }
        let along = (k as f64 + 0.5) * DEFAULT_BIN_M;
        let q = ProjectedPoint::new(spec.start.x + along * sin_h, spec.start.y + along * cos_h);
        let geo = project_inverse(q, &params)?;
        let nf = count as f64;
        let h_mean = spec.sea_level(along) + span.freeboard + spec.noise_sigma / nf.sqrt() * unit.sample(&mut rng);
        let h_std = if count > 1 {
            spec.noise_sigma * (1.0 + unit.sample(&mut rng) / (2.0 * (nf - 1.0)).sqrt()).abs()
        } else {
            0.0
        };
        let bg = regime.background_rate * (1.0 + BACKGROUND_JITTER / nf.sqrt() * unit.sample(&mut rng));
        segments.push(Segment {
            index: k as u64,
            center_along_track: along,
            center_lat: geo.lat,
            center_lon: geo.lon,
            n_photons: count as u32,
            h_mean,
            h_median: h_mean,
            h_std,
            photon_rate: nf / DEFAULT_BIN_M,
            bg_rate_mean: bg.max(0.0),
            d_photon_rate: 0.0,
            d_bg_rate: 0.0,
        });
        classes.push(span.class);
    }
    apply_deltas(&mut segments, None);
    Ok((segments, classes))
}

fn draw_count(rng: &mut ChaCha8Rng, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map_or(0, |p| p.sample(rng) as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn span(start: f64, end: f64, class: SurfaceClass, freeboard: f64) -> SurfaceSpan {
        SurfaceSpan {
            start,
            end,
            class,
            freeboard,
        }
    }

    #[test]
    fn all_water_track() {
        let spec = SyntheticTrackSpec::with_spans(vec![span(0.0, 500.0, SurfaceClass::OpenWater, 0.0)], 3);
        let t = synthesize_track(&spec).unwrap();
        assert_eq!(t.classes.len(), 250);
        assert!(t.classes.iter().all(|&c| c == SurfaceClass::OpenWater));
        assert!(t.freeboards.iter().all(|&f| f == 0.0));
    }

    #[test]
    fn noiseless_ice_sits_at_freeboard() {
        let mut spec = SyntheticTrackSpec::with_spans(
            vec![
                span(0.0, 100.0, SurfaceClass::OpenWater, 0.0),
                span(100.0, 400.0, SurfaceClass::ThickIce, 0.3),
            ],
            5,
        );
        spec.noise_sigma = 0.0;
        let t = synthesize_track(&spec).unwrap();
        let ice: Vec<_> = t
            .photons
            .iter()
            .filter(|p| p.confidence == 4 && p.along_track >= 100.0)
            .collect();
        assert!(!ice.is_empty());
        assert!(ice.iter().all(|p| p.height == 0.3));
    }

    #[test]
    fn same_seed_same_photons() {
        let spec = SyntheticTrackSpec::random_mosaic(3_000.0, 9);
        let a = synthesize_track(&spec).unwrap();
        let b = synthesize_track(&spec).unwrap();
        assert_eq!(a, b);
        let bits = |t: &SyntheticTrack| -> Vec<u64> {
            t.photons.iter().flat_map(|p| [p.height.to_bits(), p.lat.to_bits()]).collect()
        };
        assert_eq!(bits(&a), bits(&b));
        let other = synthesize_track(&SyntheticTrackSpec { seed: 10, ..spec }).unwrap();
        assert_ne!(a.photons, other.photons);
    }

    #[test]
    fn photons_sorted_and_in_southern_ocean() {
        let t = synthesize_track(&SyntheticTrackSpec::random_mosaic(2_000.0, 1)).unwrap();
        assert!(t.photons.windows(2).all(|w| w[0].along_track <= w[1].along_track));
        assert!(t.photons.iter().all(|p| p.lat < -60.0 && p.lat > -85.0));
    }

    #[test]
    fn mosaic_partitions_track() {
        let spec = SyntheticTrackSpec::random_mosaic(25_001.0, 4);
        spec.validate().unwrap();
        assert_eq!(spec.spans.last().unwrap().end, 25_001.0);
    }

    #[test]
    fn rejects_bad_partition() {
        let spec = SyntheticTrackSpec::with_spans(
            vec![
                span(0.0, 10.0, SurfaceClass::ThickIce, 0.3),
                span(12.0, 20.0, SurfaceClass::ThickIce, 0.3),
            ],
            1,
        );
        assert!(synthesize_track(&spec).is_err());
        let water = SyntheticTrackSpec::with_spans(vec![span(0.0, 10.0, SurfaceClass::OpenWater, 0.1)], 1);
        assert!(water.validate().is_err());
    }

    #[test]
    fn truth_raster_labels_every_bin() {
        use crate::autolabel::label_segments;
        use crate::geo::ShiftVector;
        use crate::ingest::resample_2m;
        let spec = SyntheticTrackSpec::random_mosaic(3_000.0, 4);
        let track = synthesize_track(&spec).unwrap();
        let raster = spec.truth_raster().unwrap();
        let segs = resample_2m(&track.photons, 2.0, 4).unwrap();
        let labeled = label_segments(&segs, &raster, ShiftVector::ZERO, &StereoParams::default()).unwrap();
        for l in &labeled {
            assert_eq!(l.class, Some(track.classes[l.segment.index as usize]));
        }
    }

    #[test]
    fn truth_raster_other_headings() {
        for heading in [0.0, 180.0, 270.0] {
            let mut spec = SyntheticTrackSpec::random_mosaic(600.0, 1);
            spec.heading_deg = heading;
            let r = spec.truth_raster().unwrap();
            assert_eq!(r.cells().iter().filter(|&&c| c != 0).count(), 3 * 300);
        }
        let mut spec = SyntheticTrackSpec::random_mosaic(600.0, 1);
        spec.heading_deg = 45.0;
        assert!(matches!(spec.truth_raster(), Err(Error::OutOfScope(_))));
    }

    #[test]
    fn segment_generator_is_deterministic() {
        let spec = SyntheticTrackSpec::random_mosaic(2_000.0, 8);
        let (a, ca) = synthesize_segments(&spec).unwrap();
        let (b, _) = synthesize_segments(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), ca.len());
        assert!(a.windows(2).all(|w| w[0].index < w[1].index));
    }
}
