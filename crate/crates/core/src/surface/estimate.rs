use std::fmt;
use std::str::FromStr;

use crate::autolabel::{LabeledSegment, SurfaceClass};
use crate::{Error, Result};

/// Floor on per-sample error variance, meters².
pub const MIN_SIGMA_SQ: f64 = 1e-12;

/// One 2 m open-water sample of a lead.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeadSample {
    pub h: f64,
    pub sigma_sq: f64,
    pub along_track: f64,
}

impl LeadSample {
    /// Height is the segment mean; its error variance is the squared
    /// standard error of that mean, floored at [`MIN_SIGMA_SQ`].
    pub fn from_labeled(l: &LabeledSegment) -> Self {
        let s = &l.segment;
        LeadSample {
            h: s.h_mean,
            sigma_sq: (s.h_std * s.h_std / f64::from(s.n_photons.max(1))).max(MIN_SIGMA_SQ),
            along_track: s.center_along_track,
        }
    }
}

/// A maximal run of contiguous open-water segments.
#[derive(Debug, Clone, PartialEq)]
pub struct Lead {
    pub start_index: u64,
    pub end_index: u64,
    pub samples: Vec<LeadSample>,
    pub h_min: f64,
    pub h_lead: f64,
    pub sigma_sq_lead: f64,
}

impl Lead {
    pub fn from_samples(start_index: u64, end_index: u64, samples: Vec<LeadSample>) -> Result<Self> {
        let (h_lead, sigma_sq_lead) = lead_height(&samples)?;
        let h_min = samples.iter().map(|s| s.h).fold(f64::INFINITY, f64::min);
        Ok(Lead {
            start_index,
            end_index,
            samples,
            h_min,
            h_lead,
            sigma_sq_lead,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Along-track midpoint between the first and last sample centers.
    pub fn midpoint(&self) -> f64 {
        let first = self.samples.first().map_or(0.0, |s| s.along_track);
        let last = self.samples.last().map_or(0.0, |s| s.along_track);
        0.5 * (first + last)
    }
}

/// A run under construction; chunk-local runs are merged across chunk edges.
#[derive(Debug, Clone)]
pub(crate) struct Run {
    pub start_index: u64,
    pub end_index: u64,
    pub samples: Vec<LeadSample>,
}

pub(crate) fn is_water(l: &LabeledSegment) -> bool {
    l.class == Some(SurfaceClass::OpenWater)
}

/// Open-water runs of `labeled`; a run breaks at any non-water segment or at
/// a gap in the segment indices.
pub(crate) fn scan_runs(labeled: &[LabeledSegment]) -> Vec<Run> {
    let mut runs: Vec<Run> = Vec::new();
    let mut open = false;
    for l in labeled {
        if !is_water(l) {
            open = false;
            continue;
        }
        let idx = l.segment.index;
        let sample = LeadSample::from_labeled(l);
        match runs.last_mut() {
            Some(run) if open && run.end_index + 1 == idx => {
                run.end_index = idx;
                run.samples.push(sample);
            }
            _ => runs.push(Run {
                start_index: idx,
                end_index: idx,
                samples: vec![sample],
            }),
        }
        open = true;
    }
    runs
}

/// Join per-chunk run lists (in chunk order). A run ending on a chunk's last
/// segment continues into the next chunk's first run when indices are
/// contiguous and that run starts on the chunk's first segment.
pub(crate) fn merge_runs(chunks: Vec<(Vec<Run>, Option<u64>, Option<u64>)>) -> Vec<Run> {
    let mut out: Vec<Run> = Vec::new();
    let mut prev_last_index: Option<u64> = None;
    for (runs, first_index, last_index) in chunks {
        let mut iter = runs.into_iter();
        if let Some(first) = iter.next() {
            let joins = match (out.last(), prev_last_index, first_index) {
                (Some(tail), Some(prev_last), Some(chunk_first)) => {
                    tail.end_index == prev_last
                        && first.start_index == chunk_first
                        && tail.end_index + 1 == first.start_index
                }
                _ => false,
            };
            if joins {
                let tail = out.last_mut().expect("checked");
                tail.end_index = first.end_index;
                tail.samples.extend(first.samples);
            } else {
                out.push(first);
            }
            out.extend(iter);
        }
        if last_index.is_some() {
            prev_last_index = last_index;
        }
    }
    out
}

pub(crate) fn runs_to_leads(runs: Vec<Run>, min_length: usize) -> Result<Vec<Lead>> {
    runs.into_iter()
        .filter(|r| r.samples.len() >= min_length.max(1))
        .map(|r| Lead::from_samples(r.start_index, r.end_index, r.samples))
        .collect()
}

/// Maximal runs of at least `min_length` contiguous open-water segments.
pub fn extract_leads(labeled: &[LabeledSegment], min_length: usize) -> Vec<Lead> {
    runs_to_leads(scan_runs(labeled), min_length).expect("scanned runs are never empty")
}

/// Weighted lead height and its error variance.
///
/// `w_i = exp(-((h_i - h_min) / σ_i)²)`, `α_i = w_i / Σw`,
/// `ĥ = Σ α_i h_i`, `σ̂² = Σ α_i² σ_i²`.
pub fn lead_height(samples: &[LeadSample]) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::invalid("lead has no samples"));
    }
    let h_min = samples.iter().map(|s| s.h).fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = samples
        .iter()
        .map(|s| {
            let z = (s.h - h_min) / s.sigma_sq.max(MIN_SIGMA_SQ).sqrt();
            (-(z * z)).exp()
        })
        .collect();
    let total: f64 = weights.iter().sum();
    let mut h = 0.0;
    let mut var = 0.0;
    for (s, w) in samples.iter().zip(&weights) {
        let alpha = w / total;
        h += alpha * s.h;
        var += alpha * alpha * s.sigma_sq.max(MIN_SIGMA_SQ);
    }
    // Weights summing to 1 +- ulp can push the mean just outside the samples.
    let h_max = samples.iter().map(|s| s.h).fold(f64::NEG_INFINITY, f64::max);
    Ok((h.clamp(h_min, h_max), var))
}

/// How a window's reference height is derived from its leads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SurfaceMethod {
    /// Inverse-variance combination of weighted lead heights.
    #[default]
    NasaWeighted,
    /// Lowest open-water sample in the window.
    MinElev,
    /// Mean of all open-water samples in the window.
    AvgElev,
    /// Lowest sample of the lead closest to the window center.
    NearestMinElev,
}

impl SurfaceMethod {
    pub const ALL: [SurfaceMethod; 4] = [
        SurfaceMethod::NasaWeighted,
        SurfaceMethod::MinElev,
        SurfaceMethod::AvgElev,
        SurfaceMethod::NearestMinElev,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SurfaceMethod::NasaWeighted => "nasa",
            SurfaceMethod::MinElev => "min",
            SurfaceMethod::AvgElev => "avg",
            SurfaceMethod::NearestMinElev => "nearest-min",
        }
    }
}

impl fmt::Display for SurfaceMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SurfaceMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SurfaceMethod::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Parse(format!("unknown surface method '{s}' (nasa, min, avg, nearest-min)")))
    }
}

/// Reference height and error variance of one window from its leads.
///
/// For the sample-based methods the variance is that of the chosen sample
/// (minimum methods) or of the sample mean (average).
pub fn window_reference(leads: &[&Lead], method: SurfaceMethod, center: f64) -> Result<(f64, f64)> {
    if leads.is_empty() {
        return Err(Error::NoReference(format!("window at {center} m has no leads")));
    }
    let lowest = |samples: &mut dyn Iterator<Item = &LeadSample>| -> (f64, f64) {
        let mut best = (f64::INFINITY, 0.0);
        for s in samples {
            if s.h < best.0 {
                best = (s.h, s.sigma_sq);
            }
        }
        best
    };
    Ok(match method {
        SurfaceMethod::NasaWeighted => {
            let inv_total: f64 = leads.iter().map(|l| 1.0 / l.sigma_sq_lead).sum();
            let mut h = 0.0;
            let mut var = 0.0;
            for l in leads {
                let alpha = (1.0 / l.sigma_sq_lead) / inv_total;
                h += alpha * l.h_lead;
                var += alpha * alpha * l.sigma_sq_lead;
            }
            (h, var)
        }
        SurfaceMethod::MinElev => lowest(&mut leads.iter().flat_map(|l| l.samples.iter())),
        SurfaceMethod::AvgElev => {
            let n = leads.iter().map(|l| l.samples.len()).sum::<usize>() as f64;
            let sum: f64 = leads.iter().flat_map(|l| &l.samples).map(|s| s.h).sum();
            let var: f64 = leads.iter().flat_map(|l| &l.samples).map(|s| s.sigma_sq).sum();
            (sum / n, var / (n * n))
        }
        SurfaceMethod::NearestMinElev => {
            let nearest = leads
                .iter()
                .min_by(|a, b| {
                    (a.midpoint() - center)
                        .abs()
                        .total_cmp(&(b.midpoint() - center).abs())
                })
                .expect("non-empty");
            lowest(&mut nearest.samples.iter())
        }
    })
}
