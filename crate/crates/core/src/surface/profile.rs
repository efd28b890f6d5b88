use serde::Serialize;

use super::estimate::{merge_runs, runs_to_leads, scan_runs, window_reference, Lead, SurfaceMethod};
use crate::autolabel::LabeledSegment;
use crate::runtime::{self, partition_with_halo, timed, Executor, PhaseTimings};
use crate::{io, Error, Result};

pub const WINDOW_HEADER: [&str; 6] = ["center", "method", "n_leads", "h_ref", "sigma_sq_ref", "interpolated"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceParams {
    pub method: SurfaceMethod,
    /// Full window length, meters.
    pub window_length: f64,
    /// Spacing of window centers, meters.
    pub stride: f64,
    /// Shortest run of open-water segments accepted as a lead.
    pub min_lead_length: usize,
}

impl Default for SurfaceParams {
    fn default() -> Self {
        SurfaceParams {
            method: SurfaceMethod::NasaWeighted,
            window_length: 10_000.0,
            stride: 5_000.0,
            min_lead_length: 1,
        }
    }
}

impl SurfaceParams {
    fn validate(&self) -> Result<()> {
        if !(self.window_length > 0.0 && self.stride > 0.0) || !self.window_length.is_finite() || !self.stride.is_finite() {
            return Err(Error::invalid("window length and stride must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeaSurfaceWindow {
    pub center: f64,
    pub half_width: f64,
    pub n_leads: usize,
    pub h_ref: f64,
    pub sigma_sq_ref: f64,
    pub method: SurfaceMethod,
    pub filled_by_interpolation: bool,
}

/// Reference height for every segment, in segment order.
#[derive(Debug, Clone, PartialEq)]
pub struct SeaSurfaceProfile {
    pub h_ref: Vec<f64>,
    pub sigma_sq_ref: Vec<f64>,
    pub method: SurfaceMethod,
}

#[derive(Debug, Clone)]
pub struct SurfaceOutput {
    pub leads: Vec<Lead>,
    pub windows: Vec<SeaSurfaceWindow>,
    pub profile: SeaSurfaceProfile,
    pub timings: PhaseTimings,
}

/// Window estimates over the track, empty windows filled by linear
/// interpolation between the nearest estimated windows (constant beyond the
/// outermost ones). Window centers sit on multiples of the stride so that
/// the grid does not depend on how the track was chunked.
pub fn build_windows(
    exec: &Executor,
    labeled: &[LabeledSegment],
    leads: &[Lead],
    params: &SurfaceParams,
) -> Result<Vec<SeaSurfaceWindow>> {
    params.validate()?;
    let (first, last) = match (labeled.first(), labeled.last()) {
        (Some(f), Some(l)) => (f.segment.center_along_track, l.segment.center_along_track),
        _ => return Err(Error::NoReference("empty track".into())),
    };
    if leads.is_empty() {
        return Err(Error::NoReference("track contains no open-water lead".into()));
    }
    let k0 = (first / params.stride).floor() as i64;
    let k1 = (last / params.stride).ceil() as i64;
    let centers: Vec<f64> = (k0..=k1).map(|k| k as f64 * params.stride).collect();
    let half = 0.5 * params.window_length;
    let midpoints: Vec<f64> = leads.iter().map(Lead::midpoint).collect();

    let estimated: Result<Vec<Option<(usize, f64, f64)>>> = exec
        .map_items(&centers, |&c| {
            let lo = midpoints.partition_point(|&m| m < c - half);
            let hi = midpoints.partition_point(|&m| m < c + half);
            if lo == hi {
                return Ok(None);
            }
            let in_window: Vec<&Lead> = leads[lo..hi].iter().collect();
            let (h, v) = window_reference(&in_window, params.method, c)?;
            Ok(Some((hi - lo, h, v)))
        })
        .into_iter()
        .collect();
    let estimated = estimated?;

    let valid: Vec<usize> = (0..centers.len()).filter(|&i| estimated[i].is_some()).collect();
    let mut windows = Vec::with_capacity(centers.len());
    for (i, &center) in centers.iter().enumerate() {
        let window = match estimated[i] {
            Some((n_leads, h_ref, sigma_sq_ref)) => SeaSurfaceWindow {
                center,
                half_width: half,
                n_leads,
                h_ref,
                sigma_sq_ref,
                method: params.method,
                filled_by_interpolation: false,
            },
            None => {
                let right_pos = valid.partition_point(|&v| v < i);
                let left = right_pos.checked_sub(1).map(|p| valid[p]);
                let right = valid.get(right_pos).copied();
                let value = |j: usize| {
                    let (_, h, v) = estimated[j].expect("valid window");
                    (h, v)
                };
                let (h_ref, sigma_sq_ref) = match (left, right) {
                    (Some(l), Some(r)) => {
                        let t = (center - centers[l]) / (centers[r] - centers[l]);
                        let (hl, vl) = value(l);
                        let (hr, vr) = value(r);
                        (hl + t * (hr - hl), vl + t * (vr - vl))
                    }
                    (Some(j), None) | (None, Some(j)) => value(j),
                    (None, None) => unreachable!("at least one lead exists"),
                };
                SeaSurfaceWindow {
                    center,
                    half_width: half,
                    n_leads: 0,
                    h_ref,
                    sigma_sq_ref,
                    method: params.method,
                    filled_by_interpolation: true,
                }
            }
        };
        windows.push(window);
    }
    Ok(windows)
}

/// Per-segment reference by linear interpolation between window centers.
pub fn interpolate_profile(exec: &Executor, labeled: &[LabeledSegment], windows: &[SeaSurfaceWindow]) -> Result<SeaSurfaceProfile> {
    let method = windows
        .first()
        .map(|w| w.method)
        .ok_or_else(|| Error::NoReference("no sea-surface windows".into()))?;
    let values: Vec<(f64, f64)> = exec.map_items(labeled, |l| interpolate_at(windows, l.segment.center_along_track));
    let (h_ref, sigma_sq_ref) = values.into_iter().unzip();
    Ok(SeaSurfaceProfile {
        h_ref,
        sigma_sq_ref,
        method,
    })
}

fn interpolate_at(windows: &[SeaSurfaceWindow], x: f64) -> (f64, f64) {
    let n = windows.len();
    if n == 1 {
        return (windows[0].h_ref, windows[0].sigma_sq_ref);
    }
    // index of the last center <= x, kept inside [0, n - 2]
    let k = windows.partition_point(|w| w.center <= x).saturating_sub(1).min(n - 2);
    let (a, b) = (&windows[k], &windows[k + 1]);
    let t = ((x - a.center) / (b.center - a.center)).clamp(0.0, 1.0);
    (
        a.h_ref + t * (b.h_ref - a.h_ref),
        a.sigma_sq_ref + t * (b.sigma_sq_ref - a.sigma_sq_ref),
    )
}

/// Leads, windows and the per-segment profile as a timed chunked job.
///
/// The map phase scans each chunk for open-water runs; the reduce phase
/// joins runs across chunk edges and evaluates leads, windows and the
/// profile concurrently. Every per-item computation is the same code on the
/// same inputs whatever the chunking, so the output is bit-identical for any
/// worker count.
pub fn surface_parallel(exec: &Executor, labeled: &[LabeledSegment], params: &SurfaceParams) -> Result<SurfaceOutput> {
    params.validate()?;
    let plan = partition_with_halo(labeled.len(), exec.workers(), 0);
    let (runs, mut timings) = runtime::parallel_map_reduce(
        exec,
        &plan,
        labeled,
        |chunk| {
            let core = chunk.core_items();
            Ok((
                scan_runs(core),
                core.first().map(|l| l.segment.index),
                core.last().map(|l| l.segment.index),
            ))
        },
        |parts| Ok(merge_runs(parts)),
    )?;

    let (rest, extra_reduce) = timed(|| -> Result<_> {
        let runs: Vec<_> = runs.into_iter().filter(|r| r.samples.len() >= params.min_lead_length.max(1)).collect();
        let leads: Result<Vec<Lead>> = exec
            .map_items(&runs, |r| runs_to_leads(vec![r.clone()], 1).map(|mut v| v.remove(0)))
            .into_iter()
            .collect();
        let leads = leads?;
        if leads.is_empty() {
            return Err(Error::NoReference("track contains no open-water lead".into()));
        }
        let windows = build_windows(exec, labeled, &leads, params)?;
        let profile = interpolate_profile(exec, labeled, &windows)?;
        Ok((leads, windows, profile))
    });
    let (leads, windows, profile) = rest?;
    timings.reduce_s += extra_reduce;
    Ok(SurfaceOutput {
        leads,
        windows,
        profile,
        timings,
    })
}

/// Sequential reference-profile construction.
pub fn build_profile(labeled: &[LabeledSegment], params: &SurfaceParams) -> Result<SeaSurfaceProfile> {
    Ok(surface_parallel(&Executor::sequential(1), labeled, params)?.profile)
}

#[derive(Serialize)]
struct WindowRow<'a> {
    center: f64,
    method: &'a str,
    n_leads: usize,
    h_ref: f64,
    sigma_sq_ref: f64,
    interpolated: u8,
}

pub fn windows_csv(windows: &[SeaSurfaceWindow]) -> Result<Vec<u8>> {
    let rows: Vec<WindowRow> = windows
        .iter()
        .map(|w| WindowRow {
            center: w.center,
            method: w.method.name(),
            n_leads: w.n_leads,
            h_ref: w.h_ref,
            sigma_sq_ref: w.sigma_sq_ref,
            interpolated: u8::from(w.filled_by_interpolation),
        })
        .collect();
    io::csv_bytes(&WINDOW_HEADER, &rows, true)
}
