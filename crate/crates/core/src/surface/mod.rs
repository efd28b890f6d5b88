//! Local sea-surface estimation from open-water leads and per-segment
//! freeboard.
//!
//! Leads are maximal runs of contiguous open-water segments. Each lead gets
//! a weighted height dominated by its lowest samples; each along-track window
//! combines the leads whose midpoint it contains into a reference height,
//! empty windows are filled by linear interpolation, and the per-segment
//! reference is interpolated between window centers. Freeboard is the
//! segment height minus that reference.

mod estimate;
mod freeboard;
mod profile;

pub use estimate::{
    extract_leads, lead_height, window_reference, Lead, LeadSample, SurfaceMethod, MIN_SIGMA_SQ,
};
pub use freeboard::{
    compute_freeboard, compute_freeboard_with, freeboard_csv, freeboard_histogram, freeboard_histogram_par, histogram_csv,
    read_freeboard, FreeboardRecord, Histogram, FREEBOARD_HEADER, HISTOGRAM_HEADER,
};
pub use profile::{
    build_profile, build_windows, interpolate_profile, surface_parallel, windows_csv, SeaSurfaceProfile,
    SeaSurfaceWindow, SurfaceOutput, SurfaceParams, WINDOW_HEADER,
};
