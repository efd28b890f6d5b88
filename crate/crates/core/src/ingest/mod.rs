//! Photon ingestion, 2 m resampling into statistical segments, the six
//! per-segment classifier features, and a synthetic track generator with
//! known ground truth.

mod features;
mod photon;
mod resample;
mod synth;

pub use features::{compute_features, FeatureVector, Standardizer, NUM_FEATURES};
pub use photon::{read_photons, write_photons, PhotonEvent, PHOTON_HEADER};
pub use resample::{
    apply_deltas, read_segments, resample_2m, resample_bins, segments_csv, write_segments, Segment,
    DEFAULT_BIN_M, DEFAULT_MIN_CONFIDENCE, SEGMENT_HEADER,
};
pub use synth::{
    synthesize_segments, synthesize_track, ClassRegime, SurfaceSpan, SyntheticTrack, SyntheticTrackSpec, TRUTH_HEADER,
};
