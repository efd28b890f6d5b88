use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autolabel::{LabeledSegment, SurfaceClass};
use crate::ingest::{compute_features, FeatureVector, Segment, Standardizer};
use crate::{Error, Result};

use super::{build_sequences_indexed, ModelFile, Window};

/// Windows with their class indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub windows: Vec<Window>,
    pub labels: Vec<usize>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }
}

/// Standardized input windows for every segment of one track.
pub fn track_windows(segments: &[Segment], standardizer: &Standardizer) -> Result<Vec<Window>> {
    let features = standardizer.transform_all(&compute_features(segments));
    let indices: Vec<u64> = segments.iter().map(|s| s.index).collect();
    build_sequences_indexed(&indices, &features)
}

/// Train/test split over the labeled segments of several tracks.
///
/// Samples are shuffled with `seed` and the first `train_fraction` go to
/// training. The standardizer is fitted on the training rows only. Windows
/// still draw on unlabeled neighbours.
pub fn prepare_training(
    tracks: &[Vec<LabeledSegment>],
    train_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset, Standardizer)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(format!("train fraction {train_fraction} not in (0, 1)")));
    }
    // (track, position) of every labeled segment
    let mut samples: Vec<(usize, usize)> = Vec::new();
    let mut raw: Vec<Vec<FeatureVector>> = Vec::with_capacity(tracks.len());
    for (t, track) in tracks.iter().enumerate() {
        let segs: Vec<Segment> = track.iter().map(|l| l.segment).collect();
        raw.push(compute_features(&segs));
        samples.extend(track.iter().enumerate().filter(|(_, l)| l.class.is_some()).map(|(i, _)| (t, i)));
    }
    if samples.len() < 2 {
        return Err(Error::invalid(format!(
            "need at least two labeled segments, found {}",
            samples.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    samples.shuffle(&mut rng);
    let n_train = ((samples.len() as f64 * train_fraction).round() as usize).clamp(1, samples.len() - 1);
    let (train_idx, test_idx) = samples.split_at(n_train);

    let train_rows: Vec<FeatureVector> = train_idx.iter().map(|&(t, i)| raw[t][i]).collect();
    let standardizer = Standardizer::fit(&train_rows)?;
    let windows: Vec<Vec<Window>> = tracks
        .iter()
        .zip(&raw)
        .map(|(track, feats)| {
            let idx: Vec<u64> = track.iter().map(|l| l.segment.index).collect();
            build_sequences_indexed(&idx, &standardizer.transform_all(feats))
        })
        .collect::<Result<_>>()?;
    let gather = |ids: &[(usize, usize)]| Dataset {
        windows: ids.iter().map(|&(t, i)| windows[t][i]).collect(),
        labels: ids
            .iter()
            .map(|&(t, i)| tracks[t][i].class.map_or(0, SurfaceClass::index))
            .collect(),
    };
    Ok((gather(train_idx), gather(test_idx), standardizer))
}

/// Predicted class for every segment of a track.
pub fn classify_segments(file: &ModelFile, segments: &[Segment]) -> Result<Vec<SurfaceClass>> {
    if segments.is_empty() {
        return Ok(Vec::new());
    }
    let windows = track_windows(segments, &file.standardizer)?;
    file.model
        .predict(&windows)?
        .into_iter()
        .map(|k| SurfaceClass::from_index(k).ok_or_else(|| Error::Numeric(format!("class index {k}"))))
        .collect()
}
