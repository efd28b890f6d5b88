use super::Segment;
use crate::{Error, Result};

pub const NUM_FEATURES: usize = 6;

/// `[h_mean, h_std, photon_rate, d_photon_rate, bg_rate_mean, d_bg_rate]`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; NUM_FEATURES]);

impl FeatureVector {
    pub fn from_segment(s: &Segment) -> Self {
        FeatureVector([
            s.h_mean,
            s.h_std,
            s.photon_rate,
            s.d_photon_rate,
            s.bg_rate_mean,
            s.d_bg_rate,
        ])
    }
}

/// Raw (unscaled) feature vectors, one per segment, in order.
pub fn compute_features(segments: &[Segment]) -> Vec<FeatureVector> {
    segments.iter().map(FeatureVector::from_segment).collect()
}

/// Per-column z-score scaling fitted on training data.
///
/// Uses the population standard deviation. A column with zero variance gets
/// mean 0 and scale 1, i.e. it passes through unscaled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Standardizer {
    pub mean: [f64; NUM_FEATURES],
    pub std: [f64; NUM_FEATURES],
}

impl Default for Standardizer {
    fn default() -> Self {
        Standardizer {
            mean: [0.0; NUM_FEATURES],
            std: [1.0; NUM_FEATURES],
        }
    }
}

impl Standardizer {
    pub fn fit(features: &[FeatureVector]) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::invalid("cannot fit standardization on zero rows"));
        }
        let n = features.len() as f64;
        let mut out = Standardizer::default();
        for j in 0..NUM_FEATURES {
            let mean = features.iter().map(|f| f.0[j]).sum::<f64>() / n;
            let var = features.iter().map(|f| (f.0[j] - mean).powi(2)).sum::<f64>() / n;
            if var > 0.0 && var.is_finite() {
                out.mean[j] = mean;
                out.std[j] = var.sqrt();
            } else {
                log::warn!("feature column {j} has zero variance; left unscaled");
            }
        }
        Ok(out)
    }

    pub fn transform(&self, f: &FeatureVector) -> FeatureVector {
        let mut v = f.0;
        for j in 0..NUM_FEATURES {
            v[j] = (v[j] - self.mean[j]) / self.std[j];
        }
        FeatureVector(v)
    }

    pub fn transform_all(&self, features: &[FeatureVector]) -> Vec<FeatureVector> {
        features.iter().map(|f| self.transform(f)).collect()
    }
}
