use crate::ingest::FeatureVector;
use crate::{Error, Result};

/// Steps per input window: the segment plus two neighbours on each side.
pub const SEQ_LEN: usize = 5;
const HALF: usize = SEQ_LEN / 2;

pub type Window = [FeatureVector; SEQ_LEN];

/// Length-5 windows centred on each vector of a gap-free track. Track ends
/// repeat the edge vector.
pub fn build_sequences(features: &[FeatureVector]) -> Vec<Window> {
    let n = features.len();
    (0..n)
        .map(|c| {
            std::array::from_fn(|k| {
                let pos = (c + k).saturating_sub(HALF).min(n - 1);
                features[pos]
            })
        })
        .collect()
}

/// Like [`build_sequences`], but `indices` gives each vector's segment
/// ordinal. A neighbour slot whose ordinal is absent repeats the nearest
/// present vector on the centre side.
pub fn build_sequences_indexed(indices: &[u64], features: &[FeatureVector]) -> Result<Vec<Window>> {
    if indices.len() != features.len() {
        return Err(Error::invalid(format!(
            "{} indices for {} feature vectors",
            indices.len(),
            features.len()
        )));
    }
    if indices.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("segment indices must be strictly increasing"));
    }
    let n = features.len();
    let mut out = Vec::with_capacity(n);
    for c in 0..n {
        let mut w = [features[c]; SEQ_LEN];
        let (mut pos, mut fill) = (c, features[c]);
        for d in 1..=HALF {
            if pos + 1 < n && indices[pos + 1] == indices[c] + d as u64 {
                pos += 1;
                fill = features[pos];
            }
            w[HALF + d] = fill;
        }
        let (mut pos, mut fill) = (c, features[c]);
        for d in 1..=HALF {
            if pos > 0 && indices[pos - 1] + d as u64 == indices[c] {
                pos -= 1;
                fill = features[pos];
            }
            w[HALF - d] = fill;
        }
        out.push(w);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(v: f64) -> FeatureVector {
        FeatureVector([v; 6])
    }

    fn firsts(w: &Window) -> Vec<f64> {
        w.iter().map(|f| f.0[0]).collect()
    }

    #[test]
    fn single_segment_repeats() {
        let w = build_sequences(&[fv(3.0)]);
        assert_eq!(w.len(), 1);
        assert_eq!(firsts(&w[0]), vec![3.0; 5]);
    }

    #[test]
    fn five_segments_middle_window() {
        let f: Vec<_> = (0..5).map(|i| fv(i as f64)).collect();
        let w = build_sequences(&f);
        assert_eq!(firsts(&w[2]), vec![0.0, 1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn seven_segments_edges() {
        let f: Vec<_> = (0..7).map(|i| fv(i as f64)).collect();
        let w = build_sequences(&f);
        assert_eq!(w.len(), 7);
        assert_eq!(firsts(&w[0]), vec![0.0, 0.0, 0.0, 1.0, 2.0]);
        assert_eq!(firsts(&w[6]), vec![4.0, 5.0, 6.0, 6.0, 6.0]);
        assert!(build_sequences(&[]).is_empty());
    }

    #[test]
    fn gaps_repeat_nearest_present() {
        // ordinals 0 1 _ 3 4
        let f: Vec<_> = [0.0, 1.0, 3.0, 4.0].iter().map(|&v| fv(v)).collect();
        let w = build_sequences_indexed(&[0, 1, 3, 4], &f).unwrap();
        assert_eq!(firsts(&w[1]), vec![0.0, 0.0, 1.0, 1.0, 3.0]);
        assert_eq!(firsts(&w[2]), vec![1.0, 3.0, 3.0, 4.0, 4.0]);
        assert_eq!(firsts(&w[3]), vec![3.0, 3.0, 4.0, 4.0, 4.0]);
        // without gaps both builders agree
        let g: Vec<_> = (0..6).map(|i| fv(i as f64)).collect();
        let idx: Vec<u64> = (10..16).collect();
        let a = build_sequences_indexed(&idx, &g).unwrap();
        let b = build_sequences(&g);
        assert!(a.iter().zip(&b).all(|(x, y)| x == y));
    }
}
