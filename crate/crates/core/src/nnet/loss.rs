use crate::autolabel::SurfaceClass;
use crate::{Error, Result};

use super::NUM_CLASSES;

const P_FLOOR: f64 = 1e-12;

/// Focal loss `−α_c (1 − p_c)^γ ln p_c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FocalLossParams {
    pub gamma: f64,
    pub alpha: [f64; NUM_CLASSES],
}

impl Default for FocalLossParams {
    fn default() -> Self {
        FocalLossParams {
            gamma: 2.0,
            alpha: [1.0; NUM_CLASSES],
        }
    }
}

impl FocalLossParams {
    pub fn new(gamma: f64, alpha: [f64; NUM_CLASSES]) -> Result<Self> {
        let p = FocalLossParams { gamma, alpha };
        p.validate()?;
        Ok(p)
    }

    /// Inverse class frequency weights, scaled to mean 1. Classes missing
    /// from `labels` are counted once so their weight stays finite.
    pub fn inverse_frequency(labels: &[usize], gamma: f64) -> Result<Self> {
        let mut counts = [0usize; NUM_CLASSES];
        for &l in labels {
            if l >= NUM_CLASSES {
                return Err(Error::invalid(format!("class index {l} out of range")));
            }
            counts[l] += 1;
        }
        let mut alpha = [0.0; NUM_CLASSES];
        for (a, &c) in alpha.iter_mut().zip(&counts) {
            *a = 1.0 / c.max(1) as f64;
        }
        let mean = alpha.iter().sum::<f64>() / NUM_CLASSES as f64;
        alpha.iter_mut().for_each(|a| *a /= mean);
        FocalLossParams::new(gamma, alpha)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::invalid(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        for (k, a) in self.alpha.iter().enumerate() {
            if !(*a >= 0.0 && a.is_finite()) {
                return Err(Error::invalid(format!(
                    "alpha for {} must be >= 0, got {a}",
                    SurfaceClass::from_index(k).map_or("?", |c| c.name())
                )));
            }
        }
        Ok(())
    }
}

/// Loss for one sample given its softmax output.
pub fn focal_loss(probs: &[f64; NUM_CLASSES], class: usize, params: &FocalLossParams) -> f64 {
    let p = probs[class].max(P_FLOOR);
    let modulator = if params.gamma == 0.0 {
        1.0
    } else {
        (1.0 - p).powf(params.gamma)
    };
    -params.alpha[class] * modulator * p.ln()
}

/// Gradient of [`focal_loss`] with respect to the pre-softmax logits.
pub fn focal_loss_grad(probs: &[f64; NUM_CLASSES], class: usize, params: &FocalLossParams) -> [f64; NUM_CLASSES] {
    let p = probs[class];
    let q = 1.0 - p;
    let g = params.gamma;
    // p·dL/dp without alpha: γ(1−p)^(γ−1)·p·ln p − (1−p)^γ
    let focus = if g == 0.0 || q <= 0.0 {
        0.0
    } else {
        g * q.powf(g - 1.0) * p * p.max(P_FLOOR).ln()
    };
    let modulator = if g == 0.0 { 1.0 } else { q.powf(g) };
    let s = focus - modulator;
    let mut out = [0.0; NUM_CLASSES];
    for (j, o) in out.iter_mut().enumerate() {
        let delta = if j == class { 1.0 } else { 0.0 };
        *o = params.alpha[class] * (s * (delta - probs[j]));
    }
    out
}
