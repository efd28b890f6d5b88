//! Central finite-difference oracle for model gradients.

use floeberg_core::nnet::{FocalLossParams, Mode, Model, Window};

pub const FD_STEP: f64 = 1e-6;
/// Gradients smaller than this are compared absolutely.
pub const REL_FLOOR: f64 = 1e-4;

/// Largest relative error between analytic and numerical gradients over the
/// flat parameter positions in `positions` (all when `None`).
pub fn max_relative_error(
    model: &Model,
    batch: &[Window],
    labels: &[usize],
    loss: &FocalLossParams,
    positions: Option<&[usize]>,
) -> (f64, usize) {
    let analytic = model
        .gradients(batch, labels, loss, Mode::Inference)
        .unwrap()
        .grads
        .flatten();
    let all: Vec<usize> = (0..analytic.len()).collect();
    let positions = positions.unwrap_or(&all);
    let mut probe = model.clone();
    let mut worst = (0.0f64, 0usize);
    for &flat in positions {
        let original = get(&probe, flat);
        set(&mut probe, flat, original + FD_STEP);
        let up = probe.mean_loss(batch, labels, loss).unwrap();
        set(&mut probe, flat, original - FD_STEP);
        let down = probe.mean_loss(batch, labels, loss).unwrap();
        set(&mut probe, flat, original);
        let numeric = (up - down) / (2.0 * FD_STEP);
        let a = analytic[flat];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_FLOOR);
        if rel > worst.0 {
            worst = (rel, flat);
        }
    }
    worst
}

fn locate(model: &Model, mut flat: usize) -> (usize, usize) {
    for (k, t) in model.params().iter().enumerate() {
        if flat < t.len() {
            return (k, flat);
        }
        flat -= t.len();
    }
    panic!("flat index out of range");
}

fn get(model: &Model, flat: usize) -> f64 {
    let (k, i) = locate(model, flat);
    model.params()[k].data()[i]
}

fn set(model: &mut Model, flat: usize, v: f64) {
    let (k, i) = locate(model, flat);
    model.params_mut()[k].data_mut()[i] = v;
}
