use crate::{Error, Result};

use super::{Gradients, Tensor};

/// Adam optimizer state with bias-corrected moments.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    t: u64,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
}

impl AdamState {
    pub const DEFAULT_LR: f64 = 0.003;

    pub fn new<'a>(params: impl IntoIterator<Item = &'a Tensor>) -> Self {
        let m: Vec<Tensor> = params.into_iter().map(Tensor::zeros_like).collect();
        AdamState {
            lr: Self::DEFAULT_LR,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            t: 0,
            v: m.clone(),
            m,
        }
    }

    pub fn with_lr(mut self, lr: f64) -> Self {
        self.lr = lr;
        self
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: Vec<&mut Tensor>, grads: &Gradients) -> Result<()> {
        let grads = grads.tensors();
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::invalid(format!(
                "adam: {} parameters, {} gradients, state for {}",
                params.len(),
                grads.len(),
                self.m.len()
            )));
        }
        for ((p, g), m) in params.iter().zip(grads).zip(&self.m) {
            if p.shape() != g.shape() || p.shape() != m.shape() {
                return Err(Error::invalid(format!(
                    "adam: shape {:?} vs gradient {:?}",
                    p.shape(),
                    g.shape()
                )));
            }
        }
        self.t += 1;
        let t = self.t as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (k, p) in params.into_iter().enumerate() {
            let g = grads[k].data();
            let m = self.m[k].data_mut();
            let v = self.v[k].data_mut();
            for (i, w) in p.data_mut().iter_mut().enumerate() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                *w -= self.lr * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> Tensor {
        Tensor::from_vec(&[1], vec![v]).unwrap()
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut w = scalar(1.0);
        let mut adam = AdamState::new([&w]);
        adam.step(vec![&mut w], &Gradients::new(vec![scalar(0.5)])).unwrap();
        assert!((w.data()[0] - (1.0 - 0.003)).abs() < 1e-7);
        assert_eq!(adam.steps(), 1);
    }

    #[test]
    fn zero_gradient_keeps_parameters() {
        let mut w = Tensor::from_vec(&[3], vec![0.1, -2.0, 7.5]).unwrap();
        let before = w.clone();
        let mut adam = AdamState::new([&w]);
        for _ in 0..5 {
            adam.step(vec![&mut w], &Gradients::new(vec![Tensor::zeros(&[3])])).unwrap();
        }
        assert_eq!(w, before);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut w = scalar(1.0);
        let mut adam = AdamState::new([&w]);
        let err = adam.step(vec![&mut w], &Gradients::new(vec![Tensor::zeros(&[2])]));
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }
}
