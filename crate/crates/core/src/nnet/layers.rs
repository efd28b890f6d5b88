use rand::Rng;

use super::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Linear,
    Relu,
    Elu,
}

impl Activation {
    pub(crate) fn code(self) -> u8 {
        match self {
            Activation::Linear => 0,
            Activation::Relu => 1,
            Activation::Elu => 2,
        }
    }

    pub(crate) fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(Activation::Linear),
            1 => Some(Activation::Relu),
            2 => Some(Activation::Elu),
            _ => None,
        }
    }

    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Linear => z,
            Activation::Relu => z.max(0.0),
            Activation::Elu => elu(z),
        }
    }

    /// Derivative with respect to the pre-activation.
    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Elu => elu_prime(z),
        }
    }
}

#[inline]
pub(crate) fn elu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        z.exp_m1()
    }
}

#[inline]
pub(crate) fn elu_prime(z: f64) -> f64 {
    if z > 0.0 {
        1.0
    } else {
        z.exp()
    }
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn glorot(rng: &mut impl Rng, t: &mut Tensor, fan_in: usize, fan_out: usize) {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for x in t.data_mut() {
        *x = rng.random_range(-limit..limit);
    }
}

/// Fully connected layer; `weight` is `[inputs, outputs]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Tensor,
    pub bias: Tensor,
    pub activation: Activation,
}

impl Dense {
    pub fn new(inputs: usize, outputs: usize, activation: Activation, rng: &mut impl Rng) -> Self {
        let mut weight = Tensor::zeros(&[inputs, outputs]);
        glorot(rng, &mut weight, inputs, outputs);
        Dense {
            weight,
            bias: Tensor::zeros(&[outputs]),
            activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn outputs(&self) -> usize {
        self.weight.shape()[1]
    }

    /// Pre-activation `z = xW + b`.
    pub(crate) fn pre_activation(&self, x: &[f64]) -> Vec<f64> {
        let n_out = self.outputs();
        let mut z = self.bias.data().to_vec();
        let w = self.weight.data();
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let row = &w[i * n_out..(i + 1) * n_out];
            for (zj, wij) in z.iter_mut().zip(row) {
                *zj += xi * wij;
            }
        }
        z
    }

    /// Accumulate parameter gradients for upstream `delta` (w.r.t. `z`) and
    /// return the gradient w.r.t. the input `x`.
    pub(crate) fn backward(&self, x: &[f64], delta: &[f64], grad_w: &mut Tensor, grad_b: &mut Tensor) -> Vec<f64> {
        let n_out = self.outputs();
        for (gb, d) in grad_b.data_mut().iter_mut().zip(delta) {
            *gb += d;
        }
        let gw = grad_w.data_mut();
        let w = self.weight.data();
        let mut dx = vec![0.0; x.len()];
        for (i, &xi) in x.iter().enumerate() {
            let grow = &mut gw[i * n_out..(i + 1) * n_out];
            let wrow = &w[i * n_out..(i + 1) * n_out];
            let mut acc = 0.0;
            for j in 0..n_out {
                grow[j] += xi * delta[j];
                acc += wrow[j] * delta[j];
            }
            dx[i] = acc;
        }
        dx
    }
}

/// LSTM layer with sigmoid gates and ELU cell/candidate activation.
///
/// Gate blocks are laid out `[input, forget, candidate, output]` along the
/// last axis: `w_input` is `[features, 4·units]`, `w_recurrent` is
/// `[units, 4·units]`, `bias` is `[4·units]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayer {
    pub w_input: Tensor,
    pub w_recurrent: Tensor,
    pub bias: Tensor,
}

/// Values kept from one time step for backpropagation through time.
#[derive(Debug, Clone)]
pub(crate) struct LstmStep {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    gate_i: Vec<f64>,
    gate_f: Vec<f64>,
    gate_o: Vec<f64>,
    cand_z: Vec<f64>,
    cand: Vec<f64>,
    c: Vec<f64>,
}

impl LstmLayer {
    pub fn new(features: usize, units: usize, rng: &mut impl Rng) -> Self {
        let mut w_input = Tensor::zeros(&[features, 4 * units]);
        let mut w_recurrent = Tensor::zeros(&[units, 4 * units]);
        glorot(rng, &mut w_input, features, 4 * units);
        glorot(rng, &mut w_recurrent, units, 4 * units);
        let mut bias = Tensor::zeros(&[4 * units]);
        // forget gate starts open
        bias.data_mut()[units..2 * units].iter_mut().for_each(|b| *b = 1.0);
        LstmLayer {
            w_input,
            w_recurrent,
            bias,
        }
    }

    pub fn features(&self) -> usize {
        self.w_input.shape()[0]
    }

    pub fn units(&self) -> usize {
        self.w_recurrent.shape()[0]
    }

    /// Unroll over `steps` from a zero state; returns the last hidden state
    /// and the per-step caches.
    pub(crate) fn forward(&self, steps: &[&[f64]]) -> (Vec<f64>, Vec<LstmStep>) {
        let u = self.units();
        let g4 = 4 * u;
        let mut h = vec![0.0; u];
        let mut c = vec![0.0; u];
        let mut cache = Vec::with_capacity(steps.len());
        let wi = self.w_input.data();
        let wr = self.w_recurrent.data();
        for &x in steps {
            let mut z = self.bias.data().to_vec();
            for (k, &xk) in x.iter().enumerate() {
                for (zj, w) in z.iter_mut().zip(&wi[k * g4..(k + 1) * g4]) {
                    *zj += xk * w;
                }
            }
            for (k, &hk) in h.iter().enumerate() {
                for (zj, w) in z.iter_mut().zip(&wr[k * g4..(k + 1) * g4]) {
                    *zj += hk * w;
                }
            }
            let gate_i: Vec<f64> = z[..u].iter().map(|&v| sigmoid(v)).collect();
            let gate_f: Vec<f64> = z[u..2 * u].iter().map(|&v| sigmoid(v)).collect();
            let cand_z: Vec<f64> = z[2 * u..3 * u].to_vec();
            let cand: Vec<f64> = cand_z.iter().map(|&v| elu(v)).collect();
            let gate_o: Vec<f64> = z[3 * u..].iter().map(|&v| sigmoid(v)).collect();
            let c_new: Vec<f64> = (0..u).map(|j| gate_f[j] * c[j] + gate_i[j] * cand[j]).collect();
            let h_new: Vec<f64> = (0..u).map(|j| gate_o[j] * elu(c_new[j])).collect();
            cache.push(LstmStep {
                x: x.to_vec(),
                h_prev: h,
                c_prev: c,
                gate_i,
                gate_f,
                gate_o,
                cand_z,
                cand,
                c: c_new.clone(),
            });
            h = h_new;
            c = c_new;
        }
        (h, cache)
    }

    /// Backpropagation through time from the gradient on the last hidden
    /// state. Gradients are accumulated into the three tensors.
    pub(crate) fn backward(
        &self,
        cache: &[LstmStep],
        dh_last: &[f64],
        grad_wi: &mut Tensor,
        grad_wr: &mut Tensor,
        grad_b: &mut Tensor,
    ) {
        let u = self.units();
        let g4 = 4 * u;
        let wr = self.w_recurrent.data();
        let mut dh = dh_last.to_vec();
        let mut dc = vec![0.0; u];
        let mut dz = vec![0.0; g4];
        for step in cache.iter().rev() {
            for j in 0..u {
                let act_c = elu(step.c[j]);
                let dc_j = dc[j] + dh[j] * step.gate_o[j] * elu_prime(step.c[j]);
                let o = step.gate_o[j];
                let i = step.gate_i[j];
                let f = step.gate_f[j];
                dz[j] = dc_j * step.cand[j] * i * (1.0 - i);
                dz[u + j] = dc_j * step.c_prev[j] * f * (1.0 - f);
                dz[2 * u + j] = dc_j * i * elu_prime(step.cand_z[j]);
                dz[3 * u + j] = dh[j] * act_c * o * (1.0 - o);
                dc[j] = dc_j * f;
            }
            for (gb, d) in grad_b.data_mut().iter_mut().zip(&dz) {
                *gb += d;
            }
            let gwi = grad_wi.data_mut();
            for (k, &xk) in step.x.iter().enumerate() {
                for (g, d) in gwi[k * g4..(k + 1) * g4].iter_mut().zip(&dz) {
                    *g += xk * d;
                }
            }
            let gwr = grad_wr.data_mut();
            let mut dh_prev = vec![0.0; u];
            for k in 0..u {
                let hk = step.h_prev[k];
                let row = &wr[k * g4..(k + 1) * g4];
                let mut acc = 0.0;
                for (jj, (g, d)) in gwr[k * g4..(k + 1) * g4].iter_mut().zip(&dz).enumerate() {
                    *g += hk * d;
                    acc += row[jj] * d;
                }
                dh_prev[k] = acc;
            }
            dh = dh_prev;
        }
    }
}
