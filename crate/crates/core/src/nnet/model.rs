use std::fmt;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ingest::NUM_FEATURES;
use crate::{Error, Result};

use super::layers::LstmStep;
use super::loss::{focal_loss, focal_loss_grad};
use super::{Activation, Dense, FocalLossParams, LstmLayer, Tensor, Window, SEQ_LEN};

pub const NUM_CLASSES: usize = 3;

const MLP_HIDDEN: usize = 32;
const LSTM_UNITS: usize = 16;
const LSTM_DENSE: [usize; 7] = [32, 96, 32, 16, 112, 48, 64];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Architecture {
    Mlp,
    Lstm,
}

impl Architecture {
    pub fn name(self) -> &'static str {
        match self {
            Architecture::Mlp => "mlp",
            Architecture::Lstm => "lstm",
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Architecture::Mlp => 0,
            Architecture::Lstm => 1,
        }
    }

    pub(crate) fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(Architecture::Mlp),
            1 => Some(Architecture::Lstm),
            _ => None,
        }
    }

    /// Dense layer widths from encoder output to logits.
    fn dense_widths(self) -> Vec<usize> {
        match self {
            Architecture::Mlp => vec![NUM_FEATURES, MLP_HIDDEN, NUM_CLASSES],
            Architecture::Lstm => {
                let mut w = vec![LSTM_UNITS];
                w.extend(LSTM_DENSE);
                w.push(NUM_CLASSES);
                w
            }
        }
    }

    fn hidden_activation(self) -> Activation {
        match self {
            Architecture::Mlp => Activation::Relu,
            Architecture::Lstm => Activation::Elu,
        }
    }

    /// Index of the dense layer whose input receives dropout.
    fn dropout_site(self) -> usize {
        match self {
            Architecture::Mlp => 1,
            Architecture::Lstm => 0,
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mlp" => Ok(Architecture::Mlp),
            "lstm" => Ok(Architecture::Lstm),
            _ => Err(Error::invalid(format!("unknown model type {s:?} (expected mlp or lstm)"))),
        }
    }
}

/// Forward-pass mode. Dropout is only applied in training.
pub enum Mode<'a> {
    Inference,
    Training { dropout: f64, rng: &'a mut dyn RngCore },
}

/// One gradient tensor per model parameter, in declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    tensors: Vec<Tensor>,
}

impl Gradients {
    pub fn new(tensors: Vec<Tensor>) -> Self {
        Gradients { tensors }
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn len(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.tensors.iter().flat_map(|t| t.data().iter().copied()).collect()
    }

    /// Overwrite all values from a flat slice of length [`Self::len`].
    pub fn assign_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.len() {
            return Err(Error::invalid(format!(
                "flat gradient has {} values, expected {}",
                flat.len(),
                self.len()
            )));
        }
        let mut off = 0;
        for t in &mut self.tensors {
            let n = t.len();
            t.data_mut().copy_from_slice(&flat[off..off + n]);
            off += n;
        }
        Ok(())
    }
}

/// Output of a combined forward/backward pass over a batch.
#[derive(Debug, Clone)]
pub struct BatchGradients {
    pub loss: f64,
    pub correct: usize,
    pub grads: Gradients,
}

struct Trace {
    lstm: Vec<LstmStep>,
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    mask: Option<Vec<f64>>,
    probs: [f64; NUM_CLASSES],
}

/// MLP or LSTM classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    arch: Architecture,
    lstm: Option<LstmLayer>,
    dense: Vec<Dense>,
}

impl Model {
    /// Fresh model with Glorot-uniform weights drawn from `seed`.
    pub fn new(arch: Architecture, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lstm = match arch {
            Architecture::Lstm => Some(LstmLayer::new(NUM_FEATURES, LSTM_UNITS, &mut rng)),
            Architecture::Mlp => None,
        };
        let widths = arch.dense_widths();
        let last = widths.len() - 2;
        let dense = widths
            .windows(2)
            .enumerate()
            .map(|(k, w)| {
                let act = if k == last {
                    Activation::Linear
                } else {
                    arch.hidden_activation()
                };
                Dense::new(w[0], w[1], act, &mut rng)
            })
            .collect();
        Model { arch, lstm, dense }
    }

    /// Assemble a model from loaded layers, checking them against the
    /// canonical shapes for `arch`.
    pub(crate) fn from_parts(arch: Architecture, lstm: Option<LstmLayer>, dense: Vec<Dense>) -> Result<Self> {
        let m = Model { arch, lstm, dense };
        m.validate()?;
        Ok(m)
    }

    pub fn architecture(&self) -> Architecture {
        self.arch
    }

    pub fn lstm(&self) -> Option<&LstmLayer> {
        self.lstm.as_ref()
    }

    pub fn dense_layers(&self) -> &[Dense] {
        &self.dense
    }

    pub fn validate(&self) -> Result<()> {
        let widths = self.arch.dense_widths();
        let bad = |what: String| Err(Error::invalid(format!("{} model: {what}", self.arch)));
        match (&self.lstm, self.arch) {
            (Some(l), Architecture::Lstm) => {
                let g = 4 * LSTM_UNITS;
                if l.w_input.shape() != [NUM_FEATURES, g]
                    || l.w_recurrent.shape() != [LSTM_UNITS, g]
                    || l.bias.shape() != [g]
                {
                    return bad("recurrent weight shapes".into());
                }
            }
            (None, Architecture::Mlp) => {}
            _ => return bad("recurrent layer presence".into()),
        }
        if self.dense.len() != widths.len() - 1 {
            return bad(format!("{} dense layers, expected {}", self.dense.len(), widths.len() - 1));
        }
        for (k, d) in self.dense.iter().enumerate() {
            if d.weight.shape() != [widths[k], widths[k + 1]] || d.bias.shape() != [widths[k + 1]] {
                return bad(format!("dense layer {k} has shape {:?}", d.weight.shape()));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> Vec<&Tensor> {
        let mut out = Vec::new();
        if let Some(l) = &self.lstm {
            out.extend([&l.w_input, &l.w_recurrent, &l.bias]);
        }
        for d in &self.dense {
            out.extend([&d.weight, &d.bias]);
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = Vec::new();
        if let Some(l) = &mut self.lstm {
            out.extend([&mut l.w_input, &mut l.w_recurrent, &mut l.bias]);
        }
        for d in &mut self.dense {
            out.extend([&mut d.weight, &mut d.bias]);
        }
        out
    }

    pub fn num_params(&self) -> usize {
        self.params().iter().map(|t| t.len()).sum()
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients::new(self.params().into_iter().map(Tensor::zeros_like).collect())
    }

    /// Order-sensitive hash of every parameter bit pattern.
    pub fn checksum(&self) -> u64 {
        // FNV-1a over the raw bits
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for t in self.params() {
            for v in t.data() {
                for b in v.to_bits().to_le_bytes() {
                    h ^= b as u64;
                    h = h.wrapping_mul(0x0100_0000_01b3);
                }
            }
        }
        h
    }

    pub fn check_finite(&self) -> Result<()> {
        for (k, t) in self.params().iter().enumerate() {
            t.check_finite(&format!("parameter tensor {k}"))?;
        }
        Ok(())
    }

    fn trace(&self, window: &Window, mode: &mut Mode<'_>) -> Trace {
        let (encoded, lstm) = match &self.lstm {
            Some(layer) => {
                let steps: [&[f64]; SEQ_LEN] = std::array::from_fn(|k| &window[k].0[..]);
                layer.forward(&steps)
            }
            None => (window[SEQ_LEN / 2].0.to_vec(), Vec::new()),
        };
        let site = self.arch.dropout_site();
        let mut x = encoded;
        let mut inputs = Vec::with_capacity(self.dense.len());
        let mut pre = Vec::with_capacity(self.dense.len());
        let mut mask = None;
        for (k, layer) in self.dense.iter().enumerate() {
            if k == site {
                if let Mode::Training { dropout, rng } = mode {
                    if *dropout > 0.0 {
                        let keep = 1.0 - *dropout;
                        let m: Vec<f64> = (0..x.len())
                            .map(|_| if rng.random::<f64>() < *dropout { 0.0 } else { 1.0 / keep })
                            .collect();
                        x.iter_mut().zip(&m).for_each(|(v, s)| *v *= s);
                        mask = Some(m);
                    }
                }
            }
            let z = layer.pre_activation(&x);
            let next = z.iter().map(|&v| layer.activation.apply(v)).collect();
            inputs.push(std::mem::replace(&mut x, next));
            pre.push(z);
        }
        Trace {
            lstm,
            inputs,
            pre,
            mask,
            probs: softmax(&x),
        }
    }

    fn check_mode(mode: &Mode<'_>) -> Result<()> {
        if let Mode::Training { dropout, .. } = mode {
            if !(0.0..1.0).contains(dropout) {
                return Err(Error::invalid(format!("dropout must be in [0, 1), got {dropout}")));
            }
        }
        Ok(())
    }

    /// Class probabilities for each window.
    pub fn forward(&self, batch: &[Window], mut mode: Mode<'_>) -> Result<Vec<[f64; NUM_CLASSES]>> {
        self.validate()?;
        Self::check_mode(&mode)?;
        Ok(batch.iter().map(|w| self.trace(w, &mut mode).probs).collect())
    }

    /// Argmax class index per window (inference mode).
    pub fn predict(&self, batch: &[Window]) -> Result<Vec<usize>> {
        Ok(self.forward(batch, Mode::Inference)?.iter().map(argmax).collect())
    }

    /// Mean focal loss over the batch in inference mode.
    pub fn mean_loss(&self, batch: &[Window], labels: &[usize], loss: &FocalLossParams) -> Result<f64> {
        check_labels(batch, labels)?;
        let probs = self.forward(batch, Mode::Inference)?;
        let total: f64 = probs.iter().zip(labels).map(|(p, &c)| focal_loss(p, c, loss)).sum();
        Ok(total / batch.len() as f64)
    }

    /// Forward and backward pass; gradients are of the batch-mean loss.
    pub fn gradients(
        &self,
        batch: &[Window],
        labels: &[usize],
        loss: &FocalLossParams,
        mut mode: Mode<'_>,
    ) -> Result<BatchGradients> {
        self.validate()?;
        Self::check_mode(&mode)?;
        check_labels(batch, labels)?;
        let n = batch.len() as f64;
        let mut grads = self.zero_gradients();
        let offset = if self.lstm.is_some() { 3 } else { 0 };
        let site = self.arch.dropout_site();
        let mut total = 0.0;
        let mut correct = 0;
        for (w, &c) in batch.iter().zip(labels) {
            let tr = self.trace(w, &mut mode);
            total += focal_loss(&tr.probs, c, loss);
            if argmax(&tr.probs) == c {
                correct += 1;
            }
            let mut delta: Vec<f64> = focal_loss_grad(&tr.probs, c, loss).iter().map(|g| g / n).collect();
            for k in (0..self.dense.len()).rev() {
                let (gw, gb) = pair_mut(&mut grads.tensors, offset + 2 * k);
                let mut dx = self.dense[k].backward(&tr.inputs[k], &delta, gw, gb);
                if k == site {
                    if let Some(m) = &tr.mask {
                        dx.iter_mut().zip(m).for_each(|(d, s)| *d *= s);
                    }
                }
                if k > 0 {
                    let act = self.dense[k - 1].activation;
                    delta = dx.iter().zip(&tr.pre[k - 1]).map(|(d, &z)| d * act.derivative(z)).collect();
                } else if let Some(layer) = &self.lstm {
                    let (head, _) = grads.tensors.split_at_mut(3);
                    let [gi, gr, gb] = head else { unreachable!() };
                    layer.backward(&tr.lstm, &dx, gi, gr, gb);
                }
            }
        }
        Ok(BatchGradients {
            loss: total / n,
            correct,
            grads,
        })
    }
}

fn pair_mut(ts: &mut [Tensor], i: usize) -> (&mut Tensor, &mut Tensor) {
    let (a, b) = ts[i..].split_at_mut(1);
    (&mut a[0], &mut b[0])
}

fn check_labels(batch: &[Window], labels: &[usize]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    if batch.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} windows but {} labels",
            batch.len(),
            labels.len()
        )));
    }
    if let Some(l) = labels.iter().find(|&&l| l >= NUM_CLASSES) {
        return Err(Error::invalid(format!("class index {l} out of range")));
    }
    Ok(())
}

pub(crate) fn softmax(z: &[f64]) -> [f64; NUM_CLASSES] {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = [0.0; NUM_CLASSES];
    let mut sum = 0.0;
    for (o, &v) in out.iter_mut().zip(z) {
        *o = (v - max).exp();
        sum += *o;
    }
    out.iter_mut().for_each(|o| *o /= sum);
    out
}

pub(crate) fn argmax(p: &[f64; NUM_CLASSES]) -> usize {
    let mut best = 0;
    for k in 1..NUM_CLASSES {
        if p[k] > p[best] {
            best = k;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::FeatureVector;
    use proptest::prelude::{any, prop, prop_assert, prop_assert_eq, prop_assume, proptest, ProptestConfig};

    fn random_batch(n: usize, seed: u64) -> (Vec<Window>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = (0..n)
            .map(|_| std::array::from_fn(|_| FeatureVector(std::array::from_fn(|_| rng.random_range(-2.0..2.0)))))
            .collect();
        let l = (0..n).map(|_| rng.random_range(0..NUM_CLASSES)).collect();
        (w, l)
    }

    #[test]
    fn parameter_shapes() {
        let lstm = Model::new(Architecture::Lstm, 1);
        let shapes: Vec<Vec<usize>> = lstm.params().iter().map(|t| t.shape().to_vec()).collect();
        assert_eq!(shapes[0], [6, 64]);
        assert_eq!(shapes[1], [16, 64]);
        assert_eq!(shapes[2], [64]);
        let chain: Vec<usize> = lstm.dense_layers().iter().map(Dense::outputs).collect();
        assert_eq!(chain, [32, 96, 32, 16, 112, 48, 64, 3]);
        assert_eq!(lstm.dense_layers()[0].inputs(), 16);
        // forget gate bias starts at one
        assert!(lstm.lstm().unwrap().bias.data()[16..32].iter().all(|&b| b == 1.0));

        let mlp = Model::new(Architecture::Mlp, 1);
        let shapes: Vec<Vec<usize>> = mlp.params().iter().map(|t| t.shape().to_vec()).collect();
        assert_eq!(shapes, vec![vec![6, 32], vec![32], vec![32, 3], vec![3]]);
        assert_eq!(mlp.dense_layers()[0].activation, Activation::Relu);
    }

    #[test]
    fn zero_weights_give_uniform_output() {
        for arch in [Architecture::Mlp, Architecture::Lstm] {
            let mut m = Model::new(arch, 3);
            m.params_mut().into_iter().for_each(|t| t.fill(0.0));
            let (b, _) = random_batch(4, 1);
            for p in m.forward(&b, Mode::Inference).unwrap() {
                for v in p {
                    assert!((v - 1.0 / 3.0).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn inference_is_repeatable() {
        let m = Model::new(Architecture::Lstm, 9);
        let (b, _) = random_batch(8, 2);
        let a = m.forward(&b, Mode::Inference).unwrap();
        let c = m.forward(&b, Mode::Inference).unwrap();
        assert_eq!(a, c);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = m
            .forward(&b, Mode::Training { dropout: 0.2, rng: &mut rng })
            .unwrap();
        assert_ne!(a, t);
    }

    #[test]
    fn mlp_uses_only_center_vector() {
        let m = Model::new(Architecture::Mlp, 4);
        let (mut b, _) = random_batch(1, 5);
        let before = m.forward(&b, Mode::Inference).unwrap();
        b[0][0] = FeatureVector([9.0; 6]);
        b[0][4] = FeatureVector([-9.0; 6]);
        assert_eq!(m.forward(&b, Mode::Inference).unwrap(), before);
    }

    #[test]
    fn one_hot_match_has_zero_gradient() {
        // a huge output bias on class 1 saturates the softmax
        let mut m = Model::new(Architecture::Mlp, 2);
        let last = m.dense.last_mut().unwrap();
        last.weight.fill(0.0);
        last.bias.data_mut().copy_from_slice(&[-1000.0, 1000.0, -1000.0]);
        let (b, _) = random_batch(6, 3);
        let labels = vec![1; 6];
        let out = m.gradients(&b, &labels, &FocalLossParams::default(), Mode::Inference).unwrap();
        assert_eq!(out.loss, 0.0);
        assert!(out.grads.flatten().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn doubling_alpha_doubles_class_gradient() {
        let m = Model::new(Architecture::Lstm, 5);
        let (b, _) = random_batch(5, 8);
        let labels = vec![2; 5];
        let base = FocalLossParams::new(2.0, [1.0, 0.7, 0.4]).unwrap();
        let doubled = FocalLossParams::new(2.0, [1.0, 0.7, 0.8]).unwrap();
        let g1 = m.gradients(&b, &labels, &base, Mode::Inference).unwrap().grads.flatten();
        let g2 = m.gradients(&b, &labels, &doubled, Mode::Inference).unwrap().grads.flatten();
        for (a, c) in g1.iter().zip(&g2) {
            assert_eq!(2.0 * a, *c);
        }
    }

    #[test]
    fn bad_labels_rejected() {
        let m = Model::new(Architecture::Mlp, 0);
        let (b, _) = random_batch(2, 0);
        let p = FocalLossParams::default();
        assert!(m.gradients(&b, &[0], &p, Mode::Inference).is_err());
        assert!(m.gradients(&b, &[0, 3], &p, Mode::Inference).is_err());
        assert!(m.gradients(&[], &[], &p, Mode::Inference).is_err());
    }

    #[test]
    fn mismatched_shapes_rejected() {
        let mut m = Model::new(Architecture::Mlp, 0);
        m.dense[1].weight = Tensor::zeros(&[31, 3]);
        let (b, _) = random_batch(1, 0);
        assert!(matches!(m.forward(&b, Mode::Inference), Err(Error::InvalidInput(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn softmax_sums_to_one(seed in any::<u64>(), lstm in any::<bool>()) {
            let arch = if lstm { Architecture::Lstm } else { Architecture::Mlp };
            let m = Model::new(arch, seed);
            let (b, _) = random_batch(4, seed ^ 1);
            for p in m.forward(&b, Mode::Inference).unwrap() {
                prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            }
        }

        #[test]
        fn argmax_ignores_logit_shift(z in prop::array::uniform3(-20.0f64..20.0), c in -50.0f64..50.0) {
            let a = softmax(&z);
            let shifted: Vec<f64> = z.iter().map(|v| v + c).collect();
            let b = softmax(&shifted);
            let gap = {
                let mut s = z;
                s.sort_by(f64::total_cmp);
                s[2] - s[1]
            };
            prop_assume!(gap > 1e-9);
            prop_assert_eq!(argmax(&a), argmax(&b));
        }
    }
}
