use std::path::Path;

use crate::ingest::{Standardizer, NUM_FEATURES};
use crate::{io, Error, Result};

use super::{Activation, Architecture, Dense, FocalLossParams, LstmLayer, Model, Tensor, NUM_CLASSES, SEQ_LEN};

pub const MODEL_MAGIC: &[u8; 4] = b"FLOE";
pub const MODEL_FORMAT_VERSION: u32 = 1;

const KIND_DENSE: u8 = 0;
const KIND_LSTM: u8 = 1;

/// A trained model together with the scaling and loss it was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub model: Model,
    pub standardizer: Standardizer,
    pub loss: FocalLossParams,
}

impl ModelFile {
    /// Little-endian binary layout:
    ///
    /// ```text
    /// "FLOE" u32:version u8:arch u32:seq_len u32:n_layers
    ///   n_layers × (u8:kind u32:inputs u32:outputs u8:activation)
    /// u32:n_features f64×n mean f64×n std
    /// f64:gamma f64×3 alpha
    /// u32:n_tensors n_tensors × (u32:rank u32×rank dims f64×len data)
    /// ```
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut b = Vec::new();
        b.extend_from_slice(MODEL_MAGIC);
        put_u32(&mut b, MODEL_FORMAT_VERSION);
        let m = &self.model;
        b.push(m.architecture().code());
        put_u32(&mut b, SEQ_LEN as u32);
        let n_layers = m.dense_layers().len() + usize::from(m.lstm().is_some());
        put_u32(&mut b, n_layers as u32);
        if let Some(l) = m.lstm() {
            b.push(KIND_LSTM);
            put_u32(&mut b, l.features() as u32);
            put_u32(&mut b, l.units() as u32);
            b.push(Activation::Elu.code());
        }
        for d in m.dense_layers() {
            b.push(KIND_DENSE);
            put_u32(&mut b, d.inputs() as u32);
            put_u32(&mut b, d.outputs() as u32);
            b.push(d.activation.code());
        }
        put_u32(&mut b, NUM_FEATURES as u32);
        for v in self.standardizer.mean.iter().chain(&self.standardizer.std) {
            put_f64(&mut b, *v);
        }
        put_f64(&mut b, self.loss.gamma);
        for a in self.loss.alpha {
            put_f64(&mut b, a);
        }
        let params = m.params();
        put_u32(&mut b, params.len() as u32);
        for t in params {
            put_u32(&mut b, t.shape().len() as u32);
            for &d in t.shape() {
                put_u32(&mut b, d as u32);
            }
            for &v in t.data() {
                put_f64(&mut b, v);
            }
        }
        b
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { buf: bytes, pos: 0 };
        if r.take(4)? != MODEL_MAGIC {
            return Err(Error::ModelFormat("bad magic, not a model file".into()));
        }
        let version = r.u32()?;
        if version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelFormat(format!(
                "format version {version}, this build reads {MODEL_FORMAT_VERSION}"
            )));
        }
        let arch_code = r.u8()?;
        let arch = Architecture::from_code(arch_code)
            .ok_or_else(|| Error::ModelFormat(format!("unknown architecture code {arch_code}")))?;
        let seq_len = r.u32()?;
        if seq_len as usize != SEQ_LEN {
            return Err(Error::ModelFormat(format!("sequence length {seq_len}, expected {SEQ_LEN}")));
        }
        let n_layers = r.u32()? as usize;
        let mut layers = Vec::new();
        for _ in 0..n_layers.min(64) {
            let kind = r.u8()?;
            let inputs = r.u32()? as usize;
            let outputs = r.u32()? as usize;
            let act = r.u8()?;
            layers.push((kind, inputs, outputs, act));
        }
        if layers.len() != n_layers {
            return Err(Error::ModelFormat(format!("implausible layer count {n_layers}")));
        }
        let n_feat = r.u32()? as usize;
        if n_feat != NUM_FEATURES {
            return Err(Error::ModelFormat(format!("{n_feat} features, expected {NUM_FEATURES}")));
        }
        let mut standardizer = Standardizer::default();
        for v in standardizer.mean.iter_mut().chain(standardizer.std.iter_mut()) {
            *v = r.f64()?;
        }
        let gamma = r.f64()?;
        let mut alpha = [0.0; NUM_CLASSES];
        for a in &mut alpha {
            *a = r.f64()?;
        }
        let loss = FocalLossParams::new(gamma, alpha).map_err(|e| Error::ModelFormat(e.to_string()))?;
        let n_tensors = r.u32()? as usize;
        let mut tensors = Vec::new();
        for _ in 0..n_tensors.min(64) {
            let rank = r.u32()? as usize;
            if rank > 4 {
                return Err(Error::ModelFormat(format!("tensor rank {rank}")));
            }
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                shape.push(r.u32()? as usize);
            }
            let len: usize = shape.iter().product();
            if len > r.remaining() / 8 {
                return Err(Error::ModelFormat("file truncated inside parameter data".into()));
            }
            let data = (0..len).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
            tensors.push(Tensor::from_vec(&shape, data)?);
        }
        if tensors.len() != n_tensors {
            return Err(Error::ModelFormat(format!("implausible tensor count {n_tensors}")));
        }
        if r.remaining() != 0 {
            return Err(Error::ModelFormat(format!("{} trailing bytes", r.remaining())));
        }
        let model = assemble(arch, &layers, tensors)?;
        Ok(ModelFile {
            model,
            standardizer,
            loss,
        })
    }
}

fn assemble(arch: Architecture, layers: &[(u8, usize, usize, u8)], tensors: Vec<Tensor>) -> Result<Model> {
    let fmt_err = |m: String| Error::ModelFormat(m);
    let mut it = tensors.into_iter();
    let mut next = || it.next().ok_or_else(|| fmt_err("fewer tensors than layers need".into()));
    let mut lstm = None;
    let mut dense = Vec::new();
    for &(kind, inputs, outputs, act) in layers {
        match kind {
            KIND_LSTM => {
                let l = LstmLayer {
                    w_input: next()?,
                    w_recurrent: next()?,
                    bias: next()?,
                };
                if l.features() != inputs || l.units() != outputs {
                    return Err(fmt_err("recurrent tensors disagree with descriptor".into()));
                }
                lstm = Some(l);
            }
            KIND_DENSE => {
                let activation =
                    Activation::from_code(act).ok_or_else(|| fmt_err(format!("unknown activation {act}")))?;
                let d = Dense {
                    weight: next()?,
                    bias: next()?,
                    activation,
                };
                if d.weight.shape() != [inputs, outputs] {
                    return Err(fmt_err("dense tensors disagree with descriptor".into()));
                }
                dense.push(d);
            }
            k => return Err(fmt_err(format!("unknown layer kind {k}"))),
        }
    }
    if next().is_ok() {
        return Err(fmt_err("more tensors than layers need".into()));
    }
    let reference = Model::new(arch, 0);
    let model = Model::from_parts(arch, lstm, dense).map_err(|e| fmt_err(e.to_string()))?;
    let acts = |m: &Model| m.dense_layers().iter().map(|d| d.activation).collect::<Vec<_>>();
    if acts(&model) != acts(&reference) {
        return Err(fmt_err(format!("activations do not match the {arch} architecture")));
    }
    Ok(model)
}

pub fn save_model(path: impl AsRef<Path>, file: &ModelFile) -> Result<()> {
    io::write_atomic(path, &file.to_bytes())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelFile> {
    let path = path.as_ref();
    ModelFile::from_bytes(&io::read_bytes(path)?).map_err(|e| match e {
        Error::ModelFormat(m) => Error::ModelFormat(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Load and require a specific architecture.
pub fn load_model_as(path: impl AsRef<Path>, expected: Architecture) -> Result<ModelFile> {
    let file = load_model(path)?;
    let found = file.model.architecture();
    if found != expected {
        return Err(Error::ArchitectureMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        });
    }
    Ok(file)
}

fn put_u32(b: &mut Vec<u8>, v: u32) {
    b.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(b: &mut Vec<u8>, v: f64) {
    b.extend_from_slice(&v.to_le_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::ModelFormat(format!("file truncated at byte {}", self.buf.len())));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
