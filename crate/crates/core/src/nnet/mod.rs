//! From-scratch dense networks for three-class surface classification.
//!
//! Two architectures are provided: a one-hidden-layer MLP over the center
//! feature vector, and an LSTM over a five-step window followed by a deep
//! ELU dense stack. Both end in a softmax and are trained with focal loss
//! and Adam. Everything is `f64` and single-threaded; [`crate::dtrain`]
//! adds data parallelism on top.

mod adam;
mod dataset;
mod layers;
mod loss;
mod metrics;
mod model;
mod persist;
mod sequence;
mod tensor;
mod train;

pub use adam::AdamState;
pub use dataset::{classify_segments, prepare_training, track_windows, Dataset};
pub use layers::{Activation, Dense, LstmLayer};
pub use loss::{focal_loss, focal_loss_grad, FocalLossParams};
pub use metrics::{evaluate, Metrics};
pub use model::{Architecture, BatchGradients, Gradients, Mode, Model, NUM_CLASSES};
pub use persist::{load_model, load_model_as, save_model, ModelFile, MODEL_FORMAT_VERSION, MODEL_MAGIC};
pub use sequence::{build_sequences, build_sequences_indexed, Window, SEQ_LEN};
pub use tensor::Tensor;
pub use train::{history_csv, train, EpochStats, TrainConfig};
