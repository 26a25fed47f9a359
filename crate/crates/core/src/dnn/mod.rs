//! Dense network, backpropagation, training loop and the model file.

mod file;
mod model;
mod train;

pub use file::{decode_model, encode_model, load_model, save_model, ModelFile, Preprocessing, MODEL_MAGIC, MODEL_VERSION};
pub use model::{
    bce_loss, is_positive, sigmoid, ForwardCache, Gradients, HiddenActivation, Mlp, OutputActivation, Prediction,
    BCE_EPS, DECISION_THRESHOLD, DEFAULT_LAYER_SIZES,
};
pub use train::{
    evaluate, label_accuracy, lr_schedule, train, Dataset, EarlyStopping, EpochRecord, StopDecision, TrainConfig,
    TrainHistory, ValidationSource, HISTORY_HEADER,
};
