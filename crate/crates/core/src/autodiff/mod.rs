//! Dense `f64` tensors with reverse-mode differentiation, parameters and optimizers.

mod checkpoint;
mod gradcheck;
mod optim;
mod params;
mod tape;
mod tensor;

pub use checkpoint::{checkpoint_from_json, checkpoint_to_json, load_checkpoint, save_checkpoint, CHECKPOINT_VERSION};
pub use gradcheck::{gradient_check, gradient_check_params, FD_STEP};
pub use optim::{plateau_lr, sgd_step, Adam, PlateauScheduler};
pub use params::{ParamId, ParamStore};
pub use tape::{log_sigmoid, sigmoid, Gradients, Tape, Var};
pub use tensor::Tensor;
