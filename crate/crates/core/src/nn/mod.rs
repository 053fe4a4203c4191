//! Minimal dense differentiable kernel.

pub mod checkpoint;
pub mod gradcheck;
pub mod layers;
pub mod optim;
pub mod params;
pub mod tape;

pub use checkpoint::{Checkpoint, CHECKPOINT_HEADER};
pub use gradcheck::{gradient_check, relative_error, GradCheck, GradCheckReport};
pub use layers::{activate, gru_cell, linear, mlp2, Activation, GruCell, Mlp2, LEAKY_SLOPE};
pub use optim::Adam;
pub use params::{glorot_uniform, ParamId, ParamStore};
pub use tape::{ChebyshevOperator, EdgePattern, Tape, Var};
