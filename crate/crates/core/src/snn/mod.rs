//! SynNet construction and the integer LIF inference engine.

mod engine;
pub mod lif;
mod model;
mod spec;

pub use engine::{forward_int, predict, IntEngine, QuantizedLayer, QuantizedModel, ReadoutTrace};
pub use lif::{lif_step_int, NeuronStateInt};
pub use model::{build_model, FloatLayer, FloatModel};
pub use spec::{dash_code, decay_factor, SynNetSpec};
