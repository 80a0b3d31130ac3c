//! Minimal tensor and network core for the actor-critic architecture.

mod arch;
mod backward;
pub mod checkpoint;
mod network;
pub mod ops;

pub use arch::{conv_output, ConvSpec, NetworkArch, TensorSpec, Volume};
pub use backward::{backward, Gradients, OutputGrad};
pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use network::{ForwardTrace, Network};
