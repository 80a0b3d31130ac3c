//! Attention-oriented metrics for actor-critic agents on three Pong variants.

pub mod agent;
pub mod atoms;
pub mod behavior;
pub mod env;
pub mod error;
pub mod io;
pub mod lrp;
pub mod net;
pub mod scalar;
pub mod seed;
pub mod train;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Network32 = net::Network<f32>;
pub type Network64 = net::Network<f64>;
