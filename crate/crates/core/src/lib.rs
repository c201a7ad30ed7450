//! Memristive crossbar inference simulator and tiled-accelerator cost model.
//!
//! * [`nn`]: tensors, layers, networks, im2col convolution and an SGD trainer
//! * [`memsim`]: device variability, conductance mapping, tiles, ADCs, tuning
//! * [`cost`]: latency, energy, EDP and area on 256x64 tiles
//! * [`fxp`]: fixed-point weight and activation quantisation
//! * [`bench`]: synthetic data, session-grouped CV, NTC files, sweeps
//!
//! Network code is generic over [`Scalar`] (`f32` or `f64`); the crossbar
//! simulation works in `f64` physical units.

pub mod bench;
pub mod cost;
pub mod error;
pub mod fxp;
pub mod memsim;
pub mod nn;
pub mod scalar;
pub mod tensor;

pub use error::{ContainerError, Error, Result};
pub use scalar::Scalar;
pub use tensor::Tensor;

pub type Tensor32 = Tensor<f32>;
pub type Tensor64 = Tensor<f64>;
pub type Network32 = nn::NetworkSpec<f32>;
pub type Network64 = nn::NetworkSpec<f64>;
pub type Layer32 = nn::Layer<f32>;
pub type Layer64 = nn::Layer<f64>;
