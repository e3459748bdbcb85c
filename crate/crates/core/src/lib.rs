//! Training spiking neural networks with time encoding machines.
//!
//! Spike times of an integrate-and-fire neuron are linear constraints on the
//! integral of its input. One-layer networks are learned by stacking those
//! constraints into a least-squares problem; two-layer networks first recover
//! the hidden spike trains from the output spikes with annihilating filters
//! and k-means, then fall back to the one-layer solver.
//!
//! Everything is generic over the scalar type ([`Real`]: `f32` or `f64`);
//! the `*64` aliases below fix it to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fri;
pub mod linalg;
pub mod metrics;
pub mod num;
pub mod signals;
pub mod single_layer;
pub mod tem;
pub mod two_layer;

pub use error::{Error, Result};
pub use num::Real;
pub use signals::{AliasCancellingFilter, DiracStream, PeriodicSignal};
pub use tem::{SpikeTrain, TemParams};

/// Dense weight matrix; rows index the receiving layer.
pub type WeightMatrix<T> = nalgebra::DMatrix<T>;

pub type PeriodicSignal64 = PeriodicSignal<f64>;
pub type DiracStream64 = DiracStream<f64>;
pub type AliasCancellingFilter64 = AliasCancellingFilter<f64>;
pub type SpikeTrain64 = SpikeTrain<f64>;
pub type TemParams64 = TemParams<f64>;
pub type WeightMatrix64 = WeightMatrix<f64>;
pub type Example64 = single_layer::Example<f64>;
pub type TwoLayerExample64 = two_layer::TwoLayerExample<f64>;

pub type PeriodicSignal32 = PeriodicSignal<f32>;
pub type SpikeTrain32 = SpikeTrain<f32>;
pub type TemParams32 = TemParams<f32>;
