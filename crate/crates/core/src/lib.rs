//! Event-driven, bit-faithful software model of a temporal-coding spiking
//! neural network accelerator SoC.
//!
//! The inference path is `encoder` (TTFS) → `sorter` (counting sort of
//! spike events) → `engine` (binary or fixed16 synaptic accumulation into
//! non-leaky integrate-and-fire neurons) → `decoder` (earliest spike, else
//! largest potential). `controller` wraps it in the load/run/interrupt/UART
//! control flow, `perf` turns event tallies into stage cycle counts and
//! memory footprints, and `oracle` is a dense timestep sweep used to check
//! the event-driven path.

pub mod cli;
pub mod controller;
pub mod decoder;
pub mod encoder;
pub mod engine;
pub mod error;
pub mod model;
pub mod oracle;
pub mod parallel;
pub mod perf;
pub mod sorter;
pub mod synth;

pub use decoder::{decode, Decision};
pub use encoder::{encode_ttfs, InputFrame, TtfsEncoder, ZeroPixelPolicy};
pub use engine::{run_network, InferenceOptions, InferenceResult, OpCounters};
pub use error::{Error, Result};
pub use model::{Alpha, Layer, LayerConfig, NetworkModel, SpikeTrain, WeightMatrix, WeightMode};
pub use oracle::{check_agreement, dense_infer};
