//! Hybrid beamforming laboratory for mmWave massive MIMO.
//!
//! The crate covers the full desk-scale experiment pipeline: clustered
//! Saleh-Valenzuela channel generation with imperfect CSI, rate and
//! upper-bound evaluation, manifold optimization of the analog precoder,
//! classical baselines (full-digital SVD, OMP hybrid), a DDPG agent that
//! learns the digital precoder and analog combiner, QPSK link-level BER
//! measurement, and a CLI harness that drives seeded sweeps and emits CSV.
//!
//! Beamforming algorithms are interchangeable strategies behind the
//! [`beamformer::Beamformer`] trait and are selected by name at runtime.

pub mod agent;
pub mod baselines;
pub mod beamformer;
pub mod channel;
pub mod harness;
pub mod linalg;
pub mod linklevel;
pub mod manifold;
pub mod metrics;
pub mod nn;

pub use channel::{ChannelConfig, ChannelRealization, SystemConfig};
pub use linalg::CMat;
pub use metrics::HybridWeights;
