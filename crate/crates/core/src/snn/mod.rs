//! Clock-driven simulation of a single spiking module.

pub mod encode;
pub mod lif;
pub mod network;
pub mod stdp;

pub use encode::{poisson_encode, poisson_encode_scaled, SpikeRaster};
pub use lif::{lif_step, LayerDynamics, LayerKind, LayerState};
pub use network::{simulate_presentation, Network, Presentation, SpikeCounts};
pub use stdp::{stdp_update_on_post, stdp_update_on_pre, SynapseState};
