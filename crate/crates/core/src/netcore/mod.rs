//! Pure mathematical core: synapse code encoding, the heterogeneous
//! rectified-linear forward pass and its gradients.

mod gemm;
mod network;
mod profile;
mod topology;
mod weights;

pub use network::{argmax, backward, forward, Activations, LossAndGradients, Network};
pub use profile::TransferProfile;
pub use topology::Topology;
pub use weights::{EffectiveWeights, Matrix, WeightCode, WeightMatrix, MAX_MAGNITUDE};
