//! Exact flow solvers and the network construction used to decide liftings.

mod allocation;
mod maxflow;
mod network;
mod preflow;
mod transport;

pub use allocation::feasible_allocation;
pub use maxflow::{max_flow, min_cut, FlowResult};
pub use network::{build_network, Edge, FlowNetwork, NetworkMode, Node, SINK, SOURCE};
pub(crate) use network::build_network_with;
pub use preflow::preflow_push;
pub use transport::{dual_is_feasible, dual_potentials, min_cost_transport, DualSolution, TransportPlan};
