//! Bipartite allocation feasibility: can supplies be routed to demands along
//! permitted pairs so that every supply is used up and every demand is met?

use super::maxflow::max_flow;
use super::network::{FlowNetwork, Node, SINK, SOURCE};
use crate::scalar::Scalar;

/// Returns an allocation matrix `y` (rows = supplies, columns = demands) with
/// row sums `supply`, column sums `demand` and `y[i][j] > 0` only where
/// `allowed(i, j)`, or `None` if no such matrix exists. Total masses must
/// agree for a `Some` result.
pub fn feasible_allocation<P: Scalar>(
    supply: &[P],
    demand: &[P],
    mut allowed: impl FnMut(usize, usize) -> bool,
) -> Option<Vec<Vec<P>>> {
    let total_supply = supply.iter().fold(P::zero(), |a, w| a + w.clone());
    let total_demand = demand.iter().fold(P::zero(), |a, w| a + w.clone());
    if !total_supply.approx_eq(&total_demand) {
        return None;
    }
    let mut net = FlowNetwork::new();
    let left: Vec<usize> = (0..supply.len()).map(|i| net.add_node(Node::Inner(i))).collect();
    let right: Vec<usize> = (0..demand.len())
        .map(|j| net.add_node(Node::Inner(supply.len() + j)))
        .collect();
    for (i, w) in supply.iter().enumerate() {
        net.add_edge(SOURCE, left[i], w.clone());
    }
    let mut middle = Vec::new();
    for i in 0..supply.len() {
        for j in 0..demand.len() {
            if allowed(i, j) {
                let e = net.add_edge(left[i], right[j], total_supply.clone());
                middle.push((i, j, e));
            }
        }
    }
    for (j, w) in demand.iter().enumerate() {
        net.add_edge(right[j], SINK, w.clone());
    }
    let result = max_flow(&net);
    if !result.value.approx_eq(&total_supply) {
        return None;
    }
    let mut y = vec![vec![P::zero(); demand.len()]; supply.len()];
    for (i, j, e) in middle {
        y[i][j] = result.flow[e].clone();
    }
    Some(y)
}
