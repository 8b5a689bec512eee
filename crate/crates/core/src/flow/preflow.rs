//! FIFO push-relabel. Kept as an independent second solver: nothing else in
//! the crate routes through it, so it can cross-check [`super::max_flow`].

use std::collections::VecDeque;

use super::maxflow::{FlowResult, Residual};
use super::network::FlowNetwork;
use crate::scalar::Scalar;

pub fn preflow_push<P: Scalar>(net: &FlowNetwork<P>) -> FlowResult<P> {
    let n = net.num_nodes();
    let (s, t) = (net.source(), net.sink());
    let mut res = Residual::new(net);
    let mut height = vec![0usize; n];
    let mut excess = vec![P::zero(); n];
    let mut active = VecDeque::new();
    let mut queued = vec![false; n];
    height[s] = n;

    for a in res.adj[s].clone() {
        let amount = res.cap[a].clone();
        if amount.is_significant() {
            let v = res.head[a];
            res.push(a, &amount);
            excess[v] = excess[v].clone() + amount;
            if v != t && !queued[v] {
                queued[v] = true;
                active.push_back(v);
            }
        }
    }

    while let Some(u) = active.pop_front() {
        queued[u] = false;
        // discharge u
        while excess[u].is_significant() {
            let mut pushed = false;
            for a in res.adj[u].clone() {
                let v = res.head[a];
                if res.cap[a].is_significant() && height[u] == height[v] + 1 {
                    let amount = excess[u].clone().min_of(res.cap[a].clone());
                    res.push(a, &amount);
                    excess[u] = excess[u].clone() - amount.clone();
                    excess[v] = excess[v].clone() + amount;
                    if v != s && v != t && !queued[v] {
                        queued[v] = true;
                        active.push_back(v);
                    }
                    pushed = true;
                    if !excess[u].is_significant() {
                        break;
                    }
                }
            }
            if !pushed {
                let lowest = res.adj[u]
                    .iter()
                    .filter(|&&a| res.cap[a].is_significant())
                    .map(|&a| height[res.head[a]])
                    .min();
                match lowest {
                    Some(h) => height[u] = h + 1,
                    None => break,
                }
            }
        }
    }

    let flow = res.edge_flows();
    let result = FlowResult {
        value: excess[t].clone(),
        flow,
    };
    debug_assert_eq!(result.verify(net), Ok(()));
    result
}
