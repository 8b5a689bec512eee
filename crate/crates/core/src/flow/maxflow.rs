use std::collections::VecDeque;

use super::network::FlowNetwork;
use crate::scalar::Scalar;

/// A flow function together with its value.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowResult<P> {
    pub value: P,
    /// Flow on each edge, indexed like [`FlowNetwork::edges`].
    pub flow: Vec<P>,
}

impl<P: Scalar> FlowResult<P> {
    /// Checks capacity bounds, conservation at internal nodes, and that
    /// `value` is the net outflow of the source.
    pub fn verify(&self, net: &FlowNetwork<P>) -> Result<(), String> {
        if self.flow.len() != net.edges().len() {
            return Err("flow vector length does not match the edge count".into());
        }
        let mut balance = vec![P::zero(); net.num_nodes()];
        for (i, (e, f)) in net.edges().iter().zip(&self.flow).enumerate() {
            if *f < P::zero() && !f.is_negligible() {
                return Err(format!("edge {i} carries negative flow {f}"));
            }
            if *f > e.capacity && !(f.clone() - e.capacity.clone()).is_negligible() {
                return Err(format!(
                    "edge {i} carries {f} over its capacity {}",
                    e.capacity
                ));
            }
            balance[e.from] = balance[e.from].clone() - f.clone();
            balance[e.to] = balance[e.to].clone() + f.clone();
        }
        for (v, b) in balance.iter().enumerate() {
            if v != net.source() && v != net.sink() && !b.is_negligible() {
                return Err(format!("flow is not conserved at node {v} (imbalance {b})"));
            }
        }
        let out = -balance[net.source()].clone();
        if !out.approx_eq(&self.value) {
            return Err(format!(
                "value {} differs from the net source outflow {out}",
                self.value
            ));
        }
        Ok(())
    }
}

/// Residual graph shared by the augmenting-path solvers. Arc `2e` is the
/// forward copy of edge `e`, arc `2e + 1` its reverse.
#[derive(Clone, Debug)]
pub(crate) struct Residual<P> {
    pub head: Vec<usize>,
    pub cap: Vec<P>,
    /// Outgoing arcs per node, ordered by head node index.
    pub adj: Vec<Vec<usize>>,
}

impl<P: Scalar> Residual<P> {
    pub fn new(net: &FlowNetwork<P>) -> Self {
        let m = net.edges().len();
        let mut head = Vec::with_capacity(2 * m);
        let mut cap = Vec::with_capacity(2 * m);
        let mut adj = vec![Vec::new(); net.num_nodes()];
        for (i, e) in net.edges().iter().enumerate() {
            head.push(e.to);
            cap.push(e.capacity.clone());
            head.push(e.from);
            cap.push(P::zero());
            adj[e.from].push(2 * i);
            adj[e.to].push(2 * i + 1);
        }
        for arcs in &mut adj {
            arcs.sort_by_key(|&a| (head[a], a));
        }
        Residual { head, cap, adj }
    }

    pub fn push(&mut self, arc: usize, amount: &P) {
        self.cap[arc] = self.cap[arc].clone() - amount.clone();
        self.cap[arc ^ 1] = self.cap[arc ^ 1].clone() + amount.clone();
    }

    /// Edge flows read off the reverse arcs.
    pub fn edge_flows(&self) -> Vec<P> {
        (0..self.cap.len() / 2)
            .map(|e| self.cap[2 * e + 1].clone())
            .collect()
    }

    /// Nodes reachable from `from` through arcs with significant residual
    /// capacity.
    pub fn reachable(&self, from: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[from] = true;
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            for &a in &self.adj[u] {
                let v = self.head[a];
                if !seen[v] && self.cap[a].is_significant() {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }
}

/// Maximum flow by shortest augmenting paths (Edmonds-Karp). Among equally
/// short paths the one through lower-indexed nodes is taken.
pub fn max_flow<P: Scalar>(net: &FlowNetwork<P>) -> FlowResult<P> {
    let (s, t) = (net.source(), net.sink());
    let mut res = Residual::new(net);
    let n = net.num_nodes();
    let mut value = P::zero();
    let mut parent = vec![usize::MAX; n];
    loop {
        parent.iter_mut().for_each(|p| *p = usize::MAX);
        let mut seen = vec![false; n];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        'bfs: while let Some(u) = queue.pop_front() {
            for &a in &res.adj[u] {
                let v = res.head[a];
                if !seen[v] && res.cap[a].is_significant() {
                    seen[v] = true;
                    parent[v] = a;
                    if v == t {
                        break 'bfs;
                    }
                    queue.push_back(v);
                }
            }
        }
        if !seen[t] {
            break;
        }
        let mut bottleneck: Option<P> = None;
        let mut v = t;
        while v != s {
            let a = parent[v];
            bottleneck = Some(match bottleneck {
                None => res.cap[a].clone(),
                Some(b) => b.min_of(res.cap[a].clone()),
            });
            v = res.head[a ^ 1];
        }
        let bottleneck = bottleneck.expect("path has at least one arc");
        let mut v = t;
        while v != s {
            let a = parent[v];
            res.push(a, &bottleneck);
            v = res.head[a ^ 1];
        }
        value = value + bottleneck;
    }
    let result = FlowResult {
        value,
        flow: res.edge_flows(),
    };
    debug_assert_eq!(result.verify(net), Ok(()));
    debug_assert!(
        min_cut(net, &result).1.approx_eq(&result.value),
        "flow value differs from the residual cut capacity"
    );
    result
}

/// The cut found by residual reachability from the source: the source side
/// as a membership vector, and the cut's capacity. For a maximum flow the
/// capacity equals the flow value.
pub fn min_cut<P: Scalar>(net: &FlowNetwork<P>, result: &FlowResult<P>) -> (Vec<bool>, P) {
    let mut res = Residual::new(net);
    for (e, f) in result.flow.iter().enumerate() {
        res.push(2 * e, f);
    }
    let side = res.reachable(net.source());
    let capacity = net
        .edges()
        .iter()
        .filter(|e| side[e.from] && !side[e.to])
        .fold(P::zero(), |acc, e| acc + e.capacity.clone());
    (side, capacity)
}
