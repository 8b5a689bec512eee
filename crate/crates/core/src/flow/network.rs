use std::fmt::Write as _;

use crate::dist::Dist;
use crate::model::StateId;
use crate::relation::StateRelation;
use crate::scalar::Scalar;

/// Node labels of a flow network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Source,
    Sink,
    /// Copy of a state on the supply side.
    Left(StateId),
    /// Primed copy of a state on the demand side.
    Right(StateId),
    /// Generic internal node (allocation and test networks).
    Inner(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge<P> {
    pub from: usize,
    pub to: usize,
    pub capacity: P,
}

/// A directed network with one source and one sink.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowNetwork<P> {
    nodes: Vec<Node>,
    edges: Vec<Edge<P>>,
}

pub const SOURCE: usize = 0;
pub const SINK: usize = 1;

impl<P: Scalar> Default for FlowNetwork<P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P: Scalar> FlowNetwork<P> {
    /// A network containing only the source (node 0) and sink (node 1).
    pub fn new() -> Self {
        FlowNetwork {
            nodes: vec![Node::Source, Node::Sink],
            edges: Vec::new(),
        }
    }

    pub fn add_node(&mut self, label: Node) -> usize {
        self.nodes.push(label);
        self.nodes.len() - 1
    }

    /// # Panics
    /// On a negative capacity or an endpoint that does not exist.
    pub fn add_edge(&mut self, from: usize, to: usize, capacity: P) -> usize {
        assert!(capacity >= P::zero(), "negative capacity");
        assert!(from < self.nodes.len() && to < self.nodes.len());
        self.edges.push(Edge { from, to, capacity });
        self.edges.len() - 1
    }

    pub fn source(&self) -> usize {
        SOURCE
    }

    pub fn sink(&self) -> usize {
        SINK
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge<P>] {
        &self.edges
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_index(&self, label: Node) -> Option<usize> {
        self.nodes.iter().position(|&n| n == label)
    }

    /// Graphviz rendering; `name` resolves state ids.
    pub fn to_dot(&self, name: impl Fn(StateId) -> String) -> String {
        let label = |n: &Node| match n {
            Node::Source => "⊥".to_string(),
            Node::Sink => "⊤".to_string(),
            Node::Left(s) => name(*s),
            Node::Right(s) => format!("{}'", name(*s)),
            Node::Inner(i) => format!("#{i}"),
        };
        let mut out = String::from("digraph network {\n  rankdir=LR;\n");
        for (i, n) in self.nodes.iter().enumerate() {
            let _ = writeln!(out, "  n{i} [label=\"{}\"];", label(n));
        }
        for e in &self.edges {
            let _ = writeln!(
                out,
                "  n{} -> n{} [label=\"{}\"];",
                e.from, e.to, e.capacity
            );
        }
        out.push_str("}\n");
        out
    }
}

/// Which states get materialised in [`build_network`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NetworkMode {
    /// Only the supports of the two distributions.
    #[default]
    Support,
    /// Every state of the relation's universe, as in the textbook
    /// construction; zero-capacity edges included.
    Full,
}

/// The network `N(Δ, Θ, R)`: source edges carry `Δ(s)`, sink edges `Θ(t)`,
/// and a unit-capacity middle edge `(s, t')` exists for every `(s, t) ∈ R`.
pub fn build_network<P: Scalar>(
    delta: &Dist<P>,
    theta: &Dist<P>,
    r: &StateRelation,
    mode: NetworkMode,
) -> FlowNetwork<P> {
    build_network_with(delta, theta, |s, t| r.contains(s, t), mode, r.universe())
}

pub(crate) fn build_network_with<P: Scalar>(
    delta: &Dist<P>,
    theta: &Dist<P>,
    related: impl Fn(StateId, StateId) -> bool,
    mode: NetworkMode,
    universe: usize,
) -> FlowNetwork<P> {
    let mut net = FlowNetwork::new();
    let (left, right): (Vec<(StateId, P)>, Vec<(StateId, P)>) = match mode {
        NetworkMode::Support => (delta.entries().to_vec(), theta.entries().to_vec()),
        NetworkMode::Full => (
            (0..universe)
                .map(|i| (StateId::new(i), delta.prob(StateId::new(i))))
                .collect(),
            (0..universe)
                .map(|i| (StateId::new(i), theta.prob(StateId::new(i))))
                .collect(),
        ),
    };
    let left_nodes: Vec<usize> = left
        .iter()
        .map(|(s, _)| net.add_node(Node::Left(*s)))
        .collect();
    let right_nodes: Vec<usize> = right
        .iter()
        .map(|(t, _)| net.add_node(Node::Right(*t)))
        .collect();
    for ((_, w), &n) in left.iter().zip(&left_nodes) {
        net.add_edge(SOURCE, n, w.clone());
    }
    for ((s, _), &ln) in left.iter().zip(&left_nodes) {
        for ((t, _), &rn) in right.iter().zip(&right_nodes) {
            if related(*s, *t) {
                net.add_edge(ln, rn, P::one());
            }
        }
    }
    for ((_, w), &n) in right.iter().zip(&right_nodes) {
        net.add_edge(n, SINK, w.clone());
    }
    net
}
