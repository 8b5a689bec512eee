//! Lifting a state relation `R` to distributions: `Δ R̂ Θ`.
//!
//! Decided by a maximum flow of value one through the network
//! `N(Δ, Θ, R)`; when `R` is an equivalence the class-mass test gives the
//! same answer without a flow computation.

use std::collections::BTreeMap;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::dist::{is_unit, Dist};
use crate::error::{Error, Result};
use crate::flow::{build_network, build_network_with, max_flow, FlowNetwork, NetworkMode, Node};
use crate::model::StateId;
use crate::relation::StateRelation;
use crate::scalar::Scalar;

/// A joint assignment of mass with marginals `Δ` and `Θ`, positive only on
/// related pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightFunction<P> {
    weights: BTreeMap<(StateId, StateId), P>,
}

impl<P: Scalar> WeightFunction<P> {
    /// Builds a weight function from raw entries; nonpositive entries are
    /// dropped.
    pub fn from_entries(entries: impl IntoIterator<Item = ((StateId, StateId), P)>) -> Self {
        let mut weights = BTreeMap::new();
        for (k, w) in entries {
            if w.is_significant() {
                weights.insert(k, w);
            }
        }
        WeightFunction { weights }
    }

    pub fn weight(&self, s: StateId, t: StateId) -> P {
        self.weights.get(&(s, t)).cloned().unwrap_or_else(P::zero)
    }

    /// Positive entries ordered by `(s, t)`.
    pub fn entries(&self) -> impl Iterator<Item = (StateId, StateId, &P)> + '_ {
        self.weights.iter().map(|(&(s, t), w)| (s, t, w))
    }

    /// Checks both marginals and that mass sits only on pairs of `r`.
    pub fn verify(&self, delta: &Dist<P>, theta: &Dist<P>, r: &StateRelation) -> Result<(), String> {
        if let Some((s, t, _)) = self.entries().find(|&(s, t, _)| !r.contains(s, t)) {
            return Err(format!("weight on unrelated pair ({}, {})", s.index(), t.index()));
        }
        let mut left: BTreeMap<StateId, P> = BTreeMap::new();
        let mut right: BTreeMap<StateId, P> = BTreeMap::new();
        for (s, t, w) in self.entries() {
            let l = left.entry(s).or_insert_with(P::zero);
            *l = l.clone() + w.clone();
            let r = right.entry(t).or_insert_with(P::zero);
            *r = r.clone() + w.clone();
        }
        marginal_matches(&left, delta).map_err(|e| format!("left marginal: {e}"))?;
        marginal_matches(&right, theta).map_err(|e| format!("right marginal: {e}"))
    }
}

fn marginal_matches<P: Scalar>(sums: &BTreeMap<StateId, P>, d: &Dist<P>) -> Result<(), String> {
    for (s, w) in d.entries() {
        let got = sums.get(s).cloned().unwrap_or_else(P::zero);
        if !got.approx_eq(w) {
            return Err(format!("state {} has {got}, expected {w}", s.index()));
        }
    }
    if let Some(s) = sums.keys().find(|s| d.prob(**s).is_zero()) {
        return Err(format!("state {} is outside the support", s.index()));
    }
    Ok(())
}

/// A decomposition `Δ = Σ pᵢ·sᵢ`, `Θ = Σ pᵢ·tᵢ` with every `(sᵢ, tᵢ) ∈ R`.
#[derive(Clone, Debug, PartialEq)]
pub struct LiftWitness<P> {
    pub decomposition: Vec<(P, StateId, StateId)>,
}

impl<P: Scalar> LiftWitness<P> {
    pub fn verify(&self, delta: &Dist<P>, theta: &Dist<P>, r: &StateRelation) -> Result<(), String> {
        let total = self
            .decomposition
            .iter()
            .fold(P::zero(), |acc, (p, _, _)| acc + p.clone());
        if !is_unit(&total) {
            return Err(format!("weights sum to {total}"));
        }
        if self.decomposition.iter().any(|(p, _, _)| !p.is_significant()) {
            return Err("nonpositive weight".into());
        }
        WeightFunction::from_entries(
            self.decomposition
                .iter()
                .map(|(p, s, t)| ((*s, *t), p.clone())),
        )
        .verify(delta, theta, r)
    }
}

impl<P: Scalar> Serialize for LiftWitness<P> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Triple {
            p: String,
            s: usize,
            t: usize,
        }
        let triples: Vec<Triple> = self
            .decomposition
            .iter()
            .map(|(p, s, t)| Triple {
                p: p.to_string(),
                s: s.index(),
                t: t.index(),
            })
            .collect();
        let mut st = serializer.serialize_struct("LiftWitness", 1)?;
        st.serialize_field("decomposition", &triples)?;
        st.end()
    }
}

/// Whether `Δ R̂ Θ`, by a maximum flow through `N(Δ, Θ, R)`.
pub fn check<P: Scalar>(delta: &Dist<P>, theta: &Dist<P>, r: &StateRelation) -> bool {
    check_with_mode(delta, theta, r, NetworkMode::Support)
}

/// As [`check`], choosing which states the network materialises.
pub fn check_with_mode<P: Scalar>(
    delta: &Dist<P>,
    theta: &Dist<P>,
    r: &StateRelation,
    mode: NetworkMode,
) -> bool {
    is_unit(&max_flow(&build_network(delta, theta, r, mode)).value)
}

/// As [`check`] with the relation given as a predicate on support pairs.
pub(crate) fn check_by<P: Scalar>(
    delta: &Dist<P>,
    theta: &Dist<P>,
    related: impl Fn(StateId, StateId) -> bool,
) -> bool {
    // cheap necessary condition before building a network
    if delta
        .support()
        .any(|s| !theta.support().any(|t| related(s, t)))
    {
        return false;
    }
    let net = build_network_with(delta, theta, related, NetworkMode::Support, 0);
    is_unit(&max_flow(&net).value)
}

/// A weight function certifying `Δ R̂ Θ`, read off the middle edges of a
/// maximum flow; `None` when the lifting fails.
pub fn weight_function<P: Scalar>(
    delta: &Dist<P>,
    theta: &Dist<P>,
    r: &StateRelation,
) -> Option<WeightFunction<P>> {
    let net = build_network(delta, theta, r, NetworkMode::Support);
    let result = max_flow(&net);
    if !is_unit(&result.value) {
        return None;
    }
    let w = WeightFunction::from_entries(middle_flows(&net, &result.flow));
    debug_assert_eq!(w.verify(delta, theta, r), Ok(()));
    Some(w)
}

fn middle_flows<'a, P: Scalar>(
    net: &'a FlowNetwork<P>,
    flow: &'a [P],
) -> impl Iterator<Item = ((StateId, StateId), P)> + 'a {
    net.edges()
        .iter()
        .zip(flow)
        .filter_map(|(e, f)| match (net.nodes()[e.from], net.nodes()[e.to]) {
            (Node::Left(s), Node::Right(t)) => Some(((s, t), f.clone())),
            _ => None,
        })
}

/// One triple per positive entry of `w`.
pub fn decompose<P: Scalar>(w: &WeightFunction<P>) -> LiftWitness<P> {
    LiftWitness {
        decomposition: w.entries().map(|(s, t, p)| (p.clone(), s, t)).collect(),
    }
}

/// The class-mass test: `Δ(C) = Θ(C)` for every equivalence class `C` of `r`.
pub fn check_equiv_classes<P: Scalar>(
    delta: &Dist<P>,
    theta: &Dist<P>,
    r: &StateRelation,
) -> Result<bool> {
    let classes = r.classes().ok_or(Error::NotEquivalence)?;
    let mut masses = vec![P::zero(); classes.num_blocks()];
    for (s, w) in delta.entries() {
        let b = classes.block_of(*s);
        masses[b] = masses[b].clone() + w.clone();
    }
    for (t, w) in theta.entries() {
        let b = classes.block_of(*t);
        masses[b] = masses[b].clone() - w.clone();
    }
    Ok(masses.iter().all(Scalar::is_negligible))
}

/// Given `(Σ pᵢ·Δᵢ) R̂ Θ`, splits `Θ = Σ pᵢ·Θᵢ` with `Δᵢ R̂ Θᵢ` for every
/// part. Each state's share of the weight function is divided among the
/// parts in proportion to their contribution to it. Returns `None` if the
/// combined lifting fails, the weights do not sum to one, or a weight is
/// zero (a zero-weight part has no mass to assign).
pub fn left_decompose<P: Scalar>(
    parts: &[(P, Dist<P>)],
    theta: &Dist<P>,
    r: &StateRelation,
) -> Option<Vec<Dist<P>>> {
    if parts.iter().any(|(p, _)| !p.is_significant()) {
        return None;
    }
    let combined = Dist::convex_sum(parts.iter().map(|(p, d)| (p.clone(), d))).ok()?;
    let w = weight_function(&combined, theta, r)?;
    let thetas: Vec<Dist<P>> = parts
        .iter()
        .map(|(_, d)| {
            // Θᵢ(t) = Σ_s Δᵢ(s) · w(s,t) / Δ(s)
            let entries = w.entries().filter_map(|(s, t, ws)| {
                let di = d.prob(s);
                if di.is_zero() {
                    None
                } else {
                    Some((t, di * ws.clone() / combined.prob(s)))
                }
            });
            Dist::new(entries.collect::<Vec<_>>())
                .expect("each part's share of the weight function has unit mass")
        })
        .collect();
    debug_assert!(parts
        .iter()
        .zip(&thetas)
        .all(|((_, d), t)| check(d, t, r)));
    Some(thetas)
}
