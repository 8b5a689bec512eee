//! The modal logic with `tt`, `&`, `~` and probabilistic diamonds, whose
//! equivalence coincides with bisimilarity.

use std::collections::HashMap;
use std::fmt;

use fixedbitset::FixedBitSet;
use num_traits::{One, Zero};

use crate::bisim::approximant_chain;
use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::flow::feasible_allocation;
use crate::model::{Plts, StateId};
use crate::relation::Partition;
use crate::scalar::{Rational, Scalar};
use crate::syntax::{parse_ast, wrap, Ast, Kind};

/// A state formula.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Top,
    And(Box<Formula>, Box<Formula>),
    /// `<a>ψ`, naming the action.
    Diamond(String, DistFormula),
    Neg(Box<Formula>),
}

/// A distribution formula `⊕ pᵢ·φᵢ`: positive weights summing to one.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DistFormula {
    parts: Vec<(Rational, Formula)>,
}

impl DistFormula {
    pub fn new(parts: Vec<(Rational, Formula)>) -> Result<Self> {
        if let Some((p, _)) = parts.iter().find(|(p, _)| !p.is_significant()) {
            return Err(Error::BadWeight {
                weight: p.to_string(),
            });
        }
        let sum = parts.iter().fold(Rational::zero(), |acc, (p, _)| acc + p);
        if !sum.is_one() {
            return Err(Error::WeightSum {
                sum: sum.to_string(),
            });
        }
        Ok(DistFormula { parts })
    }

    /// `1·φ`.
    pub fn certain(phi: Formula) -> Self {
        DistFormula {
            parts: vec![(Rational::one(), phi)],
        }
    }

    pub fn parts(&self) -> &[(Rational, Formula)] {
        &self.parts
    }
}

impl Formula {
    pub fn and(self, other: Formula) -> Formula {
        Formula::And(Box::new(self), Box::new(other))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(self) -> Formula {
        Formula::Neg(Box::new(self))
    }

    pub fn diamond(action: impl Into<String>, psi: DistFormula) -> Formula {
        Formula::Diamond(action.into(), psi)
    }

    /// Number of syntax nodes.
    pub fn size(&self) -> usize {
        match self {
            Formula::Top => 1,
            Formula::And(a, b) => 1 + a.size() + b.size(),
            Formula::Neg(a) => 1 + a.size(),
            Formula::Diamond(_, psi) => 1 + psi.parts.iter().map(|(_, f)| f.size()).sum::<usize>(),
        }
    }

    /// Actions mentioned by the formula, in order of first occurrence.
    pub fn actions(&self) -> Vec<String> {
        fn go(f: &Formula, out: &mut Vec<String>) {
            match f {
                Formula::Top => {}
                Formula::And(a, b) => {
                    go(a, out);
                    go(b, out);
                }
                Formula::Neg(a) => go(a, out),
                Formula::Diamond(a, psi) => {
                    if !out.contains(a) {
                        out.push(a.clone());
                    }
                    for (_, f) in &psi.parts {
                        go(f, out);
                    }
                }
            }
        }
        let mut out = Vec::new();
        go(self, &mut out);
        out
    }

    fn kind(&self) -> Kind {
        match self {
            Formula::And(..) => Kind::And,
            _ => Kind::Atom,
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Top => write!(f, "tt"),
            Formula::And(a, b) => write!(
                f,
                "{} & {}",
                wrap(a.kind(), 2, a.to_string()),
                wrap(b.kind(), 3, b.to_string())
            ),
            Formula::Neg(a) => write!(f, "~{}", wrap(a.kind(), 3, a.to_string())),
            Formula::Diamond(a, psi) => write!(f, "<{a}>({psi})"),
        }
    }
}

impl fmt::Display for DistFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (p, phi)) in self.parts.iter().enumerate() {
            if i > 0 {
                write!(f, " (+) ")?;
            }
            write!(f, "{p}*{phi}")?;
        }
        Ok(())
    }
}

const LOGIC: &str = "the logic with tt, &, ~ and <a>";

/// Parses a formula, rejecting connectives outside this logic.
pub fn parse_formula(text: &str) -> Result<Formula> {
    from_ast(parse_ast(text)?)
}

fn from_ast(ast: Ast) -> Result<Formula> {
    let rejected = |connective: &str| Error::GrammarMode {
        connective: connective.to_string(),
        logic: LOGIC,
    };
    Ok(match ast {
        Ast::Tt => Formula::Top,
        Ast::Not(a) => Formula::Neg(Box::new(from_ast(*a)?)),
        Ast::And(a, b) => Formula::And(Box::new(from_ast(*a)?), Box::new(from_ast(*b)?)),
        Ast::Diamond(a, mut alternatives) => {
            if alternatives.len() > 1 {
                return Err(rejected("(|)"));
            }
            let parts = alternatives
                .pop()
                .expect("a modal body has an alternative")
                .into_iter()
                .map(|(p, f)| Ok((p, from_ast(f)?)))
                .collect::<Result<Vec<_>>>()?;
            Formula::Diamond(a, DistFormula::new(parts)?)
        }
        Ast::Ff => return Err(rejected("ff")),
        Ast::Or(..) => return Err(rejected("|")),
        Ast::Box(..) => return Err(rejected("[a]")),
        Ast::Var(x) => return Err(rejected(&format!("variable {x}"))),
        Ast::Mu(..) => return Err(rejected("mu")),
        Ast::Nu(..) => return Err(rejected("nu")),
    })
}

/// The set of states satisfying `f`. Subformulae are evaluated once for all
/// states, bottom-up.
pub fn sat_set<P: Scalar>(p: &Plts<P>, f: &Formula) -> FixedBitSet {
    let n = p.num_states();
    match f {
        Formula::Top => {
            let mut all = FixedBitSet::with_capacity(n);
            all.insert_range(..);
            all
        }
        Formula::And(a, b) => {
            let mut x = sat_set(p, a);
            x.intersect_with(&sat_set(p, b));
            x
        }
        Formula::Neg(a) => {
            let mut x = sat_set(p, a);
            x.toggle_range(..);
            x
        }
        Formula::Diamond(a, psi) => {
            let mut out = FixedBitSet::with_capacity(n);
            let Some(a) = p.action(a) else {
                return out;
            };
            let sets: Vec<FixedBitSet> = psi.parts.iter().map(|(_, g)| sat_set(p, g)).collect();
            let weights: Vec<P> = psi.parts.iter().map(|(w, _)| P::from_rational(w)).collect();
            for s in p.states() {
                if p.der(s, a).iter().any(|d| allocation_exists(d, &weights, &sets)) {
                    out.insert(s.index());
                }
            }
            out
        }
    }
}

/// Whether `d` splits as `Σ weights[i]·Δᵢ` with each `Δᵢ` supported inside
/// `sets[i]`.
pub(crate) fn allocation_exists<P: Scalar>(d: &Dist<P>, weights: &[P], sets: &[FixedBitSet]) -> bool {
    let support: Vec<StateId> = d.support().collect();
    let supply: Vec<P> = d.entries().iter().map(|(_, w)| w.clone()).collect();
    feasible_allocation(&supply, weights, |i, j| sets[j].contains(support[i].index())).is_some()
}

/// `s ⊨ f`.
pub fn sat_state<P: Scalar>(p: &Plts<P>, s: StateId, f: &Formula) -> bool {
    sat_set(p, f).contains(s.index())
}

/// `Δ ⊨ ψ`: a decomposition `Δ = Σ pᵢ·Δᵢ` exists with every state in the
/// support of `Δᵢ` satisfying `φᵢ`.
pub fn sat_dist<P: Scalar>(p: &Plts<P>, d: &Dist<P>, psi: &DistFormula) -> bool {
    let sets: Vec<FixedBitSet> = psi.parts.iter().map(|(_, g)| sat_set(p, g)).collect();
    let weights: Vec<P> = psi.parts.iter().map(|(w, _)| P::from_rational(w)).collect();
    allocation_exists(d, &weights, &sets)
}

/// A formula satisfied by `s` and refuted by `t`, or `None` when the two
/// are bisimilar.
///
/// With `n` the least level at which the approximants separate the pair,
/// some transition `s −a→ Δ` (or, failing that, one of `t`'s, which is then
/// negated) is matched by no `a`-transition of the other state up to level
/// `n − 1`. The formula is `<a>` over `⊕ Δ(s')·φ_{s'}`, where `φ_{s'}`
/// conjoins formulae separating `s'` from every successor of the other state
/// that `s'` is not related to at level `n − 1`.
pub fn distinguish<P: Scalar>(p: &Plts<P>, s: StateId, t: StateId) -> Option<Formula> {
    let chain = approximant_chain(p);
    if chain.last().expect("chain is nonempty").same_block(s, t) {
        return None;
    }
    let mut memo = HashMap::new();
    let f = Distinguisher { p, chain: &chain }.formula(s, t, &mut memo);
    debug_assert!(sat_state(p, s, &f) && !sat_state(p, t, &f));
    Some(f)
}

struct Distinguisher<'a, P> {
    p: &'a Plts<P>,
    chain: &'a [Partition],
}

impl<P: Scalar> Distinguisher<'_, P> {
    fn level(&self, s: StateId, t: StateId) -> usize {
        self.chain
            .iter()
            .position(|part| !part.same_block(s, t))
            .expect("pair is separated at some level")
    }

    fn formula(&self, s: StateId, t: StateId, memo: &mut HashMap<(StateId, StateId), Formula>) -> Formula {
        if let Some(f) = memo.get(&(s, t)) {
            return f.clone();
        }
        let n = self.level(s, t);
        let below = &self.chain[n - 1];
        let f = match self.unmatched(s, t, below) {
            Some((a, delta)) => self.choice(a, delta, t, below, memo),
            None => {
                let (a, theta) = self
                    .unmatched(t, s, below)
                    .expect("separated pair has an unmatched transition on one side");
                self.choice(a, theta, s, below, memo).neg()
            }
        };
        memo.insert((s, t), f.clone());
        f
    }

    /// First transition of `s` in model order that no transition of `t`
    /// with the same action matches up to `part`.
    fn unmatched(&self, s: StateId, t: StateId, part: &Partition) -> Option<(crate::model::ActionId, &Dist<P>)> {
        self.p.actions().find_map(|a| {
            self.p
                .der(s, a)
                .iter()
                .find(|d| !self.p.der(t, a).iter().any(|e| same_masses(d, e, part)))
                .map(|d| (a, d))
        })
    }

    fn choice(
        &self,
        a: crate::model::ActionId,
        delta: &Dist<P>,
        t: StateId,
        below: &Partition,
        memo: &mut HashMap<(StateId, StateId), Formula>,
    ) -> Formula {
        let mut targets: Vec<StateId> = self.p.der(t, a).iter().flat_map(|e| e.support()).collect();
        targets.sort();
        targets.dedup();
        let mut parts: Vec<(Rational, Formula)> = Vec::new();
        for (s1, w) in delta.entries() {
            let mut conj: Option<Formula> = None;
            let mut seen: Vec<Formula> = Vec::new();
            for &t1 in &targets {
                if below.same_block(*s1, t1) {
                    continue;
                }
                let g = self.formula(*s1, t1, memo);
                if seen.contains(&g) {
                    continue;
                }
                seen.push(g.clone());
                conj = Some(match conj {
                    None => g,
                    Some(c) => c.and(g),
                });
            }
            let phi = conj.unwrap_or(Formula::Top);
            let w = w.to_rational().expect("model weights are finite");
            match parts.iter_mut().find(|(_, f)| *f == phi) {
                Some((q, _)) => *q += w,
                None => parts.push((w, phi)),
            }
        }
        Formula::Diamond(
            self.p.action_name(a).to_string(),
            DistFormula::new(parts).expect("weights of a distribution sum to one"),
        )
    }
}

fn same_masses<P: Scalar>(d: &Dist<P>, e: &Dist<P>, part: &Partition) -> bool {
    let mut masses = vec![P::zero(); part.num_blocks()];
    for (s, w) in d.entries() {
        let b = part.block_of(*s);
        masses[b] = masses[b].clone() + w.clone();
    }
    for (s, w) in e.entries() {
        let b = part.block_of(*s);
        masses[b] = masses[b].clone() - w.clone();
    }
    masses.iter().all(Scalar::is_negligible)
}

/// Whether `s` and `t` satisfy the same formulae, decided through
/// bisimilarity; a separating formula is returned otherwise.
pub fn logically_equivalent<P: Scalar>(p: &Plts<P>, s: StateId, t: StateId) -> (bool, Option<Formula>) {
    match distinguish(p, s, t) {
        None => (true, None),
        Some(f) => (false, Some(f)),
    }
}
