//! Random instance generators and brute-force oracles shared by the
//! integration tests. Oracles here deliberately avoid the library's flow
//! and refinement code.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{Signed, Zero};
use pbisim::dist::Dist;
use pbisim::logic::Formula;
use pbisim::mucalc::{MuDistFormula, MuFormula, MuNode};
use pbisim::model::{Plts, PltsBuilder};
use pbisim::relation::StateRelation;
use pbisim::{Rational, StateId};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

/// Positive integers summing to `total`, `parts` of them.
fn composition(rng: &mut TestRng, total: i64, parts: usize) -> Vec<i64> {
    let mut cuts: Vec<i64> = (1..total).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<i64> = cuts.into_iter().take(parts - 1).collect();
    cuts.sort();
    let mut out = Vec::with_capacity(parts);
    let mut prev = 0;
    for c in cuts.into_iter().chain(std::iter::once(total)) {
        out.push(c - prev);
        prev = c;
    }
    out
}

/// A distribution over states `0..n` with support of at most `max_support`
/// states and weights over a common denominator of at most `max_den`.
pub fn random_dist(rng: &mut TestRng, n: usize, max_support: usize, max_den: i64) -> Dist<Rational> {
    let k = rng.gen_range(1..=max_support.min(n));
    let den = rng.gen_range(k as i64..=max_den.max(k as i64));
    let mut states: Vec<usize> = (0..n).collect();
    states.shuffle(rng);
    let weights = composition(rng, den, k);
    Dist::new(
        states
            .into_iter()
            .zip(weights)
            .map(|(s, w)| (StateId::new(s), q(w, den))),
    )
    .unwrap()
}

pub struct ModelShape {
    pub max_states: usize,
    pub max_actions: usize,
    pub max_transitions: usize,
    pub max_support: usize,
    pub max_den: i64,
    /// Probability that a state copies the transitions of an earlier one,
    /// which makes bisimilar pairs common.
    pub copy_bias: f64,
}

impl Default for ModelShape {
    fn default() -> Self {
        ModelShape {
            max_states: 8,
            max_actions: 3,
            max_transitions: 3,
            max_support: 3,
            max_den: 8,
            copy_bias: 0.4,
        }
    }
}

const ACTIONS: [&str; 4] = ["a", "b", "c", "d"];

pub fn random_plts(rng: &mut TestRng, shape: &ModelShape) -> Plts<Rational> {
    let n = rng.gen_range(1..=shape.max_states);
    random_plts_with(rng, shape, n)
}

pub fn random_plts_with(rng: &mut TestRng, shape: &ModelShape, n: usize) -> Plts<Rational> {
    let num_actions = rng.gen_range(1..=shape.max_actions);
    let mut b = PltsBuilder::new();
    for i in 0..n {
        b.add_state(&format!("s{i}"));
    }
    let actions: Vec<_> = ACTIONS[..num_actions].iter().map(|a| b.add_action(a)).collect();
    let mut table: Vec<Vec<(usize, Dist<Rational>)>> = Vec::new();
    for i in 0..n {
        let rows = if i > 0 && rng.gen_bool(shape.copy_bias) {
            table[rng.gen_range(0..i)].clone()
        } else {
            let mut rows = Vec::new();
            for a in 0..num_actions {
                for _ in 0..rng.gen_range(0..=shape.max_transitions) {
                    rows.push((a, random_dist(rng, n, shape.max_support, shape.max_den)));
                }
            }
            rows
        };
        for (a, d) in &rows {
            // duplicates are rejected by the builder; skipping them is fine
            let _ = b.add_transition(StateId::new(i), actions[*a], d.clone());
        }
        table.push(rows);
    }
    b.build()
}

/// A model where every distribution is a point mass.
pub fn random_lts(rng: &mut TestRng, n: usize, num_actions: usize, max_transitions: usize) -> Plts<Rational> {
    let mut b = PltsBuilder::new();
    for i in 0..n {
        b.add_state(&format!("s{i}"));
    }
    let actions: Vec<_> = ACTIONS[..num_actions].iter().map(|a| b.add_action(a)).collect();
    for i in 0..n {
        for &a in &actions {
            for _ in 0..rng.gen_range(0..=max_transitions) {
                let t = rng.gen_range(0..n);
                let _ = b.add_transition(StateId::new(i), a, Dist::point(StateId::new(t)));
            }
        }
    }
    b.build()
}

pub fn random_equivalence(rng: &mut TestRng, n: usize) -> StateRelation {
    let blocks = rng.gen_range(1..=n);
    let ids: Vec<usize> = (0..n).map(|_| rng.gen_range(0..blocks)).collect();
    StateRelation::from_pairs(
        n,
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| ids[i] == ids[j])
            .map(|(i, j)| (StateId::new(i), StateId::new(j))),
    )
}

pub fn random_relation(rng: &mut TestRng, n: usize, density: f64) -> StateRelation {
    let mut r = StateRelation::empty(n);
    for i in 0..n {
        for j in 0..n {
            if rng.gen_bool(density) {
                r.insert(StateId::new(i), StateId::new(j));
            }
        }
    }
    r
}

pub fn all_pairs(n: usize) -> impl Iterator<Item = (StateId, StateId)> {
    (0..n).flat_map(move |i| (0..n).map(move |j| (StateId::new(i), StateId::new(j))))
}

/// Every subset of `items`.
fn subsets<T: Copy>(items: &[T]) -> Vec<Vec<T>> {
    (0u32..1 << items.len())
        .map(|mask| {
            items
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, x)| *x)
                .collect()
        })
        .collect()
}

/// Lifting by Hall's condition: `Δ R̂ Θ` iff every set `A` of states in the
/// support of `Δ` satisfies `Δ(A) <= Θ(R(A))`.
pub fn lifting_oracle(delta: &Dist<Rational>, theta: &Dist<Rational>, related: impl Fn(StateId, StateId) -> bool) -> bool {
    let left: Vec<StateId> = delta.support().collect();
    subsets(&left).into_iter().all(|a| {
        let mass_a = a.iter().fold(Rational::zero(), |acc, s| acc + delta.prob(*s));
        let image = theta
            .support()
            .filter(|t| a.iter().any(|s| related(*s, *t)))
            .fold(Rational::zero(), |acc, t| acc + theta.prob(t));
        mass_a <= image
    })
}

/// Class masses agree for every block of an equivalence.
pub fn class_mass_oracle(delta: &Dist<Rational>, theta: &Dist<Rational>, r: &StateRelation) -> bool {
    let n = r.universe();
    (0..n).all(|i| {
        let class = |s: StateId| r.contains(StateId::new(i), s);
        let md = delta.support().filter(|s| class(*s)).fold(Rational::zero(), |a, s| a + delta.prob(s));
        let mt = theta.support().filter(|s| class(*s)).fold(Rational::zero(), |a, s| a + theta.prob(s));
        md == mt
    })
}

/// Distribution satisfaction by Hall's condition: weights `p` can be split
/// over `Δ` with part `i` supported in `sets[i]` iff every group `I` of parts
/// fits into the mass of the union of their sets.
pub fn split_oracle(delta: &Dist<Rational>, weights: &[Rational], sets: &[BTreeSet<StateId>]) -> bool {
    let idx: Vec<usize> = (0..weights.len()).collect();
    subsets(&idx).into_iter().all(|group| {
        let need = group.iter().fold(Rational::zero(), |a, i| a + &weights[*i]);
        let have = delta
            .support()
            .filter(|s| group.iter().any(|i| sets[*i].contains(s)))
            .fold(Rational::zero(), |a, s| a + delta.prob(s));
        need <= have
    })
}

pub fn total_variation(delta: &Dist<Rational>, theta: &Dist<Rational>) -> Rational {
    let states: BTreeSet<StateId> = delta.support().chain(theta.support()).collect();
    states
        .into_iter()
        .fold(Rational::zero(), |a, s| a + (delta.prob(s) - theta.prob(s)).abs())
        / Rational::from_integer(2.into())
}

/// Whether `r` is a bisimulation (or, with `simulation`, a simulation),
/// lifting checked through Hall's condition.
pub fn relation_oracle(p: &Plts<Rational>, r: &StateRelation, simulation: bool) -> bool {
    let related = |s: StateId, t: StateId| r.contains(s, t);
    r.pairs().all(|(s, t)| {
        let forth = p.actions().all(|a| {
            p.der(s, a)
                .iter()
                .all(|d| p.der(t, a).iter().any(|e| lifting_oracle(d, e, related)))
        });
        let back = simulation
            || p.actions().all(|a| {
                p.der(t, a)
                    .iter()
                    .all(|e| p.der(s, a).iter().any(|d| lifting_oracle(d, e, related)))
            });
        forth && back
    })
}

/// Strong bisimilarity of a point-mass model by naive refinement: split
/// blocks by the set of (action, target block) pairs until stable.
pub fn lts_bisimilarity(p: &Plts<Rational>) -> Vec<usize> {
    let n = p.num_states();
    let mut block = vec![0usize; n];
    loop {
        let sigs: Vec<(usize, BTreeSet<(usize, usize)>)> = (0..n)
            .map(|i| {
                let s = StateId::new(i);
                let sig = p
                    .actions()
                    .flat_map(|a| {
                        p.der(s, a)
                            .iter()
                            .map(move |d| (a.index(), d.is_point().expect("point masses only").index()))
                    })
                    .map(|(a, t)| (a, block[t]))
                    .collect();
                (block[i], sig)
            })
            .collect();
        let mut ids: BTreeMap<&(usize, BTreeSet<(usize, usize)>), usize> = BTreeMap::new();
        let next: Vec<usize> = sigs
            .iter()
            .map(|sig| {
                let k = ids.len();
                *ids.entry(sig).or_insert(k)
            })
            .collect();
        let old_count = block.iter().collect::<BTreeSet<_>>().len();
        if ids.len() == old_count {
            return next;
        }
        block = next;
    }
}

/// Satisfying states of a formula of the modal logic, by direct recursion
/// with distribution formulae decided through [`split_oracle`].
pub fn logic_oracle(p: &Plts<Rational>, f: &Formula) -> BTreeSet<StateId> {
    let all: BTreeSet<StateId> = p.states().collect();
    match f {
        Formula::Top => all,
        Formula::And(a, b) => logic_oracle(p, a).intersection(&logic_oracle(p, b)).copied().collect(),
        Formula::Neg(a) => all.difference(&logic_oracle(p, a)).copied().collect(),
        Formula::Diamond(a, psi) => {
            let weights: Vec<Rational> = psi.parts().iter().map(|(w, _)| w.clone()).collect();
            let sets: Vec<BTreeSet<StateId>> = psi.parts().iter().map(|(_, g)| logic_oracle(p, g)).collect();
            all.into_iter()
                .filter(|&s| p.der_named(s, a).iter().any(|d| split_oracle(d, &weights, &sets)))
                .collect()
        }
    }
}

pub type SetEnv = BTreeMap<String, BTreeSet<StateId>>;

/// Mu-calculus semantics with fixpoints found by trying every subset of
/// states: the least fixpoint is the meet of all pre-fixpoints, the
/// greatest the join of all post-fixpoints.
pub fn mu_oracle(p: &Plts<Rational>, f: &MuFormula, env: &SetEnv) -> BTreeSet<StateId> {
    let all: BTreeSet<StateId> = p.states().collect();
    match f.node() {
        MuNode::Top => all,
        MuNode::Bot => BTreeSet::new(),
        MuNode::Var(x) => env[x].clone(),
        MuNode::And(a, b) => mu_oracle(p, a, env).intersection(&mu_oracle(p, b, env)).copied().collect(),
        MuNode::Or(a, b) => mu_oracle(p, a, env).union(&mu_oracle(p, b, env)).copied().collect(),
        MuNode::Diamond(a, psi) | MuNode::Box(a, psi) => {
            let diamond = matches!(f.node(), MuNode::Diamond(..));
            let alts: Vec<(Vec<Rational>, Vec<BTreeSet<StateId>>)> = psi
                .alternatives()
                .iter()
                .map(|parts| {
                    (
                        parts.iter().map(|(w, _)| w.clone()).collect(),
                        parts.iter().map(|(_, g)| mu_oracle(p, g, env)).collect(),
                    )
                })
                .collect();
            let sat = |d: &Dist<Rational>| alts.iter().any(|(w, sets)| split_oracle(d, w, sets));
            all.into_iter()
                .filter(|&s| {
                    let der = p.der_named(s, a);
                    if diamond {
                        der.iter().any(sat)
                    } else {
                        der.iter().all(sat)
                    }
                })
                .collect()
        }
        MuNode::Mu(x, body) | MuNode::Nu(x, body) => {
            let least = matches!(f.node(), MuNode::Mu(..));
            let states: Vec<StateId> = all.iter().copied().collect();
            let mut acc: BTreeSet<StateId> = if least { all.clone() } else { BTreeSet::new() };
            for v in subsets(&states) {
                let v: BTreeSet<StateId> = v.into_iter().collect();
                let mut inner = env.clone();
                inner.insert(x.clone(), v.clone());
                let image = mu_oracle(p, body, &inner);
                if least && image.is_subset(&v) {
                    acc = acc.intersection(&v).copied().collect();
                }
                if !least && v.is_subset(&image) {
                    acc = acc.union(&v).copied().collect();
                }
            }
            acc
        }
    }
}

/// Random distribution formula weights: `k` positive parts summing to one.
pub fn random_weights(rng: &mut TestRng, k: usize, max_den: i64) -> Vec<Rational> {
    let den = rng.gen_range(k as i64..=max_den.max(k as i64));
    composition(rng, den, k).into_iter().map(|w| q(w, den)).collect()
}

/// A random mu-calculus formula of nesting depth at most `depth` whose free
/// variables are among `vars`.
pub fn random_mu_formula(rng: &mut TestRng, depth: usize, vars: &mut Vec<String>, actions: &[&str]) -> MuFormula {
    if depth == 0 {
        let choice = rng.gen_range(0..if vars.is_empty() { 2 } else { 5 });
        return match choice {
            0 => MuFormula::top(),
            1 => MuFormula::bot(),
            _ => MuFormula::var(vars.choose(rng).unwrap().clone()),
        };
    }
    match rng.gen_range(0..8) {
        0 => MuFormula::and(
            random_mu_formula(rng, depth - 1, vars, actions),
            random_mu_formula(rng, depth - 1, vars, actions),
        ),
        1 => MuFormula::or(
            random_mu_formula(rng, depth - 1, vars, actions),
            random_mu_formula(rng, depth - 1, vars, actions),
        ),
        2 | 3 | 4 => {
            let alternatives = (0..rng.gen_range(1..=2))
                .map(|_| {
                    let k = rng.gen_range(1..=2);
                    random_weights(rng, k, 4)
                        .into_iter()
                        .map(|w| (w, random_mu_formula(rng, depth - 1, vars, actions)))
                        .collect()
                })
                .collect();
            let psi = MuDistFormula::new(alternatives).unwrap();
            let a = *actions.choose(rng).unwrap();
            if rng.gen_bool(0.5) {
                MuFormula::diamond(a, psi)
            } else {
                MuFormula::boxed(a, psi)
            }
        }
        _ => {
            let x = format!("X{}", vars.len());
            vars.push(x.clone());
            let body = random_mu_formula(rng, depth - 1, vars, actions);
            vars.pop();
            if rng.gen_bool(0.5) {
                MuFormula::mu(x, body)
            } else {
                MuFormula::nu(x, body)
            }
        }
    }
}
