//! The probabilistic modal mu-calculus in positive normal form:
//! evaluation, characteristic equation systems and the rules that turn a
//! system into a single characteristic formula.
//!
//! Formulae are immutable DAGs; substitution shares subterms, so a formula
//! that would be exponential as a tree stays small in memory.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::rc::Rc;

use fixedbitset::FixedBitSet;
use num_traits::{One, Zero};

use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::logic::allocation_exists;
use crate::model::{Plts, StateId};
use crate::scalar::{Rational, Scalar};
use crate::syntax::{parse_ast, wrap, Ast, Kind};

/// Default limit on distinct formula nodes built by [`char_formula`].
pub const DEFAULT_NODE_BUDGET: usize = 1_000_000;

#[derive(Clone)]
pub struct MuFormula(Rc<Inner>);

struct Inner {
    node: MuNode,
    free: BTreeSet<String>,
    tree_size: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MuNode {
    Top,
    Bot,
    Diamond(String, MuDistFormula),
    Box(String, MuDistFormula),
    And(MuFormula, MuFormula),
    Or(MuFormula, MuFormula),
    Var(String),
    Mu(String, MuFormula),
    Nu(String, MuFormula),
}

/// A choice between sums `⊕ pᵢ·φᵢ`; a distribution satisfies it when it
/// satisfies one of the sums.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MuDistFormula {
    alternatives: Vec<Vec<(Rational, MuFormula)>>,
}

impl MuDistFormula {
    pub fn new(alternatives: Vec<Vec<(Rational, MuFormula)>>) -> Result<Self> {
        if alternatives.is_empty() {
            return Err(Error::WeightSum { sum: "0".into() });
        }
        for parts in &alternatives {
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
        }
        Ok(MuDistFormula { alternatives })
    }

    /// A single sum.
    pub fn sum(parts: Vec<(Rational, MuFormula)>) -> Result<Self> {
        Self::new(vec![parts])
    }

    /// `1·φ`.
    pub fn certain(phi: MuFormula) -> Self {
        MuDistFormula {
            alternatives: vec![vec![(Rational::one(), phi)]],
        }
    }

    pub fn alternatives(&self) -> &[Vec<(Rational, MuFormula)>] {
        &self.alternatives
    }

    fn formulas(&self) -> impl Iterator<Item = &MuFormula> {
        self.alternatives.iter().flatten().map(|(_, f)| f)
    }

    fn map(&self, mut f: impl FnMut(&MuFormula) -> MuFormula) -> MuDistFormula {
        MuDistFormula {
            alternatives: self
                .alternatives
                .iter()
                .map(|parts| parts.iter().map(|(p, g)| (p.clone(), f(g))).collect())
                .collect(),
        }
    }
}

impl MuFormula {
    fn build(node: MuNode) -> MuFormula {
        let mut free = BTreeSet::new();
        let mut tree_size: u64 = 1;
        let mut absorb = |f: &MuFormula, free: &mut BTreeSet<String>| {
            free.extend(f.0.free.iter().cloned());
            tree_size = tree_size.saturating_add(f.0.tree_size);
        };
        match &node {
            MuNode::Top | MuNode::Bot => {}
            MuNode::Var(x) => {
                free.insert(x.clone());
            }
            MuNode::And(a, b) | MuNode::Or(a, b) => {
                absorb(a, &mut free);
                absorb(b, &mut free);
            }
            MuNode::Diamond(_, psi) | MuNode::Box(_, psi) => {
                for f in psi.formulas() {
                    absorb(f, &mut free);
                }
            }
            MuNode::Mu(x, body) | MuNode::Nu(x, body) => {
                absorb(body, &mut free);
                free.remove(x);
            }
        }
        MuFormula(Rc::new(Inner {
            node,
            free,
            tree_size,
        }))
    }

    pub fn top() -> MuFormula {
        Self::build(MuNode::Top)
    }

    pub fn bot() -> MuFormula {
        Self::build(MuNode::Bot)
    }

    pub fn var(x: impl Into<String>) -> MuFormula {
        Self::build(MuNode::Var(x.into()))
    }

    pub fn and(a: MuFormula, b: MuFormula) -> MuFormula {
        Self::build(MuNode::And(a, b))
    }

    pub fn or(a: MuFormula, b: MuFormula) -> MuFormula {
        Self::build(MuNode::Or(a, b))
    }

    pub fn diamond(action: impl Into<String>, psi: MuDistFormula) -> MuFormula {
        Self::build(MuNode::Diamond(action.into(), psi))
    }

    pub fn boxed(action: impl Into<String>, psi: MuDistFormula) -> MuFormula {
        Self::build(MuNode::Box(action.into(), psi))
    }

    pub fn mu(x: impl Into<String>, body: MuFormula) -> MuFormula {
        Self::build(MuNode::Mu(x.into(), body))
    }

    pub fn nu(x: impl Into<String>, body: MuFormula) -> MuFormula {
        Self::build(MuNode::Nu(x.into(), body))
    }

    /// `a ∧ b`, dropping a `⊤` operand.
    pub fn and_simplified(a: MuFormula, b: MuFormula) -> MuFormula {
        match (a.node(), b.node()) {
            (MuNode::Top, _) => b,
            (_, MuNode::Top) => a,
            _ => Self::and(a, b),
        }
    }

    /// `a ∨ b`, dropping a `⊥` operand.
    pub fn or_simplified(a: MuFormula, b: MuFormula) -> MuFormula {
        match (a.node(), b.node()) {
            (MuNode::Bot, _) => b,
            (_, MuNode::Bot) => a,
            _ => Self::or(a, b),
        }
    }

    /// `νX.φ`, or just `φ` when `X` does not occur free in it.
    pub fn nu_simplified(x: impl Into<String>, body: MuFormula) -> MuFormula {
        let x = x.into();
        if body.free_vars().contains(&x) {
            Self::nu(x, body)
        } else {
            body
        }
    }

    pub fn node(&self) -> &MuNode {
        &self.0.node
    }

    pub fn free_vars(&self) -> &BTreeSet<String> {
        &self.0.free
    }

    pub fn is_closed(&self) -> bool {
        self.0.free.is_empty()
    }

    /// Size of the formula written out as a tree (saturating).
    pub fn tree_size(&self) -> u64 {
        self.0.tree_size
    }

    /// Number of distinct nodes in the shared representation.
    pub fn dag_size(&self) -> usize {
        let mut seen = HashSet::new();
        let mut stack = vec![self];
        while let Some(f) = stack.pop() {
            if !seen.insert(f.ptr()) {
                continue;
            }
            match f.node() {
                MuNode::Top | MuNode::Bot | MuNode::Var(_) => {}
                MuNode::And(a, b) | MuNode::Or(a, b) => {
                    stack.push(a);
                    stack.push(b);
                }
                MuNode::Diamond(_, psi) | MuNode::Box(_, psi) => stack.extend(psi.formulas()),
                MuNode::Mu(_, body) | MuNode::Nu(_, body) => stack.push(body),
            }
        }
        seen.len()
    }

    /// Actions mentioned by the formula, sorted.
    pub fn actions(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        let mut out = BTreeSet::new();
        let mut stack = vec![self];
        while let Some(f) = stack.pop() {
            if !seen.insert(f.ptr()) {
                continue;
            }
            match f.node() {
                MuNode::Top | MuNode::Bot | MuNode::Var(_) => {}
                MuNode::And(a, b) | MuNode::Or(a, b) => {
                    stack.push(a);
                    stack.push(b);
                }
                MuNode::Diamond(a, psi) | MuNode::Box(a, psi) => {
                    out.insert(a.clone());
                    stack.extend(psi.formulas());
                }
                MuNode::Mu(_, body) | MuNode::Nu(_, body) => stack.push(body),
            }
        }
        out.into_iter().collect()
    }

    fn ptr(&self) -> usize {
        Rc::as_ptr(&self.0) as usize
    }

    /// Capture-avoiding substitution of `replacement` for the free
    /// occurrences of `x`.
    pub fn substitute(&self, x: &str, replacement: &MuFormula) -> MuFormula {
        Substitution {
            x,
            replacement,
            memo: HashMap::new(),
        }
        .apply(self)
    }

    fn kind(&self) -> Kind {
        match self.node() {
            MuNode::Mu(..) | MuNode::Nu(..) => Kind::Fix,
            MuNode::Or(..) => Kind::Or,
            MuNode::And(..) => Kind::And,
            _ => Kind::Atom,
        }
    }
}

impl PartialEq for MuFormula {
    fn eq(&self, other: &Self) -> bool {
        Rc::ptr_eq(&self.0, &other.0) || self.0.node == other.0.node
    }
}

impl Eq for MuFormula {}

impl fmt::Debug for MuFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for MuFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            MuNode::Top => write!(f, "tt"),
            MuNode::Bot => write!(f, "ff"),
            MuNode::Var(x) => write!(f, "{x}"),
            MuNode::And(a, b) => write!(
                f,
                "{} & {}",
                wrap(a.kind(), 2, a.to_string()),
                wrap(b.kind(), 3, b.to_string())
            ),
            MuNode::Or(a, b) => write!(
                f,
                "{} | {}",
                wrap(a.kind(), 1, a.to_string()),
                wrap(b.kind(), 2, b.to_string())
            ),
            MuNode::Diamond(a, psi) => write!(f, "<{a}>({psi})"),
            MuNode::Box(a, psi) => write!(f, "[{a}]({psi})"),
            MuNode::Mu(x, body) => write!(f, "mu {x}. {body}"),
            MuNode::Nu(x, body) => write!(f, "nu {x}. {body}"),
        }
    }
}

impl fmt::Display for MuDistFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, parts) in self.alternatives.iter().enumerate() {
            if i > 0 {
                write!(f, " (|) ")?;
            }
            for (j, (p, phi)) in parts.iter().enumerate() {
                if j > 0 {
                    write!(f, " (+) ")?;
                }
                write!(f, "{p}*{phi}")?;
            }
        }
        Ok(())
    }
}

struct Substitution<'a> {
    x: &'a str,
    replacement: &'a MuFormula,
    memo: HashMap<usize, MuFormula>,
}

impl Substitution<'_> {
    fn apply(&mut self, f: &MuFormula) -> MuFormula {
        if !f.free_vars().contains(self.x) {
            return f.clone();
        }
        if let Some(g) = self.memo.get(&f.ptr()) {
            return g.clone();
        }
        let g = match f.node() {
            MuNode::Var(_) => self.replacement.clone(),
            MuNode::And(a, b) => MuFormula::and_simplified(self.apply(a), self.apply(b)),
            MuNode::Or(a, b) => MuFormula::or_simplified(self.apply(a), self.apply(b)),
            MuNode::Diamond(a, psi) => MuFormula::diamond(a.clone(), psi.map(|g| self.apply(g))),
            MuNode::Box(a, psi) => MuFormula::boxed(a.clone(), psi.map(|g| self.apply(g))),
            MuNode::Mu(y, body) | MuNode::Nu(y, body) => {
                let (y, body) = if self.replacement.free_vars().contains(y) {
                    let fresh = fresh_name(y, |n| {
                        body.free_vars().contains(n) || self.replacement.free_vars().contains(n) || n == self.x
                    });
                    let renamed = body.substitute(y, &MuFormula::var(fresh.clone()));
                    (fresh, renamed)
                } else {
                    (y.clone(), body.clone())
                };
                let body = self.apply(&body);
                if matches!(f.node(), MuNode::Mu(..)) {
                    MuFormula::mu(y, body)
                } else {
                    MuFormula::nu_simplified(y, body)
                }
            }
            MuNode::Top | MuNode::Bot => unreachable!("closed nodes are returned unchanged"),
        };
        self.memo.insert(f.ptr(), g.clone());
        g
    }
}

fn fresh_name(base: &str, mut taken: impl FnMut(&str) -> bool) -> String {
    let mut name = format!("{base}'");
    while taken(&name) {
        name.push('\'');
    }
    name
}

const LOGIC: &str = "the mu-calculus in positive normal form";

/// Parses a formula, renaming bound variables apart so that every binder
/// introduces a distinct name.
pub fn parse_mu_formula(text: &str) -> Result<MuFormula> {
    let ast = parse_ast(text)?;
    let mut used = BTreeSet::new();
    collect_free(&ast, &mut Vec::new(), &mut used);
    let mut scope = Vec::new();
    from_ast(ast, &mut scope, &mut used)
}

fn collect_free(ast: &Ast, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    match ast {
        Ast::Tt | Ast::Ff => {}
        Ast::Var(x) => {
            if !bound.contains(x) {
                out.insert(x.clone());
            }
        }
        Ast::Not(a) => collect_free(a, bound, out),
        Ast::And(a, b) | Ast::Or(a, b) => {
            collect_free(a, bound, out);
            collect_free(b, bound, out);
        }
        Ast::Diamond(_, alts) | Ast::Box(_, alts) => {
            for (_, f) in alts.iter().flatten() {
                collect_free(f, bound, out);
            }
        }
        Ast::Mu(x, body) | Ast::Nu(x, body) => {
            bound.push(x.clone());
            collect_free(body, bound, out);
            bound.pop();
        }
    }
}

fn from_ast(ast: Ast, scope: &mut Vec<(String, String)>, used: &mut BTreeSet<String>) -> Result<MuFormula> {
    Ok(match ast {
        Ast::Tt => MuFormula::top(),
        Ast::Ff => MuFormula::bot(),
        Ast::Not(_) => {
            return Err(Error::GrammarMode {
                connective: "~".into(),
                logic: LOGIC,
            })
        }
        Ast::Var(x) => {
            let name = scope
                .iter()
                .rev()
                .find(|(from, _)| *from == x)
                .map_or(x, |(_, to)| to.clone());
            MuFormula::var(name)
        }
        Ast::And(a, b) => MuFormula::and(from_ast(*a, scope, used)?, from_ast(*b, scope, used)?),
        Ast::Or(a, b) => MuFormula::or(from_ast(*a, scope, used)?, from_ast(*b, scope, used)?),
        Ast::Diamond(a, alts) => MuFormula::diamond(a, dist_from_ast(alts, scope, used)?),
        Ast::Box(a, alts) => MuFormula::boxed(a, dist_from_ast(alts, scope, used)?),
        Ast::Mu(x, body) => {
            let (name, body) = bind(x, *body, scope, used)?;
            MuFormula::mu(name, body)
        }
        Ast::Nu(x, body) => {
            let (name, body) = bind(x, *body, scope, used)?;
            MuFormula::nu(name, body)
        }
    })
}

fn bind(
    x: String,
    body: Ast,
    scope: &mut Vec<(String, String)>,
    used: &mut BTreeSet<String>,
) -> Result<(String, MuFormula)> {
    let name = if used.contains(&x) {
        fresh_name(&x, |n| used.contains(n))
    } else {
        x.clone()
    };
    used.insert(name.clone());
    scope.push((x, name.clone()));
    let body = from_ast(body, scope, used);
    scope.pop();
    Ok((name, body?))
}

fn dist_from_ast(
    alts: Vec<Vec<(Rational, Ast)>>,
    scope: &mut Vec<(String, String)>,
    used: &mut BTreeSet<String>,
) -> Result<MuDistFormula> {
    let alternatives = alts
        .into_iter()
        .map(|parts| {
            parts
                .into_iter()
                .map(|(p, f)| Ok((p, from_ast(f, scope, used)?)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    MuDistFormula::new(alternatives)
}

/// Binds variables to sets of states.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Environment {
    map: BTreeMap<String, FixedBitSet>,
}

impl Environment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, x: impl Into<String>, states: FixedBitSet) {
        self.map.insert(x.into(), states);
    }

    pub fn get(&self, x: &str) -> Option<&FixedBitSet> {
        self.map.get(x)
    }

    pub fn contains(&self, x: &str) -> bool {
        self.map.contains_key(x)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &FixedBitSet)> {
        self.map.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// All states of an `n`-state model.
pub fn full_set(n: usize) -> FixedBitSet {
    let mut all = FixedBitSet::with_capacity(n);
    all.insert_range(..);
    all
}

/// The set of states satisfying `f` under `env`.
pub fn eval<P: Scalar>(p: &Plts<P>, f: &MuFormula, env: &Environment) -> Result<FixedBitSet> {
    check_bound(f, env)?;
    Ok(Evaluator::new(p, env).eval(f))
}

/// Whether `d` satisfies `psi` under `env`.
pub fn eval_dist<P: Scalar>(p: &Plts<P>, d: &Dist<P>, psi: &MuDistFormula, env: &Environment) -> Result<bool> {
    for f in psi.formulas() {
        check_bound(f, env)?;
    }
    let mut ev = Evaluator::new(p, env);
    let alts = ev.alternative_sets(psi);
    Ok(ev.satisfies(d, &alts))
}

fn check_bound(f: &MuFormula, env: &Environment) -> Result<()> {
    match f.free_vars().iter().find(|x| !env.contains(x)) {
        Some(x) => Err(Error::UnboundVariable(x.clone())),
        None => Ok(()),
    }
}

struct Evaluator<'a, P> {
    p: &'a Plts<P>,
    env: BTreeMap<String, FixedBitSet>,
    memo: HashMap<(usize, Vec<FixedBitSet>), FixedBitSet>,
    /// Last result of each fixpoint node with the free-variable values it
    /// was computed under; used to start later iterations closer to the
    /// answer when the environment moved in the right direction.
    warm: HashMap<usize, (Vec<FixedBitSet>, FixedBitSet)>,
    splits: HashMap<(usize, usize, Vec<bool>), bool>,
}

struct Alternative<P> {
    id: usize,
    weights: Vec<P>,
    sets: Vec<FixedBitSet>,
}

impl<'a, P: Scalar> Evaluator<'a, P> {
    fn new(p: &'a Plts<P>, env: &Environment) -> Self {
        Evaluator {
            p,
            env: env.map.clone(),
            memo: HashMap::new(),
            warm: HashMap::new(),
            splits: HashMap::new(),
        }
    }

    fn free_values(&self, f: &MuFormula) -> Vec<FixedBitSet> {
        f.free_vars()
            .iter()
            .map(|x| self.env.get(x).expect("free variables are bound").clone())
            .collect()
    }

    fn eval(&mut self, f: &MuFormula) -> FixedBitSet {
        let n = self.p.num_states();
        match f.node() {
            MuNode::Top => return full_set(n),
            MuNode::Bot => return FixedBitSet::with_capacity(n),
            MuNode::Var(x) => return self.env[x].clone(),
            _ => {}
        }
        let key = (f.ptr(), self.free_values(f));
        if let Some(v) = self.memo.get(&key) {
            return v.clone();
        }
        let result = match f.node() {
            MuNode::And(a, b) => {
                let mut x = self.eval(a);
                if !x.is_clear() {
                    x.intersect_with(&self.eval(b));
                }
                x
            }
            MuNode::Or(a, b) => {
                let mut x = self.eval(a);
                if x.count_ones(..) < n {
                    x.union_with(&self.eval(b));
                }
                x
            }
            MuNode::Diamond(a, psi) | MuNode::Box(a, psi) => {
                let diamond = matches!(f.node(), MuNode::Diamond(..));
                let mut out = FixedBitSet::with_capacity(n);
                let Some(a) = self.p.action(a) else {
                    if !diamond {
                        out.insert_range(..);
                    }
                    return out;
                };
                let alts = self.alternative_sets(psi);
                let p = self.p;
                for s in p.states() {
                    let mut holds = !diamond;
                    for d in p.der(s, a) {
                        if self.satisfies(d, &alts) == diamond {
                            holds = diamond;
                            break;
                        }
                    }
                    if holds {
                        out.insert(s.index());
                    }
                }
                out
            }
            MuNode::Mu(x, body) | MuNode::Nu(x, body) => {
                let least = matches!(f.node(), MuNode::Mu(..));
                let start = match self.warm.get(&f.ptr()) {
                    Some((old_env, old)) if warm_start_applies(least, old_env, &key.1) => old.clone(),
                    _ if least => FixedBitSet::with_capacity(n),
                    _ => full_set(n),
                };
                let v = self.iterate(x, body, start);
                self.warm.insert(f.ptr(), (key.1.clone(), v.clone()));
                v
            }
            MuNode::Top | MuNode::Bot | MuNode::Var(_) => unreachable!(),
        };
        self.memo.insert(key, result.clone());
        result
    }

    fn iterate(&mut self, x: &str, body: &MuFormula, mut v: FixedBitSet) -> FixedBitSet {
        let saved = self.env.remove(x);
        loop {
            self.env.insert(x.to_string(), v.clone());
            let w = self.eval(body);
            if w == v {
                break;
            }
            v = w;
        }
        match saved {
            Some(old) => self.env.insert(x.to_string(), old),
            None => self.env.remove(x),
        };
        v
    }

    fn alternative_sets(&mut self, psi: &MuDistFormula) -> Vec<Alternative<P>> {
        psi.alternatives
            .iter()
            .map(|parts| Alternative {
                id: parts.as_ptr() as usize,
                weights: parts.iter().map(|(w, _)| P::from_rational(w)).collect(),
                sets: parts.iter().map(|(_, g)| self.eval(g)).collect(),
            })
            .collect()
    }

    /// Whether `d` satisfies one of the alternatives. Answers depend only on
    /// which support states lie in which sets, so they are cached on that
    /// pattern.
    fn satisfies(&mut self, d: &Dist<P>, alts: &[Alternative<P>]) -> bool {
        alts.iter().any(|alt| {
            let pattern: Vec<bool> = alt
                .sets
                .iter()
                .flat_map(|set| d.support().map(|s| set.contains(s.index())))
                .collect();
            let key = (d as *const Dist<P> as usize, alt.id, pattern);
            *self
                .splits
                .entry(key)
                .or_insert_with(|| allocation_exists(d, &alt.weights, &alt.sets))
        })
    }
}

/// A least fixpoint may resume from an earlier result computed under a
/// pointwise smaller environment, a greatest one under a larger.
fn warm_start_applies(least: bool, old: &[FixedBitSet], new: &[FixedBitSet]) -> bool {
    old.iter().zip(new).all(|(o, n)| if least { o.is_subset(n) } else { n.is_subset(o) })
}

/// An ordered list of equations `Xᵢ = φᵢ` whose right-hand sides mention
/// only the variables it defines.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquationSystem {
    equations: Vec<(String, MuFormula)>,
}

impl EquationSystem {
    pub fn new(equations: Vec<(String, MuFormula)>) -> Result<Self> {
        let vars: BTreeSet<&String> = equations.iter().map(|(x, _)| x).collect();
        if vars.len() != equations.len() {
            return Err(Error::EquationSystem("a variable is defined twice".into()));
        }
        for (x, phi) in &equations {
            if let Some(y) = phi.free_vars().iter().find(|y| !vars.contains(y)) {
                return Err(Error::EquationSystem(format!(
                    "the equation for {x} mentions undefined variable {y}"
                )));
            }
        }
        Ok(EquationSystem { equations })
    }

    pub fn equations(&self) -> &[(String, MuFormula)] {
        &self.equations
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.equations.iter().map(|(x, _)| x.as_str())
    }

    pub fn get(&self, x: &str) -> Option<&MuFormula> {
        self.equations.iter().find(|(y, _)| y == x).map(|(_, f)| f)
    }

    pub fn len(&self) -> usize {
        self.equations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equations.is_empty()
    }

    /// The same equations with `x` moved to the front.
    pub fn with_first(&self, x: &str) -> Result<Self> {
        let i = self
            .equations
            .iter()
            .position(|(y, _)| y == x)
            .ok_or_else(|| Error::UnboundVariable(x.to_string()))?;
        let mut equations = self.equations.clone();
        let eq = equations.remove(i);
        equations.insert(0, eq);
        Ok(EquationSystem { equations })
    }

    /// Number of distinct nodes across all right-hand sides.
    pub fn dag_size(&self) -> usize {
        let mut seen = HashSet::new();
        let mut stack: Vec<&MuFormula> = self.equations.iter().map(|(_, f)| f).collect();
        while let Some(f) = stack.pop() {
            if !seen.insert(f.ptr()) {
                continue;
            }
            match f.node() {
                MuNode::Top | MuNode::Bot | MuNode::Var(_) => {}
                MuNode::And(a, b) | MuNode::Or(a, b) => {
                    stack.push(a);
                    stack.push(b);
                }
                MuNode::Diamond(_, psi) | MuNode::Box(_, psi) => stack.extend(psi.formulas()),
                MuNode::Mu(_, body) | MuNode::Nu(_, body) => stack.push(body),
            }
        }
        seen.len()
    }
}

impl fmt::Display for EquationSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (x, phi) in &self.equations {
            writeln!(f, "{x} = {phi}")?;
        }
        Ok(())
    }
}

/// Name of the variable standing for state `s` in the characteristic
/// system.
pub fn state_variable<P: Scalar>(p: &Plts<P>, s: StateId) -> String {
    format!("X_{}", p.state_name(s))
}

/// One equation per state: `X_s` requires every transition of `s` to be
/// matched and every transition of a satisfying state to match one of
/// `s`'s.
pub fn characteristic_system<P: Scalar>(p: &Plts<P>) -> EquationSystem {
    let var = |s: StateId| MuFormula::var(state_variable(p, s));
    let dist_var = |d: &Dist<P>| {
        let mut parts: Vec<(Rational, MuFormula)> = d
            .entries()
            .iter()
            .map(|(s, w)| (w.to_rational().expect("model weights are finite"), var(*s)))
            .collect();
        // Float weights are taken exactly; the last one absorbs rounding.
        let head = parts[..parts.len() - 1]
            .iter()
            .fold(Rational::zero(), |acc, (w, _)| acc + w);
        parts.last_mut().expect("distributions are nonempty").0 = Rational::one() - head;
        parts
    };
    let conj = |fs: Vec<MuFormula>| fs.into_iter().reduce(MuFormula::and).unwrap_or_else(MuFormula::top);
    let equations = p
        .states()
        .map(|s| {
            let mut diamonds = Vec::new();
            let mut boxes = Vec::new();
            for a in p.actions() {
                let name = p.action_name(a);
                let ders = p.der(s, a);
                for d in ders {
                    diamonds.push(MuFormula::diamond(name, MuDistFormula::sum(dist_var(d)).expect("weights sum to one")));
                }
                let choice = if ders.is_empty() {
                    MuDistFormula::certain(MuFormula::bot())
                } else {
                    MuDistFormula::new(ders.iter().map(dist_var).collect()).expect("weights sum to one")
                };
                boxes.push(MuFormula::boxed(name, choice));
            }
            let phi = boxes.into_iter().fold(conj(diamonds), MuFormula::and);
            (state_variable(p, s), phi)
        })
        .collect();
    EquationSystem::new(equations).expect("one equation per state over state variables")
}

/// The largest solution, by simultaneous descending iteration from the
/// environment mapping every variable to all states.
pub fn greatest_solution<P: Scalar>(p: &Plts<P>, e: &EquationSystem) -> Environment {
    let n = p.num_states();
    let mut env = Environment::new();
    for x in e.variables() {
        env.insert(x, full_set(n));
    }
    loop {
        let mut ev = Evaluator::new(p, &env);
        let mut next = Environment::new();
        for (x, phi) in &e.equations {
            next.insert(x.clone(), ev.eval(phi));
        }
        if next == env {
            return env;
        }
        env = next;
    }
}

/// Closes the last equation: `Xₙ = φₙ` becomes `Xₙ = νXₙ.φₙ`.
pub fn rule_close(e: &EquationSystem) -> EquationSystem {
    let mut equations = e.equations.clone();
    if let Some((x, phi)) = equations.last_mut() {
        *phi = MuFormula::nu_simplified(x.clone(), phi.clone());
    }
    EquationSystem { equations }
}

/// Substitutes the last right-hand side for its variable in every other
/// equation.
pub fn rule_substitute(e: &EquationSystem) -> EquationSystem {
    let Some((x, phi)) = e.equations.last() else {
        return e.clone();
    };
    let mut sub = Substitution {
        x,
        replacement: phi,
        memo: HashMap::new(),
    };
    let n = e.equations.len();
    let equations = e
        .equations
        .iter()
        .enumerate()
        .map(|(i, (y, f))| (y.clone(), if i + 1 < n { sub.apply(f) } else { f.clone() }))
        .collect();
    EquationSystem { equations }
}

/// Drops the last equation, provided no right-hand side mentions its
/// variable.
pub fn rule_eliminate(e: &EquationSystem) -> Result<EquationSystem> {
    let Some((x, _)) = e.equations.last() else {
        return Err(Error::EquationSystem("the system is empty".into()));
    };
    if e.equations.iter().any(|(_, f)| f.free_vars().contains(x)) {
        return Err(Error::EquationSystem(format!("{x} still occurs free")));
    }
    Ok(EquationSystem {
        equations: e.equations[..e.equations.len() - 1].to_vec(),
    })
}

/// A closed formula denoting the value of `x` in the largest solution of
/// `e`, built by eliminating equations from the last one up.
pub fn char_formula(e: &EquationSystem, x: &str) -> Result<MuFormula> {
    char_formula_with_budget(e, x, DEFAULT_NODE_BUDGET)
}

/// As [`char_formula`], failing once more than `budget` distinct nodes are
/// live.
pub fn char_formula_with_budget(e: &EquationSystem, x: &str, budget: usize) -> Result<MuFormula> {
    let mut e = e.with_first(x)?;
    loop {
        e = rule_close(&e);
        if e.len() == 1 {
            break;
        }
        e = rule_eliminate(&rule_substitute(&e))?;
        let size = e.dag_size();
        if size > budget {
            return Err(Error::NodeBudget { size, budget });
        }
    }
    Ok(e.equations.pop().expect("one equation remains").1)
}

/// The characteristic formula of `s`.
pub fn state_formula<P: Scalar>(p: &Plts<P>, s: StateId, budget: usize) -> Result<MuFormula> {
    char_formula_with_budget(&characteristic_system(p), &state_variable(p, s), budget)
}

/// States satisfying the characteristic formula of `s`.
pub fn characteristic_class<P: Scalar>(p: &Plts<P>, s: StateId) -> Result<FixedBitSet> {
    let f = state_formula(p, s, DEFAULT_NODE_BUDGET)?;
    eval(p, &f, &Environment::new())
}

/// Whether `t` satisfies the characteristic formula of `s`, which holds
/// exactly when the two are bisimilar.
pub fn characteristic_check<P: Scalar>(p: &Plts<P>, s: StateId, t: StateId) -> Result<bool> {
    Ok(characteristic_class(p, s)?.contains(t.index()))
}
