//! Probabilistic labelled transition systems.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense index of a state in a [`Plts`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StateId(u32);

impl StateId {
    pub fn new(index: usize) -> Self {
        StateId(u32::try_from(index).expect("state index fits in u32"))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Dense index of an action in a [`Plts`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ActionId(u32);

impl ActionId {
    pub fn new(index: usize) -> Self {
        ActionId(u32::try_from(index).expect("action index fits in u32"))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// One transition `source --action--> target`, in model order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition<P> {
    pub source: StateId,
    pub action: ActionId,
    pub target: Dist<P>,
}

/// A finitary pLTS. Immutable once built; see [`PltsBuilder`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Plts<P> {
    state_names: Vec<String>,
    action_names: Vec<String>,
    state_index: HashMap<String, StateId>,
    action_index: HashMap<String, ActionId>,
    transitions: Vec<Transition<P>>,
    // successors[state][action] in model order
    successors: Vec<Vec<Vec<Dist<P>>>>,
}

impl<P: Scalar> Plts<P> {
    pub fn num_states(&self) -> usize {
        self.state_names.len()
    }

    pub fn num_actions(&self) -> usize {
        self.action_names.len()
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> + Clone {
        (0..self.num_states()).map(StateId::new)
    }

    pub fn actions(&self) -> impl Iterator<Item = ActionId> + Clone {
        (0..self.num_actions()).map(ActionId::new)
    }

    pub fn state_name(&self, s: StateId) -> &str {
        &self.state_names[s.index()]
    }

    pub fn action_name(&self, a: ActionId) -> &str {
        &self.action_names[a.index()]
    }

    pub fn state(&self, name: &str) -> Result<StateId> {
        self.state_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownState(name.to_string()))
    }

    pub fn action(&self, name: &str) -> Option<ActionId> {
        self.action_index.get(name).copied()
    }

    /// All transitions in model (insertion) order.
    pub fn transitions(&self) -> &[Transition<P>] {
        &self.transitions
    }

    /// `der(s, a)`: the successor distributions of `s` under `a`.
    pub fn der(&self, s: StateId, a: ActionId) -> &[Dist<P>] {
        &self.successors[s.index()][a.index()]
    }

    /// `der(s, a)` looked up by action name; unknown actions have no
    /// successors.
    pub fn der_named(&self, s: StateId, action: &str) -> &[Dist<P>] {
        match self.action(action) {
            Some(a) => self.der(s, a),
            None => &[],
        }
    }

    pub fn enabled(&self, s: StateId) -> impl Iterator<Item = ActionId> + '_ {
        self.actions().filter(move |&a| !self.der(s, a).is_empty())
    }

    pub fn is_deadlocked(&self, s: StateId) -> bool {
        self.successors[s.index()].iter().all(|ds| ds.is_empty())
    }

    /// Whether every transition leads to a point distribution.
    pub fn is_lts(&self) -> bool {
        self.transitions.iter().all(|t| t.target.is_point().is_some())
    }

    /// Re-expresses every probability in another scalar type.
    pub fn convert<Q: Scalar>(&self) -> Plts<Q> {
        let mut b = PltsBuilder::<Q>::new();
        for name in &self.state_names {
            b.add_state(name);
        }
        for name in &self.action_names {
            b.add_action(name);
        }
        for t in &self.transitions {
            b.add_transition(t.source, t.action, t.target.convert())
                .expect("conversion preserves distinct transitions");
        }
        b.build()
    }
}

impl<P: Scalar> fmt::Display for Plts<P> {
    /// Renders the model in the text format accepted by
    /// [`crate::parse::parse_plts`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "states:")?;
        for name in &self.state_names {
            write!(f, " {name}")?;
        }
        writeln!(f)?;
        for t in &self.transitions {
            write!(
                f,
                "{} {} ->",
                self.state_name(t.source),
                self.action_name(t.action)
            )?;
            for (i, (s, w)) in t.target.entries().iter().enumerate() {
                let sep = if i == 0 { " " } else { ", " };
                write!(f, "{sep}{w} {}", self.state_name(*s))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Incremental construction of a [`Plts`].
#[derive(Clone, Debug)]
pub struct PltsBuilder<P> {
    state_names: Vec<String>,
    action_names: Vec<String>,
    state_index: HashMap<String, StateId>,
    action_index: HashMap<String, ActionId>,
    transitions: Vec<Transition<P>>,
}

impl<P: Scalar> Default for PltsBuilder<P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P: Scalar> PltsBuilder<P> {
    pub fn new() -> Self {
        PltsBuilder {
            state_names: Vec::new(),
            action_names: Vec::new(),
            state_index: HashMap::new(),
            action_index: HashMap::new(),
            transitions: Vec::new(),
        }
    }

    /// Returns the id of `name`, registering it if new.
    pub fn add_state(&mut self, name: &str) -> StateId {
        if let Some(&id) = self.state_index.get(name) {
            return id;
        }
        let id = StateId::new(self.state_names.len());
        self.state_names.push(name.to_string());
        self.state_index.insert(name.to_string(), id);
        id
    }

    pub fn add_action(&mut self, name: &str) -> ActionId {
        if let Some(&id) = self.action_index.get(name) {
            return id;
        }
        let id = ActionId::new(self.action_names.len());
        self.action_names.push(name.to_string());
        self.action_index.insert(name.to_string(), id);
        id
    }

    pub fn num_states(&self) -> usize {
        self.state_names.len()
    }

    /// Adds `source --action--> target`. Rejects a second identical transition.
    pub fn add_transition(
        &mut self,
        source: StateId,
        action: ActionId,
        target: Dist<P>,
    ) -> Result<()> {
        let n = self.state_names.len();
        for s in std::iter::once(source).chain(target.support()) {
            if s.index() >= n {
                return Err(Error::StateOutOfRange(s.index()));
            }
        }
        if action.index() >= self.action_names.len() {
            return Err(Error::UnknownAction(format!("#{}", action.index())));
        }
        if self
            .transitions
            .iter()
            .any(|t| t.source == source && t.action == action && t.target == target)
        {
            return Err(Error::DuplicateTransition {
                line: 0,
                message: format!(
                    "{} {} already has this successor distribution",
                    self.state_names[source.index()],
                    self.action_names[action.index()]
                ),
            });
        }
        self.transitions.push(Transition {
            source,
            action,
            target,
        });
        Ok(())
    }

    /// Convenience wrapper resolving names, registering them as needed.
    pub fn transition(&mut self, source: &str, action: &str, target: &[(&str, P)]) -> Result<()> {
        let s = self.add_state(source);
        let a = self.add_action(action);
        let entries: Vec<_> = target
            .iter()
            .map(|(name, w)| (self.add_state(name), w.clone()))
            .collect();
        let d = Dist::new(entries)?;
        self.add_transition(s, a, d)
    }

    pub fn build(self) -> Plts<P> {
        let mut successors =
            vec![vec![Vec::new(); self.action_names.len()]; self.state_names.len()];
        for t in &self.transitions {
            successors[t.source.index()][t.action.index()].push(t.target.clone());
        }
        Plts {
            state_names: self.state_names,
            action_names: self.action_names,
            state_index: self.state_index,
            action_index: self.action_index,
            transitions: self.transitions,
            successors,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{ratio, Rational};

    #[test]
    fn builder_registers_names_and_der() {
        let mut b = PltsBuilder::<Rational>::new();
        b.transition("s", "a", &[("u", ratio(1, 2)), ("v", ratio(1, 2))])
            .unwrap();
        b.transition("u", "b", &[("u", ratio(1, 1))]).unwrap();
        let p = b.build();
        assert_eq!(p.num_states(), 3);
        assert_eq!(p.num_actions(), 2);
        let (s, u, v) = (p.state("s").unwrap(), p.state("u").unwrap(), p.state("v").unwrap());
        let (a, bb) = (p.action("a").unwrap(), p.action("b").unwrap());
        assert_eq!(p.der(u, bb), &[Dist::point(u)]);
        assert!(p.der(v, bb).is_empty());
        assert_eq!(p.der(s, a).len(), 1);
        assert!(p.is_deadlocked(v));
        assert!(!p.is_lts());
        assert_eq!(p.der_named(s, "zzz").len(), 0);
        assert!(matches!(p.state("nope"), Err(Error::UnknownState(_))));
    }

    #[test]
    fn duplicate_transition_rejected() {
        let mut b = PltsBuilder::<Rational>::new();
        b.transition("s", "a", &[("t", ratio(1, 1))]).unwrap();
        assert!(matches!(
            b.transition("s", "a", &[("t", ratio(1, 1))]),
            Err(Error::DuplicateTransition { .. })
        ));
        // same action, different target is nondeterminism, not duplication
        b.transition("s", "a", &[("s", ratio(1, 1))]).unwrap();
    }
}
