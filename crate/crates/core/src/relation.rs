//! Binary relations and partitions over the states of a model.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::model::StateId;

/// A finite relation `R ⊆ S × S` over a universe of `n` states.
#[derive(Clone, PartialEq, Eq)]
pub struct StateRelation {
    universe: usize,
    pairs: BTreeSet<(StateId, StateId)>,
    equivalence: bool,
}

impl StateRelation {
    pub fn empty(universe: usize) -> Self {
        Self::from_pairs(universe, std::iter::empty())
    }

    pub fn identity(universe: usize) -> Self {
        Self::from_pairs(universe, (0..universe).map(|i| (StateId::new(i), StateId::new(i))))
    }

    pub fn full(universe: usize) -> Self {
        let all = (0..universe)
            .flat_map(|i| (0..universe).map(move |j| (StateId::new(i), StateId::new(j))));
        Self::from_pairs(universe, all)
    }

    /// # Panics
    /// If a pair mentions a state outside the universe.
    pub fn from_pairs(universe: usize, pairs: impl IntoIterator<Item = (StateId, StateId)>) -> Self {
        let pairs: BTreeSet<_> = pairs.into_iter().collect();
        assert!(
            pairs
                .iter()
                .all(|(s, t)| s.index() < universe && t.index() < universe),
            "relation pair outside its universe"
        );
        let mut r = StateRelation {
            universe,
            pairs,
            equivalence: false,
        };
        r.equivalence = r.compute_equivalence();
        r
    }

    /// The equivalence whose classes are the blocks of `p`.
    pub fn from_partition(p: &Partition) -> Self {
        let mut pairs = BTreeSet::new();
        for block in p.blocks() {
            for &s in block {
                for &t in block {
                    pairs.insert((s, t));
                }
            }
        }
        StateRelation {
            universe: p.universe(),
            pairs,
            equivalence: true,
        }
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn contains(&self, s: StateId, t: StateId) -> bool {
        self.pairs.contains(&(s, t))
    }

    pub fn insert(&mut self, s: StateId, t: StateId) {
        assert!(s.index() < self.universe && t.index() < self.universe);
        if self.pairs.insert((s, t)) {
            self.equivalence = self.compute_equivalence();
        }
    }

    pub fn remove(&mut self, s: StateId, t: StateId) {
        if self.pairs.remove(&(s, t)) {
            self.equivalence = self.compute_equivalence();
        }
    }

    pub fn pairs(&self) -> impl Iterator<Item = (StateId, StateId)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn is_subset(&self, other: &StateRelation) -> bool {
        self.pairs.is_subset(&other.pairs)
    }

    pub fn inverse(&self) -> StateRelation {
        StateRelation::from_pairs(self.universe, self.pairs().map(|(s, t)| (t, s)))
    }

    pub fn is_reflexive(&self) -> bool {
        (0..self.universe).all(|i| self.contains(StateId::new(i), StateId::new(i)))
    }

    pub fn is_symmetric(&self) -> bool {
        self.pairs.iter().all(|&(s, t)| self.contains(t, s))
    }

    pub fn is_transitive(&self) -> bool {
        let mut succ: HashMap<StateId, Vec<StateId>> = HashMap::new();
        for &(s, t) in &self.pairs {
            succ.entry(s).or_default().push(t);
        }
        self.pairs.iter().all(|&(s, t)| {
            succ.get(&t)
                .map_or(true, |us| us.iter().all(|&u| self.contains(s, u)))
        })
    }

    /// Reflexive, symmetric and transitive over the whole universe.
    pub fn is_equivalence(&self) -> bool {
        self.equivalence
    }

    fn compute_equivalence(&self) -> bool {
        self.is_reflexive() && self.is_symmetric() && self.is_transitive()
    }

    /// Equivalence classes, or `None` if this is not an equivalence.
    pub fn classes(&self) -> Option<Partition> {
        if !self.equivalence {
            return None;
        }
        let mut block_of = vec![usize::MAX; self.universe];
        let mut next = 0;
        for i in 0..self.universe {
            if block_of[i] != usize::MAX {
                continue;
            }
            for j in i..self.universe {
                if self.contains(StateId::new(i), StateId::new(j)) {
                    block_of[j] = next;
                }
            }
            next += 1;
        }
        Some(Partition::from_block_ids(&block_of))
    }
}

impl fmt::Debug for StateRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set()
            .entries(self.pairs.iter().map(|(s, t)| (s.index(), t.index())))
            .finish()
    }
}

/// A partition of `{0, .., n-1}` into nonempty disjoint blocks. Blocks are
/// ordered by their least member and sorted internally, so equal partitions
/// compare equal.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    blocks: Vec<Vec<StateId>>,
    block_of: Vec<usize>,
}

impl Partition {
    /// Builds the partition in which states with equal ids share a block.
    pub fn from_block_ids<K: Eq + std::hash::Hash + Clone>(ids: &[K]) -> Self {
        let mut index: HashMap<K, usize> = HashMap::new();
        let mut blocks: Vec<Vec<StateId>> = Vec::new();
        let mut block_of = Vec::with_capacity(ids.len());
        for (i, k) in ids.iter().enumerate() {
            let b = *index.entry(k.clone()).or_insert_with(|| {
                blocks.push(Vec::new());
                blocks.len() - 1
            });
            blocks[b].push(StateId::new(i));
            block_of.push(b);
        }
        Partition { blocks, block_of }
    }

    pub fn single_block(n: usize) -> Self {
        Self::from_block_ids(&vec![0u8; n])
    }

    pub fn discrete(n: usize) -> Self {
        Self::from_block_ids(&(0..n).collect::<Vec<_>>())
    }

    pub fn universe(&self) -> usize {
        self.block_of.len()
    }

    pub fn blocks(&self) -> &[Vec<StateId>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_of(&self, s: StateId) -> usize {
        self.block_of[s.index()]
    }

    pub fn same_block(&self, s: StateId, t: StateId) -> bool {
        self.block_of[s.index()] == self.block_of[t.index()]
    }

    /// Whether every block of `self` lies inside a block of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        self.blocks
            .iter()
            .all(|b| b.iter().all(|&s| coarser.same_block(b[0], s)))
    }

    pub fn to_relation(&self) -> StateRelation {
        StateRelation::from_partition(self)
    }
}

impl fmt::Debug for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(
                self.blocks
                    .iter()
                    .map(|b| b.iter().map(|s| s.index()).collect::<Vec<_>>()),
            )
            .finish()
    }
}
