//! Pseudometrics on states and the bisimilarity fixed point.
//!
//! `F(m)(s, t)` is the largest, over all actions, Hausdorff distance between
//! `der(s, a)` and `der(t, a)` under the Kantorovich lifting of `m`. Iterating
//! `F` from the constant-0 metric approaches the greatest state-metric, whose
//! kernel is bisimilarity.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::flow::{dual_potentials, min_cost_transport};
use crate::model::{Plts, StateId};
use crate::relation::StateRelation;
use crate::scalar::Scalar;

/// A symmetric, 1-bounded distance table with zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct PseudoMetric<P> {
    size: usize,
    table: Vec<P>,
}

impl<P: Scalar> PseudoMetric<P> {
    /// The constant-0 metric, top of the metric order.
    pub fn top(size: usize) -> Self {
        PseudoMetric {
            size,
            table: vec![P::zero(); size * size],
        }
    }

    /// The discrete metric (1 off the diagonal), bottom of the metric order.
    pub fn discrete(size: usize) -> Self {
        Self::from_fn(size, |s, t| if s == t { P::zero() } else { P::one() })
    }

    /// Builds a table from `f`, which is consulted for `s < t` only; the
    /// rest follows by symmetry and the zero diagonal.
    pub fn from_fn(size: usize, mut f: impl FnMut(StateId, StateId) -> P) -> Self {
        let mut m = Self::top(size);
        for i in 0..size {
            for j in i + 1..size {
                let v = f(StateId::new(i), StateId::new(j));
                m.table[i * size + j] = v.clone();
                m.table[j * size + i] = v;
            }
        }
        m
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, s: StateId, t: StateId) -> &P {
        &self.table[s.index() * self.size + t.index()]
    }

    /// Symmetry, zero diagonal, values in `[0, 1]` and the triangle
    /// inequality.
    pub fn is_pseudometric(&self) -> bool {
        let n = self.size;
        let v = |i: usize, j: usize| &self.table[i * n + j];
        let bounded = self
            .table
            .iter()
            .all(|x| *x >= P::zero() && *x <= P::one());
        bounded
            && (0..n).all(|i| v(i, i).is_zero())
            && (0..n).all(|i| (0..n).all(|j| v(i, j) == v(j, i)))
            && (0..n).all(|i| {
                (0..n).all(|j| {
                    (0..n).all(|k| {
                        let d = v(i, k).clone() + v(k, j).clone() - v(i, j).clone();
                        d >= P::zero() || d.is_negligible()
                    })
                })
            })
    }

    /// The metric order: `self ⪯ other` iff `self(s,t) >= other(s,t)`
    /// everywhere. The constant-0 metric is the top element.
    pub fn precedes(&self, other: &PseudoMetric<P>) -> bool {
        self.table
            .iter()
            .zip(&other.table)
            .all(|(a, b)| *a >= *b || (b.clone() - a.clone()).is_negligible())
    }

    /// Comma-separated table with a header row; `name` resolves state ids.
    pub fn to_csv(&self, name: impl Fn(StateId) -> String) -> String {
        let mut out = String::from("state");
        for j in 0..self.size {
            let _ = write!(out, ",{}", name(StateId::new(j)));
        }
        out.push('\n');
        for i in 0..self.size {
            out.push_str(&name(StateId::new(i)));
            for j in 0..self.size {
                let _ = write!(out, ",{}", self.table[i * self.size + j]);
            }
            out.push('\n');
        }
        out
    }
}

impl<P: Scalar> Serialize for PseudoMetric<P> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<String>> = (0..self.size)
            .map(|i| {
                self.table[i * self.size..(i + 1) * self.size]
                    .iter()
                    .map(ToString::to_string)
                    .collect()
            })
            .collect();
        let mut st = serializer.serialize_struct("PseudoMetric", 2)?;
        st.serialize_field("size", &self.size)?;
        st.serialize_field("table", &rows)?;
        st.end()
    }
}

/// The Kantorovich lifting `m̂(Δ, Θ)`: the cheapest transport of `Δ` onto
/// `Θ` with unit cost `m`.
pub fn kantorovich<P: Scalar>(m: &PseudoMetric<P>, delta: &Dist<P>, theta: &Dist<P>) -> P {
    if delta == theta {
        return P::zero();
    }
    let (supply, demand, costs) = transport_data(m, delta, theta);
    min_cost_transport(&supply, &demand, &costs).cost().clone()
}

fn transport_data<P: Scalar>(
    m: &PseudoMetric<P>,
    delta: &Dist<P>,
    theta: &Dist<P>,
) -> (Vec<P>, Vec<P>, Vec<Vec<P>>) {
    let supply = delta.entries().iter().map(|(_, w)| w.clone()).collect();
    let demand = theta.entries().iter().map(|(_, w)| w.clone()).collect();
    let costs = delta
        .support()
        .map(|s| theta.support().map(|t| m.get(s, t).clone()).collect())
        .collect();
    (supply, demand, costs)
}

/// The dual side of [`kantorovich`]: a potential `f` on all states with
/// `f(s) − f(t) <= m(s, t)` and `0 <= f <= 1`, maximising
/// `Σ (Δ(s) − Θ(s))·f(s)`. Returns the optimal value and `f`.
pub fn kantorovich_dual<P: Scalar>(
    m: &PseudoMetric<P>,
    delta: &Dist<P>,
    theta: &Dist<P>,
) -> (P, Vec<P>) {
    let (supply, demand, costs) = transport_data(m, delta, theta);
    let plan = min_cost_transport(&supply, &demand, &costs);
    let dual = dual_potentials(&plan);
    let right: Vec<StateId> = theta.support().collect();
    // extend the right-hand potentials to every state; the triangle
    // inequality of m makes the extension feasible
    let f: Vec<P> = (0..m.size())
        .map(|i| {
            right
                .iter()
                .zip(&dual.right)
                .map(|(&t, y)| y.clone() + m.get(StateId::new(i), t).clone())
                .reduce(Scalar::min_of)
                .expect("a distribution has nonempty support")
        })
        .collect();
    let low = f.iter().cloned().reduce(Scalar::min_of).unwrap_or_else(P::zero);
    let f: Vec<P> = f.into_iter().map(|v| v - low.clone()).collect();
    let value = (0..m.size()).fold(P::zero(), |acc, i| {
        let s = StateId::new(i);
        acc + (delta.prob(s) - theta.prob(s)) * f[i].clone()
    });
    debug_assert!(value.approx_eq(plan.cost()));
    (value, f)
}

/// The 0/1 metric of an equivalence: distance 0 inside classes, 1 across.
pub fn metric_from_relation<P: Scalar>(r: &StateRelation) -> Result<PseudoMetric<P>> {
    if !r.is_equivalence() {
        return Err(Error::NotEquivalence);
    }
    Ok(PseudoMetric::from_fn(r.universe(), |s, t| {
        if r.contains(s, t) {
            P::zero()
        } else {
            P::one()
        }
    }))
}

/// Hausdorff distance between two sets of distributions under `m̂`, with
/// `inf ∅ = 1` and `sup ∅ = 0`.
pub fn hausdorff<P: Scalar>(m: &PseudoMetric<P>, xs: &[Dist<P>], ys: &[Dist<P>]) -> P {
    hausdorff_by(xs.len(), ys.len(), |i, j| kantorovich(m, &xs[i], &ys[j]))
}

fn hausdorff_by<P: Scalar>(n: usize, k: usize, mut d: impl FnMut(usize, usize) -> P) -> P {
    let mut table = vec![vec![None; k]; n];
    let mut at = |i: usize, j: usize| -> P {
        table[i][j].get_or_insert_with(|| d(i, j)).clone()
    };
    let inf_or_one = |vals: Vec<P>| vals.into_iter().reduce(Scalar::min_of).unwrap_or_else(P::one);
    let mut out = P::zero();
    for i in 0..n {
        let v = inf_or_one((0..k).map(|j| at(i, j)).collect());
        out = out.max_of(v);
    }
    for j in 0..k {
        let v = inf_or_one((0..n).map(|i| at(i, j)).collect());
        out = out.max_of(v);
    }
    out
}

/// One application of `F`, over the full action alphabet of `p`.
pub fn metric_step<P: Scalar>(p: &Plts<P>, m: &PseudoMetric<P>) -> PseudoMetric<P> {
    assert_eq!(p.num_states(), m.size(), "metric and model sizes differ");
    // Kantorovich values shared between state pairs
    // (keyed by address: the lifting is symmetric and f64 is not hashable)
    let mut memo: HashMap<(usize, usize), P> = HashMap::new();
    PseudoMetric::from_fn(p.num_states(), |s, t| {
        let mut best = P::zero();
        for a in p.actions() {
            let (xs, ys) = (p.der(s, a), p.der(t, a));
            let h = hausdorff_by(xs.len(), ys.len(), |i, j| {
                let (x, y) = (&xs[i] as *const Dist<P> as usize, &ys[j] as *const Dist<P> as usize);
                memo.entry((x.min(y), x.max(y)))
                    .or_insert_with(|| kantorovich(m, &xs[i], &ys[j]))
                    .clone()
            });
            best = best.max_of(h);
        }
        best
    })
}

/// Whether `m ⪯ F(m)`, i.e. `F(m)(s,t) <= m(s,t)` everywhere.
pub fn is_state_metric<P: Scalar>(p: &Plts<P>, m: &PseudoMetric<P>) -> bool {
    m.precedes(&metric_step(p, m))
}

/// `Fᵏ(⊤)` where `⊤` is the constant-0 metric.
pub fn iterate_metric<P: Scalar>(p: &Plts<P>, k: usize) -> PseudoMetric<P> {
    let mut m = PseudoMetric::top(p.num_states());
    for _ in 0..k {
        m = metric_step(p, &m);
    }
    m
}

/// Pairs at distance zero.
pub fn kernel<P: Scalar>(m: &PseudoMetric<P>) -> StateRelation {
    let n = m.size();
    let pairs = (0..n)
        .flat_map(|i| (0..n).map(move |j| (StateId::new(i), StateId::new(j))))
        .filter(|&(s, t)| m.get(s, t).is_negligible());
    StateRelation::from_pairs(n, pairs)
}

/// Result of iterating `F` until its kernel stops changing.
#[derive(Clone, Debug, PartialEq)]
pub struct Stabilised<P> {
    /// The least `k` with `kernel(Fᵏ(⊤)) = kernel(Fᵏ⁺¹(⊤))`.
    pub index: usize,
    /// `Fᵏ(⊤)` for that `k`.
    pub metric: PseudoMetric<P>,
    /// The stable kernel, which is bisimilarity.
    pub kernel: StateRelation,
}

/// Iterates `F` from the top until two consecutive kernels agree.
pub fn stabilise_kernel<P: Scalar>(p: &Plts<P>) -> Stabilised<P> {
    let mut m = PseudoMetric::top(p.num_states());
    let mut k = kernel(&m);
    let mut index = 0;
    loop {
        let next = metric_step(p, &m);
        let next_kernel = kernel(&next);
        if next_kernel == k {
            return Stabilised {
                index,
                metric: m,
                kernel: k,
            };
        }
        m = next;
        k = next_kernel;
        index += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_plts;
    use crate::scalar::{ratio, Rational};

    const E1: &str = "states: s t t2 u v\ns a -> 1/2 u, 1/2 v\nt a -> 1/2 u, 1/2 v\nt2 a -> 2/3 u, 1/3 v\nu b -> 1 u\n";

    fn s(i: usize) -> StateId {
        StateId::new(i)
    }

    fn d(entries: &[(usize, i64, i64)]) -> Dist<Rational> {
        Dist::new(entries.iter().map(|&(i, n, m)| (s(i), ratio(n, m)))).unwrap()
    }

    #[test]
    fn kantorovich_examples() {
        let m = PseudoMetric::<Rational>::discrete(3);
        let delta = d(&[(0, 1, 2), (1, 1, 2)]);
        assert_eq!(kantorovich(&m, &delta, &delta), ratio(0, 1));
        assert_eq!(kantorovich(&m, &d(&[(0, 1, 1)]), &d(&[(1, 1, 1)])), ratio(1, 1));
        let theta = d(&[(0, 2, 3), (1, 1, 3)]);
        assert_eq!(kantorovich(&m, &delta, &theta), ratio(1, 6));
        let (v, f) = kantorovich_dual(&m, &delta, &theta);
        assert_eq!(v, ratio(1, 6));
        assert!(f.iter().all(|x| *x >= ratio(0, 1) && *x <= ratio(1, 1)));
    }

    #[test]
    fn relation_metrics() {
        let id: PseudoMetric<Rational> = metric_from_relation(&StateRelation::identity(3)).unwrap();
        assert_eq!(id, PseudoMetric::discrete(3));
        let full: PseudoMetric<Rational> = metric_from_relation(&StateRelation::full(3)).unwrap();
        assert_eq!(full, PseudoMetric::top(3));
        assert!(metric_from_relation::<Rational>(&StateRelation::empty(2)).is_err());
        assert_eq!(kernel(&full), StateRelation::full(3));
        assert_eq!(kernel(&id), StateRelation::identity(3));
    }

    #[test]
    fn hausdorff_conventions() {
        let m = PseudoMetric::<Rational>::discrete(2);
        let x = d(&[(0, 1, 1)]);
        let y = d(&[(1, 1, 1)]);
        assert_eq!(hausdorff(&m, &[], &[]), ratio(0, 1));
        assert_eq!(hausdorff(&m, &[x.clone()], &[]), ratio(1, 1));
        assert_eq!(hausdorff(&m, &[x.clone()], &[y.clone()]), ratio(1, 1));
        assert_eq!(hausdorff(&m, &[x.clone(), y.clone()], &[x]), ratio(1, 1));
    }

    #[test]
    fn e1_iteration() {
        let p = parse_plts(E1).unwrap();
        let st = |n: &str| p.state(n).unwrap();
        assert_eq!(iterate_metric(&p, 0), PseudoMetric::top(5));
        let m1 = iterate_metric(&p, 1);
        assert_eq!(m1.get(st("u"), st("v")), &ratio(1, 1));
        let m2 = iterate_metric(&p, 2);
        assert_eq!(m2.get(st("s"), st("t2")), &ratio(1, 6));
        assert_eq!(m2.get(st("s"), st("t")), &ratio(0, 1));
        assert!(m2.is_pseudometric());
        let stable = stabilise_kernel(&p);
        assert_eq!(stable.index, 2);
        assert_eq!(stable.kernel, crate::bisim::bisimilarity(&p).to_relation());
    }

    #[test]
    fn state_metric_examples() {
        let dead = parse_plts("states: x y").unwrap();
        assert!(is_state_metric(&dead, &PseudoMetric::discrete(2)));
        assert_eq!(metric_step(&dead, &PseudoMetric::discrete(2)), PseudoMetric::top(2));
        let p = parse_plts(E1).unwrap();
        let bis = crate::bisim::bisimilarity(&p).to_relation();
        assert!(is_state_metric(&p, &metric_from_relation(&bis).unwrap()));
        let full = metric_from_relation(&StateRelation::full(5)).unwrap();
        assert!(!is_state_metric(&p, &full));
    }

    #[test]
    fn csv_and_json() {
        let m = PseudoMetric::from_fn(2, |_, _| ratio(1, 6));
        assert_eq!(m.to_csv(|s| format!("x{}", s.index())), "state,x0,x1\nx0,0,1/6\nx1,1/6,0\n");
        assert_eq!(
            serde_json::to_string(&m).unwrap(),
            r#"{"size":2,"table":[["0","1/6"],["1/6","0"]]}"#
        );
    }
}
