//! Finite-support probability distributions over states.

use std::fmt;


use crate::error::{Error, Result};
use crate::model::StateId;
use crate::scalar::Scalar;

/// A distribution in canonical form: support sorted by state index, every
/// weight strictly positive, weights summing to one.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Dist<P> {
    entries: Vec<(StateId, P)>,
}

impl<P: Scalar> Dist<P> {
    /// The point distribution on `s`.
    pub fn point(s: StateId) -> Self {
        Dist {
            entries: vec![(s, P::one())],
        }
    }

    /// Builds a distribution from possibly repeated, unsorted entries.
    /// Repeated states are merged, zero weights dropped.
    pub fn new(entries: impl IntoIterator<Item = (StateId, P)>) -> Result<Self> {
        let mut entries: Vec<(StateId, P)> = entries.into_iter().collect();
        if let Some((_, w)) = entries.iter().find(|(_, w)| *w < P::zero()) {
            return Err(Error::BadWeight {
                weight: w.to_string(),
            });
        }
        entries.sort_by_key(|(s, _)| *s);
        let mut merged: Vec<(StateId, P)> = Vec::with_capacity(entries.len());
        for (s, w) in entries {
            match merged.last_mut() {
                Some((last, acc)) if *last == s => *acc = acc.clone() + w,
                _ => merged.push((s, w)),
            }
        }
        merged.retain(|(_, w)| !w.is_negligible());
        let sum = merged.iter().fold(P::zero(), |acc, (_, w)| acc + w.clone());
        if !sum.approx_eq(&P::one()) {
            return Err(Error::WeightSum {
                sum: sum.to_string(),
            });
        }
        Ok(Dist { entries: merged })
    }

    /// Pointwise weighted sum `sum_i p_i * d_i`. The weights must be
    /// nonnegative and sum to one.
    pub fn convex_sum<'a>(parts: impl IntoIterator<Item = (P, &'a Dist<P>)>) -> Result<Self>
    where
        P: 'a,
    {
        let mut total = P::zero();
        let mut acc = Vec::new();
        for (p, d) in parts {
            if p < P::zero() {
                return Err(Error::BadWeight {
                    weight: p.to_string(),
                });
            }
            total = total + p.clone();
            for (s, w) in &d.entries {
                acc.push((*s, p.clone() * w.clone()));
            }
        }
        if !total.approx_eq(&P::one()) {
            return Err(Error::WeightSum {
                sum: total.to_string(),
            });
        }
        Dist::new(acc)
    }

    pub fn prob(&self, s: StateId) -> P {
        match self.entries.binary_search_by_key(&s, |(t, _)| *t) {
            Ok(i) => self.entries[i].1.clone(),
            Err(_) => P::zero(),
        }
    }

    /// Total mass on a set of states.
    pub fn mass(&self, mut member: impl FnMut(StateId) -> bool) -> P {
        self.entries
            .iter()
            .filter(|(s, _)| member(*s))
            .fold(P::zero(), |acc, (_, w)| acc + w.clone())
    }

    pub fn support(&self) -> impl Iterator<Item = StateId> + '_ {
        self.entries.iter().map(|(s, _)| *s)
    }

    pub fn entries(&self) -> &[(StateId, P)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_point(&self) -> Option<StateId> {
        match self.entries.as_slice() {
            [(s, _)] => Some(*s),
            _ => None,
        }
    }

    /// Product distribution over pairs, `(d1 x d2)(s, t) = d1(s) * d2(t)`.
    pub fn product(&self, other: &Dist<P>) -> ProductDist<P> {
        let mut entries = Vec::with_capacity(self.len() * other.len());
        for (s, p) in &self.entries {
            for (t, q) in &other.entries {
                entries.push(((*s, *t), p.clone() * q.clone()));
            }
        }
        ProductDist { entries }
    }

    /// Re-expresses the weights in another scalar type.
    pub fn convert<Q: Scalar>(&self) -> Dist<Q> {
        Dist {
            entries: self
                .entries
                .iter()
                .map(|(s, w)| {
                    let q = match w.to_rational() {
                        Some(r) => Q::from_rational(&r),
                        None => Q::zero(),
                    };
                    (*s, q)
                })
                .collect(),
        }
    }
}

impl<P: Scalar> fmt::Display for Dist<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (s, w)) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}: {}", s.index(), w)?;
        }
        write!(f, "}}")
    }
}

/// Distribution over pairs of states.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductDist<P> {
    entries: Vec<((StateId, StateId), P)>,
}

impl<P: Scalar> ProductDist<P> {
    pub fn entries(&self) -> &[((StateId, StateId), P)] {
        &self.entries
    }

    pub fn prob(&self, s: StateId, t: StateId) -> P {
        self.entries
            .iter()
            .find(|(k, _)| *k == (s, t))
            .map(|(_, w)| w.clone())
            .unwrap_or_else(P::zero)
    }

    pub fn left_marginal(&self) -> Dist<P> {
        Dist::new(self.entries.iter().map(|((s, _), w)| (*s, w.clone())))
            .expect("product of distributions has unit mass")
    }

    pub fn right_marginal(&self) -> Dist<P> {
        Dist::new(self.entries.iter().map(|((_, t), w)| (*t, w.clone())))
            .expect("product of distributions has unit mass")
    }

    pub fn total(&self) -> P {
        self.entries
            .iter()
            .fold(P::zero(), |acc, (_, w)| acc + w.clone())
    }
}

pub(crate) fn is_unit<P: Scalar>(p: &P) -> bool {
    p.approx_eq(&P::one())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;
    use crate::scalar::{ratio, Rational};
    use proptest::prelude::*;

    fn s(i: usize) -> StateId {
        StateId::new(i)
    }

    fn d(entries: &[(usize, i64, i64)]) -> Dist<Rational> {
        Dist::new(entries.iter().map(|&(i, n, q)| (s(i), ratio(n, q)))).unwrap()
    }

    #[test]
    fn point_distribution() {
        let p = Dist::<Rational>::point(s(3));
        assert_eq!(p.entries(), &[(s(3), ratio(1, 1))]);
        assert_eq!(p, Dist::point(s(3)));
        assert_eq!(p.len(), 1);
        assert_eq!(p.is_point(), Some(s(3)));
    }

    #[test]
    fn canonical_form_merges_and_sorts() {
        let a = Dist::new(vec![
            (s(2), ratio(1, 4)),
            (s(0), ratio(1, 2)),
            (s(2), ratio(1, 4)),
            (s(1), ratio(0, 1)),
        ])
        .unwrap();
        assert_eq!(a, d(&[(0, 1, 2), (2, 1, 2)]));
    }

    #[test]
    fn rejects_bad_mass() {
        let err = Dist::new(vec![(s(0), ratio(1, 3)), (s(1), ratio(1, 3))]).unwrap_err();
        assert_eq!(
            err,
            Error::WeightSum {
                sum: "2/3".to_string()
            }
        );
        assert!(Dist::new(vec![(s(0), ratio(3, 2)), (s(1), ratio(-1, 2))]).is_err());
    }

    #[test]
    fn convex_sum_examples() {
        let delta = d(&[(0, 1, 3), (1, 2, 3)]);
        assert_eq!(
            Dist::convex_sum([(ratio(1, 1), &delta)]).unwrap(),
            delta.clone()
        );
        let u = Dist::point(s(0));
        let v = Dist::point(s(1));
        let half = d(&[(0, 1, 2), (1, 1, 2)]);
        assert_eq!(
            Dist::convex_sum([(ratio(1, 2), &u), (ratio(1, 2), &v)]).unwrap(),
            half
        );
        assert_eq!(
            Dist::convex_sum([(ratio(1, 2), &half), (ratio(1, 2), &half)]).unwrap(),
            half
        );
        assert!(Dist::convex_sum([(ratio(1, 2), &u), (ratio(1, 3), &v)]).is_err());
    }

    #[test]
    fn product_has_input_marginals() {
        let a = d(&[(0, 1, 2), (1, 1, 2)]);
        let t = Dist::point(s(5));
        let prod = a.product(&t);
        assert_eq!(prod.prob(s(0), s(5)), ratio(1, 2));
        assert_eq!(prod.prob(s(1), s(5)), ratio(1, 2));
        assert_eq!(prod.left_marginal(), a);
        assert_eq!(prod.right_marginal(), t);
        let pp = Dist::<Rational>::point(s(1)).product(&Dist::point(s(2)));
        assert_eq!(pp.entries(), &[((s(1), s(2)), ratio(1, 1))]);
    }

    #[test]
    fn float_instantiation() {
        let a = Dist::<f64>::new(vec![(s(0), 0.1), (s(1), 0.2), (s(2), 0.7)]).unwrap();
        assert_eq!(a.len(), 3);
        assert!(Dist::<f64>::new(vec![(s(0), 0.5)]).is_err());
    }

    fn arb_dist() -> impl Strategy<Value = Dist<Rational>> {
        prop::collection::vec((0usize..5, 1i64..6), 1..5).prop_map(|raw| {
            let total: i64 = raw.iter().map(|(_, w)| w).sum();
            Dist::new(raw.into_iter().map(|(i, w)| (s(i), ratio(w, total)))).unwrap()
        })
    }

    proptest! {
        #[test]
        fn convex_sum_ignores_order_and_splitting(
            parts in prop::collection::vec((1i64..5, arb_dist()), 1..4),
            rot in 0usize..4,
        ) {
            let total: i64 = parts.iter().map(|(w, _)| w).sum();
            let weighted: Vec<(Rational, Dist<Rational>)> =
                parts.iter().map(|(w, d)| (ratio(*w, total), d.clone())).collect();
            let base = Dist::convex_sum(weighted.iter().map(|(p, d)| (p.clone(), d))).unwrap();

            let mut rotated = weighted.clone();
            let k = rot % rotated.len();
            rotated.rotate_left(k);
            let r = Dist::convex_sum(rotated.iter().map(|(p, d)| (p.clone(), d))).unwrap();
            prop_assert_eq!(&r, &base);

            let half = ratio(1, 2);
            let mut split = Vec::new();
            for (p, d) in &weighted {
                split.push((p.clone() * half.clone(), d));
                split.push((p.clone() * half.clone(), d));
            }
            let sp = Dist::convex_sum(split.into_iter()).unwrap();
            prop_assert_eq!(&sp, &base);

            prop_assert!(base.entries().iter().all(|(_, w)| w > &Rational::zero()));
            prop_assert!(is_unit(&base.entries().iter().fold(Rational::zero(), |a, (_, w)| a + w)));
        }
    }
}
