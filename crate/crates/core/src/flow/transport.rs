//! Minimum-cost transportation between two discrete marginals.
//!
//! Solved by successive shortest augmenting paths: Dijkstra on reduced costs,
//! lowest node index first on ties, with node potentials kept valid by the
//! capped update `π(v) += min(d(v), d(sink))`. At termination the potentials
//! of the left and right nodes are an optimal dual solution.

use crate::scalar::Scalar;

/// An optimal transportation plan together with the data it was solved for.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportPlan<P> {
    supply: Vec<P>,
    demand: Vec<P>,
    costs: Vec<Vec<P>>,
    plan: Vec<Vec<P>>,
    cost: P,
    // raw solver potentials of the left and right nodes
    left_potential: Vec<P>,
    right_potential: Vec<P>,
}

/// Dual solution of a transportation problem: `x[i] - y[j] <= c(i, j)` for
/// all `i, j`, with objective `Σ supply[i]·x[i] − Σ demand[j]·y[j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DualSolution<P> {
    pub left: Vec<P>,
    pub right: Vec<P>,
    pub objective: P,
}

impl<P: Scalar> TransportPlan<P> {
    pub fn supply(&self) -> &[P] {
        &self.supply
    }

    pub fn demand(&self) -> &[P] {
        &self.demand
    }

    pub fn costs(&self) -> &[Vec<P>] {
        &self.costs
    }

    /// Mass moved from left index `i` to right index `j`.
    pub fn amount(&self, i: usize, j: usize) -> &P {
        &self.plan[i][j]
    }

    /// The full plan matrix, rows indexed by supply.
    pub fn matrix(&self) -> &[Vec<P>] {
        &self.plan
    }

    /// Nonzero entries `(i, j, amount)` in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &P)> + '_ {
        self.plan.iter().enumerate().flat_map(|(i, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, a)| a.is_significant())
                .map(move |(j, a)| (i, j, a))
        })
    }

    pub fn cost(&self) -> &P {
        &self.cost
    }

    /// Checks nonnegativity, both marginals and the recorded cost.
    pub fn verify(&self) -> Result<(), String> {
        for (i, row) in self.plan.iter().enumerate() {
            let mut sum = P::zero();
            for (j, a) in row.iter().enumerate() {
                if *a < P::zero() && !a.is_negligible() {
                    return Err(format!("negative entry at ({i}, {j})"));
                }
                sum = sum + a.clone();
            }
            if !sum.approx_eq(&self.supply[i]) {
                return Err(format!("row {i} sums to {sum}, expected {}", self.supply[i]));
            }
        }
        for j in 0..self.demand.len() {
            let sum = self
                .plan
                .iter()
                .fold(P::zero(), |acc, row| acc + row[j].clone());
            if !sum.approx_eq(&self.demand[j]) {
                return Err(format!("column {j} sums to {sum}, expected {}", self.demand[j]));
            }
        }
        let total = plan_cost(&self.plan, &self.costs);
        if !total.approx_eq(&self.cost) {
            return Err(format!("recorded cost {} differs from {total}", self.cost));
        }
        Ok(())
    }
}

fn plan_cost<P: Scalar>(plan: &[Vec<P>], costs: &[Vec<P>]) -> P {
    plan.iter()
        .zip(costs)
        .flat_map(|(row, crow)| row.iter().zip(crow))
        .filter(|(a, _)| !a.is_zero())
        .fold(P::zero(), |acc, (a, c)| acc + a.clone() * c.clone())
}

/// Solves `min Σ plan(i,j)·cost(i,j)` subject to row sums `supply` and column
/// sums `demand`.
///
/// # Panics
/// If the marginals have different total mass, a marginal entry is negative,
/// a cost is negative, or `cost` is not `supply.len() × demand.len()`.
pub fn min_cost_transport<P: Scalar>(supply: &[P], demand: &[P], cost: &[Vec<P>]) -> TransportPlan<P> {
    let (n, m) = (supply.len(), demand.len());
    assert_eq!(cost.len(), n, "cost matrix has the wrong number of rows");
    assert!(cost.iter().all(|row| row.len() == m), "cost matrix row length mismatch");
    assert!(cost.iter().flatten().all(|c| *c >= P::zero()), "negative cost");
    assert!(supply.iter().chain(demand).all(|w| *w >= P::zero()), "negative marginal");
    let total_supply = supply.iter().fold(P::zero(), |a, w| a + w.clone());
    let total_demand = demand.iter().fold(P::zero(), |a, w| a + w.clone());
    assert!(total_supply.approx_eq(&total_demand), "marginals have different mass");

    // node layout: 0 = source, 1..=n left, n+1..=n+m right, n+m+1 = sink
    let left = |i: usize| 1 + i;
    let right = |j: usize| 1 + n + j;
    let sink = n + m + 1;
    let nodes = n + m + 2;

    let mut rest_supply = supply.to_vec();
    let mut rest_demand = demand.to_vec();
    let mut plan = vec![vec![P::zero(); m]; n];
    let mut pi = vec![P::zero(); nodes];

    loop {
        if !rest_supply.iter().any(Scalar::is_significant) {
            break;
        }
        // Dijkstra over reduced costs, O(V^2)
        let mut dist: Vec<Option<P>> = vec![None; nodes];
        let mut pred = vec![usize::MAX; nodes];
        let mut done = vec![false; nodes];
        dist[0] = Some(P::zero());
        loop {
            let mut u = None;
            for v in 0..nodes {
                if done[v] {
                    continue;
                }
                if let Some(dv) = &dist[v] {
                    match u {
                        None => u = Some(v),
                        Some(w) => {
                            if *dv < *dist[w].as_ref().expect("candidate has a distance") {
                                u = Some(v)
                            }
                        }
                    }
                }
            }
            let Some(u) = u else { break };
            done[u] = true;
            let du = dist[u].clone().expect("settled node has a distance");
            let relax = |v: usize, raw: P, dist: &mut Vec<Option<P>>, pred: &mut Vec<usize>| {
                let rc = raw + pi[u].clone() - pi[v].clone();
                let cand = du.clone() + rc;
                let better = match &dist[v] {
                    None => true,
                    Some(dv) => cand < *dv,
                };
                if better && !done[v] {
                    dist[v] = Some(cand);
                    pred[v] = u;
                }
            };
            if u == 0 {
                for i in 0..n {
                    if rest_supply[i].is_significant() {
                        relax(left(i), P::zero(), &mut dist, &mut pred);
                    }
                }
            } else if u <= n {
                let i = u - 1;
                for j in 0..m {
                    relax(right(j), cost[i][j].clone(), &mut dist, &mut pred);
                }
            } else if u < sink {
                let j = u - 1 - n;
                for i in 0..n {
                    if plan[i][j].is_significant() {
                        relax(left(i), -cost[i][j].clone(), &mut dist, &mut pred);
                    }
                }
                if rest_demand[j].is_significant() {
                    relax(sink, P::zero(), &mut dist, &mut pred);
                }
            }
        }
        let reach = dist[sink]
            .clone()
            .expect("equal-mass marginals always admit an augmenting path");
        for v in 0..nodes {
            let step = match &dist[v] {
                Some(d) if *d < reach => d.clone(),
                _ => reach.clone(),
            };
            pi[v] = pi[v].clone() + step;
        }

        // collect the path and its bottleneck
        let mut path = vec![sink];
        while *path.last().expect("nonempty") != 0 {
            let v = *path.last().expect("nonempty");
            path.push(pred[v]);
        }
        path.reverse();
        let mut bottleneck: Option<P> = None;
        for w in path.windows(2) {
            let (u, v) = (w[0], w[1]);
            let cap = if u == 0 {
                Some(rest_supply[v - 1].clone())
            } else if v == sink {
                Some(rest_demand[u - 1 - n].clone())
            } else if u <= n {
                None
            } else {
                Some(plan[v - 1][u - 1 - n].clone())
            };
            if let Some(c) = cap {
                bottleneck = Some(match bottleneck {
                    None => c,
                    Some(b) => b.min_of(c),
                });
            }
        }
        let amount = bottleneck.expect("path touches the source");
        for w in path.windows(2) {
            let (u, v) = (w[0], w[1]);
            if u == 0 {
                rest_supply[v - 1] = rest_supply[v - 1].clone() - amount.clone();
            } else if v == sink {
                let j = u - 1 - n;
                rest_demand[j] = rest_demand[j].clone() - amount.clone();
            } else if u <= n {
                let (i, j) = (u - 1, v - 1 - n);
                plan[i][j] = plan[i][j].clone() + amount.clone();
            } else {
                let (i, j) = (v - 1, u - 1 - n);
                plan[i][j] = plan[i][j].clone() - amount.clone();
            }
        }
    }

    let cost_value = plan_cost(&plan, cost);
    let result = TransportPlan {
        supply: supply.to_vec(),
        demand: demand.to_vec(),
        costs: cost.to_vec(),
        plan,
        cost: cost_value,
        left_potential: (0..n).map(|i| pi[left(i)].clone()).collect(),
        right_potential: (0..m).map(|j| pi[right(j)].clone()).collect(),
    };
    debug_assert_eq!(result.verify(), Ok(()));
    result
}

/// Optimal dual variables for a solved plan, normalised so that every value
/// lies in `[0, max cost]` (so in `[0, 1]` for costs bounded by 1). The
/// objective equals the plan's cost.
pub fn dual_potentials<P: Scalar>(plan: &TransportPlan<P>) -> DualSolution<P> {
    let (n, m) = (plan.supply.len(), plan.demand.len());
    let c = &plan.costs;
    // The solver keeps c(i,j) + π(i) − π(j) >= 0, tight wherever flow runs.
    let y: Vec<P> = plan.right_potential.iter().map(|p| -p.clone()).collect();
    // c-transforms pull every value into a window of width max c
    let x: Vec<P> = (0..n)
        .map(|i| {
            (0..m)
                .map(|j| y[j].clone() + c[i][j].clone())
                .reduce(Scalar::min_of)
                .unwrap_or_else(|| -plan.left_potential[i].clone())
        })
        .collect();
    let y: Vec<P> = (0..m)
        .map(|j| {
            (0..n)
                .map(|i| x[i].clone() - c[i][j].clone())
                .reduce(Scalar::max_of)
                .unwrap_or_else(|| y[j].clone())
        })
        .collect();
    let width = c.iter().flatten().cloned().reduce(Scalar::max_of).unwrap_or_else(P::zero);
    let shift = match x.iter().cloned().reduce(Scalar::max_of) {
        Some(top) => top - width,
        None => P::zero(),
    };
    let left: Vec<P> = x.into_iter().map(|v| v - shift.clone()).collect();
    let right: Vec<P> = y.into_iter().map(|v| v - shift.clone()).collect();
    let objective = dual_objective(&plan.supply, &plan.demand, &left, &right);
    let dual = DualSolution {
        left,
        right,
        objective,
    };
    debug_assert!(dual_is_feasible(c, &dual));
    debug_assert!(dual.objective.approx_eq(&plan.cost));
    dual
}

pub(crate) fn dual_objective<P: Scalar>(supply: &[P], demand: &[P], x: &[P], y: &[P]) -> P {
    let plus = supply
        .iter()
        .zip(x)
        .fold(P::zero(), |acc, (w, v)| acc + w.clone() * v.clone());
    let minus = demand
        .iter()
        .zip(y)
        .fold(P::zero(), |acc, (w, v)| acc + w.clone() * v.clone());
    plus - minus
}

/// Whether `x[i] − y[j] <= c(i, j)` holds everywhere.
pub fn dual_is_feasible<P: Scalar>(costs: &[Vec<P>], dual: &DualSolution<P>) -> bool {
    costs.iter().zip(&dual.left).all(|(row, x)| {
        row.iter().zip(&dual.right).all(|(c, y)| {
            let slack = c.clone() - (x.clone() - y.clone());
            slack >= P::zero() || slack.is_negligible()
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;
    use crate::scalar::{ratio, Rational};

    fn r(n: i64, d: i64) -> Rational {
        ratio(n, d)
    }

    fn discrete(n: usize) -> Vec<Vec<Rational>> {
        (0..n)
            .map(|i| (0..n).map(|j| r((i != j) as i64, 1)).collect())
            .collect()
    }

    #[test]
    fn identical_marginals_cost_nothing() {
        let mu = vec![r(1, 3), r(2, 3)];
        let plan = min_cost_transport(&mu, &mu, &discrete(2));
        assert!(plan.cost().is_zero());
        let dual = dual_potentials(&plan);
        assert!(dual.objective.is_zero());
        assert_eq!(dual.left, dual.right);
    }

    #[test]
    fn forced_plan() {
        let plan = min_cost_transport(&[r(1, 1)], &[r(1, 1)], &[vec![r(1, 1)]]);
        assert_eq!(plan.cost(), &r(1, 1));
        assert_eq!(dual_potentials(&plan).objective, r(1, 1));
    }

    #[test]
    fn total_variation_instance() {
        let plan = min_cost_transport(&[r(7, 10), r(3, 10)], &[r(2, 5), r(3, 5)], &discrete(2));
        assert_eq!(plan.cost(), &r(3, 10));
        let dual = dual_potentials(&plan);
        assert_eq!(dual.objective, r(3, 10));
        assert!(dual
            .left
            .iter()
            .chain(&dual.right)
            .all(|v| *v >= r(0, 1) && *v <= r(1, 1)));
    }

    #[test]
    fn needs_rerouting_through_reverse_arc() {
        // greedy assignment of left 0 to right 0 must be undone
        let costs = vec![vec![r(0, 1), r(1, 2)], vec![r(0, 1), r(1, 1)]];
        let plan = min_cost_transport(&[r(1, 2), r(1, 2)], &[r(1, 2), r(1, 2)], &costs);
        assert_eq!(plan.cost(), &r(1, 4));
        assert_eq!(plan.amount(1, 0), &r(1, 2));
        assert_eq!(dual_potentials(&plan).objective, r(1, 4));
    }

    #[test]
    fn float_instance() {
        let costs: Vec<Vec<f64>> = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let plan = min_cost_transport(&[0.5, 0.5], &[2.0 / 3.0, 1.0 / 3.0], &costs);
        assert!((plan.cost() - 1.0 / 6.0).abs() < 1e-12);
        let dual = dual_potentials(&plan);
        assert!((dual.objective - 1.0 / 6.0).abs() < 1e-9);
    }
}
