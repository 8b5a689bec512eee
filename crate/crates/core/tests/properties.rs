mod common;

use fixedbitset::FixedBitSet;
use num_traits::{One, Zero};
use pbisim::bisim::{bisim, bisimilarity, similar, simulation_preorder, is_simulation};
use pbisim::dist::Dist;
use pbisim::lifting::{check, left_decompose};
use pbisim::logic::{distinguish, parse_formula};
use pbisim::metric::{iterate_metric, kantorovich, kantorovich_dual, metric_step, PseudoMetric};
use pbisim::mucalc::{
    characteristic_system, eval, greatest_solution, rule_close, rule_eliminate, rule_substitute, Environment,
};
use pbisim::parse::{parse_plts, parse_plts_as};
use pbisim::relation::StateRelation;
use pbisim::{Rational, StateId};
use proptest::prelude::*;
use rand::Rng;

use common::*;

fn small() -> ModelShape {
    ModelShape {
        max_states: 6,
        ..ModelShape::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn metric_iterates_rise_and_stay_pseudometrics(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let p = random_plts(&mut rng, &small());
        let mut m = PseudoMetric::<Rational>::top(p.num_states());
        for _ in 0..4 {
            let next = metric_step(&p, &m);
            prop_assert!(next.is_pseudometric());
            // from the zero metric the iterates grow pointwise
            prop_assert!(next.precedes(&m));
            m = next;
        }
    }

    #[test]
    fn kantorovich_is_a_pseudometric_on_distributions(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let p = random_plts(&mut rng, &small());
        let n = p.num_states();
        let m = iterate_metric::<Rational>(&p, 2);
        let d: Vec<Dist<Rational>> = (0..3).map(|_| random_dist(&mut rng, n, 3, 8)).collect();
        let k = |x: usize, y: usize| kantorovich(&m, &d[x], &d[y]);
        prop_assert!(k(0, 0).is_zero());
        prop_assert_eq!(k(0, 1), k(1, 0));
        prop_assert!(k(0, 2) <= k(0, 1) + k(1, 2));
        prop_assert!(k(0, 1) <= Rational::one());
    }

    #[test]
    fn kantorovich_dual_is_feasible_and_tight(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let p = random_plts(&mut rng, &small());
        let n = p.num_states();
        let m = iterate_metric::<Rational>(&p, 3);
        let delta = random_dist(&mut rng, n, 3, 8);
        let theta = random_dist(&mut rng, n, 3, 8);
        let (value, f) = kantorovich_dual(&m, &delta, &theta);
        prop_assert_eq!(&value, &kantorovich(&m, &delta, &theta));
        for (s, t) in all_pairs(n) {
            prop_assert!(&f[s.index()] - &f[t.index()] <= *m.get(s, t));
        }
        prop_assert!(f.iter().all(|v| *v >= Rational::zero() && *v <= Rational::one()));
    }

    #[test]
    fn lifting_is_monotone_in_the_relation(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let n = rng.gen_range(1..=6);
        let delta = random_dist(&mut rng, n, 4, 8);
        let theta = random_dist(&mut rng, n, 4, 8);
        let small_r = random_relation(&mut rng, n, 0.3);
        let mut big_r = small_r.clone();
        for (s, t) in all_pairs(n) {
            if rng.gen_bool(0.3) {
                big_r.insert(s, t);
            }
        }
        if check(&delta, &theta, &small_r) {
            prop_assert!(check(&delta, &theta, &big_r));
        }
    }

    #[test]
    fn left_decomposition_splits_the_target(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let n = rng.gen_range(2..=6);
        let r = random_equivalence(&mut rng, n);
        let parts: Vec<(Rational, Dist<Rational>)> = random_weights(&mut rng, 2, 6)
            .into_iter()
            .map(|w| (w, random_dist(&mut rng, n, 3, 8)))
            .collect();
        let combined = Dist::convex_sum(parts.iter().map(|(w, d)| (w.clone(), d))).unwrap();
        // a target that lifts: move each state's mass within its class
        let theta = Dist::new(combined.entries().iter().map(|(s, w)| {
            let class: Vec<StateId> = (0..n).map(StateId::new).filter(|t| r.contains(*s, *t)).collect();
            (class[rng.gen_range(0..class.len())], w.clone())
        }))
        .unwrap();
        let thetas = left_decompose(&parts, &theta, &r).expect("combined lifting holds");
        for ((_, d), t) in parts.iter().zip(&thetas) {
            prop_assert!(check(d, t, &r));
        }
        let recombined = Dist::convex_sum(parts.iter().zip(&thetas).map(|((w, _), t)| (w.clone(), t))).unwrap();
        prop_assert_eq!(recombined, theta);
    }

    #[test]
    fn float_models_agree_with_exact_ones(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let p = random_plts(&mut rng, &small());
        let f = p.convert::<f64>();
        let exact = bisimilarity(&p);
        let approx = bisimilarity(&f);
        for (s, t) in all_pairs(p.num_states()) {
            prop_assert_eq!(exact.same_block(s, t), approx.same_block(s, t));
            prop_assert_eq!(bisim(&p, s, t).0, bisim(&f, s, t).0);
        }
    }

    #[test]
    fn bisimilar_states_simulate_each_other(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let p = random_plts(&mut rng, &small());
        let pre = simulation_preorder(&p);
        prop_assert!(is_simulation(&p, &pre));
        for (s, t) in all_pairs(p.num_states()) {
            prop_assert_eq!(pre.contains(s, t), similar(&p, s, t));
            if bisim(&p, s, t).0 {
                prop_assert!(similar(&p, s, t) && similar(&p, t, s));
            }
        }
    }

    #[test]
    fn models_print_and_reparse(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let p = random_plts(&mut rng, &small());
        let text = p.to_string();
        let back = parse_plts(&text).unwrap();
        prop_assert_eq!(back.to_string(), text.clone());
        let floats = parse_plts_as::<f64>(&text).unwrap();
        prop_assert_eq!(floats.num_states(), p.num_states());
    }

    #[test]
    fn distinguishing_formulae_print_and_reparse(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let p = random_plts(&mut rng, &small());
        for (s, t) in all_pairs(p.num_states()) {
            if let Some(f) = distinguish(&p, s, t) {
                prop_assert_eq!(parse_formula(&f.to_string()).unwrap(), f);
            }
        }
    }

    #[test]
    fn evaluation_is_monotone_in_free_variables(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let shape = ModelShape { max_states: 5, max_actions: 2, ..ModelShape::default() };
        let p = random_plts(&mut rng, &shape);
        let n = p.num_states();
        let mut vars = vec!["Z".to_string()];
        let f = random_mu_formula(&mut rng, 3, &mut vars, &["a", "b"]);
        let mut small_set = FixedBitSet::with_capacity(n);
        let mut big_set = FixedBitSet::with_capacity(n);
        for i in 0..n {
            let pick = rng.gen_range(0..3);
            if pick == 2 {
                small_set.insert(i);
            }
            if pick >= 1 {
                big_set.insert(i);
            }
        }
        let mut lo = Environment::new();
        lo.insert("Z", small_set);
        let mut hi = Environment::new();
        hi.insert("Z", big_set);
        prop_assert!(eval(&p, &f, &lo).unwrap().is_subset(&eval(&p, &f, &hi).unwrap()));
    }

    #[test]
    fn each_rule_keeps_the_greatest_solution(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let shape = ModelShape { max_states: 5, ..ModelShape::default() };
        let p = random_plts(&mut rng, &shape);
        let mut e = characteristic_system(&p);
        let rho = greatest_solution(&p, &e);
        while e.len() > 1 {
            for step in 0..3 {
                e = match step {
                    0 => rule_close(&e),
                    1 => rule_substitute(&e),
                    _ => rule_eliminate(&e).unwrap(),
                };
                let now = greatest_solution(&p, &e);
                for x in e.variables() {
                    prop_assert_eq!(now.get(x), rho.get(x));
                }
            }
        }
    }
}

#[test]
fn witness_of_regression_model_is_a_simulation_each_way() {
    let p = parse_plts(
        "p a -> 1 p1\np a -> 1 p2\np1 b -> 1 z\np2 b -> 1 z\np2 c -> 1 z\nq a -> 1 q2\nq2 b -> 1 z\nq2 c -> 1 z\n",
    )
    .unwrap();
    let (ps, qs) = (p.state("p").unwrap(), p.state("q").unwrap());
    assert!(similar(&p, ps, qs) && similar(&p, qs, ps));
    assert!(!bisim(&p, ps, qs).0);
    let pre: StateRelation = simulation_preorder(&p);
    assert!(pre.contains(ps, qs) && pre.contains(qs, ps));
}
