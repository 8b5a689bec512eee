use std::time::Instant;

use fixedbitset::FixedBitSet;
use pbisim::bisim::{approximant_partition, bisimilarity, simulation_preorder, Checker, Mode};
use pbisim::dist::Dist;
use pbisim::flow::{build_network, NetworkMode};
use pbisim::lifting::{decompose, weight_function};
use pbisim::logic::{distinguish as distinguishing_formula, parse_formula, sat_set};
use pbisim::metric::{iterate_metric, stabilise_kernel, PseudoMetric};
use pbisim::mucalc::{eval, parse_mu_formula, state_formula, Environment};
use pbisim::relation::{Partition, StateRelation};
use pbisim::scalar::parse_rational;
use pbisim::{RatPlts, Rational, StateId};
use serde_json::{json, Value};

use crate::verdict::Verdict;
use crate::CliError;

pub struct Context {
    pub witness: bool,
}

fn micros(start: Instant) -> u64 {
    start.elapsed().as_micros().try_into().unwrap_or(u64::MAX)
}

fn names(p: &RatPlts, states: impl IntoIterator<Item = StateId>) -> Vec<String> {
    states.into_iter().map(|s| p.state_name(s).to_string()).collect()
}

fn braces(names: &[String]) -> String {
    format!("{{{}}}", names.join(","))
}

fn set_names(p: &RatPlts, set: &FixedBitSet) -> Vec<String> {
    names(p, set.ones().map(StateId::new))
}

fn blocks(p: &RatPlts, part: &Partition) -> (Value, String) {
    let mut list: Vec<Vec<StateId>> = part.blocks().to_vec();
    for b in &mut list {
        b.sort();
    }
    list.sort();
    let named: Vec<Vec<String>> = list.into_iter().map(|b| names(p, b)).collect();
    let text = named.iter().map(|b| braces(b)).collect::<Vec<_>>().join(" ");
    (json!(named), text)
}

fn relation_witness(p: &RatPlts, r: &StateRelation) -> (Value, String) {
    let pairs: Vec<(StateId, StateId)> = r.pairs().collect();
    let named: Vec<[String; 2]> = pairs
        .iter()
        .map(|&(s, t)| [p.state_name(s).to_string(), p.state_name(t).to_string()])
        .collect();
    let text = named
        .iter()
        .map(|[s, t]| format!("({s},{t})"))
        .collect::<Vec<_>>()
        .join(" ");
    (json!({ "relation": named }), format!("witness relation: {text}"))
}

pub fn check(p: &RatPlts, s: &str, t: &str, simulation: bool) -> Result<Verdict, CliError> {
    let (si, ti) = (p.state(s)?, p.state(t)?);
    let mode = if simulation { Mode::Simulation } else { Mode::Bisimulation };
    let start = Instant::now();
    let answer = Checker::new(p, mode).check(si, ti);
    let kind = if simulation { "similar" } else { "bisimilar" };
    let mut v = Verdict::new(format!("{kind}({s},{t})"), json!(answer.holds), answer.holds.to_string());
    if let Some(r) = &answer.witness {
        let (value, line) = relation_witness(p, r);
        v = v.with_witness(value, [line]);
    } else if !simulation {
        if let Some(f) = distinguishing_formula(p, si, ti) {
            v = v.with_witness(json!({ "formula": f.to_string() }), [format!("witness formula: {f}")]);
        }
    }
    Ok(v.stat("runs", answer.stats.runs as u64)
        .stat("matched_pairs", answer.stats.matched_pairs as u64)
        .stat("lift_checks", answer.stats.lift_checks as u64)
        .stat("elapsed_us", micros(start)))
}

fn metric_table(p: &RatPlts, m: &PseudoMetric<Rational>) -> (Value, Vec<String>) {
    let states = names(p, p.states());
    let rows: Vec<Vec<String>> = p
        .states()
        .map(|s| p.states().map(|t| m.get(s, t).to_string()).collect())
        .collect();
    let csv = m.to_csv(|s| p.state_name(s).to_string());
    (
        json!({ "table": { "states": states, "rows": rows } }),
        std::iter::once("witness table:".to_string())
            .chain(csv.lines().map(|l| format!("  {l}")))
            .collect(),
    )
}

pub fn distance(ctx: &Context, p: &RatPlts, s: &str, t: &str, iters: Option<usize>) -> Result<Verdict, CliError> {
    let (si, ti) = (p.state(s)?, p.state(t)?);
    let start = Instant::now();
    let (m, k, stabilised) = match iters {
        Some(k) => (iterate_metric::<Rational>(p, k), k, false),
        None => {
            let st = stabilise_kernel::<Rational>(p);
            (st.metric, st.index, true)
        }
    };
    let value = m.get(si, ti).to_string();
    let query = if stabilised {
        format!("distance({s},{t}) at stabilisation")
    } else {
        format!("distance({s},{t}) after {k} iterations")
    };
    let mut v = Verdict::new(query, json!(value), value.clone());
    if stabilised {
        v.lines.push(format!("stabilised after {k} iterations"));
    }
    if ctx.witness {
        let (value, lines) = metric_table(p, &m);
        v = v.with_witness(value, lines);
    }
    Ok(v.stat("iterations", k as u64).stat("elapsed_us", micros(start)))
}

pub fn distance_csv(p: &RatPlts, iters: Option<usize>) -> String {
    let m = match iters {
        Some(k) => iterate_metric::<Rational>(p, k),
        None => stabilise_kernel::<Rational>(p).metric,
    };
    m.to_csv(|s| p.state_name(s).to_string())
}

fn warn_unknown_actions(p: &RatPlts, actions: impl IntoIterator<Item = String>) {
    for a in actions {
        if p.action(&a).is_none() {
            eprintln!("warning: action `{a}` does not occur in the model");
        }
    }
}

pub fn mc(p: &RatPlts, formula: &str, state: Option<&str>, mu: bool) -> Result<Verdict, CliError> {
    let target = state.map(|s| p.state(s)).transpose()?;
    let start = Instant::now();
    let (text, set) = if mu {
        let f = parse_mu_formula(formula)?;
        warn_unknown_actions(p, f.actions());
        (f.to_string(), eval(p, &f, &Environment::new())?)
    } else {
        let f = parse_formula(formula)?;
        warn_unknown_actions(p, f.actions());
        (f.to_string(), sat_set(p, &f))
    };
    let v = match (state, target) {
        (Some(name), Some(s)) => {
            let holds = set.contains(s.index());
            Verdict::new(format!("{name} |= {text}"), json!(holds), holds.to_string())
        }
        _ => {
            let sat = set_names(p, &set);
            Verdict::new(format!("[[{text}]]"), json!(sat), braces(&sat))
        }
    };
    Ok(v.stat("elapsed_us", micros(start)))
}

pub fn charform(p: &RatPlts, s: &str, verify: bool, budget: usize) -> Result<Verdict, CliError> {
    let si = p.state(s)?;
    let start = Instant::now();
    let f = state_formula(p, si, budget)?;
    let size = f.tree_size();
    if size > budget as u64 {
        return Err(CliError::TreeBudget { size, budget });
    }
    let text = f.to_string();
    let mut result = json!({ "formula": text });
    let mut v = Verdict::new(format!("characteristic formula of {s}"), Value::Null, text);
    if verify {
        let sat = eval(p, &f, &Environment::new())?;
        let part = bisimilarity(p);
        let mut class = FixedBitSet::with_capacity(p.num_states());
        for &t in &part.blocks()[part.block_of(si)] {
            class.insert(t.index());
        }
        let verified = sat == class;
        let sat_names = set_names(p, &sat);
        result["verified"] = json!(verified);
        result["satisfying_set"] = json!(sat_names);
        v.lines.push(if verified {
            format!("verified: satisfying set = {}", braces(&sat_names))
        } else {
            format!(
                "mismatch: satisfying set = {}, bisimilarity class = {}",
                braces(&sat_names),
                braces(&set_names(p, &class))
            )
        });
    }
    v.result = result;
    Ok(v.stat("tree_size", size)
        .stat("dag_size", f.dag_size() as u64)
        .stat("elapsed_us", micros(start)))
}

pub fn distinguish(p: &RatPlts, s: &str, t: &str) -> Result<Verdict, CliError> {
    let (si, ti) = (p.state(s)?, p.state(t)?);
    let start = Instant::now();
    let query = format!("distinguish({s},{t})");
    let v = match distinguishing_formula(p, si, ti) {
        Some(f) => Verdict::new(query, json!(f.to_string()), f.to_string()).stat("size", f.size() as u64),
        None => Verdict::new(query, Value::Null, format!("none: {s} and {t} are bisimilar")),
    };
    Ok(v.stat("elapsed_us", micros(start)))
}

pub fn partition(p: &RatPlts) -> Verdict {
    let start = Instant::now();
    let part = bisimilarity(p);
    let (value, text) = blocks(p, &part);
    Verdict::new("bisimilarity partition", value, text)
        .stat("blocks", part.num_blocks() as u64)
        .stat("elapsed_us", micros(start))
}

pub fn approx(p: &RatPlts, n: usize) -> Verdict {
    let start = Instant::now();
    let part = approximant_partition(p, n);
    let (value, text) = blocks(p, &part);
    Verdict::new(format!("approximant {n} partition"), value, text)
        .stat("blocks", part.num_blocks() as u64)
        .stat("elapsed_us", micros(start))
}

/// Parses `"1/2 u, 1/2 v"` against the model's state names.
fn parse_dist(p: &RatPlts, text: &str) -> Result<Dist<Rational>, CliError> {
    let mut entries = Vec::new();
    for part in text.split(',') {
        let mut words = part.split_whitespace();
        let (Some(w), Some(name), None) = (words.next(), words.next(), words.next()) else {
            return Err(CliError::Input(format!("expected `weight state`, got `{}`", part.trim())));
        };
        let w = parse_rational(w).ok_or_else(|| CliError::Input(format!("bad probability `{w}`")))?;
        entries.push((p.state(name)?, w));
    }
    Ok(Dist::new(entries)?)
}

fn parse_relation(p: &RatPlts, text: &str) -> Result<StateRelation, CliError> {
    let n = p.num_states();
    Ok(match text {
        "identity" => StateRelation::identity(n),
        "full" => StateRelation::full(n),
        "bisim" => StateRelation::from_partition(&bisimilarity(p)),
        "sim" => simulation_preorder(p),
        pairs => {
            let mut out = Vec::new();
            for pair in pairs.split(',') {
                let (s, t) = pair
                    .trim()
                    .split_once(':')
                    .ok_or_else(|| CliError::Input(format!("expected `s:t`, got `{}`", pair.trim())))?;
                out.push((p.state(s.trim())?, p.state(t.trim())?));
            }
            StateRelation::from_pairs(n, out)
        }
    })
}

/// The verdict and the DOT rendering of the flow network.
pub fn lift(p: &RatPlts, delta: &str, theta: &str, relation: &str) -> Result<(Verdict, String), CliError> {
    let d = parse_dist(p, delta)?;
    let th = parse_dist(p, theta)?;
    let r = parse_relation(p, relation)?;
    let start = Instant::now();
    let w = weight_function(&d, &th, &r);
    let holds = w.is_some();
    let mut v = Verdict::new(
        format!("lift({delta}; {theta}; {relation})"),
        json!(holds),
        holds.to_string(),
    );
    if let Some(w) = w {
        let triples: Vec<(String, String, String)> = decompose(&w)
            .decomposition
            .iter()
            .map(|(q, s, t)| (q.to_string(), p.state_name(*s).to_string(), p.state_name(*t).to_string()))
            .collect();
        let value = json!({
            "decomposition": triples
                .iter()
                .map(|(q, s, t)| json!({ "p": q, "s": s, "t": t }))
                .collect::<Vec<_>>()
        });
        let text = triples
            .iter()
            .map(|(q, s, t)| format!("{q} ({s},{t})"))
            .collect::<Vec<_>>()
            .join(", ");
        v = v.with_witness(value, [format!("witness decomposition: {text}")]);
    }
    let dot = build_network(&d, &th, &r, NetworkMode::Support).to_dot(|s| p.state_name(s).to_string());
    Ok((v.stat("elapsed_us", micros(start)), dot))
}
