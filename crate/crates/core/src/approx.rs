//! Color approximation: an over-approximation of the colors each place can
//! ever hold, computed as a least fixed point over interval sets, and the
//! restriction of place domains to it.

use std::collections::{BTreeMap, VecDeque};
use std::time::{Duration, Instant};

use serde_json::Value;

use crate::color::{ColorSet, Interval, IntervalSet};
use crate::error::{Error, Result};
use crate::expr::{LeafTuple, SimpleExpr, VarId};
use crate::multiset::Marking;
use crate::net::{ColoredNet, Transition};
use crate::par::{map_collect, Exec};

pub const DEFAULT_BUDGET: Duration = Duration::from_millis(10_000);

/// Per place, the colors that may occur there.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Approximation {
    pub possible: Vec<ColorSet>,
}

impl Approximation {
    /// Every color of every domain.
    pub fn full(net: &ColoredNet) -> Self {
        Approximation {
            possible: net.places.iter().map(|p| p.domain.clone()).collect(),
        }
    }

    pub fn color_count(&self) -> u128 {
        self.possible.iter().map(|s| s.size() as u128).sum()
    }

    /// Place name → list of range tuples.
    pub fn to_json(&self, net: &ColoredNet) -> Value {
        Value::Object(
            net.places
                .iter()
                .zip(&self.possible)
                .map(|(p, s)| {
                    let tuples: Vec<Value> = s.tuples().iter().map(|t| Value::from(t.to_string())).collect();
                    (p.name.clone(), Value::from(tuples))
                })
                .collect(),
        )
    }
}

/// Supports of the initial marking.
pub fn initial_approx(net: &ColoredNet) -> Approximation {
    Approximation {
        possible: net
            .places
            .iter()
            .zip(&net.initial.0)
            .map(|(p, m)| ColorSet::from_colors(p.domain.arity(), m.support()).expect("validated arity"))
            .collect(),
    }
}

/// Feasible values per variable of `t` under `a`, or `None` when no binding
/// can have its whole input demand inside `a`.
fn feasible_values(net: &ColoredNet, t: &Transition, a: &Approximation) -> Option<BTreeMap<VarId, IntervalSet>> {
    let constraints = t.guard.constraints(&net.variables)?;
    let mut values: BTreeMap<VarId, IntervalSet> = t
        .variables
        .iter()
        .map(|&v| {
            let range = IntervalSet::from_interval(net.variables[v].range);
            let s = constraints.get(&v).map_or(range.clone(), |c| c.intersect(&range));
            (v, s)
        })
        .collect();
    for (p, e) in &t.inputs {
        let possible = &a.possible[*p];
        for leaf in e.leaves() {
            if leaf.under_sub {
                continue;
            }
            match leaf.tuple {
                LeafTuple::All(s) => {
                    if !s.is_subset(possible) {
                        return None;
                    }
                }
                LeafTuple::Tuple(tuple) => {
                    for (j, s) in tuple.iter().enumerate() {
                        let proj = possible.project(j);
                        match s {
                            SimpleExpr::Const(c) => {
                                if !proj.contains(*c) {
                                    return None;
                                }
                            }
                            _ => {
                                let v = s.var().expect("variable");
                                let range = net.variables[v].range;
                                let entry = values.get_mut(&v).expect("declared variable");
                                *entry = entry.intersect(&proj.rotate(range, -s.shift()));
                            }
                        }
                    }
                }
            }
        }
    }
    values.values().all(|s| !s.is_empty()).then_some(values)
}

/// Colors `t` may add to each output place when its inputs are bounded by `a`.
fn transition_outputs(net: &ColoredNet, t: &Transition, a: &Approximation) -> Vec<(usize, ColorSet)> {
    let Some(values) = feasible_values(net, t, a) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for (p, e) in &t.outputs {
        let domain = &net.places[*p].domain;
        let mut produced = Vec::new();
        for leaf in e.leaves() {
            if leaf.negated {
                continue;
            }
            match leaf.tuple {
                LeafTuple::All(s) => produced.push(s.intersection(domain)),
                LeafTuple::Tuple(tuple) => produced.extend(tuple_image(net, tuple, &values)),
            }
        }
        let set = ColorSet::union_all(domain.arity(), produced).intersection(domain);
        if !set.is_empty() {
            out.push((*p, set));
        }
    }
    out
}

/// Image of a tuple expression, one product per combination of the
/// intervals of the variables it mentions, which keeps correlations between
/// distinct variables.
fn tuple_image(net: &ColoredNet, tuple: &[SimpleExpr], values: &BTreeMap<VarId, IntervalSet>) -> Vec<ColorSet> {
    let mut vars: Vec<VarId> = tuple.iter().filter_map(SimpleExpr::var).collect();
    vars.sort_unstable();
    vars.dedup();
    let choices: Vec<&[Interval]> = vars.iter().map(|v| values[v].intervals()).collect();
    let mut out = Vec::new();
    let mut idx = vec![0usize; vars.len()];
    loop {
        let coords: Vec<IntervalSet> = tuple
            .iter()
            .map(|s| match s {
                SimpleExpr::Const(c) => IntervalSet::from_values([*c]),
                _ => {
                    let v = s.var().expect("variable");
                    let k = vars.binary_search(&v).expect("collected");
                    let range = net.variables[v].range;
                    IntervalSet::from_interval(choices[k][idx[k]]).rotate(range, s.shift())
                }
            })
            .collect();
        out.push(ColorSet::product(&coords));
        let mut k = vars.len();
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < choices[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// One saturating application of the expansion: every transition adds the
/// colors it can produce from inputs inside `a`.
pub fn expand(net: &ColoredNet, a: &Approximation) -> Approximation {
    let mut next = a.clone();
    for t in &net.transitions {
        for (p, s) in transition_outputs(net, t, a) {
            next.possible[p] = next.possible[p].union(&s);
        }
    }
    next
}

/// Result of [`fixed_point_with_status`].
#[derive(Clone, Debug)]
pub struct Approximated {
    pub approximation: Approximation,
    /// True when the budget ran out and full domains were returned.
    pub exhausted: bool,
}

pub fn fixed_point(net: &ColoredNet, budget: Duration) -> Approximation {
    fixed_point_with_status(net, budget, Exec::default()).approximation
}

/// Least fixed point above the initial supports, in rounds: each round
/// recomputes the transitions whose input places grew in the previous one
/// (possibly in parallel) and merges their outputs in transition order.
pub fn fixed_point_with_status(net: &ColoredNet, budget: Duration, exec: Exec) -> Approximated {
    let deadline = Instant::now() + budget;
    let readers = readers(net);
    let mut a = initial_approx(net);
    let mut dirty: Vec<usize> = (0..net.transitions.len()).collect();
    while !dirty.is_empty() {
        if Instant::now() >= deadline {
            return exhausted(net);
        }
        let outputs = map_collect(exec, &dirty, |&t| transition_outputs(net, &net.transitions[t], &a));
        let mut grown = vec![false; net.places.len()];
        for (p, s) in outputs.into_iter().flatten() {
            let merged = a.possible[p].union(&s);
            if merged != a.possible[p] {
                a.possible[p] = merged;
                grown[p] = true;
            }
        }
        dirty = (0..net.transitions.len())
            .filter(|&t| readers[t].iter().any(|&p| grown[p]))
            .collect();
    }
    Approximated {
        approximation: a,
        exhausted: false,
    }
}

/// Sequential chaotic iteration with a FIFO worklist seeded in `order`; the
/// least fixed point does not depend on the order.
pub fn fixed_point_in_order(net: &ColoredNet, budget: Duration, order: &[usize]) -> Approximated {
    let deadline = Instant::now() + budget;
    let readers = readers(net);
    let mut a = initial_approx(net);
    let mut queue: VecDeque<usize> = order.iter().copied().collect();
    let mut queued = vec![false; net.transitions.len()];
    for &t in order {
        queued[t] = true;
    }
    while let Some(t) = queue.pop_front() {
        queued[t] = false;
        if Instant::now() >= deadline {
            return exhausted(net);
        }
        for (p, s) in transition_outputs(net, &net.transitions[t], &a) {
            let merged = a.possible[p].union(&s);
            if merged == a.possible[p] {
                continue;
            }
            a.possible[p] = merged;
            for (u, r) in readers.iter().enumerate() {
                if !queued[u] && r.contains(&p) {
                    queued[u] = true;
                    queue.push_back(u);
                }
            }
        }
    }
    Approximated {
        approximation: a,
        exhausted: false,
    }
}

fn readers(net: &ColoredNet) -> Vec<Vec<usize>> {
    net.transitions
        .iter()
        .map(|t| t.inputs.iter().map(|(p, _)| *p).collect())
        .collect()
}

fn exhausted(net: &ColoredNet) -> Approximated {
    Approximated {
        approximation: Approximation::full(net),
        exhausted: true,
    }
}

/// Every token color of `m` lies inside `a`.
pub fn subsumes(a: &Approximation, m: &Marking) -> bool {
    a.possible.iter().zip(&m.0).all(|(s, ms)| ms.support_within(s))
}

/// The same net with place domains shrunk to `a`. Bindings whose input
/// demand leaves the new domains disappear with them.
pub fn restrict(net: &ColoredNet, a: &Approximation) -> Result<ColoredNet> {
    if a.possible.len() != net.places.len() {
        return Err(Error::Precondition("approximation does not match the net".into()));
    }
    if !subsumes(a, &net.initial) {
        return Err(Error::Precondition(
            "approximation does not cover the initial marking".into(),
        ));
    }
    let mut out = net.clone();
    for (p, s) in out.places.iter_mut().zip(&a.possible) {
        p.domain = s.intersection(&p.domain);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::RangeTuple;
    use crate::io::text::parse;
    use crate::oracle::{reachable_isomorphic, IsoMode};
    use crate::semantics::{explore, DEFAULT_STATE_LIMIT};

    fn set(tuples: &[&[(u32, u32)]], arity: usize) -> ColorSet {
        ColorSet::from_tuples(
            arity,
            tuples
                .iter()
                .map(|t| RangeTuple::new(t.iter().map(|&(a, b)| Interval::new(a, b)))),
        )
        .unwrap()
    }

    fn feedback() -> ColoredNet {
        parse(include_str!("../fixtures/feedback.net")).unwrap()
    }

    fn inhibitor_net() -> ColoredNet {
        parse(include_str!("../fixtures/inhibitor.net")).unwrap()
    }

    #[test]
    fn feedback_initial_supports() {
        let a = initial_approx(&feedback());
        assert_eq!(
            a.possible,
            vec![
                set(&[&[(1, 1)]], 1),
                set(&[&[(3, 3)]], 1),
                ColorSet::empty(1),
                ColorSet::empty(2)
            ]
        );
        assert_eq!(
            initial_approx(&inhibitor_net()).possible[0],
            set(&[&[(0, 0)], &[(2, 2)]], 1)
        );
    }

    #[test]
    fn feedback_expansion_steps() {
        let net = feedback();
        let a1 = expand(&net, &initial_approx(&net));
        assert_eq!(a1.possible[2], set(&[&[(1, 1)]], 1));
        assert_eq!(a1.possible[3], set(&[&[(1, 1), (3, 3)]], 2));
        let a2 = expand(&net, &a1);
        assert_eq!(a2.possible[1], set(&[&[(3, 4)]], 1));
    }

    #[test]
    fn feedback_fixed_point() {
        let net = feedback();
        let a = fixed_point(&net, DEFAULT_BUDGET);
        assert_eq!(
            a.possible,
            vec![
                set(&[&[(1, 1)]], 1),
                set(&[&[(1, 1)], &[(3, 4)]], 1),
                set(&[&[(1, 1)]], 1),
                set(&[&[(1, 1), (1, 1)], &[(1, 1), (3, 4)]], 2),
            ]
        );
        assert_eq!(expand(&net, &a), a);
        assert!(subsumes(&a, &net.initial));
        let r = restrict(&net, &a).unwrap();
        assert_eq!((net.places[3].domain.size(), r.places[3].domain.size()), (16, 3));
        let (x, y) = (
            explore(&net, DEFAULT_STATE_LIMIT, Exec::Sequential).unwrap(),
            explore(&r, DEFAULT_STATE_LIMIT, Exec::Sequential).unwrap(),
        );
        assert!(reachable_isomorphic(&x, &y, IsoMode::SameStates));
    }

    #[test]
    fn inhibitor_net_fixed_point_follows_reachable_colors() {
        let net = inhibitor_net();
        let a = fixed_point(&net, DEFAULT_BUDGET);
        assert_eq!(a.possible[2], set(&[&[(2, 2), (5, 5)]], 2));
        let lts = explore(&net, DEFAULT_STATE_LIMIT, Exec::Sequential).unwrap();
        assert!(lts.states.iter().all(|m| subsumes(&a, m)));
        assert_eq!(restrict(&net, &a).unwrap().places[2].domain.size(), 1);
    }

    #[test]
    fn orders_and_modes_agree() {
        let net = feedback();
        let rounds = fixed_point_with_status(&net, DEFAULT_BUDGET, Exec::Sequential).approximation;
        assert_eq!(
            rounds,
            fixed_point_with_status(&net, DEFAULT_BUDGET, Exec::Parallel).approximation
        );
        assert_eq!(
            rounds,
            fixed_point_in_order(&net, DEFAULT_BUDGET, &[3, 2, 1, 0]).approximation
        );
        assert_eq!(
            rounds,
            fixed_point_in_order(&net, DEFAULT_BUDGET, &[0, 1, 2, 3]).approximation
        );
    }

    #[test]
    fn zero_budget_falls_back_to_full_domains() {
        let net = feedback();
        let r = fixed_point_with_status(&net, Duration::ZERO, Exec::Sequential);
        assert!(r.exhausted);
        assert_eq!(r.approximation, Approximation::full(&net));
        assert_eq!(restrict(&net, &r.approximation).unwrap(), net);
    }

    #[test]
    fn restriction_must_cover_the_initial_marking() {
        let net = feedback();
        let empty = Approximation {
            possible: net.places.iter().map(|p| ColorSet::empty(p.domain.arity())).collect(),
        };
        assert!(matches!(restrict(&net, &empty), Err(Error::Precondition(_))));
        assert!(subsumes(&empty, &Marking::empty(4)));
    }

    #[test]
    fn no_transitions_keeps_initial_supports() {
        let net = parse("domain A = [1,3]\nplace p : A = 1'(2)\n").unwrap();
        assert_eq!(fixed_point(&net, DEFAULT_BUDGET), initial_approx(&net));
    }
}
