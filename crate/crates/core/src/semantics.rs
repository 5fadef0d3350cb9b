//! Firing rule and explicit-state exploration.

use std::collections::HashMap;

use crate::color::Color;
use crate::error::{Error, Result};
use crate::expr::{arc_cardinality_bound, Binding};
use crate::multiset::{Marking, Multiset};
use crate::net::ColoredNet;
use crate::par::{map_collect, Exec};

pub const DEFAULT_STATE_LIMIT: usize = 100_000;

/// A labeled transition system; state 0 is the initial state.
#[derive(Clone, Debug)]
pub struct Lts<S> {
    pub states: Vec<S>,
    pub labels: Vec<String>,
    /// `(source, label index, target)`, sorted and duplicate-free.
    pub edges: Vec<(usize, usize, usize)>,
    /// Set when the state limit stopped exploration early.
    pub truncated: bool,
}

impl<S> Lts<S> {
    pub fn label(&self, idx: usize) -> &str {
        &self.labels[idx]
    }
}

pub fn is_enabled(net: &ColoredNet, m: &Marking, t: usize, b: &Binding) -> Result<bool> {
    let tr = &net.transitions[t];
    for &(p, w) in &tr.inhibitors {
        if m.place(p).cardinality() >= w {
            return Ok(false);
        }
    }
    for (p, demand) in net.input_demand(tr, b)? {
        if !m.place(p).includes(&demand) {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn fire(net: &ColoredNet, m: &Marking, t: usize, b: &Binding) -> Result<Marking> {
    if !is_enabled(net, m, t, b)? {
        return Err(Error::NotEnabled {
            transition: net.transitions[t].name.clone(),
            binding: b.display(&net.variables).to_string(),
        });
    }
    let tr = &net.transitions[t];
    let mut next = m.clone();
    for (p, demand) in net.input_demand(tr, b)? {
        next.place_mut(p).sub_assign(&demand);
    }
    for (p, produced) in net.output_production(tr, b)? {
        check_within(net, p, &produced)?;
        next.place_mut(p).add_assign(&produced);
    }
    Ok(next)
}

fn check_within(net: &ColoredNet, p: usize, ms: &Multiset) -> Result<()> {
    match ms.support().find(|c| !net.places[p].domain.contains(c)) {
        Some(c) => Err(Error::invalid(format!(
            "token {c} produced outside the domain of `{}`",
            net.places[p].name
        ))),
        None => Ok(()),
    }
}

/// Precomputed firing data for one transition instance.
pub(crate) struct Step {
    pub(crate) transition: usize,
    label: usize,
    demand: Vec<(usize, Multiset)>,
    production: Vec<(usize, Multiset)>,
    inhibitors: Vec<(usize, u64)>,
}

impl Step {
    pub(crate) fn enabled(&self, m: &Marking) -> bool {
        self.inhibitors.iter().all(|&(p, w)| m.place(p).cardinality() < w)
            && self.demand.iter().all(|(p, d)| m.place(*p).includes(d))
    }

    pub(crate) fn apply(&self, m: &Marking) -> Marking {
        let mut next = m.clone();
        for (p, d) in &self.demand {
            next.place_mut(*p).sub_assign(d);
        }
        for (p, o) in &self.production {
            next.place_mut(*p).add_assign(o);
        }
        next
    }
}

pub(crate) fn steps(net: &ColoredNet, labels: &mut Vec<String>) -> Result<Vec<Step>> {
    let mut label_ids: HashMap<String, usize> = HashMap::new();
    let mut out = Vec::new();
    for (ti, t) in net.transitions.iter().enumerate() {
        let label = *label_ids.entry(t.label.clone()).or_insert_with(|| {
            labels.push(t.label.clone());
            labels.len() - 1
        });
        for b in net.bindings(t) {
            let production = net.output_production(t, &b)?;
            for (p, o) in &production {
                check_within(net, *p, o)?;
            }
            out.push(Step {
                transition: ti,
                label,
                demand: net.input_demand(t, &b)?,
                production,
                inhibitors: t.inhibitors.clone(),
            });
        }
    }
    Ok(out)
}

/// Breadth-first reachability from the initial marking.
pub fn explore(net: &ColoredNet, state_limit: usize, exec: Exec) -> Result<Lts<Marking>> {
    explore_from(net, net.initial.clone(), state_limit, exec)
}

pub fn explore_from(net: &ColoredNet, m0: Marking, state_limit: usize, exec: Exec) -> Result<Lts<Marking>> {
    let mut labels = Vec::new();
    let steps = steps(net, &mut labels)?;
    let mut index: HashMap<Marking, usize> = HashMap::new();
    let mut states = vec![m0.clone()];
    index.insert(m0, 0);
    let mut edges = Vec::new();
    let mut truncated = false;
    let mut frontier = vec![0usize];
    while !frontier.is_empty() {
        let succ = map_collect(exec, &frontier, |&s| {
            let m = &states[s];
            let mut out: Vec<(usize, Marking)> = steps
                .iter()
                .filter(|st| st.enabled(m))
                .map(|st| (st.label, st.apply(m)))
                .collect();
            out.sort();
            out.dedup();
            out
        });
        let mut next = Vec::new();
        for (&s, list) in frontier.iter().zip(succ) {
            for (label, m) in list {
                let target = match index.get(&m) {
                    Some(&i) => i,
                    None if states.len() < state_limit => {
                        let i = states.len();
                        index.insert(m.clone(), i);
                        states.push(m);
                        next.push(i);
                        i
                    }
                    None => {
                        truncated = true;
                        continue;
                    }
                };
                edges.push((s, label, target));
            }
        }
        frontier = next;
    }
    edges.sort_unstable();
    edges.dedup();
    Ok(Lts {
        states,
        labels,
        edges,
        truncated,
    })
}

/// Largest structural arc cardinality in the net.
pub fn max_arc_size(net: &ColoredNet) -> u64 {
    net.transitions
        .iter()
        .flat_map(|t| t.inputs.iter().chain(&t.outputs))
        .map(|(_, e)| arc_cardinality_bound(e))
        .max()
        .unwrap_or(0)
}

pub const DEFAULT_BOUNDED_CAP: u128 = 200_000;

/// Number of multisets of cardinality at most `k` over `n` colors: `C(n+k, k)`.
fn multisets_up_to(n: u128, k: u64) -> u128 {
    let mut acc: u128 = 1;
    for i in 1..=k as u128 {
        acc = acc.saturating_mul(n + i) / i;
    }
    acc
}

/// Estimated size of the bounded-marking set.
pub fn bounded_marking_count(net: &ColoredNet) -> u128 {
    let k = max_arc_size(net);
    net.places
        .iter()
        .map(|p| multisets_up_to(p.domain.size() as u128, k))
        .fold(1u128, |a, b| a.saturating_mul(b))
}

/// Every marking with at most `max_arc_size` tokens per place, refusing when
/// there would be more than `cap` of them.
pub fn bounded_markings(net: &ColoredNet, cap: u128) -> Result<Vec<Marking>> {
    let estimate = bounded_marking_count(net);
    if estimate > cap {
        return Err(Error::TooLarge {
            what: "bounded marking set".into(),
            estimate,
            cap,
        });
    }
    let k = max_arc_size(net);
    let per_place: Vec<Vec<Multiset>> = net
        .places
        .iter()
        .map(|p| {
            let colors: Vec<Color> = p.domain.iter().collect();
            let mut out = Vec::new();
            place_multisets(&colors, k, &mut Multiset::new(), &mut out);
            out
        })
        .collect();
    let mut result = vec![Marking(Vec::with_capacity(net.places.len()))];
    for options in per_place {
        result = result
            .into_iter()
            .flat_map(|m| {
                options.iter().map(move |o| {
                    let mut m = m.clone();
                    m.0.push(o.clone());
                    m
                })
            })
            .collect();
    }
    Ok(result)
}

fn place_multisets(colors: &[Color], budget: u64, cur: &mut Multiset, out: &mut Vec<Multiset>) {
    let Some((first, rest)) = colors.split_first() else {
        out.push(cur.clone());
        return;
    };
    for n in 0..=budget {
        let mut next = cur.clone();
        next.insert(first.clone(), n);
        place_multisets(rest, budget - n, &mut next, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::{ColorSet, Interval};
    use crate::expr::{ArcExpr, GuardExpr, SimpleExpr};
    use crate::net::NetBuilder;

    fn inhibitor_net() -> ColoredNet {
        crate::io::text::parse(include_str!("../fixtures/inhibitor.net")).unwrap()
    }

    fn b(pairs: &[(usize, u32)]) -> Binding {
        Binding(pairs.to_vec())
    }

    #[test]
    fn inhibitor_net_firing_and_inhibition() {
        let net = inhibitor_net();
        let m0 = net.initial.clone();
        assert!(is_enabled(&net, &m0, 0, &b(&[(0, 0), (1, 5)])).unwrap());
        let m1 = fire(&net, &m0, 0, &b(&[(0, 0), (1, 5)])).unwrap();
        assert_eq!(format!("{m1:?}"), "[1'(0)+3'(2) | 1'(5) | 1'(2,5)]");
        assert!(!is_enabled(&net, &m1, 0, &b(&[(0, 0), (1, 4)])).unwrap());
        assert!(matches!(
            fire(&net, &m1, 0, &b(&[(0, 0), (1, 4)])),
            Err(Error::NotEnabled { .. })
        ));
        let empty = Marking::empty(3);
        assert!(!is_enabled(&net, &empty, 0, &b(&[(0, 0), (1, 4)])).unwrap());
    }

    #[test]
    fn inhibitor_net_inhibitor_stops_after_one_firing() {
        let net = inhibitor_net();
        for exec in [Exec::Sequential, Exec::Parallel] {
            let lts = explore(&net, DEFAULT_STATE_LIMIT, exec).unwrap();
            assert_eq!(lts.states.len(), 2);
            assert_eq!(lts.edges.len(), 1);
            assert!(!lts.truncated);
        }
    }

    #[test]
    fn truncation_is_flagged() {
        let mut nb = NetBuilder::new();
        let p = nb.place("p", ColorSet::dot(), Multiset::new());
        let t = nb.transition("t", GuardExpr::True);
        nb.output(t, p, ArcExpr::NumberOf(1, vec![SimpleExpr::Const(1)]));
        let net = nb.build().unwrap();
        let lts = explore(&net, 10, Exec::Sequential).unwrap();
        assert!(lts.truncated);
        assert_eq!(lts.states.len(), 10);
    }

    #[test]
    fn transition_without_arcs_and_self_loops_keep_the_marking() {
        let mut nb = NetBuilder::new();
        let x = nb.variable("x", Interval::new(1, 2)).unwrap();
        let p = nb.place("p", ColorSet::range(1, 2), Multiset::singleton(Color::scalar(1), 1));
        nb.transition("idle", GuardExpr::True);
        let t = nb.transition("loop", GuardExpr::True);
        nb.input(p, t, ArcExpr::NumberOf(1, vec![SimpleExpr::Var(x)]));
        nb.output(t, p, ArcExpr::NumberOf(1, vec![SimpleExpr::Var(x)]));
        let net = nb.build().unwrap();
        let m0 = net.initial.clone();
        assert_eq!(fire(&net, &m0, 0, &Binding::default()).unwrap(), m0);
        assert_eq!(fire(&net, &m0, 1, &b(&[(x, 1)])).unwrap(), m0);
        let lts = explore(&net, 100, Exec::Parallel).unwrap();
        assert_eq!(lts.states.len(), 1);
    }

    #[test]
    fn bounded_marking_counts() {
        let mut nb = NetBuilder::new();
        let x = nb.variable("x", Interval::new(1, 2)).unwrap();
        let p = nb.place("p", ColorSet::range(1, 2), Multiset::new());
        let t = nb.transition("t", GuardExpr::True);
        nb.input(p, t, ArcExpr::NumberOf(1, vec![SimpleExpr::Var(x)]));
        let net = nb.build().unwrap();
        assert_eq!(max_arc_size(&net), 1);
        assert_eq!(bounded_markings(&net, 1000).unwrap().len(), 3);

        let mut nb = NetBuilder::new();
        let x = nb.variable("x", Interval::new(1, 2)).unwrap();
        let p = nb.place("p", ColorSet::range(1, 2), Multiset::new());
        let t = nb.transition("t", GuardExpr::True);
        nb.input(p, t, ArcExpr::NumberOf(2, vec![SimpleExpr::Var(x)]));
        let net = nb.build().unwrap();
        let all = bounded_markings(&net, 1000).unwrap();
        let mut counts: Vec<(u64, u64)> = all
            .iter()
            .map(|m| (m.place(0).count(&Color::scalar(1)), m.place(0).count(&Color::scalar(2))))
            .collect();
        counts.sort();
        assert_eq!(counts, vec![(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (2, 0)]);
        assert!(matches!(
            bounded_markings(&net, 5),
            Err(Error::TooLarge { estimate: 6, .. })
        ));

        let mut nb = NetBuilder::new();
        nb.place("p", ColorSet::range(1, 2), Multiset::new());
        let net = nb.build().unwrap();
        assert_eq!(max_arc_size(&net), 0);
        assert_eq!(bounded_markings(&net, 10).unwrap(), vec![Marking::empty(1)]);
    }
}
