//! Randomized properties over small generated nets.

mod common;

use std::collections::{BTreeSet, HashMap};
use std::time::Duration;

use cpnunfold_core::approx::{
    expand, fixed_point, fixed_point_in_order, fixed_point_with_status, initial_approx, restrict, subsumes,
    Approximation,
};
use cpnunfold_core::color::ColorSet;
use cpnunfold_core::expr::{eval_arc, eval_guard, Binding};
use cpnunfold_core::io::{ptpnml, text};
use cpnunfold_core::multiset::Marking;
use cpnunfold_core::multiset::Multiset;
use cpnunfold_core::net::ColoredNet;
use cpnunfold_core::oracle::bisimilar;
use cpnunfold_core::par::Exec;
use cpnunfold_core::pipeline::{run, PipelineOptions};
use cpnunfold_core::quotient::{
    is_stable_oracle, partition_union, quotient, refines, stabilize, Partition, PartitionIndex,
};
use cpnunfold_core::semantics::{bounded_marking_count, explore, Lts};
use cpnunfold_core::unfold::{unfold, unfold_with, UnfoldOptions};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BUDGET: Duration = Duration::from_secs(10);
/// Bounded-marking enumeration cap for the stability oracle in this suite.
const ORACLE_CAP: u128 = 20_000;

/// A generated net with a complete state space, or a skipped case.
fn bounded(seed: u64) -> Option<(ColoredNet, Lts<Marking>)> {
    let net = common::random_net(seed)?;
    let lts = explore(&net, common::STATE_LIMIT, Exec::Sequential).ok()?;
    (!lts.truncated).then_some((net, lts))
}

fn full_lts(net: &ColoredNet) -> Lts<Marking> {
    let lts = explore(net, 8 * common::STATE_LIMIT, Exec::Sequential).unwrap();
    assert!(!lts.truncated);
    lts
}

fn contained(a: &Approximation, b: &Approximation) -> bool {
    a.possible.iter().zip(&b.possible).all(|(x, y)| x.is_subset(y))
}

/// Every assignment of the transition's variables over their full ranges.
fn all_assignments(net: &ColoredNet, t: usize) -> Vec<Binding> {
    let mut out = vec![Binding::default()];
    for &v in &net.transitions[t].variables {
        out = out
            .into_iter()
            .flat_map(|b| {
                net.variables[v].range.values().map(move |x| {
                    let mut b = b.clone();
                    b.0.push((v, x));
                    b
                })
            })
            .collect();
    }
    out
}

/// A random grouping of each place's colors, kept only if the oracle accepts it.
fn random_stable_partition(net: &ColoredNet, seed: u64) -> Option<Partition> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classes = net
        .places
        .iter()
        .map(|p| {
            let k = rng.gen_range(1..=p.domain.size().max(1)) as usize;
            let mut groups = vec![Vec::new(); k];
            for c in p.domain.iter() {
                groups[rng.gen_range(0..k)].push(c);
            }
            groups
                .into_iter()
                .filter(|g| !g.is_empty())
                .map(|g| ColorSet::from_colors(p.domain.arity(), &g).unwrap())
                .collect()
        })
        .collect();
    let partition = Partition::new(net, classes).ok()?;
    is_stable_oracle(net, &partition, ORACLE_CAP).ok()?.then_some(partition)
}

/// Per-class demand, production and inhibitors of one binding, with classes
/// named by their representative color.
type Effect = (Vec<(usize, Multiset)>, Vec<(usize, Multiset)>, Vec<(usize, u64)>);

fn class_effect(
    idx: &PartitionIndex,
    reps: &[Vec<(cpnunfold_core::color::Color, ColorSet)>],
    flows: Vec<(usize, Multiset)>,
) -> Vec<(usize, Multiset)> {
    flows
        .into_iter()
        .map(|(p, ms)| {
            let mut out = Multiset::new();
            for (c, n) in ms.iter() {
                out.insert(reps[p][idx.class_of(p, c).unwrap()].0.clone(), n);
            }
            (p, out)
        })
        .filter(|(_, ms)| !ms.is_empty())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 96, ..ProptestConfig::default() })]

    #[test]
    fn text_format_round_trips(seed in any::<u64>()) {
        let Some(net) = common::random_net(seed) else { return Ok(()) };
        let written = text::write(&net);
        let back = text::parse(&written).unwrap();
        prop_assert_eq!(text::write(&back), written);
        prop_assert_eq!(back, net);
    }

    #[test]
    fn bindings_are_the_guard_filtered_product(seed in any::<u64>()) {
        let Some(net) = common::random_net(seed) else { return Ok(()) };
        for (ti, t) in net.transitions.iter().enumerate() {
            let streamed: BTreeSet<Vec<(usize, u32)>> = net.bindings(t).map(|b| b.0).collect();
            let filtered: BTreeSet<Vec<(usize, u32)>> = all_assignments(&net, ti)
                .into_iter()
                .filter(|b| eval_guard(&t.guard, b, &net.variables).unwrap())
                .map(|b| b.0)
                .collect();
            prop_assert!(streamed.is_subset(&filtered));
            // the stream may drop bindings whose arcs leave their place domains
            for b in filtered.difference(&streamed) {
                prop_assert!(!net.binding_admissible(t, &Binding(b.clone())));
            }
            for b in net.bindings(t) {
                for (p, e) in t.inputs.iter().chain(&t.outputs) {
                    let ms = eval_arc(e, &b, &net.variables).unwrap();
                    prop_assert!(ms.support_within(&net.places[*p].domain));
                }
            }
        }
    }

    #[test]
    fn reachable_markings_stay_in_their_domains(seed in any::<u64>()) {
        let Some((net, lts)) = bounded(seed) else { return Ok(()) };
        for m in &lts.states {
            for (p, place) in net.places.iter().enumerate() {
                prop_assert!(m.place(p).support_within(&place.domain));
            }
        }
        let again = explore(&net, common::STATE_LIMIT, Exec::Sequential).unwrap();
        prop_assert_eq!(&again.states, &lts.states);
        prop_assert_eq!(&again.edges, &lts.edges);
    }

    #[test]
    fn approximation_is_monotone_and_sound(seed in any::<u64>()) {
        let Some((net, lts)) = bounded(seed) else { return Ok(()) };
        let init = initial_approx(&net);
        prop_assert!(contained(&init, &expand(&net, &init)));
        let fp = fixed_point(&net, BUDGET);
        prop_assert!(contained(&init, &fp));
        prop_assert_eq!(&expand(&net, &fp).possible, &fp.possible);
        prop_assert!(lts.states.iter().all(|m| subsumes(&fp, m)));
        let reversed: Vec<usize> = (0..net.transitions.len()).rev().collect();
        prop_assert_eq!(&fixed_point_in_order(&net, BUDGET, &reversed).approximation.possible, &fp.possible);
    }

    #[test]
    fn restricted_unfolding_stays_inside_the_approximation(seed in any::<u64>()) {
        let Some(net) = common::random_net(seed) else { return Ok(()) };
        let a = fixed_point(&net, BUDGET);
        let restricted = restrict(&net, &a).unwrap();
        let pt = unfold(&restricted).unwrap();
        let colors = pt.places.iter().filter(|p| !p.name.ends_with("__SUM")).count() as u128;
        prop_assert_eq!(colors, a.color_count());
        for t in &restricted.transitions {
            for b in restricted.bindings(t) {
                for (p, ms) in restricted.input_demand(t, &b).unwrap() {
                    prop_assert!(ms.support_within(&a.possible[p]));
                }
            }
        }
    }

    #[test]
    fn stabilize_output_is_stable(seed in any::<u64>()) {
        let Some(net) = common::random_net(seed) else { return Ok(()) };
        prop_assume!(bounded_marking_count(&net) <= ORACLE_CAP);
        let d = stabilize(&net, BUDGET);
        prop_assert!(Partition::new(&net, d.classes.clone()).is_ok());
        prop_assert!(is_stable_oracle(&net, &d, ORACLE_CAP).unwrap());
    }

    #[test]
    fn union_of_stable_partitions_is_stable(seed in any::<u64>(), split in any::<u64>()) {
        let Some(net) = common::random_net(seed) else { return Ok(()) };
        prop_assume!(bounded_marking_count(&net) <= ORACLE_CAP);
        let d1 = stabilize(&net, BUDGET);
        let d2 = random_stable_partition(&net, split).unwrap_or_else(|| Partition::finest(&net));
        let u = partition_union(&d1, &d2);
        prop_assert!(refines(&u, &d1));
        prop_assert!(refines(&u, &d2));
        prop_assert!(is_stable_oracle(&net, &u, ORACLE_CAP).unwrap());
    }

    #[test]
    fn refinement_is_a_partial_order(seed in any::<u64>(), split in any::<u64>()) {
        let Some(net) = common::random_net(seed) else { return Ok(()) };
        let mut rng = ChaCha8Rng::seed_from_u64(split);
        let mut parts = vec![Partition::finest(&net), Partition::coarsest(&net), stabilize(&net, BUDGET)];
        // a random partition, stable or not
        let classes = net.places.iter().map(|p| {
            let cut = rng.gen_range(0..=p.domain.size());
            let colors: Vec<_> = p.domain.iter().collect();
            let (a, b) = colors.split_at(cut as usize);
            [a, b].into_iter().filter(|g| !g.is_empty()).map(|g| ColorSet::from_colors(p.domain.arity(), g).unwrap()).collect()
        }).collect();
        parts.push(Partition::new(&net, classes).unwrap());
        parts.push(partition_union(&parts[2], &parts[3]));
        for a in &parts {
            prop_assert!(refines(a, a));
            prop_assert!(refines(&parts[1], a));
            prop_assert!(refines(a, &parts[0]));
            for b in &parts {
                if refines(a, b) && refines(b, a) {
                    prop_assert_eq!(&a.classes, &b.classes);
                }
                for c in &parts {
                    if refines(a, b) && refines(b, c) {
                        prop_assert!(refines(a, c));
                    }
                }
            }
        }
    }

    #[test]
    fn quotient_transitions_are_exactly_the_binding_class_effects(seed in any::<u64>()) {
        let Some(net) = common::random_net(seed) else { return Ok(()) };
        let d = stabilize(&net, BUDGET);
        let q = quotient(&net, &d).unwrap();
        let idx = PartitionIndex::new(&d);
        let mut expected: HashMap<&str, BTreeSet<Effect>> = HashMap::new();
        for t in &net.transitions {
            let set = expected.entry(t.label.as_str()).or_default();
            for b in net.bindings(t) {
                set.insert((
                    class_effect(&idx, &q.representatives, net.input_demand(t, &b).unwrap()),
                    class_effect(&idx, &q.representatives, net.output_production(t, &b).unwrap()),
                    t.inhibitors.clone(),
                ));
            }
        }
        let mut actual: HashMap<&str, BTreeSet<Effect>> = HashMap::new();
        for t in &q.net.transitions {
            let b = Binding::default();
            actual.entry(t.label.as_str()).or_default().insert((
                q.net.input_demand(t, &b).unwrap().into_iter().filter(|(_, m)| !m.is_empty()).collect(),
                q.net.output_production(t, &b).unwrap().into_iter().filter(|(_, m)| !m.is_empty()).collect(),
                t.inhibitors.clone(),
            ));
        }
        expected.retain(|_, s| !s.is_empty());
        prop_assert_eq!(actual, expected);
    }

    #[test]
    fn sum_places_count_their_instances(seed in any::<u64>()) {
        let Some((net, _)) = bounded(seed) else { return Ok(()) };
        let pt = unfold(&net).unwrap();
        let lts = full_lts(&pt.to_colored());
        for p in net.places.iter().filter(|p| pt.place_index(&format!("{}__SUM", p.name)).is_some()) {
            let sum = pt.place_index(&format!("{}__SUM", p.name)).unwrap();
            let prefix = format!("{}__", p.name);
            let parts: Vec<usize> = (0..pt.places.len())
                .filter(|&i| i != sum && pt.places[i].name.starts_with(&prefix))
                .collect();
            for m in &lts.states {
                let total: u64 = parts.iter().map(|&i| m.place(i).cardinality()).sum();
                prop_assert_eq!(m.place(sum).cardinality(), total);
            }
        }
    }

    #[test]
    fn unfolding_is_deterministic_and_mode_independent(seed in any::<u64>()) {
        let Some(net) = common::random_net(seed) else { return Ok(()) };
        let seq = unfold_with(&net, &UnfoldOptions { exec: Exec::Sequential, ..Default::default() }).unwrap();
        let par = unfold_with(&net, &UnfoldOptions { exec: Exec::Parallel, ..Default::default() }).unwrap();
        prop_assert_eq!(&seq, &par);
        prop_assert_eq!(ptpnml::write_pt_pnml(&seq, "n"), ptpnml::write_pt_pnml(&unfold(&net).unwrap(), "n"));
        let a = fixed_point_with_status(&net, BUDGET, Exec::Sequential);
        let b = fixed_point_with_status(&net, BUDGET, Exec::Parallel);
        prop_assert_eq!(&a.approximation.possible, &b.approximation.possible);
        if let Some((_, lts)) = bounded(seed) {
            let par = explore(&net, common::STATE_LIMIT, Exec::Parallel).unwrap();
            prop_assert_eq!(&par.states, &lts.states);
            prop_assert_eq!(&par.edges, &lts.edges);
        }
    }

    #[test]
    fn full_pipeline_preserves_behaviour(seed in any::<u64>()) {
        let Some((net, lts)) = bounded(seed) else { return Ok(()) };
        let out = run(&net, &PipelineOptions::default()).unwrap();
        let reduced = full_lts(&out.net.to_colored());
        prop_assert!(bisimilar(&lts, &reduced, 0, 0));
    }
}
