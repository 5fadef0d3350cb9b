//! Unfolding colored nets into P/T nets.

use std::collections::HashMap;

use serde::Serialize;

use crate::color::Color;
use crate::error::{Error, Result};
use crate::expr::{Binding, Variable};
use crate::net::{ColoredNet, Transition};
use crate::par::{map_collect, Exec};
use crate::ptnet::{PTNet, PtPlace, PtTransition};

/// Default cap on unfolded places plus transition instances.
pub const DEFAULT_SIZE_CAP: u128 = 20_000_000;

pub fn place_instance_name(place: &str, color: &Color) -> String {
    let parts: Vec<String> = color.components().iter().map(u32::to_string).collect();
    format!("{place}__{}", parts.join("_"))
}

pub fn sum_place_name(place: &str) -> String {
    format!("{place}__SUM")
}

/// `t__x3_y4`, or just `t` for the empty binding.
pub fn transition_instance_name(transition: &str, b: &Binding, vars: &[Variable]) -> String {
    if b.is_empty() {
        return transition.to_string();
    }
    let parts: Vec<String> = b.0.iter().map(|(v, c)| format!("{}{c}", vars[*v].name)).collect();
    format!("{transition}__{}", parts.join("_"))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnfoldOptions {
    pub exec: Exec,
    pub size_cap: u128,
}

impl Default for UnfoldOptions {
    fn default() -> Self {
        UnfoldOptions {
            exec: Exec::default(),
            size_cap: DEFAULT_SIZE_CAP,
        }
    }
}

struct Layout {
    colors: Vec<HashMap<Color, usize>>,
    sums: Vec<Option<usize>>,
}

pub fn unfold(net: &ColoredNet) -> Result<PTNet> {
    unfold_with(net, &UnfoldOptions::default())
}

pub fn unfold_with(net: &ColoredNet, opts: &UnfoldOptions) -> Result<PTNet> {
    let estimate = net
        .transitions
        .iter()
        .fold(net.color_count(), |acc, t| acc.saturating_add(net.binding_space(t)));
    if estimate > opts.size_cap {
        return Err(Error::TooLarge {
            what: "unfolding".into(),
            estimate,
            cap: opts.size_cap,
        });
    }
    let mut inhibiting = vec![false; net.places.len()];
    for t in &net.transitions {
        for &(p, _) in &t.inhibitors {
            inhibiting[p] = true;
        }
    }
    let mut places = Vec::new();
    let mut layout = Layout {
        colors: Vec::with_capacity(net.places.len()),
        sums: Vec::with_capacity(net.places.len()),
    };
    for (i, p) in net.places.iter().enumerate() {
        let marking = net.initial.place(i);
        let mut index = HashMap::new();
        for c in p.domain.iter() {
            index.insert(c.clone(), places.len());
            places.push(PtPlace {
                name: place_instance_name(&p.name, &c),
                initial: marking.count(&c),
            });
        }
        layout.colors.push(index);
        layout.sums.push(inhibiting[i].then(|| {
            places.push(PtPlace {
                name: sum_place_name(&p.name),
                initial: marking.cardinality(),
            });
            places.len() - 1
        }));
    }
    let per_transition = map_collect(opts.exec, &net.transitions, |t| unfold_transition(net, t, &layout));
    let mut transitions = Vec::new();
    for ts in per_transition {
        transitions.extend(ts?);
    }
    Ok(PTNet { places, transitions })
}

fn unfold_transition(net: &ColoredNet, t: &Transition, layout: &Layout) -> Result<Vec<PtTransition>> {
    let arcs = |flows: Vec<(usize, crate::multiset::Multiset)>| -> Result<Vec<(usize, u64)>> {
        let mut out = Vec::new();
        for (p, ms) in flows {
            for (c, n) in ms.iter() {
                let idx = *layout.colors[p].get(c).ok_or_else(|| {
                    Error::invalid(format!(
                        "transition `{}` moves color {c} outside the domain of `{}`",
                        t.name, net.places[p].name
                    ))
                })?;
                out.push((idx, n));
            }
            if let Some(s) = layout.sums[p] {
                if ms.cardinality() > 0 {
                    out.push((s, ms.cardinality()));
                }
            }
        }
        out.sort_unstable();
        Ok(out)
    };
    let inhibitors: Vec<(usize, u64)> = t
        .inhibitors
        .iter()
        .map(|&(p, w)| (layout.sums[p].expect("inhibiting place has a sum place"), w))
        .collect();
    net.bindings(t)
        .map(|b| {
            Ok(PtTransition {
                name: transition_instance_name(&t.name, &b, &net.variables),
                label: t.label.clone(),
                inputs: arcs(net.input_demand(t, &b)?)?,
                outputs: arcs(net.output_production(t, &b)?)?,
                inhibitors: inhibitors.clone(),
            })
        })
        .collect()
}

/// Size figures for reports.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct NetStats {
    pub places: usize,
    pub transitions: usize,
    pub arcs: usize,
    pub inhibitor_arcs: usize,
    /// Colored nets only: total number of colors over all place domains.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub colors: Option<u128>,
    /// Colored nets only: candidate bindings before guard filtering.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub binding_estimate: Option<u128>,
}

pub fn pt_stats(net: &PTNet) -> NetStats {
    NetStats {
        places: net.places.len(),
        transitions: net.transitions.len(),
        arcs: net.arc_count(),
        inhibitor_arcs: net.inhibitor_count(),
        colors: None,
        binding_estimate: None,
    }
}

pub fn colored_stats(net: &ColoredNet) -> NetStats {
    NetStats {
        places: net.places.len(),
        transitions: net.transitions.len(),
        arcs: net.transitions.iter().map(|t| t.inputs.len() + t.outputs.len()).sum(),
        inhibitor_arcs: net.transitions.iter().map(|t| t.inhibitors.len()).sum(),
        colors: Some(net.color_count()),
        binding_estimate: Some(
            net.transitions
                .iter()
                .fold(0u128, |acc, t| acc.saturating_add(net.binding_space(t))),
        ),
    }
}
