//! Place/Transition nets with weighted and inhibitor arcs.

use crate::color::{Color, ColorSet};
use crate::expr::{ArcExpr, GuardExpr, SimpleExpr};
use crate::multiset::{Marking, Multiset};
use crate::net::{ColoredNet, Place, Transition};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PtPlace {
    pub name: String,
    pub initial: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PtTransition {
    pub name: String,
    /// Name of the colored transition this one was unfolded from.
    pub label: String,
    /// `(place, weight)`, sorted by place; weights are positive.
    pub inputs: Vec<(usize, u64)>,
    pub outputs: Vec<(usize, u64)>,
    pub inhibitors: Vec<(usize, u64)>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PTNet {
    pub places: Vec<PtPlace>,
    pub transitions: Vec<PtTransition>,
}

impl PTNet {
    pub fn arc_count(&self) -> usize {
        self.transitions.iter().map(|t| t.inputs.len() + t.outputs.len()).sum()
    }

    pub fn inhibitor_count(&self) -> usize {
        self.transitions.iter().map(|t| t.inhibitors.len()).sum()
    }

    pub fn place_index(&self, name: &str) -> Option<usize> {
        self.places.iter().position(|p| p.name == name)
    }

    pub fn transition_index(&self, name: &str) -> Option<usize> {
        self.transitions.iter().position(|t| t.name == name)
    }

    /// The same net as a single-color net over the dot domain, so the colored
    /// semantics engine can run it.
    pub fn to_colored(&self) -> ColoredNet {
        let dot = |n: u64| ArcExpr::NumberOf(n, vec![SimpleExpr::Const(1)]);
        ColoredNet {
            places: self
                .places
                .iter()
                .map(|p| Place {
                    name: p.name.clone(),
                    domain: ColorSet::dot(),
                })
                .collect(),
            transitions: self
                .transitions
                .iter()
                .map(|t| Transition {
                    name: t.name.clone(),
                    label: t.label.clone(),
                    guard: GuardExpr::True,
                    variables: Vec::new(),
                    inputs: t.inputs.iter().map(|&(p, w)| (p, dot(w))).collect(),
                    outputs: t.outputs.iter().map(|&(p, w)| (p, dot(w))).collect(),
                    inhibitors: t.inhibitors.clone(),
                })
                .collect(),
            variables: Vec::new(),
            initial: Marking(
                self.places
                    .iter()
                    .map(|p| Multiset::singleton(Color::dot(), p.initial))
                    .collect(),
            ),
            sorts: Vec::new(),
        }
    }

    /// Removes places with no tokens and no connected arcs.
    pub fn prune_orphans(&mut self) {
        let mut used = vec![false; self.places.len()];
        for t in &self.transitions {
            for &(p, _) in t.inputs.iter().chain(&t.outputs).chain(&t.inhibitors) {
                used[p] = true;
            }
        }
        let mut remap = vec![usize::MAX; self.places.len()];
        let mut kept = Vec::new();
        for (i, p) in self.places.drain(..).enumerate() {
            if used[i] || p.initial > 0 {
                remap[i] = kept.len();
                kept.push(p);
            }
        }
        self.places = kept;
        for t in &mut self.transitions {
            for arcs in [&mut t.inputs, &mut t.outputs, &mut t.inhibitors] {
                for (p, _) in arcs.iter_mut() {
                    *p = remap[*p];
                }
            }
        }
    }
}
