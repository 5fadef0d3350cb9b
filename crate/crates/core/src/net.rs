//! Integer colored Petri nets: structure, validation and binding enumeration.

use std::collections::{BTreeMap, HashMap};

use crate::color::{ColorSet, Interval, IntervalSet};
use crate::error::{Error, Result};
use crate::expr::{eval_arc, eval_guard, ArcExpr, Binding, GuardExpr, LeafTuple, SimpleExpr, VarId, Variable};
use crate::multiset::{Marking, Multiset};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Place {
    pub name: String,
    pub domain: ColorSet,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub name: String,
    /// Action label; the transition's own name unless derived from another net.
    pub label: String,
    pub guard: GuardExpr,
    /// Variables used by the guard or arcs, sorted by name.
    pub variables: Vec<VarId>,
    /// Input arcs `(place, expr)`, sorted by place.
    pub inputs: Vec<(usize, ArcExpr)>,
    pub outputs: Vec<(usize, ArcExpr)>,
    /// Inhibitor weights; an absent entry never inhibits.
    pub inhibitors: Vec<(usize, u64)>,
}

impl Transition {
    pub fn input(&self, place: usize) -> Option<&ArcExpr> {
        self.inputs.iter().find(|(p, _)| *p == place).map(|(_, e)| e)
    }

    pub fn output(&self, place: usize) -> Option<&ArcExpr> {
        self.outputs.iter().find(|(p, _)| *p == place).map(|(_, e)| e)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColoredNet {
    pub places: Vec<Place>,
    pub transitions: Vec<Transition>,
    pub variables: Vec<Variable>,
    pub initial: Marking,
    /// Named color domains, kept for serialization only.
    pub sorts: Vec<(String, ColorSet)>,
}

/// Cap on exhaustive per-transition output checks during validation.
const VALIDATION_BINDING_CAP: u128 = 200_000;

impl ColoredNet {
    pub fn place_index(&self, name: &str) -> Option<usize> {
        self.places.iter().position(|p| p.name == name)
    }

    pub fn transition_index(&self, name: &str) -> Option<usize> {
        self.transitions.iter().position(|t| t.name == name)
    }

    pub fn variable_index(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name)
    }

    /// Checks the structural invariants of a net.
    pub fn validate(&self) -> Result<()> {
        let mut names = HashMap::new();
        for (kind, name) in self
            .places
            .iter()
            .map(|p| ("place", &p.name))
            .chain(self.transitions.iter().map(|t| ("transition", &t.name)))
        {
            check_identifier(name)?;
            if let Some(prev) = names.insert(name.as_str(), kind) {
                return Err(Error::invalid(format!("duplicate id `{name}` ({prev} and {kind})")));
            }
        }
        let mut var_names = HashMap::new();
        for v in &self.variables {
            if var_names.insert(v.name.as_str(), v.range).is_some() {
                return Err(Error::invalid(format!("duplicate variable `{}`", v.name)));
            }
        }
        if self.initial.len() != self.places.len() {
            return Err(Error::invalid("initial marking does not cover every place"));
        }
        for (i, p) in self.places.iter().enumerate() {
            let m = self.initial.place(i);
            if let Some(c) = m.support().find(|c| !p.domain.contains(c)) {
                return Err(Error::invalid(format!(
                    "initial token {c} of place `{}` lies outside its domain {}",
                    p.name, p.domain
                )));
            }
        }
        for t in &self.transitions {
            self.validate_transition(t)?;
        }
        Ok(())
    }

    fn validate_transition(&self, t: &Transition) -> Result<()> {
        let mut used = Vec::new();
        t.guard.variables(&mut used);
        for (_, e) in t.inputs.iter().chain(&t.outputs) {
            e.variables(&mut used);
        }
        for v in used {
            if v >= self.variables.len() || !t.variables.contains(&v) {
                return Err(Error::invalid(format!(
                    "transition `{}` uses undeclared variable #{v}",
                    t.name
                )));
            }
        }
        for (p, e) in t.inputs.iter().chain(&t.outputs) {
            let place = self
                .places
                .get(*p)
                .ok_or_else(|| Error::invalid(format!("transition `{}` references place #{p}", t.name)))?;
            self.validate_arc(&place.domain, e, &place.name, &t.name)?;
        }
        for &(p, w) in &t.inhibitors {
            if p >= self.places.len() || w == 0 {
                return Err(Error::invalid(format!("bad inhibitor on transition `{}`", t.name)));
            }
        }
        self.validate_guard(&t.guard, &t.name)?;
        if self.binding_space(t) <= VALIDATION_BINDING_CAP {
            for b in self.bindings(t) {
                for (p, e) in &t.outputs {
                    let produced = eval_arc(e, &b, &self.variables)?;
                    let outside = produced
                        .support()
                        .find(|c| !self.places[*p].domain.contains(c))
                        .cloned();
                    if let Some(c) = outside {
                        return Err(Error::invalid(format!(
                            "transition `{}` under {} produces {c} outside the domain of `{}`",
                            t.name,
                            b.display(&self.variables),
                            self.places[*p].name
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn validate_arc(&self, domain: &ColorSet, e: &ArcExpr, place: &str, trans: &str) -> Result<()> {
        for leaf in e.leaves() {
            match leaf.tuple {
                LeafTuple::All(d) => {
                    if d.arity() != domain.arity() {
                        return Err(Error::ArityMismatch {
                            expected: domain.arity(),
                            found: d.arity(),
                        });
                    }
                }
                LeafTuple::Tuple(tuple) => {
                    if tuple.len() != domain.arity() {
                        return Err(Error::invalid(format!(
                            "arc between `{place}` and `{trans}` has arity {} but the domain has arity {}",
                            tuple.len(),
                            domain.arity()
                        )));
                    }
                    for (j, s) in tuple.iter().enumerate() {
                        if let SimpleExpr::Const(c) = s {
                            if !domain.project(j).contains(*c) {
                                return Err(Error::invalid(format!(
                                    "constant {c} on arc between `{place}` and `{trans}` is outside coordinate {j} of the domain"
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn validate_guard(&self, g: &GuardExpr, trans: &str) -> Result<()> {
        match g {
            GuardExpr::Not(x) => self.validate_guard(x, trans),
            GuardExpr::And(l, r) | GuardExpr::Or(l, r) => {
                self.validate_guard(l, trans)?;
                self.validate_guard(r, trans)
            }
            GuardExpr::MsEq(l, r) | GuardExpr::MsNeq(l, r) => {
                match (crate::expr::arc_arity(l), crate::expr::arc_arity(r)) {
                    (Some(a), Some(b)) if a != b => Err(Error::invalid(format!(
                        "multiset comparison with arities {a} and {b} in guard of `{trans}`"
                    ))),
                    _ => Ok(()),
                }
            }
            _ => Ok(()),
        }
    }

    /// Per-variable candidate values for `t`: base range, narrowed by guard
    /// constraints and by input places' domains.
    pub fn binding_candidates(&self, t: &Transition) -> Option<Vec<IntervalSet>> {
        let constraints = t.guard.constraints(&self.variables)?;
        let mut cands: BTreeMap<VarId, IntervalSet> = t
            .variables
            .iter()
            .map(|&v| (v, IntervalSet::from_interval(self.variables[v].range)))
            .collect();
        for (v, c) in constraints {
            if let Some(s) = cands.get_mut(&v) {
                *s = s.intersect(&c);
            }
        }
        for (p, e) in &t.inputs {
            let domain = &self.places[*p].domain;
            for leaf in e.leaves() {
                let LeafTuple::Tuple(tuple) = leaf.tuple else { continue };
                if leaf.under_sub {
                    continue;
                }
                for (j, s) in tuple.iter().enumerate() {
                    let Some(v) = s.var() else { continue };
                    let range = self.variables[v].range;
                    let allowed = domain.project(j).rotate(range, -s.shift());
                    let entry = cands.get_mut(&v).expect("declared variable");
                    *entry = entry.intersect(&allowed);
                }
            }
        }
        let out: Vec<IntervalSet> = t.variables.iter().map(|v| cands.remove(v).unwrap()).collect();
        if out.iter().any(IntervalSet::is_empty) {
            return None;
        }
        Some(out)
    }

    /// Number of candidate bindings before guard and demand filtering.
    pub fn binding_space(&self, t: &Transition) -> u128 {
        match self.binding_candidates(t) {
            None => 0,
            Some(c) => c.iter().fold(1u128, |acc, s| acc.saturating_mul(s.size() as u128)),
        }
    }

    /// The bindings of `t` in lexicographic order: guard holds and every input
    /// demand stays inside the input place's domain.
    pub fn bindings<'a>(&'a self, t: &'a Transition) -> impl Iterator<Item = Binding> + 'a {
        let odometer = match self.binding_candidates(t) {
            Some(c) => Odometer::new(t.variables.clone(), c),
            None => Odometer::exhausted(),
        };
        odometer.filter(move |b| self.binding_admissible(t, b))
    }

    pub fn binding_admissible(&self, t: &Transition, b: &Binding) -> bool {
        if !eval_guard(&t.guard, b, &self.variables).unwrap_or(false) {
            return false;
        }
        t.inputs.iter().all(|(p, e)| match eval_arc(e, b, &self.variables) {
            Ok(m) => m.support_within(&self.places[*p].domain),
            Err(_) => false,
        })
    }

    pub fn input_demand(&self, t: &Transition, b: &Binding) -> Result<Vec<(usize, Multiset)>> {
        t.inputs
            .iter()
            .map(|(p, e)| Ok((*p, eval_arc(e, b, &self.variables)?)))
            .collect()
    }

    pub fn output_production(&self, t: &Transition, b: &Binding) -> Result<Vec<(usize, Multiset)>> {
        t.outputs
            .iter()
            .map(|(p, e)| Ok((*p, eval_arc(e, b, &self.variables)?)))
            .collect()
    }

    /// Sum of domain sizes.
    pub fn color_count(&self) -> u128 {
        self.places.iter().map(|p| p.domain.size() as u128).sum()
    }

    pub fn arc_count(&self) -> usize {
        self.transitions
            .iter()
            .map(|t| t.inputs.len() + t.outputs.len() + t.inhibitors.len())
            .sum()
    }
}

/// Source ids must be nonempty and must not contain the name-mangling separator.
pub fn check_identifier(name: &str) -> Result<()> {
    if name.is_empty() {
        return Err(Error::invalid("empty identifier"));
    }
    if name.contains("__") {
        return Err(Error::invalid(format!("identifier `{name}` contains reserved `__`")));
    }
    Ok(())
}

/// Lexicographic enumeration of the product of per-variable candidate sets.
struct Odometer {
    vars: Vec<VarId>,
    sets: Vec<IntervalSet>,
    // per variable: (interval index, value)
    cursor: Vec<(usize, u32)>,
    done: bool,
}

impl Odometer {
    fn new(vars: Vec<VarId>, sets: Vec<IntervalSet>) -> Self {
        let cursor = sets.iter().map(|s| (0, s.intervals()[0].lo)).collect();
        Odometer {
            vars,
            sets,
            cursor,
            done: false,
        }
    }

    fn exhausted() -> Self {
        Odometer {
            vars: Vec::new(),
            sets: Vec::new(),
            cursor: Vec::new(),
            done: true,
        }
    }
}

impl Iterator for Odometer {
    type Item = Binding;

    fn next(&mut self) -> Option<Binding> {
        if self.done {
            return None;
        }
        let b = Binding(self.vars.iter().zip(&self.cursor).map(|(&v, &(_, x))| (v, x)).collect());
        let mut i = self.cursor.len();
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            let ivs = self.sets[i].intervals();
            let (k, x) = self.cursor[i];
            if x < ivs[k].hi {
                self.cursor[i] = (k, x + 1);
                break;
            }
            if k + 1 < ivs.len() {
                self.cursor[i] = (k + 1, ivs[k + 1].lo);
                break;
            }
            self.cursor[i] = (0, ivs[0].lo);
        }
        Some(b)
    }
}

/// Incremental construction of a [`ColoredNet`] by name.
#[derive(Default)]
pub struct NetBuilder {
    places: Vec<Place>,
    initial: Vec<Multiset>,
    transitions: Vec<Transition>,
    variables: Vec<Variable>,
    sorts: Vec<(String, ColorSet)>,
}

impl NetBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn sort(&mut self, name: &str, domain: ColorSet) -> &mut Self {
        self.sorts.push((name.to_string(), domain));
        self
    }

    pub fn sorts(&self) -> &[(String, ColorSet)] {
        &self.sorts
    }

    /// Declares a variable, or returns the existing one with the same name.
    pub fn variable(&mut self, name: &str, range: Interval) -> Result<VarId> {
        if let Some(i) = self.variables.iter().position(|v| v.name == name) {
            if self.variables[i].range != range {
                return Err(Error::invalid(format!(
                    "variable `{name}` declared with ranges {} and {range}",
                    self.variables[i].range
                )));
            }
            return Ok(i);
        }
        self.variables.push(Variable {
            name: name.to_string(),
            range,
        });
        Ok(self.variables.len() - 1)
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn place(&mut self, name: &str, domain: ColorSet, initial: Multiset) -> usize {
        self.places.push(Place {
            name: name.to_string(),
            domain,
        });
        self.initial.push(initial);
        self.places.len() - 1
    }

    pub fn place_index(&self, name: &str) -> Option<usize> {
        self.places.iter().position(|p| p.name == name)
    }

    pub fn place_domain(&self, p: usize) -> &ColorSet {
        &self.places[p].domain
    }

    pub fn transition(&mut self, name: &str, guard: GuardExpr) -> usize {
        self.transitions.push(Transition {
            name: name.to_string(),
            label: name.to_string(),
            guard,
            variables: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            inhibitors: Vec::new(),
        });
        self.transitions.len() - 1
    }

    pub fn transition_index(&self, name: &str) -> Option<usize> {
        self.transitions.iter().position(|t| t.name == name)
    }

    pub fn label(&mut self, t: usize, label: &str) -> &mut Self {
        self.transitions[t].label = label.to_string();
        self
    }

    pub fn guard(&mut self, t: usize, guard: GuardExpr) -> &mut Self {
        let g = std::mem::replace(&mut self.transitions[t].guard, GuardExpr::True);
        self.transitions[t].guard = GuardExpr::and(g, guard);
        self
    }

    /// Adds an input arc; a second arc between the same pair is summed.
    pub fn input(&mut self, p: usize, t: usize, e: ArcExpr) -> &mut Self {
        add_arc(&mut self.transitions[t].inputs, p, e);
        self
    }

    pub fn output(&mut self, t: usize, p: usize, e: ArcExpr) -> &mut Self {
        add_arc(&mut self.transitions[t].outputs, p, e);
        self
    }

    /// Adds an inhibitor arc; repeated arcs keep the smallest weight.
    pub fn inhibitor(&mut self, p: usize, t: usize, weight: u64) -> &mut Self {
        let inh = &mut self.transitions[t].inhibitors;
        match inh.iter_mut().find(|(q, _)| *q == p) {
            Some((_, w)) => *w = (*w).min(weight),
            None => inh.push((p, weight)),
        }
        self
    }

    pub fn build(self) -> Result<ColoredNet> {
        let mut transitions = self.transitions;
        for t in &mut transitions {
            let mut used = Vec::new();
            t.guard.variables(&mut used);
            for (_, e) in t.inputs.iter().chain(&t.outputs) {
                e.variables(&mut used);
            }
            used.sort_by(|a, b| self.variables[*a].name.cmp(&self.variables[*b].name));
            used.dedup();
            t.variables = used;
            t.inputs.sort_by_key(|(p, _)| *p);
            t.outputs.sort_by_key(|(p, _)| *p);
            t.inhibitors.sort_by_key(|(p, _)| *p);
        }
        let net = ColoredNet {
            places: self.places,
            transitions,
            variables: self.variables,
            initial: Marking(self.initial),
            sorts: self.sorts,
        };
        net.validate()?;
        Ok(net)
    }
}

fn add_arc(arcs: &mut Vec<(usize, ArcExpr)>, p: usize, e: ArcExpr) {
    match arcs.iter_mut().find(|(q, _)| *q == p) {
        Some((_, prev)) => {
            let old = std::mem::replace(prev, ArcExpr::NumberOf(0, Vec::new()));
            *prev = ArcExpr::Add(Box::new(old), Box::new(e));
        }
        None => arcs.push((p, e)),
    }
}
