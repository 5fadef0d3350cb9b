//! Arc and guard expressions over integer colors with cyclic variable arithmetic.

use std::collections::BTreeMap;
use std::fmt;

use crate::color::{Color, ColorSet, Interval, IntervalSet};
use crate::error::{Error, Result};
use crate::multiset::Multiset;

/// Index into the net's variable table.
pub type VarId = usize;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Variable {
    pub name: String,
    pub range: Interval,
}

/// A single coordinate expression: a constant, a variable, or a cyclically
/// shifted variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SimpleExpr {
    Const(u32),
    Var(VarId),
    VarShift(VarId, i64),
}

impl SimpleExpr {
    pub fn var(&self) -> Option<VarId> {
        match *self {
            SimpleExpr::Const(_) => None,
            SimpleExpr::Var(v) | SimpleExpr::VarShift(v, _) => Some(v),
        }
    }

    /// Shift applied to the variable (0 for a plain variable).
    pub fn shift(&self) -> i64 {
        match *self {
            SimpleExpr::VarShift(_, d) => d,
            _ => 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ArcExpr {
    NumberOf(u64, Vec<SimpleExpr>),
    Add(Box<ArcExpr>, Box<ArcExpr>),
    Sub(Box<ArcExpr>, Box<ArcExpr>),
    Scale(u64, Box<ArcExpr>),
    /// One token of every color in the domain.
    All(ColorSet),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn eval(self, a: u32, b: u32) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
        }
    }

    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Ge => CmpOp::Lt,
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
        }
    }

    /// The operator with its operands swapped: `a op b` iff `b op.flip() a`.
    pub fn flip(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Gt => CmpOp::Lt,
            CmpOp::Ge => CmpOp::Le,
            op => op,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        }
    }

    /// Values `v` in `range` with `v op c`.
    fn solve(self, c: u32, range: Interval) -> IntervalSet {
        let r = IntervalSet::from_interval(range);
        let below = |hi: i64| {
            if hi < 0 {
                IntervalSet::empty()
            } else {
                IntervalSet::range(0, hi as u32)
            }
        };
        let c64 = c as i64;
        let set = match self {
            CmpOp::Lt => below(c64 - 1),
            CmpOp::Le => below(c64),
            CmpOp::Gt if c == u32::MAX => IntervalSet::empty(),
            CmpOp::Gt => IntervalSet::range(c + 1, u32::MAX),
            CmpOp::Ge => IntervalSet::range(c, u32::MAX),
            CmpOp::Eq => IntervalSet::range(c, c),
            CmpOp::Ne => IntervalSet::range(0, u32::MAX).difference(&IntervalSet::range(c, c)),
        };
        set.intersect(&r)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum GuardExpr {
    True,
    False,
    Not(Box<GuardExpr>),
    And(Box<GuardExpr>, Box<GuardExpr>),
    Or(Box<GuardExpr>, Box<GuardExpr>),
    MsEq(ArcExpr, ArcExpr),
    MsNeq(ArcExpr, ArcExpr),
    Cmp(CmpOp, SimpleExpr, SimpleExpr),
}

/// A total assignment of values to a transition's variables, kept in the
/// transition's (name-sorted) variable order.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Binding(pub Vec<(VarId, u32)>);

impl Binding {
    pub fn get(&self, var: VarId) -> Option<u32> {
        self.0.iter().find(|(v, _)| *v == var).map(|&(_, x)| x)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `⟨x=0,y=4⟩`-style rendering using the variable table for names.
    pub fn display<'a>(&'a self, vars: &'a [Variable]) -> impl fmt::Display + 'a {
        struct D<'a>(&'a Binding, &'a [Variable]);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("<")?;
                for (i, (v, x)) in self.0 .0.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{}={}", self.1[*v].name, x)?;
                }
                f.write_str(">")
            }
        }
        D(self, vars)
    }
}

impl fmt::Debug for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.0.iter().map(|(v, x)| (v, x))).finish()
    }
}

fn lookup(b: &Binding, vars: &[Variable], v: VarId) -> Result<u32> {
    b.get(v)
        .ok_or_else(|| Error::UnboundVariable(vars.get(v).map_or_else(|| format!("#{v}"), |x| x.name.clone())))
}

pub fn eval_simple(e: &SimpleExpr, b: &Binding, vars: &[Variable]) -> Result<u32> {
    match *e {
        SimpleExpr::Const(c) => Ok(c),
        SimpleExpr::Var(v) => lookup(b, vars, v),
        SimpleExpr::VarShift(v, d) => Ok(vars[v].range.rotate(lookup(b, vars, v)?, d)),
    }
}

pub fn eval_tuple(tuple: &[SimpleExpr], b: &Binding, vars: &[Variable]) -> Result<Color> {
    let mut out = Vec::with_capacity(tuple.len());
    for e in tuple {
        out.push(eval_simple(e, b, vars)?);
    }
    Ok(Color::new(out))
}

pub fn eval_arc(e: &ArcExpr, b: &Binding, vars: &[Variable]) -> Result<Multiset> {
    Ok(match e {
        ArcExpr::NumberOf(n, tuple) => Multiset::singleton(eval_tuple(tuple, b, vars)?, *n),
        ArcExpr::Add(l, r) => eval_arc(l, b, vars)?.union(&eval_arc(r, b, vars)?)?,
        ArcExpr::Sub(l, r) => eval_arc(l, b, vars)?.subtract(&eval_arc(r, b, vars)?)?,
        ArcExpr::Scale(n, inner) => eval_arc(inner, b, vars)?.scale(*n),
        ArcExpr::All(domain) => Multiset::of_set(domain),
    })
}

pub fn eval_guard(g: &GuardExpr, b: &Binding, vars: &[Variable]) -> Result<bool> {
    Ok(match g {
        GuardExpr::True => true,
        GuardExpr::False => false,
        GuardExpr::Not(inner) => !eval_guard(inner, b, vars)?,
        GuardExpr::And(l, r) => eval_guard(l, b, vars)? && eval_guard(r, b, vars)?,
        GuardExpr::Or(l, r) => eval_guard(l, b, vars)? || eval_guard(r, b, vars)?,
        GuardExpr::MsEq(l, r) => eval_arc(l, b, vars)? == eval_arc(r, b, vars)?,
        GuardExpr::MsNeq(l, r) => eval_arc(l, b, vars)? != eval_arc(r, b, vars)?,
        GuardExpr::Cmp(op, l, r) => op.eval(eval_simple(l, b, vars)?, eval_simple(r, b, vars)?),
    })
}

/// Upper bound on `|eval_arc(e, b)|` over all bindings.
pub fn arc_cardinality_bound(e: &ArcExpr) -> u64 {
    match e {
        ArcExpr::NumberOf(n, _) => *n,
        ArcExpr::Add(l, r) => arc_cardinality_bound(l).saturating_add(arc_cardinality_bound(r)),
        ArcExpr::Sub(l, _) => arc_cardinality_bound(l),
        ArcExpr::Scale(n, inner) => n.saturating_mul(arc_cardinality_bound(inner)),
        ArcExpr::All(domain) => domain.size(),
    }
}

/// Arity of the colors an expression produces, if it produces any tuple.
pub fn arc_arity(e: &ArcExpr) -> Option<usize> {
    match e {
        ArcExpr::NumberOf(_, t) => Some(t.len()),
        ArcExpr::Add(l, r) | ArcExpr::Sub(l, r) => arc_arity(l).or_else(|| arc_arity(r)),
        ArcExpr::Scale(_, inner) => arc_arity(inner),
        ArcExpr::All(d) => Some(d.arity()),
    }
}

impl ArcExpr {
    /// Leaves `(multiplicity, tuple)` of the expression with scale factors
    /// folded in. `negated` marks leaves under the right side of a `Sub`.
    pub fn leaves(&self) -> Vec<Leaf<'_>> {
        let mut out = Vec::new();
        self.collect_leaves(1, false, false, &mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, factor: u64, negated: bool, under_sub: bool, out: &mut Vec<Leaf<'a>>) {
        match self {
            ArcExpr::NumberOf(n, t) => out.push(Leaf {
                multiplicity: factor.saturating_mul(*n),
                tuple: LeafTuple::Tuple(t),
                negated,
                under_sub,
            }),
            ArcExpr::All(d) => out.push(Leaf {
                multiplicity: factor,
                tuple: LeafTuple::All(d),
                negated,
                under_sub,
            }),
            ArcExpr::Add(l, r) => {
                l.collect_leaves(factor, negated, under_sub, out);
                r.collect_leaves(factor, negated, under_sub, out);
            }
            ArcExpr::Sub(l, r) => {
                l.collect_leaves(factor, negated, true, out);
                r.collect_leaves(factor, true, true, out);
            }
            ArcExpr::Scale(n, inner) => inner.collect_leaves(factor.saturating_mul(*n), negated, under_sub, out),
        }
    }

    pub fn contains_sub(&self) -> bool {
        match self {
            ArcExpr::Sub(..) => true,
            ArcExpr::Add(l, r) => l.contains_sub() || r.contains_sub(),
            ArcExpr::Scale(_, inner) => inner.contains_sub(),
            _ => false,
        }
    }

    pub fn contains_all(&self) -> bool {
        match self {
            ArcExpr::All(_) => true,
            ArcExpr::Add(l, r) | ArcExpr::Sub(l, r) => l.contains_all() || r.contains_all(),
            ArcExpr::Scale(_, inner) => inner.contains_all(),
            _ => false,
        }
    }

    pub fn variables(&self, out: &mut Vec<VarId>) {
        for leaf in self.leaves() {
            if let LeafTuple::Tuple(t) = leaf.tuple {
                out.extend(t.iter().filter_map(SimpleExpr::var));
            }
        }
    }

    pub fn sum(terms: Vec<ArcExpr>) -> Option<ArcExpr> {
        terms.into_iter().reduce(|a, b| ArcExpr::Add(Box::new(a), Box::new(b)))
    }
}

#[derive(Clone, Copy, Debug)]
pub enum LeafTuple<'a> {
    Tuple(&'a [SimpleExpr]),
    All(&'a ColorSet),
}

#[derive(Clone, Copy, Debug)]
pub struct Leaf<'a> {
    pub multiplicity: u64,
    pub tuple: LeafTuple<'a>,
    pub negated: bool,
    pub under_sub: bool,
}

impl GuardExpr {
    pub fn and(a: GuardExpr, b: GuardExpr) -> GuardExpr {
        match (a, b) {
            (GuardExpr::True, g) | (g, GuardExpr::True) => g,
            (a, b) => GuardExpr::And(Box::new(a), Box::new(b)),
        }
    }

    pub fn variables(&self, out: &mut Vec<VarId>) {
        match self {
            GuardExpr::True | GuardExpr::False => {}
            GuardExpr::Not(g) => g.variables(out),
            GuardExpr::And(l, r) | GuardExpr::Or(l, r) => {
                l.variables(out);
                r.variables(out);
            }
            GuardExpr::MsEq(l, r) | GuardExpr::MsNeq(l, r) => {
                l.variables(out);
                r.variables(out);
            }
            GuardExpr::Cmp(_, l, r) => out.extend(l.var().into_iter().chain(r.var())),
        }
    }

    /// True if the guard contains a multiset comparison.
    pub fn has_multiset_cmp(&self) -> bool {
        match self {
            GuardExpr::MsEq(..) | GuardExpr::MsNeq(..) => true,
            GuardExpr::Not(g) => g.has_multiset_cmp(),
            GuardExpr::And(l, r) | GuardExpr::Or(l, r) => l.has_multiset_cmp() || r.has_multiset_cmp(),
            _ => false,
        }
    }

    /// Comparisons between two variable terms, as pairs of variables.
    pub fn var_var_comparisons(&self, out: &mut Vec<(VarId, VarId)>) {
        match self {
            GuardExpr::Not(g) => g.var_var_comparisons(out),
            GuardExpr::And(l, r) | GuardExpr::Or(l, r) => {
                l.var_var_comparisons(out);
                r.var_var_comparisons(out);
            }
            GuardExpr::Cmp(_, l, r) => {
                if let (Some(a), Some(b)) = (l.var(), r.var()) {
                    out.push((a, b));
                }
            }
            _ => {}
        }
    }

    /// Over-approximate the set of satisfying values per variable.
    ///
    /// `None` means the guard is unsatisfiable; a missing entry means the
    /// variable is unconstrained. Only comparisons between a (shifted)
    /// variable and a constant are analyzed.
    pub fn constraints(&self, vars: &[Variable]) -> Option<BTreeMap<VarId, IntervalSet>> {
        self.constraints_polar(vars, true)
    }

    fn constraints_polar(&self, vars: &[Variable], positive: bool) -> Option<BTreeMap<VarId, IntervalSet>> {
        match (self, positive) {
            (GuardExpr::True, true) | (GuardExpr::False, false) => Some(BTreeMap::new()),
            (GuardExpr::True, false) | (GuardExpr::False, true) => None,
            (GuardExpr::Not(g), _) => g.constraints_polar(vars, !positive),
            (GuardExpr::And(l, r), true) | (GuardExpr::Or(l, r), false) => conjoin(
                l.constraints_polar(vars, positive)?,
                r.constraints_polar(vars, positive)?,
            ),
            (GuardExpr::Or(l, r), true) | (GuardExpr::And(l, r), false) => {
                disjoin(l.constraints_polar(vars, positive), r.constraints_polar(vars, positive))
            }
            (GuardExpr::MsEq(..) | GuardExpr::MsNeq(..), _) => Some(BTreeMap::new()),
            (GuardExpr::Cmp(op, l, r), _) => {
                let op = if positive { *op } else { op.negate() };
                let (var_side, c, op) = match (l, r) {
                    (v, SimpleExpr::Const(c)) if v.var().is_some() => (v, *c, op),
                    (SimpleExpr::Const(c), v) if v.var().is_some() => (v, *c, op.flip()),
                    (SimpleExpr::Const(a), SimpleExpr::Const(b)) => {
                        return op.eval(*a, *b).then(BTreeMap::new);
                    }
                    _ => return Some(BTreeMap::new()),
                };
                let v = var_side.var().unwrap();
                let range = vars[v].range;
                // shifted value satisfies op; pull back through the rotation
                let allowed = op.solve(c, range).rotate(range, -var_side.shift());
                if allowed.is_empty() {
                    return None;
                }
                Some(BTreeMap::from([(v, allowed)]))
            }
        }
    }
}

fn conjoin(
    mut a: BTreeMap<VarId, IntervalSet>,
    b: BTreeMap<VarId, IntervalSet>,
) -> Option<BTreeMap<VarId, IntervalSet>> {
    for (v, s) in b {
        let merged = match a.remove(&v) {
            Some(prev) => prev.intersect(&s),
            None => s,
        };
        if merged.is_empty() {
            return None;
        }
        a.insert(v, merged);
    }
    Some(a)
}

fn disjoin(
    a: Option<BTreeMap<VarId, IntervalSet>>,
    b: Option<BTreeMap<VarId, IntervalSet>>,
) -> Option<BTreeMap<VarId, IntervalSet>> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(a), Some(b)) => Some(
            a.into_iter()
                .filter_map(|(v, s)| b.get(&v).map(|t| (v, s.union(t))))
                .collect(),
        ),
    }
}
