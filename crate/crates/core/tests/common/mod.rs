//! Random small colored nets for the property and acceptance suites.
//!
//! Every coordinate of every place domain is one of a few base sorts, and
//! variables are typed by sort, so arcs stay inside their domains by
//! construction. Nets whose state space exceeds `STATE_LIMIT` are skipped.

#![allow(dead_code)]

use cpnunfold_core::color::{ColorSet, Interval, IntervalSet};
use cpnunfold_core::expr::{ArcExpr, CmpOp, GuardExpr, SimpleExpr, VarId};
use cpnunfold_core::multiset::Multiset;
use cpnunfold_core::net::{ColoredNet, NetBuilder};
use cpnunfold_core::par::Exec;
use cpnunfold_core::semantics::explore;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const STATE_LIMIT: usize = 3000;

const OPS: [CmpOp; 6] = [CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge, CmpOp::Eq, CmpOp::Ne];

struct Gen {
    rng: ChaCha8Rng,
    sorts: Vec<Interval>,
    /// `(id, sort)`
    vars: Vec<(VarId, usize)>,
}

impl Gen {
    fn chance(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    fn value(&mut self, sort: usize) -> u32 {
        let iv = self.sorts[sort];
        self.rng.gen_range(iv.lo..=iv.hi)
    }

    fn var_of(&mut self, sort: usize) -> Option<VarId> {
        let fits: Vec<VarId> = self.vars.iter().filter(|(_, s)| *s == sort).map(|(v, _)| *v).collect();
        fits.choose(&mut self.rng).copied()
    }

    fn entry(&mut self, sort: usize) -> SimpleExpr {
        match self.var_of(sort) {
            Some(v) if self.chance(0.7) => {
                if self.chance(0.2) {
                    SimpleExpr::VarShift(v, if self.chance(0.5) { 1 } else { -1 })
                } else {
                    SimpleExpr::Var(v)
                }
            }
            _ => SimpleExpr::Const(self.value(sort)),
        }
    }

    fn leaf(&mut self, coords: &[usize]) -> ArcExpr {
        let n = if self.chance(0.15) { 2 } else { 1 };
        ArcExpr::NumberOf(n, coords.iter().map(|&s| self.entry(s)).collect())
    }

    fn arc(&mut self, coords: &[usize], domain: &ColorSet) -> ArcExpr {
        let r: f64 = self.rng.gen();
        if r < 0.7 {
            self.leaf(coords)
        } else if r < 0.82 {
            ArcExpr::Add(Box::new(self.leaf(coords)), Box::new(self.leaf(coords)))
        } else if r < 0.88 {
            ArcExpr::Scale(2, Box::new(self.leaf(coords)))
        } else if r < 0.95 {
            ArcExpr::Sub(Box::new(self.leaf(coords)), Box::new(self.leaf(coords)))
        } else {
            ArcExpr::All(domain.clone())
        }
    }

    fn atom(&mut self) -> GuardExpr {
        let op = *OPS.choose(&mut self.rng).unwrap();
        let (v, sort) = *self.vars.choose(&mut self.rng).unwrap();
        let lhs = if self.chance(0.15) {
            SimpleExpr::VarShift(v, 1)
        } else {
            SimpleExpr::Var(v)
        };
        let r: f64 = self.rng.gen();
        if r < 0.7 || self.vars.len() < 2 {
            GuardExpr::Cmp(op, lhs, SimpleExpr::Const(self.value(sort)))
        } else if r < 0.93 {
            let (w, _) = *self.vars.choose(&mut self.rng).unwrap();
            GuardExpr::Cmp(op, lhs, SimpleExpr::Var(w))
        } else {
            let a = ArcExpr::NumberOf(1, vec![SimpleExpr::Var(v)]);
            let b = ArcExpr::NumberOf(1, vec![SimpleExpr::Const(self.value(sort))]);
            if self.chance(0.5) {
                GuardExpr::MsEq(a, b)
            } else {
                GuardExpr::MsNeq(a, b)
            }
        }
    }

    fn guard(&mut self, depth: u32) -> GuardExpr {
        if self.vars.is_empty() {
            return if self.chance(0.9) {
                GuardExpr::True
            } else {
                GuardExpr::False
            };
        }
        let r: f64 = self.rng.gen();
        if depth == 0 || r < 0.55 {
            self.atom()
        } else if r < 0.75 {
            GuardExpr::And(Box::new(self.guard(depth - 1)), Box::new(self.guard(depth - 1)))
        } else if r < 0.92 {
            GuardExpr::Or(Box::new(self.guard(depth - 1)), Box::new(self.guard(depth - 1)))
        } else {
            GuardExpr::Not(Box::new(self.guard(depth - 1)))
        }
    }
}

/// A random net; `None` when the draw happens to be invalid.
pub fn random_net(seed: u64) -> Option<ColoredNet> {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        sorts: Vec::new(),
        vars: Vec::new(),
    };
    for _ in 0..g.rng.gen_range(1..=2) {
        let lo = g.rng.gen_range(0..=2);
        let size = g.rng.gen_range(1..=5);
        g.sorts.push(Interval::new(lo, lo + size - 1));
    }
    let mut b = NetBuilder::new();
    for i in 0..g.rng.gen_range(0..=2) {
        let sort = g.rng.gen_range(0..g.sorts.len());
        let v = b.variable(["x", "y"][i], g.sorts[sort]).ok()?;
        g.vars.push((v, sort));
    }
    let mut places = Vec::new();
    for i in 0..g.rng.gen_range(1..=4) {
        let s1 = g.rng.gen_range(0..g.sorts.len());
        let s2 = g.rng.gen_range(0..g.sorts.len());
        let coords = if g.chance(0.3) && g.sorts[s1].len() * g.sorts[s2].len() <= 5 {
            vec![s1, s2]
        } else {
            vec![s1]
        };
        let ranges: Vec<IntervalSet> = coords.iter().map(|&s| IntervalSet::from_interval(g.sorts[s])).collect();
        let domain = ColorSet::product(&ranges);
        let colors: Vec<_> = domain.iter().collect();
        let mut initial = Multiset::new();
        for _ in 0..g.rng.gen_range(0..=3) {
            initial.insert(colors.choose(&mut g.rng).unwrap().clone(), 1);
        }
        let p = b.place(&format!("p{i}"), domain.clone(), initial);
        places.push((p, coords, domain));
    }
    for i in 0..g.rng.gen_range(1..=3) {
        let guard = if g.chance(0.5) { GuardExpr::True } else { g.guard(2) };
        let t = b.transition(&format!("t{i}"), guard);
        for _ in 0..g.rng.gen_range(0..=2) {
            let (p, coords, domain) = places.choose(&mut g.rng).unwrap().clone();
            let e = g.arc(&coords, &domain);
            b.input(p, t, e);
        }
        for _ in 0..g.rng.gen_range(0..=2) {
            let (p, coords, domain) = places.choose(&mut g.rng).unwrap().clone();
            let e = g.arc(&coords, &domain);
            b.output(t, p, e);
        }
        if g.chance(0.25) {
            let (p, _, _) = places.choose(&mut g.rng).unwrap().clone();
            let w = g.rng.gen_range(1..=2);
            b.inhibitor(p, t, w);
        }
    }
    b.build().ok()
}

/// Random nets with a complete state space below [`STATE_LIMIT`], starting
/// from `seed`.
pub fn bounded_nets(count: usize, seed: u64) -> Vec<(u64, ColoredNet)> {
    let mut out = Vec::new();
    let mut s = seed;
    while out.len() < count {
        if let Some(net) = random_net(s) {
            if explore(&net, STATE_LIMIT, Exec::Sequential).is_ok_and(|l| !l.truncated) {
                out.push((s, net));
            }
        }
        s += 1;
    }
    out
}
