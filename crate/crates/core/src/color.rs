//! Colors, closed integer intervals and interval-backed color sets.
//!
//! A [`ColorSet`] is stored as a small interval decision tree: the first
//! coordinate is split into disjoint intervals, each pointing at the set of
//! remaining coordinates. Adjacent intervals with identical subtrees are always
//! merged, which makes the representation canonical: two color sets are equal
//! as sets iff they are structurally equal.

use std::cmp::Ordering;
use std::fmt;

use smallvec::SmallVec;

use crate::error::{Error, Result};

/// A color: a nonempty tuple of nonnegative integers.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Color(SmallVec<[u32; 4]>);

impl Color {
    pub fn new(components: impl IntoIterator<Item = u32>) -> Self {
        Color(components.into_iter().collect())
    }

    pub fn scalar(value: u32) -> Self {
        Color(SmallVec::from_slice(&[value]))
    }

    /// The dot color, encoded as the 1-tuple `(1)`.
    pub fn dot() -> Self {
        Color::scalar(1)
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[u32] {
        &self.0
    }

    pub fn get(&self, index: usize) -> u32 {
        self.0[index]
    }
}

impl From<&[u32]> for Color {
    fn from(value: &[u32]) -> Self {
        Color(SmallVec::from_slice(value))
    }
}

impl fmt::Debug for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

/// Closed interval `[lo, hi]` with `lo <= hi`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Interval {
    pub lo: u32,
    pub hi: u32,
}

impl Interval {
    pub fn new(lo: u32, hi: u32) -> Self {
        assert!(lo <= hi, "empty interval [{lo},{hi}]");
        Interval { lo, hi }
    }

    pub fn point(v: u32) -> Self {
        Interval { lo: v, hi: v }
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> u64 {
        self.hi as u64 - self.lo as u64 + 1
    }

    pub fn contains(&self, v: u32) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn values(&self) -> impl Iterator<Item = u32> {
        self.lo..=self.hi
    }

    /// Cyclic successor arithmetic inside this interval: `lo + ((v - lo + delta) mod len)`.
    pub fn rotate(&self, v: u32, delta: i64) -> u32 {
        let w = self.len() as i64;
        let off = (v as i64 - self.lo as i64 + delta).rem_euclid(w);
        (self.lo as i64 + off) as u32
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lo == self.hi {
            write!(f, "[{}]", self.lo)
        } else {
            write!(f, "[{},{}]", self.lo, self.hi)
        }
    }
}

/// Sorted, disjoint, non-adjacent intervals over one coordinate.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct IntervalSet(Vec<Interval>);

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet(Vec::new())
    }

    pub fn from_interval(iv: Interval) -> Self {
        IntervalSet(vec![iv])
    }

    pub fn range(lo: u32, hi: u32) -> Self {
        if lo > hi {
            return Self::empty();
        }
        IntervalSet(vec![Interval::new(lo, hi)])
    }

    pub fn from_intervals(ivs: impl IntoIterator<Item = Interval>) -> Self {
        let mut v: Vec<Interval> = ivs.into_iter().collect();
        v.sort_unstable();
        let mut out: Vec<Interval> = Vec::with_capacity(v.len());
        for iv in v {
            match out.last_mut() {
                Some(last) if iv.lo as u64 <= last.hi as u64 + 1 => last.hi = last.hi.max(iv.hi),
                _ => out.push(iv),
            }
        }
        IntervalSet(out)
    }

    pub fn from_values(values: impl IntoIterator<Item = u32>) -> Self {
        Self::from_intervals(values.into_iter().map(Interval::point))
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn size(&self) -> u64 {
        self.0.iter().map(Interval::len).sum()
    }

    pub fn contains(&self, v: u32) -> bool {
        self.0
            .binary_search_by(|iv| {
                if iv.hi < v {
                    Ordering::Less
                } else if iv.lo > v {
                    Ordering::Greater
                } else {
                    Ordering::Equal
                }
            })
            .is_ok()
    }

    pub fn hull(&self) -> Option<Interval> {
        Some(Interval::new(self.0.first()?.lo, self.0.last()?.hi))
    }

    pub fn values(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.iter().flat_map(|iv| iv.values())
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        Self::from_intervals(self.0.iter().chain(&other.0).copied())
    }

    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            if let Some(iv) = self.0[i].intersect(&other.0[j]) {
                out.push(iv);
            }
            if self.0[i].hi < other.0[j].hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntervalSet(out)
    }

    pub fn difference(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = Vec::new();
        let mut j = 0;
        for iv in &self.0 {
            let mut lo = iv.lo as u64;
            let hi = iv.hi as u64;
            while j < other.0.len() && (other.0[j].hi as u64) < lo {
                j += 1;
            }
            let mut k = j;
            while lo <= hi {
                match other.0.get(k) {
                    Some(o) if (o.lo as u64) <= hi => {
                        if (o.lo as u64) > lo {
                            out.push(Interval::new(lo as u32, o.lo - 1));
                        }
                        lo = lo.max(o.hi as u64 + 1);
                        k += 1;
                    }
                    _ => {
                        out.push(Interval::new(lo as u32, hi as u32));
                        break;
                    }
                }
            }
        }
        IntervalSet(out)
    }

    pub fn is_subset(&self, other: &IntervalSet) -> bool {
        self.difference(other).is_empty()
    }

    /// Image of `self ∩ range` under the cyclic shift `v ↦ range.rotate(v, delta)`.
    pub fn rotate(&self, range: Interval, delta: i64) -> IntervalSet {
        let within = self.intersect(&IntervalSet::from_interval(range));
        let w = range.len() as i64;
        if delta.rem_euclid(w) == 0 {
            return within;
        }
        let mut pieces = Vec::new();
        for iv in within.0 {
            let start = range.rotate(iv.lo, delta) as u64;
            let end = start + iv.len() - 1;
            if end <= range.hi as u64 {
                pieces.push(Interval::new(start as u32, end as u32));
            } else {
                pieces.push(Interval::new(start as u32, range.hi));
                let overflow = end - range.hi as u64;
                pieces.push(Interval::new(range.lo, (range.lo as u64 + overflow - 1) as u32));
            }
        }
        Self::from_intervals(pieces)
    }
}

impl fmt::Debug for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, iv) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{iv}")?;
        }
        f.write_str("}")
    }
}

/// A product of closed intervals, one per coordinate.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RangeTuple(pub Vec<Interval>);

impl RangeTuple {
    pub fn new(ranges: impl IntoIterator<Item = Interval>) -> Self {
        RangeTuple(ranges.into_iter().collect())
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }

    pub fn size(&self) -> u64 {
        self.0.iter().fold(1u64, |acc, iv| acc.saturating_mul(iv.len()))
    }

    pub fn contains(&self, c: &Color) -> bool {
        c.arity() == self.arity() && self.0.iter().zip(c.components()).all(|(iv, &v)| iv.contains(v))
    }
}

impl fmt::Debug for RangeTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for RangeTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, iv) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{iv}")?;
        }
        f.write_str(")")
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Node {
    Unit,
    Branch(Vec<(Interval, Node)>),
}

#[derive(Clone, Copy)]
enum SetOp {
    Union,
    Intersection,
    Difference,
}

impl Node {
    fn is_empty(&self) -> bool {
        matches!(self, Node::Branch(v) if v.is_empty())
    }

    fn size(&self) -> u64 {
        match self {
            Node::Unit => 1,
            Node::Branch(v) => v
                .iter()
                .map(|(iv, child)| iv.len().saturating_mul(child.size()))
                .fold(0u64, u64::saturating_add),
        }
    }

    fn apply(a: &Node, b: &Node, op: SetOp) -> Node {
        match (a, b) {
            (Node::Unit, Node::Unit) => match op {
                SetOp::Union | SetOp::Intersection => Node::Unit,
                SetOp::Difference => Node::Branch(Vec::new()),
            },
            (Node::Branch(x), Node::Branch(y)) => Node::Branch(combine(x, y, op)),
            _ => unreachable!("color set arity mismatch"),
        }
    }

    fn tuples(&self, prefix: &mut Vec<Interval>, out: &mut Vec<RangeTuple>) {
        match self {
            Node::Unit => out.push(RangeTuple(prefix.clone())),
            Node::Branch(v) => {
                for (iv, child) in v {
                    prefix.push(*iv);
                    child.tuples(prefix, out);
                    prefix.pop();
                }
            }
        }
    }

    fn project(&self, coord: usize, acc: &mut Vec<Interval>) {
        match self {
            Node::Unit => {}
            Node::Branch(v) if coord == 0 => acc.extend(v.iter().map(|(iv, _)| *iv)),
            Node::Branch(v) => v.iter().for_each(|(_, c)| c.project(coord - 1, acc)),
        }
    }
}

fn lookup(entries: &[(Interval, Node)], v: u64) -> Option<&Node> {
    let idx = entries.partition_point(|(iv, _)| (iv.hi as u64) < v);
    entries.get(idx).filter(|(iv, _)| iv.lo as u64 <= v).map(|(_, n)| n)
}

fn combine(a: &[(Interval, Node)], b: &[(Interval, Node)], op: SetOp) -> Vec<(Interval, Node)> {
    let mut points: Vec<u64> = Vec::with_capacity(2 * (a.len() + b.len()));
    for (iv, _) in a.iter().chain(b) {
        points.push(iv.lo as u64);
        points.push(iv.hi as u64 + 1);
    }
    points.sort_unstable();
    points.dedup();
    let mut out: Vec<(Interval, Node)> = Vec::new();
    for w in points.windows(2) {
        let (start, end) = (w[0], w[1] - 1);
        let child = match (lookup(a, start), lookup(b, start), op) {
            (Some(x), None, SetOp::Union | SetOp::Difference) => Some(x.clone()),
            (None, Some(y), SetOp::Union) => Some(y.clone()),
            (Some(x), Some(y), _) => Some(Node::apply(x, y, op)),
            _ => None,
        };
        let Some(child) = child.filter(|c| !c.is_empty()) else {
            continue;
        };
        match out.last_mut() {
            Some((iv, last)) if iv.hi as u64 + 1 == start && *last == child => {
                iv.hi = end as u32;
            }
            _ => out.push((Interval::new(start as u32, end as u32), child)),
        }
    }
    out
}

/// A finite set of colors of fixed arity, canonically represented.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ColorSet {
    arity: usize,
    root: Node,
}

impl ColorSet {
    pub fn empty(arity: usize) -> Self {
        assert!(arity >= 1, "colors have arity >= 1");
        ColorSet {
            arity,
            root: Node::Branch(Vec::new()),
        }
    }

    /// The dot domain `([1])`.
    pub fn dot() -> Self {
        Self::from_tuple(&RangeTuple::new([Interval::point(1)]))
    }

    pub fn from_tuple(tuple: &RangeTuple) -> Self {
        Self::product(
            &tuple
                .0
                .iter()
                .map(|iv| IntervalSet::from_interval(*iv))
                .collect::<Vec<_>>(),
        )
    }

    pub fn range(lo: u32, hi: u32) -> Self {
        Self::product(&[IntervalSet::range(lo, hi)])
    }

    /// Cartesian product of one interval set per coordinate.
    pub fn product(coords: &[IntervalSet]) -> Self {
        let arity = coords.len();
        assert!(arity >= 1, "colors have arity >= 1");
        if coords.iter().any(IntervalSet::is_empty) {
            return Self::empty(arity);
        }
        let mut node = Node::Unit;
        for set in coords.iter().rev() {
            node = Node::Branch(set.0.iter().map(|iv| (*iv, node.clone())).collect());
        }
        ColorSet { arity, root: node }
    }

    pub fn from_tuples(arity: usize, tuples: impl IntoIterator<Item = RangeTuple>) -> Result<Self> {
        let mut sets = Vec::new();
        for t in tuples {
            if t.arity() != arity {
                return Err(Error::ArityMismatch {
                    expected: arity,
                    found: t.arity(),
                });
            }
            sets.push(Self::from_tuple(&t));
        }
        Ok(Self::union_all(arity, sets))
    }

    pub fn from_colors<'a>(arity: usize, colors: impl IntoIterator<Item = &'a Color>) -> Result<Self> {
        Self::from_tuples(
            arity,
            colors
                .into_iter()
                .map(|c| RangeTuple(c.components().iter().map(|&v| Interval::point(v)).collect())),
        )
    }

    /// Pairwise reduction keeps the total work near-linear for many small sets.
    pub fn union_all(arity: usize, mut sets: Vec<ColorSet>) -> ColorSet {
        if sets.is_empty() {
            return Self::empty(arity);
        }
        while sets.len() > 1 {
            let mut next = Vec::with_capacity(sets.len().div_ceil(2));
            let mut it = sets.into_iter();
            while let Some(a) = it.next() {
                match it.next() {
                    Some(b) => next.push(a.union(&b)),
                    None => next.push(a),
                }
            }
            sets = next;
        }
        sets.pop().unwrap()
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn is_empty(&self) -> bool {
        self.root.is_empty()
    }

    pub fn size(&self) -> u64 {
        self.root.size()
    }

    fn check_arity(&self, other: &ColorSet) -> Result<()> {
        if self.arity != other.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                found: other.arity,
            });
        }
        Ok(())
    }

    pub fn try_union(&self, other: &ColorSet) -> Result<ColorSet> {
        self.check_arity(other)?;
        Ok(self.op(other, SetOp::Union))
    }

    pub fn try_intersection(&self, other: &ColorSet) -> Result<ColorSet> {
        self.check_arity(other)?;
        Ok(self.op(other, SetOp::Intersection))
    }

    pub fn try_difference(&self, other: &ColorSet) -> Result<ColorSet> {
        self.check_arity(other)?;
        Ok(self.op(other, SetOp::Difference))
    }

    /// Panics on arity mismatch; see [`ColorSet::try_union`].
    pub fn union(&self, other: &ColorSet) -> ColorSet {
        self.try_union(other).expect("color set arity")
    }

    pub fn intersection(&self, other: &ColorSet) -> ColorSet {
        self.try_intersection(other).expect("color set arity")
    }

    pub fn difference(&self, other: &ColorSet) -> ColorSet {
        self.try_difference(other).expect("color set arity")
    }

    fn op(&self, other: &ColorSet, op: SetOp) -> ColorSet {
        ColorSet {
            arity: self.arity,
            root: Node::apply(&self.root, &other.root, op),
        }
    }

    pub fn is_subset(&self, other: &ColorSet) -> bool {
        self.arity == other.arity && self.difference(other).is_empty()
    }

    pub fn intersects(&self, other: &ColorSet) -> bool {
        self.arity == other.arity && !self.intersection(other).is_empty()
    }

    pub fn contains(&self, color: &Color) -> bool {
        if color.arity() != self.arity {
            return false;
        }
        let mut node = &self.root;
        for &v in color.components() {
            match node {
                Node::Branch(entries) => match lookup(entries, v as u64) {
                    Some(child) => node = child,
                    None => return false,
                },
                Node::Unit => return false,
            }
        }
        true
    }

    /// Disjoint range tuples in canonical order.
    pub fn tuples(&self) -> Vec<RangeTuple> {
        let mut out = Vec::new();
        self.root.tuples(&mut Vec::with_capacity(self.arity), &mut out);
        out
    }

    /// Values taken by coordinate `coord` across the set.
    pub fn project(&self, coord: usize) -> IntervalSet {
        let mut acc = Vec::new();
        self.root.project(coord, &mut acc);
        IntervalSet::from_intervals(acc)
    }

    /// `self × other`, concatenating coordinates.
    pub fn cartesian(&self, other: &ColorSet) -> ColorSet {
        let sets = self
            .tuples()
            .iter()
            .flat_map(|a| {
                other
                    .tuples()
                    .into_iter()
                    .map(move |b| ColorSet::from_tuple(&RangeTuple(a.0.iter().chain(&b.0).copied().collect())))
            })
            .collect();
        ColorSet::union_all(self.arity + other.arity, sets)
    }

    /// The lexicographically smallest color.
    pub fn min_color(&self) -> Option<Color> {
        let mut out = Vec::with_capacity(self.arity);
        let mut node = &self.root;
        while let Node::Branch(entries) = node {
            let (iv, child) = entries.first()?;
            out.push(iv.lo);
            node = child;
        }
        Some(Color::new(out))
    }

    /// Colors in lexicographic order.
    pub fn iter(&self) -> ColorIter<'_> {
        ColorIter::new(self)
    }
}

impl fmt::Debug for ColorSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for ColorSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, t) in self.tuples().iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str("}")
    }
}

/// Entries at one depth, index of the current entry, current value.
type Level<'a> = (&'a [(Interval, Node)], usize, u32);

pub struct ColorIter<'a> {
    stack: Vec<Level<'a>>,
    arity: usize,
    done: bool,
}

impl<'a> ColorIter<'a> {
    fn new(set: &'a ColorSet) -> Self {
        let mut it = ColorIter {
            stack: Vec::with_capacity(set.arity),
            arity: set.arity,
            done: set.is_empty(),
        };
        if !it.done {
            it.descend(&set.root);
        }
        it
    }

    fn descend(&mut self, mut node: &'a Node) {
        while let Node::Branch(entries) = node {
            self.stack.push((entries, 0, entries[0].0.lo));
            node = &entries[0].1;
        }
    }

    fn advance(&mut self) {
        while let Some((entries, idx, value)) = self.stack.pop() {
            let iv = entries[idx].0;
            if value < iv.hi {
                self.stack.push((entries, idx, value + 1));
                self.descend(&entries[idx].1);
                return;
            }
            if idx + 1 < entries.len() {
                self.stack.push((entries, idx + 1, entries[idx + 1].0.lo));
                self.descend(&entries[idx + 1].1);
                return;
            }
        }
        self.done = true;
    }
}

impl Iterator for ColorIter<'_> {
    type Item = Color;

    fn next(&mut self) -> Option<Color> {
        if self.done {
            return None;
        }
        debug_assert_eq!(self.stack.len(), self.arity);
        let color = Color::new(self.stack.iter().map(|(_, _, v)| *v));
        self.advance();
        Some(color)
    }
}
