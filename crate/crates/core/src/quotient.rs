//! Color quotienting: stable partitions of place domains and the quotient net.
//!
//! A partition is stored per place as a list of disjoint color classes. The
//! static stabilization works on per-coordinate cut points: a cut at `c`
//! separates `c - 1` from `c`, and the classes of a place are the cells of the
//! resulting grid intersected with the domain. Cuts are introduced by guards,
//! constants and multiplicities on input arcs, then propagated backwards from
//! output places to the input places of the producing transitions until
//! nothing changes.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::time::{Duration, Instant};

use serde_json::Value;

use crate::color::{Color, ColorSet, Interval, IntervalSet, RangeTuple};
use crate::error::{Error, Result};
use crate::expr::{ArcExpr, Binding, GuardExpr, LeafTuple, SimpleExpr, VarId};
use crate::multiset::{Marking, Multiset};
use crate::net::{ColoredNet, Place, Transition};
use crate::par::{map_collect, Exec};
use crate::semantics::bounded_markings;
use crate::unfold::transition_instance_name;

pub const DEFAULT_BUDGET: Duration = Duration::from_millis(5000);

/// Per place, disjoint nonempty classes covering the domain, ordered by their
/// smallest color.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub classes: Vec<Vec<ColorSet>>,
}

impl Partition {
    /// Validates and canonicalizes explicit classes.
    pub fn new(net: &ColoredNet, classes: Vec<Vec<ColorSet>>) -> Result<Self> {
        if classes.len() != net.places.len() {
            return Err(Error::Precondition("partition must cover every place".into()));
        }
        for (p, cls) in net.places.iter().zip(&classes) {
            let mut covered = ColorSet::empty(p.domain.arity());
            for c in cls {
                if c.is_empty() || c.arity() != p.domain.arity() {
                    return Err(Error::Precondition(format!("bad class {c} for place `{}`", p.name)));
                }
                if covered.intersects(c) {
                    return Err(Error::Precondition(format!(
                        "overlapping classes in place `{}`",
                        p.name
                    )));
                }
                covered = covered.union(c);
            }
            if covered != p.domain {
                return Err(Error::Precondition(format!(
                    "classes of `{}` cover {covered}, not the domain {}",
                    p.name, p.domain
                )));
            }
        }
        Ok(Self::sorted(classes))
    }

    fn sorted(mut classes: Vec<Vec<ColorSet>>) -> Self {
        for cls in &mut classes {
            cls.sort_by_cached_key(|c| c.min_color());
        }
        Partition { classes }
    }

    pub fn finest(net: &ColoredNet) -> Self {
        Partition {
            classes: net
                .places
                .iter()
                .map(|p| {
                    p.domain
                        .iter()
                        .map(|c| ColorSet::from_colors(c.arity(), [&c]).expect("arity"))
                        .collect()
                })
                .collect(),
        }
    }

    pub fn coarsest(net: &ColoredNet) -> Self {
        Partition {
            classes: net
                .places
                .iter()
                .map(|p| {
                    if p.domain.is_empty() {
                        Vec::new()
                    } else {
                        vec![p.domain.clone()]
                    }
                })
                .collect(),
        }
    }

    pub fn class_count(&self) -> usize {
        self.classes.iter().map(Vec::len).sum()
    }

    pub fn is_finest(&self) -> bool {
        self.classes.iter().flatten().all(|c| c.size() == 1)
    }

    /// Place name → list of classes, each a list of range tuples.
    pub fn to_json(&self, net: &ColoredNet) -> Value {
        let map: serde_json::Map<String, Value> = net
            .places
            .iter()
            .zip(&self.classes)
            .map(|(p, cls)| {
                let list: Vec<Value> = cls
                    .iter()
                    .map(|c| Value::from(c.tuples().iter().map(|t| t.to_string()).collect::<Vec<_>>()))
                    .collect();
                (p.name.clone(), Value::from(list))
            })
            .collect();
        Value::Object(map)
    }
}

#[derive(Clone, Debug)]
enum IndexNode {
    Leaf(usize),
    Branch(Vec<(Interval, IndexNode)>),
}

fn build_index(entries: Vec<(&[Interval], usize)>) -> IndexNode {
    if entries[0].0.is_empty() {
        return IndexNode::Leaf(entries[0].1);
    }
    let mut points: Vec<u64> = entries
        .iter()
        .flat_map(|(t, _)| [t[0].lo as u64, t[0].hi as u64 + 1])
        .collect();
    points.sort_unstable();
    points.dedup();
    let mut out = Vec::new();
    for w in points.windows(2) {
        let seg = Interval::new(w[0] as u32, (w[1] - 1) as u32);
        let sub: Vec<(&[Interval], usize)> = entries
            .iter()
            .filter(|(t, _)| t[0].contains(seg.lo))
            .map(|(t, c)| (&t[1..], *c))
            .collect();
        if !sub.is_empty() {
            out.push((seg, build_index(sub)));
        }
    }
    IndexNode::Branch(out)
}

/// Color → class lookup for a partition.
#[derive(Clone, Debug)]
pub struct PartitionIndex {
    places: Vec<Option<IndexNode>>,
}

impl PartitionIndex {
    pub fn new(partition: &Partition) -> Self {
        let places = partition
            .classes
            .iter()
            .map(|cls| {
                let tuples: Vec<(RangeTuple, usize)> = cls
                    .iter()
                    .enumerate()
                    .flat_map(|(i, c)| c.tuples().into_iter().map(move |t| (t, i)))
                    .collect();
                if tuples.is_empty() {
                    return None;
                }
                Some(build_index(tuples.iter().map(|(t, i)| (t.0.as_slice(), *i)).collect()))
            })
            .collect();
        PartitionIndex { places }
    }

    pub fn class_of(&self, place: usize, color: &Color) -> Option<usize> {
        let mut node = self.places[place].as_ref()?;
        let mut coords = color.components().iter();
        loop {
            match node {
                IndexNode::Leaf(c) => return coords.next().is_none().then_some(*c),
                IndexNode::Branch(entries) => {
                    let v = *coords.next()?;
                    let i = entries.partition_point(|(iv, _)| iv.hi < v);
                    match entries.get(i) {
                        Some((iv, child)) if iv.lo <= v => node = child,
                        _ => return None,
                    }
                }
            }
        }
    }

    /// Per place, the nonzero `(class, token sum)` pairs.
    pub fn signature(&self, m: &Marking) -> Vec<Vec<(usize, u64)>> {
        m.0.iter()
            .enumerate()
            .map(|(p, ms)| self.place_signature(p, ms))
            .collect()
    }

    pub fn place_signature(&self, p: usize, ms: &Multiset) -> Vec<(usize, u64)> {
        let mut sums: BTreeMap<usize, u64> = BTreeMap::new();
        for (c, n) in ms.iter() {
            // colors outside every class get a sentinel class of their own
            let k = self.class_of(p, c).unwrap_or(usize::MAX);
            *sums.entry(k).or_insert(0) += n;
        }
        sums.into_iter().collect()
    }
}

/// Per-place per-class token sums agree.
pub fn markings_equivalent(partition: &Partition, m1: &Marking, m2: &Marking) -> bool {
    let idx = PartitionIndex::new(partition);
    idx.signature(m1) == idx.signature(m2)
}

/// `coarse ≥ fine`: every class of `fine` lies inside some class of `coarse`.
pub fn refines(coarse: &Partition, fine: &Partition) -> bool {
    coarse.classes.len() == fine.classes.len()
        && coarse
            .classes
            .iter()
            .zip(&fine.classes)
            .all(|(cs, fs)| fs.iter().all(|f| cs.iter().any(|c| f.is_subset(c))))
}

/// Joins classes that overlap, transitively.
pub fn partition_union(a: &Partition, b: &Partition) -> Partition {
    let classes = a
        .classes
        .iter()
        .zip(&b.classes)
        .map(|(xs, ys)| {
            let all: Vec<&ColorSet> = xs.iter().chain(ys).collect();
            let mut parent: Vec<usize> = (0..all.len()).collect();
            fn find(parent: &mut [usize], i: usize) -> usize {
                let mut r = i;
                while parent[r] != r {
                    r = parent[r];
                }
                let mut i = i;
                while parent[i] != r {
                    let next = parent[i];
                    parent[i] = r;
                    i = next;
                }
                r
            }
            for (i, x) in xs.iter().enumerate() {
                for (j, y) in ys.iter().enumerate() {
                    if x.intersects(y) {
                        let (ri, rj) = (find(&mut parent, i), find(&mut parent, xs.len() + j));
                        parent[ri] = rj;
                    }
                }
            }
            let mut groups: BTreeMap<usize, ColorSet> = BTreeMap::new();
            for (i, c) in all.iter().enumerate() {
                let r = find(&mut parent, i);
                let e = groups.entry(r).or_insert_with(|| ColorSet::empty(c.arity()));
                *e = e.union(c);
            }
            groups.into_values().collect()
        })
        .collect();
    Partition::sorted(classes)
}

/// Exhaustive stability check over the bounded markings: equivalent markings
/// must offer, per transition, the same set of successor equivalence classes.
pub fn is_stable_oracle(net: &ColoredNet, partition: &Partition, cap: u128) -> Result<bool> {
    let markings = bounded_markings(net, cap)?;
    let idx = PartitionIndex::new(partition);
    let steps = crate::semantics::steps(net, &mut Vec::new())?;
    type Sig = Vec<Vec<(usize, u64)>>;
    let summaries: Vec<(Sig, Vec<BTreeSet<Sig>>)> = map_collect(Exec::default(), &markings, |m| {
        let mut succ = vec![BTreeSet::new(); net.transitions.len()];
        for st in steps.iter().filter(|st| st.enabled(m)) {
            succ[st.transition].insert(idx.signature(&st.apply(m)));
        }
        (idx.signature(m), succ)
    });
    let mut groups: HashMap<&Sig, &Vec<BTreeSet<Sig>>> = HashMap::new();
    for (sig, succ) in &summaries {
        match groups.get(sig) {
            Some(prev) if *prev != succ => return Ok(false),
            Some(_) => {}
            None => {
                groups.insert(sig, succ);
            }
        }
    }
    Ok(true)
}

/// Cut points of one coordinate: positions `c` in `(lo, hi]` of the bounding
/// interval, each separating `c - 1` from `c`.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Cuts {
    bbox: Interval,
    set: IntervalSet,
}

impl Cuts {
    fn new(bbox: Interval) -> Self {
        Cuts {
            bbox,
            set: IntervalSet::empty(),
        }
    }

    fn positions(bbox: Interval) -> IntervalSet {
        if bbox.lo == bbox.hi {
            IntervalSet::empty()
        } else {
            IntervalSet::range(bbox.lo + 1, bbox.hi)
        }
    }

    /// Adds cuts, ignoring positions outside `(lo, hi]`. Returns true on change.
    fn add(&mut self, cuts: &IntervalSet) -> bool {
        let merged = self.set.union(&cuts.intersect(&Self::positions(self.bbox)));
        let changed = merged != self.set;
        self.set = merged;
        changed
    }

    fn add_all(&mut self) -> bool {
        self.add(&Self::positions(self.bbox))
    }

    fn segments(&self) -> Vec<Interval> {
        let mut out = Vec::new();
        let mut start = self.bbox.lo;
        for c in self.set.values() {
            out.push(Interval::new(start, c - 1));
            start = c;
        }
        out.push(Interval::new(start, self.bbox.hi));
        out
    }
}

fn edges(iv: Interval) -> IntervalSet {
    let mut v = vec![iv.lo];
    if iv.hi < u32::MAX {
        v.push(iv.hi + 1);
    }
    IntervalSet::from_values(v)
}

/// Cuts on a shifted variable's image: `{f(c) | c ∈ cuts ∪ {a}} \ {a}` plus
/// the range edges, where `f` rotates by `shift` inside `range = [a, b]`.
fn image_cuts(var_cuts: &IntervalSet, range: Interval, shift: i64) -> IntervalSet {
    let base = var_cuts.union(&IntervalSet::from_values([range.lo]));
    base.rotate(range, shift)
        .difference(&IntervalSet::from_values([range.lo]))
        .union(&edges(range))
}

/// Variable cuts induced by a place coordinate's cuts through `f`.
fn preimage_cuts(place: &Cuts, range: Interval, shift: i64) -> IntervalSet {
    let inside = if range.lo == range.hi {
        return IntervalSet::empty();
    } else {
        IntervalSet::range(range.lo + 1, range.hi)
    };
    let relevant = place.set.union(&edges(place.bbox)).intersect(&inside);
    relevant
        .union(&IntervalSet::from_values([range.lo]))
        .rotate(range, -shift)
        .difference(&IntervalSet::from_values([range.lo]))
}

/// Boundaries of the value set allowed by each analyzable guard atom.
fn guard_atom_cuts(
    g: &GuardExpr,
    net: &ColoredNet,
    out: &mut BTreeMap<VarId, IntervalSet>,
    singles: &mut HashSet<VarId>,
) {
    match g {
        GuardExpr::Not(x) => guard_atom_cuts(x, net, out, singles),
        GuardExpr::And(l, r) | GuardExpr::Or(l, r) => {
            guard_atom_cuts(l, net, out, singles);
            guard_atom_cuts(r, net, out, singles);
        }
        GuardExpr::Cmp(op, l, r) => {
            let (side, c, op) = match (l, r) {
                (SimpleExpr::Const(_), SimpleExpr::Const(_)) => return,
                (v, SimpleExpr::Const(c)) => (v, *c, *op),
                (SimpleExpr::Const(c), v) => (v, *c, op.flip()),
                (a, b) => {
                    singles.extend(a.var());
                    singles.extend(b.var());
                    return;
                }
            };
            let v = side.var().expect("variable side");
            let atom = GuardExpr::Cmp(op, *side, SimpleExpr::Const(c));
            let range = net.variables[v].range;
            let allowed = match atom.constraints(&net.variables) {
                Some(m) => m.get(&v).cloned().unwrap_or_else(|| IntervalSet::from_interval(range)),
                None => IntervalSet::empty(),
            };
            let mut cuts = IntervalSet::empty();
            for iv in allowed.intervals() {
                cuts = cuts.union(&edges(*iv));
            }
            let e = out.entry(v).or_default();
            *e = e.union(&cuts);
        }
        GuardExpr::True | GuardExpr::False | GuardExpr::MsEq(..) | GuardExpr::MsNeq(..) => {}
    }
}

fn var_positions(e: &ArcExpr) -> Vec<(usize, VarId, i64)> {
    let mut out = Vec::new();
    for leaf in e.leaves() {
        if let LeafTuple::Tuple(t) = leaf.tuple {
            for (j, s) in t.iter().enumerate() {
                if let Some(v) = s.var() {
                    out.push((j, v, s.shift()));
                }
            }
        }
    }
    out
}

struct Stabilizer<'a> {
    net: &'a ColoredNet,
    cuts: Vec<Vec<Cuts>>,
    deadline: Instant,
}

impl<'a> Stabilizer<'a> {
    fn new(net: &'a ColoredNet, budget: Duration) -> Self {
        let cuts = net
            .places
            .iter()
            .map(|p| {
                (0..p.domain.arity())
                    .map(|j| Cuts::new(p.domain.project(j).hull().unwrap_or(Interval::point(0))))
                    .collect()
            })
            .collect();
        Stabilizer {
            net,
            cuts,
            deadline: Instant::now() + budget,
        }
    }

    fn expired(&self) -> bool {
        Instant::now() >= self.deadline
    }

    /// Pushes variable cuts onto every input coordinate holding the variable.
    fn push_to_inputs(&mut self, t: &Transition, v: VarId, var_cuts: &IntervalSet, changed: &mut Vec<usize>) {
        let range = self.net.variables[v].range;
        for (p, e) in &t.inputs {
            for (j, x, shift) in var_positions(e) {
                if x == v && self.cuts[*p][j].add(&image_cuts(var_cuts, range, shift)) {
                    changed.push(*p);
                }
            }
        }
    }

    fn singleton_place(&mut self, p: usize) {
        for c in &mut self.cuts[p] {
            c.add_all();
        }
    }

    fn initial_refinement(&mut self) {
        let net = self.net;
        for t in &net.transitions {
            let unanalyzable =
                t.guard.has_multiset_cmp() || t.inputs.iter().chain(&t.outputs).any(|(_, e)| e.contains_sub());
            if unanalyzable {
                for (p, _) in &t.inputs {
                    self.singleton_place(*p);
                }
                continue;
            }
            let mut singles = HashSet::new();
            let mut guard_cuts = BTreeMap::new();
            guard_atom_cuts(&t.guard, net, &mut guard_cuts, &mut singles);
            let mut occurrences: HashMap<VarId, u64> = HashMap::new();
            for (p, e) in &t.inputs {
                for leaf in e.leaves() {
                    match leaf.tuple {
                        LeafTuple::All(_) => self.singleton_place(*p),
                        LeafTuple::Tuple(tuple) => {
                            for (j, s) in tuple.iter().enumerate() {
                                match s {
                                    SimpleExpr::Const(c) => {
                                        let mut at = vec![*c];
                                        if *c < u32::MAX {
                                            at.push(c + 1);
                                        }
                                        self.cuts[*p][j].add(&IntervalSet::from_values(at));
                                    }
                                    _ => {
                                        *occurrences.entry(s.var().unwrap()).or_insert(0) += leaf.multiplicity;
                                    }
                                }
                            }
                        }
                    }
                }
            }
            singles.extend(occurrences.iter().filter(|(_, &n)| n > 1).map(|(v, _)| *v));
            let mut scratch = Vec::new();
            for (v, cuts) in guard_cuts {
                self.push_to_inputs(t, v, &cuts, &mut scratch);
            }
            for v in singles {
                let range = net.variables[v].range;
                self.push_to_inputs(t, v, &Cuts::positions(range), &mut scratch);
            }
        }
    }

    fn propagate(&mut self) -> bool {
        let net = self.net;
        let mut producers: Vec<Vec<usize>> = vec![Vec::new(); net.places.len()];
        for (ti, t) in net.transitions.iter().enumerate() {
            for (p, _) in &t.outputs {
                producers[*p].push(ti);
            }
        }
        let mut queue: std::collections::VecDeque<usize> = (0..net.places.len()).collect();
        let mut queued = vec![true; net.places.len()];
        while let Some(p) = queue.pop_front() {
            queued[p] = false;
            if self.expired() {
                return false;
            }
            for &ti in &producers[p] {
                let t = &net.transitions[ti];
                let e = t.output(p).expect("producer has output arc");
                let mut changed = Vec::new();
                for (j, v, shift) in var_positions(e) {
                    let range = net.variables[v].range;
                    let var_cuts = preimage_cuts(&self.cuts[p][j], range, shift);
                    self.push_to_inputs(t, v, &var_cuts, &mut changed);
                }
                for q in changed {
                    if !queued[q] {
                        queued[q] = true;
                        queue.push_back(q);
                    }
                }
            }
        }
        true
    }

    fn partition(&self) -> Partition {
        let classes = self
            .net
            .places
            .iter()
            .zip(&self.cuts)
            .map(|(place, cuts)| cells(place, cuts))
            .collect();
        Partition::sorted(classes)
    }
}

fn cells(place: &Place, cuts: &[Cuts]) -> Vec<ColorSet> {
    if place.domain.is_empty() {
        return Vec::new();
    }
    let box_domain = place.domain.tuples().len() == 1;
    let segs: Vec<Vec<Interval>> = cuts.iter().map(Cuts::segments).collect();
    let mut out = Vec::new();
    let mut idx = vec![0usize; segs.len()];
    loop {
        let cell = ColorSet::from_tuple(&RangeTuple(idx.iter().zip(&segs).map(|(&i, s)| s[i]).collect()));
        let cell = if box_domain {
            cell
        } else {
            cell.intersection(&place.domain)
        };
        if !cell.is_empty() {
            out.push(cell);
        }
        let mut k = segs.len();
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < segs[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Result of [`stabilize_with_status`].
#[derive(Clone, Debug)]
pub struct Stabilized {
    pub partition: Partition,
    /// True when the budget ran out and the finest partition was returned.
    pub exhausted: bool,
}

/// A stable partition of the net's place domains; the finest partition when
/// the budget is exhausted.
pub fn stabilize(net: &ColoredNet, budget: Duration) -> Partition {
    stabilize_with_status(net, budget).partition
}

pub fn stabilize_with_status(net: &ColoredNet, budget: Duration) -> Stabilized {
    let mut s = Stabilizer::new(net, budget);
    s.initial_refinement();
    if s.propagate() && !s.expired() {
        return Stabilized {
            partition: s.partition(),
            exhausted: false,
        };
    }
    Stabilized {
        partition: Partition::finest(net),
        exhausted: true,
    }
}

/// The quotient net together with the class each representative stands for.
#[derive(Clone, Debug)]
pub struct Quotient {
    pub net: ColoredNet,
    /// Per place: `(representative, class)`, in representative order.
    pub representatives: Vec<Vec<(Color, ColorSet)>>,
}

/// Variable classes of a transition: intervals of the variable's range on
/// which guard atoms and every arc coordinate are constant class-wise.
fn variable_classes(net: &ColoredNet, t: &Transition, cuts: &[Vec<Cuts>]) -> Vec<Vec<Interval>> {
    let all_single = t.guard.has_multiset_cmp() || t.inputs.iter().chain(&t.outputs).any(|(_, e)| e.contains_sub());
    let mut singles = HashSet::new();
    let mut var_cuts: BTreeMap<VarId, IntervalSet> = BTreeMap::new();
    guard_atom_cuts(&t.guard, net, &mut var_cuts, &mut singles);
    for (p, e) in t.inputs.iter().chain(&t.outputs) {
        for (j, v, shift) in var_positions(e) {
            let c = preimage_cuts(&cuts[*p][j], net.variables[v].range, shift);
            let entry = var_cuts.entry(v).or_default();
            *entry = entry.union(&c);
        }
    }
    t.variables
        .iter()
        .map(|&v| {
            let range = net.variables[v].range;
            let mut c = Cuts::new(range);
            if all_single || singles.contains(&v) {
                c.add_all();
            } else if let Some(vc) = var_cuts.get(&v) {
                c.add(vc);
            }
            c.segments()
        })
        .collect()
}

/// Reads back per-coordinate cuts that generate a grid partition: every class
/// boundary on every coordinate becomes a cut.
fn partition_cuts(net: &ColoredNet, partition: &Partition) -> Vec<Vec<Cuts>> {
    net.places
        .iter()
        .zip(&partition.classes)
        .map(|(p, cls)| {
            (0..p.domain.arity())
                .map(|j| {
                    let mut c = Cuts::new(p.domain.project(j).hull().unwrap_or(Interval::point(0)));
                    for class in cls {
                        for t in class.tuples() {
                            c.add(&edges(t.0[j]));
                        }
                    }
                    c
                })
                .collect()
        })
        .collect()
}

/// Per-place multisets, sorted by place.
type Flows = Vec<(usize, Multiset)>;

fn class_sums(
    idx: &PartitionIndex,
    reps: &[Vec<(Color, ColorSet)>],
    flows: &[(usize, Multiset)],
) -> Option<Vec<(usize, Multiset)>> {
    let mut out = Vec::new();
    for (p, ms) in flows {
        let mut sums = Multiset::new();
        for (c, n) in ms.iter() {
            let k = idx.class_of(*p, c)?;
            sums.insert(reps[*p][k].0.clone(), n);
        }
        if !sums.is_empty() {
            out.push((*p, sums));
        }
    }
    Some(out)
}

fn constant_arc(ms: &Multiset) -> ArcExpr {
    ArcExpr::sum(
        ms.iter()
            .map(|(c, n)| ArcExpr::NumberOf(n, c.components().iter().map(|&v| SimpleExpr::Const(v)).collect()))
            .collect(),
    )
    .expect("nonempty multiset")
}

/// Builds the quotient net: one place per original place over class
/// representatives, and per transition one variable-free transition for each
/// distinct per-class consumption/production effect, labeled with the
/// original transition's label.
pub fn quotient(net: &ColoredNet, partition: &Partition) -> Result<Quotient> {
    if partition.classes.len() != net.places.len() {
        return Err(Error::Precondition("partition does not match the net".into()));
    }
    let idx = PartitionIndex::new(partition);
    let reps: Vec<Vec<(Color, ColorSet)>> = partition
        .classes
        .iter()
        .map(|cls| {
            cls.iter()
                .map(|c| (c.min_color().expect("nonempty class"), c.clone()))
                .collect()
        })
        .collect();
    let places: Vec<Place> = net
        .places
        .iter()
        .zip(&reps)
        .map(|(p, rs)| Place {
            name: p.name.clone(),
            domain: ColorSet::from_colors(p.domain.arity(), rs.iter().map(|(r, _)| r)).expect("arity"),
        })
        .collect();
    let initial = Marking(
        net.initial
            .0
            .iter()
            .enumerate()
            .map(|(p, ms)| {
                let mut out = Multiset::new();
                for (c, n) in ms.iter() {
                    let k = idx.class_of(p, c).ok_or_else(|| {
                        Error::Precondition(format!("initial color {c} not covered by the partition"))
                    })?;
                    out.insert(reps[p][k].0.clone(), n);
                }
                Ok(out)
            })
            .collect::<Result<_>>()?,
    );
    let cuts = partition_cuts(net, partition);
    let mut transitions = Vec::new();
    for t in &net.transitions {
        let classes = variable_classes(net, t, &cuts);
        let mut groups: Vec<(Binding, Flows, Flows)> = Vec::new();
        let mut seen: HashSet<(Flows, Flows)> = HashSet::new();
        for_each_product(&classes, |product| {
            let Some(b) = first_admissible(net, t, product) else {
                return Ok(());
            };
            let demand = class_sums(&idx, &reps, &net.input_demand(t, &b)?)
                .ok_or_else(|| Error::Precondition("demand outside the partition".into()))?;
            let production = class_sums(&idx, &reps, &net.output_production(t, &b)?)
                .ok_or_else(|| Error::Precondition("production outside the partition".into()))?;
            if seen.insert((demand.clone(), production.clone())) {
                groups.push((b, demand, production));
            }
            Ok(())
        })?;
        for (b, demand, production) in groups {
            transitions.push(Transition {
                name: transition_instance_name(&t.name, &b, &net.variables),
                label: t.label.clone(),
                guard: GuardExpr::True,
                variables: Vec::new(),
                inputs: demand.iter().map(|(p, m)| (*p, constant_arc(m))).collect(),
                outputs: production.iter().map(|(p, m)| (*p, constant_arc(m))).collect(),
                inhibitors: t.inhibitors.clone(),
            });
        }
    }
    Ok(Quotient {
        net: ColoredNet {
            places,
            transitions,
            variables: Vec::new(),
            initial,
            sorts: Vec::new(),
        },
        representatives: reps,
    })
}

/// [`quotient`] after confirming stability with the exhaustive oracle.
pub fn quotient_checked(net: &ColoredNet, partition: &Partition, cap: u128) -> Result<Quotient> {
    if !is_stable_oracle(net, partition, cap)? {
        return Err(Error::Precondition("partition is not stable".into()));
    }
    quotient(net, partition)
}

fn for_each_product(classes: &[Vec<Interval>], mut f: impl FnMut(&[Interval]) -> Result<()>) -> Result<()> {
    let mut idx = vec![0usize; classes.len()];
    let mut current: Vec<Interval> = classes.iter().map(|c| c[0]).collect();
    loop {
        f(&current)?;
        let mut k = classes.len();
        loop {
            if k == 0 {
                return Ok(());
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < classes[k].len() {
                current[k] = classes[k][idx[k]];
                break;
            }
            idx[k] = 0;
            current[k] = classes[k][0];
        }
    }
}

/// The lexicographically first admissible binding inside a box of variable values.
fn first_admissible(net: &ColoredNet, t: &Transition, product: &[Interval]) -> Option<Binding> {
    let mut vals: Vec<u32> = product.iter().map(|iv| iv.lo).collect();
    loop {
        let b = Binding(t.variables.iter().copied().zip(vals.iter().copied()).collect());
        if net.binding_admissible(t, &b) {
            return Some(b);
        }
        let mut k = vals.len();
        loop {
            if k == 0 {
                return None;
            }
            k -= 1;
            if vals[k] < product[k].hi {
                vals[k] += 1;
                break;
            }
            vals[k] = product[k].lo;
        }
    }
}
