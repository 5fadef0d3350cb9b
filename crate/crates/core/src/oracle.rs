//! Behavioral equivalence checks between labeled transition systems.
//!
//! Labels are compared by their strings, so LTSs built from different nets
//! can be related directly.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::hash::Hash;

use crate::semantics::Lts;

/// Edges of both systems over one shared label numbering; states of `b` are
/// offset by `a.states.len()`.
fn union_edges<S, T>(a: &Lts<S>, b: &Lts<T>) -> (usize, Vec<Vec<(usize, usize)>>) {
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut label = |s: &str| {
        let n = ids.len();
        *ids.entry(s.to_string()).or_insert(n)
    };
    let n = a.states.len() + b.states.len();
    let mut succ = vec![Vec::new(); n];
    for &(s, l, t) in &a.edges {
        succ[s].push((label(a.label(l)), t));
    }
    let off = a.states.len();
    for &(s, l, t) in &b.edges {
        succ[off + s].push((label(b.label(l)), off + t));
    }
    (n, succ)
}

/// Coarsest bisimulation blocks of a graph by signature refinement.
fn bisimulation_blocks(succ: &[Vec<(usize, usize)>]) -> Vec<usize> {
    let mut block = vec![0usize; succ.len()];
    let mut count = 1;
    loop {
        let mut ids: HashMap<(usize, BTreeSet<(usize, usize)>), usize> = HashMap::new();
        let next: Vec<usize> = (0..succ.len())
            .map(|s| {
                let sig: BTreeSet<(usize, usize)> = succ[s].iter().map(|&(l, t)| (l, block[t])).collect();
                let n = ids.len();
                *ids.entry((block[s], sig)).or_insert(n)
            })
            .collect();
        let new_count = ids.len();
        block = next;
        if new_count == count {
            return block;
        }
        count = new_count;
    }
}

/// Whether state `s1` of `a` and state `s2` of `b` are strongly bisimilar.
pub fn bisimilar<S, T>(a: &Lts<S>, b: &Lts<T>, s1: usize, s2: usize) -> bool {
    let (_, succ) = union_edges(a, b);
    let block = bisimulation_blocks(&succ);
    block[s1] == block[a.states.len() + s2]
}

/// Greatest-fixpoint computation over explicit state pairs; quadratic in
/// states, meant as an independent check for small systems.
pub fn bisimilar_naive<S, T>(a: &Lts<S>, b: &Lts<T>, s1: usize, s2: usize) -> bool {
    let (n, succ) = union_edges(a, b);
    let mut rel = vec![vec![true; n]; n];
    loop {
        let mut changed = false;
        for p in 0..n {
            for q in 0..n {
                if !rel[p][q] {
                    continue;
                }
                let matched = |x: usize, y: usize| {
                    succ[x]
                        .iter()
                        .all(|&(l, x2)| succ[y].iter().any(|&(l2, y2)| l == l2 && rel[x2][y2]))
                };
                if !(matched(p, q) && matched(q, p)) {
                    rel[p][q] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            return rel[s1][a.states.len() + s2];
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IsoMode {
    /// States are identified by value: both systems must reach the same
    /// states with the same labeled edges between them.
    SameStates,
    /// Any label-preserving bijection fixing the initial states; backtracking,
    /// for small systems only.
    Structural,
}

fn labeled_edges<S>(l: &Lts<S>) -> Vec<(usize, &str, usize)> {
    l.edges.iter().map(|&(s, x, t)| (s, l.label(x), t)).collect()
}

/// Whether the two systems' reachable fragments are isomorphic under `mode`.
pub fn reachable_isomorphic<S: Eq + Hash>(a: &Lts<S>, b: &Lts<S>, mode: IsoMode) -> bool {
    if a.states.len() != b.states.len() || a.edges.len() != b.edges.len() {
        return false;
    }
    match mode {
        IsoMode::SameStates => {
            let index: HashMap<&S, usize> = b.states.iter().enumerate().map(|(i, s)| (s, i)).collect();
            let Some(map) = a
                .states
                .iter()
                .map(|s| index.get(s).copied())
                .collect::<Option<Vec<_>>>()
            else {
                return false;
            };
            if map.first().is_some_and(|&m| m != 0) {
                return false;
            }
            let eb: HashSet<(usize, &str, usize)> = labeled_edges(b).into_iter().collect();
            labeled_edges(a)
                .into_iter()
                .all(|(s, l, t)| eb.contains(&(map[s], l, map[t])))
        }
        IsoMode::Structural => structural_isomorphic(a, b),
    }
}

fn structural_isomorphic<S>(a: &Lts<S>, b: &Lts<S>) -> bool {
    let n = a.states.len();
    if n == 0 {
        return true;
    }
    let profile = |l: &Lts<S>| -> Vec<BTreeMap<(bool, String), usize>> {
        let mut p = vec![BTreeMap::new(); l.states.len()];
        for &(s, x, t) in &l.edges {
            *p[s].entry((true, l.label(x).to_string())).or_insert(0) += 1;
            *p[t].entry((false, l.label(x).to_string())).or_insert(0) += 1;
        }
        p
    };
    let (pa, pb) = (profile(a), profile(b));
    let ea = labeled_edges(a);
    let eb: HashSet<(usize, &str, usize)> = labeled_edges(b).into_iter().collect();
    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];

    struct Search<'x> {
        pa: &'x [BTreeMap<(bool, String), usize>],
        pb: &'x [BTreeMap<(bool, String), usize>],
        ea: &'x [(usize, &'x str, usize)],
        eb: &'x HashSet<(usize, &'x str, usize)>,
    }

    impl Search<'_> {
        fn consistent(&self, map: &[usize], s: usize) -> bool {
            self.ea.iter().all(|&(x, l, y)| {
                if (x != s && y != s) || map[x] == usize::MAX || map[y] == usize::MAX {
                    return true;
                }
                self.eb.contains(&(map[x], l, map[y]))
            })
        }

        fn run(&self, i: usize, map: &mut [usize], used: &mut [bool]) -> bool {
            if i == map.len() {
                return true;
            }
            let candidates: Vec<usize> = if i == 0 { vec![0] } else { (0..map.len()).collect() };
            for j in candidates {
                if used[j] || self.pa[i] != self.pb[j] {
                    continue;
                }
                map[i] = j;
                used[j] = true;
                if self.consistent(map, i) && self.run(i + 1, map, used) {
                    return true;
                }
                map[i] = usize::MAX;
                used[j] = false;
            }
            false
        }
    }

    Search {
        pa: &pa,
        pb: &pb,
        ea: &ea,
        eb: &eb,
    }
    .run(0, &mut map, &mut used)
}
