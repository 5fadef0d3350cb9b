//! Finite multisets of colors and markings.

use std::collections::BTreeMap;
use std::fmt;

use crate::color::{Color, ColorSet};
use crate::error::{Error, Result};

/// A finite multiset over colors. Zero counts are never stored.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Multiset {
    counts: BTreeMap<Color, u64>,
}

impl Multiset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn singleton(color: Color, count: u64) -> Self {
        let mut m = Self::new();
        m.insert(color, count);
        m
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Color, u64)>) -> Result<Self> {
        let mut m = Self::new();
        for (c, n) in pairs {
            m.check_color(&c)?;
            m.insert(c, n);
        }
        Ok(m)
    }

    /// One token of every color in `set`.
    pub fn of_set(set: &ColorSet) -> Self {
        Multiset {
            counts: set.iter().map(|c| (c, 1)).collect(),
        }
    }

    fn check_color(&self, c: &Color) -> Result<()> {
        match self.arity() {
            Some(a) if a != c.arity() => Err(Error::ArityMismatch {
                expected: a,
                found: c.arity(),
            }),
            _ => Ok(()),
        }
    }

    /// Adds `count` copies of `color`. Arity is not checked here.
    pub fn insert(&mut self, color: Color, count: u64) {
        if count > 0 {
            *self.counts.entry(color).or_insert(0) += count;
        }
    }

    pub fn count(&self, color: &Color) -> u64 {
        self.counts.get(color).copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Arity of the stored colors, if any.
    pub fn arity(&self) -> Option<usize> {
        self.counts.keys().next().map(Color::arity)
    }

    /// Total number of tokens.
    pub fn cardinality(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Color, u64)> + '_ {
        self.counts.iter().map(|(c, &n)| (c, n))
    }

    pub fn support(&self) -> impl Iterator<Item = &Color> + '_ {
        self.counts.keys()
    }

    fn check_compatible(&self, other: &Multiset) -> Result<()> {
        match (self.arity(), other.arity()) {
            (Some(a), Some(b)) if a != b => Err(Error::ArityMismatch { expected: a, found: b }),
            _ => Ok(()),
        }
    }

    pub fn union(&self, other: &Multiset) -> Result<Multiset> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.add_assign(other);
        Ok(out)
    }

    /// In-place `⊎` without arity checking.
    pub fn add_assign(&mut self, other: &Multiset) {
        for (c, n) in other.iter() {
            self.insert(c.clone(), n);
        }
    }

    /// Truncating difference: counts are `max(0, a - b)`.
    pub fn subtract(&self, other: &Multiset) -> Result<Multiset> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.sub_assign(other);
        Ok(out)
    }

    pub fn sub_assign(&mut self, other: &Multiset) {
        for (c, n) in other.iter() {
            if let Some(have) = self.counts.get_mut(c) {
                if *have > n {
                    *have -= n;
                } else {
                    self.counts.remove(c);
                }
            }
        }
    }

    pub fn scale(&self, factor: u64) -> Multiset {
        if factor == 0 {
            return Multiset::new();
        }
        Multiset {
            counts: self.counts.iter().map(|(c, &n)| (c.clone(), n * factor)).collect(),
        }
    }

    /// `other ⊆ self`.
    pub fn includes(&self, other: &Multiset) -> bool {
        other.iter().all(|(c, n)| self.count(c) >= n)
    }

    pub fn support_within(&self, set: &ColorSet) -> bool {
        self.support().all(|c| set.contains(c))
    }
}

impl fmt::Debug for Multiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Formal-sum notation, e.g. `2'(0)+3'(2)`; the empty multiset prints as `0`.
impl fmt::Display for Multiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("0");
        }
        for (i, (c, n)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str("+")?;
            }
            write!(f, "{n}'{c}")?;
        }
        Ok(())
    }
}

/// A marking: one multiset per place, indexed by place position in the net.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Marking(pub Vec<Multiset>);

impl Marking {
    pub fn empty(places: usize) -> Self {
        Marking(vec![Multiset::new(); places])
    }

    pub fn place(&self, p: usize) -> &Multiset {
        &self.0[p]
    }

    pub fn place_mut(&mut self, p: usize) -> &mut Multiset {
        &mut self.0[p]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(Multiset::is_empty)
    }
}

impl fmt::Debug for Marking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, m) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" | ")?;
            }
            write!(f, "{m}")?;
        }
        f.write_str("]")
    }
}
