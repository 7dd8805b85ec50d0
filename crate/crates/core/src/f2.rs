//! Finite formal sums with coefficients in F₂.

use std::collections::BTreeSet;
use std::fmt;

/// A finite F₂-linear combination, stored as the set of terms with coefficient 1.
///
/// Adding a term that is already present cancels it. Iteration order is the
/// `Ord` order of the terms, which keeps every printed result deterministic.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct F2Sum<T: Ord>(BTreeSet<T>);

impl<T: Ord> Default for F2Sum<T> {
    fn default() -> Self {
        F2Sum(BTreeSet::new())
    }
}

impl<T: Ord> F2Sum<T> {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn term(t: T) -> Self {
        let mut s = BTreeSet::new();
        s.insert(t);
        F2Sum(s)
    }

    /// Adds one copy of `t`.
    pub fn toggle(&mut self, t: T) {
        if !self.0.remove(&t) {
            self.0.insert(t);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, t: &T) -> bool {
        self.0.contains(t)
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.0.iter()
    }

    pub fn add_sum(&mut self, other: F2Sum<T>) {
        for t in other.0 {
            self.toggle(t);
        }
    }

    pub fn first(&self) -> Option<&T> {
        self.0.iter().next()
    }

    /// Applies a linear map given on basis elements.
    pub fn map_linear<U: Ord, F: FnMut(&T) -> F2Sum<U>>(&self, mut f: F) -> F2Sum<U> {
        let mut out = F2Sum::zero();
        for t in &self.0 {
            out.add_sum(f(t));
        }
        out
    }
}

impl<T: Ord> FromIterator<T> for F2Sum<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut s = F2Sum::zero();
        for t in iter {
            s.toggle(t);
        }
        s
    }
}

impl<T: Ord> IntoIterator for F2Sum<T> {
    type Item = T;
    type IntoIter = std::collections::btree_set::IntoIter<T>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

impl<'a, T: Ord> IntoIterator for &'a F2Sum<T> {
    type Item = &'a T;
    type IntoIter = std::collections::btree_set::Iter<'a, T>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl<T: Ord> std::ops::Add for F2Sum<T> {
    type Output = F2Sum<T>;
    fn add(mut self, rhs: Self) -> Self {
        self.add_sum(rhs);
        self
    }
}

impl<T: Ord> std::ops::AddAssign for F2Sum<T> {
    fn add_assign(&mut self, rhs: Self) {
        self.add_sum(rhs);
    }
}

impl<T: Ord + fmt::Display> fmt::Display for F2Sum<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for t in &self.0 {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

impl<T: Ord + fmt::Debug> fmt::Debug for F2Sum<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.0.iter()).finish()
    }
}
