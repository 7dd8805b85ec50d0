//! Uniform pass/fail reports for the verification sweeps.

use serde::Serialize;
use std::fmt;

/// A single failed identity: the input and both sides of the comparison.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub input: String,
    pub expected: String,
    pub actual: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Report {
    pub name: String,
    pub checked: usize,
    pub violations: Vec<Violation>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Reports keep at most this many violations; `checked` still counts all.
pub const MAX_VIOLATIONS: usize = 20;

impl Report {
    pub fn new(name: impl Into<String>) -> Report {
        Report { name: name.into(), ..Default::default() }
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn check(&mut self) {
        self.checked += 1;
    }

    pub fn fail(&mut self, input: impl fmt::Display, expected: impl fmt::Display, actual: impl fmt::Display) {
        if self.violations.len() < MAX_VIOLATIONS {
            self.violations.push(Violation {
                input: input.to_string(),
                expected: expected.to_string(),
                actual: actual.to_string(),
            });
        }
    }

    /// Records one comparison.
    pub fn compare<T: PartialEq + fmt::Display>(&mut self, input: impl fmt::Display, expected: &T, actual: &T) {
        self.check();
        if expected != actual {
            self.fail(input, expected, actual);
        }
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    /// Folds another report into this one.
    pub fn absorb(&mut self, other: Report) {
        self.checked += other.checked;
        for v in other.violations {
            if self.violations.len() < MAX_VIOLATIONS {
                self.violations.push(v);
            }
        }
        self.notes.extend(other.notes);
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        writeln!(f, "{status} {} ({} checks)", self.name, self.checked)?;
        for n in &self.notes {
            writeln!(f, "  note: {n}")?;
        }
        for v in &self.violations {
            writeln!(f, "  at {}: expected {}, got {}", v.input, v.expected, v.actual)?;
        }
        Ok(())
    }
}
