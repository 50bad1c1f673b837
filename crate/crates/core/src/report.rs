//! Pass/fail records produced by the verification harnesses.

use serde::{Deserialize, Serialize};

/// How `observed` is compared with `limit`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub name: String,
    pub passed: bool,
    pub observed: f64,
    pub comparison: Comparison,
    pub limit: f64,
    pub samples: usize,
    /// Worst-case sample, when there is one.
    pub witness: Option<Vec<f64>>,
    pub note: Option<String>,
}

impl PropertyCheck {
    pub fn at_most(name: &str, observed: f64, limit: f64, samples: usize, witness: Option<Vec<f64>>) -> Self {
        Self {
            name: name.to_string(),
            passed: observed <= limit,
            observed,
            comparison: Comparison::AtMost,
            limit,
            samples,
            witness,
            note: None,
        }
    }

    pub fn at_least(name: &str, observed: f64, limit: f64, samples: usize, witness: Option<Vec<f64>>) -> Self {
        Self {
            name: name.to_string(),
            passed: observed >= limit,
            observed,
            comparison: Comparison::AtLeast,
            limit,
            samples,
            witness,
            note: None,
        }
    }

    /// A check that could not be evaluated.
    pub fn failed(name: &str, note: String) -> Self {
        Self {
            name: name.to_string(),
            passed: false,
            observed: f64::NAN,
            comparison: Comparison::AtMost,
            limit: f64::NAN,
            samples: 0,
            witness: None,
            note: Some(note),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<PropertyCheck>,
}

impl VerificationReport {
    pub fn push(&mut self, check: PropertyCheck) {
        self.checks.push(check);
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&PropertyCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &PropertyCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Running worst case over samples.
#[derive(Debug, Clone)]
pub(crate) struct Worst {
    pub value: f64,
    pub witness: Option<Vec<f64>>,
    maximize: bool,
}

impl Worst {
    pub fn max() -> Self {
        Self { value: f64::NEG_INFINITY, witness: None, maximize: true }
    }

    pub fn min() -> Self {
        Self { value: f64::INFINITY, witness: None, maximize: false }
    }

    pub fn offer(&mut self, value: f64, witness: &[f64]) {
        let better = if value.is_nan() {
            !self.value.is_nan()
        } else if self.maximize {
            value > self.value
        } else {
            value < self.value
        };
        if better {
            self.value = value;
            self.witness = Some(witness.to_vec());
        }
    }

    /// Order-insensitive merge for parallel reductions. Ties keep the
    /// lexicographically smaller witness so results do not depend on
    /// scheduling.
    pub fn merge(mut self, other: Self) -> Self {
        let take = match (self.value.is_nan(), other.value.is_nan()) {
            (true, _) => false,
            (false, true) => true,
            _ if other.value == self.value => match (&self.witness, &other.witness) {
                (Some(a), Some(b)) => b.partial_cmp(a) == Some(std::cmp::Ordering::Less),
                (None, Some(_)) => true,
                _ => false,
            },
            _ if self.maximize => other.value > self.value,
            _ => other.value < self.value,
        };
        if take {
            self.value = other.value;
            self.witness = other.witness;
        }
        self
    }
}
