//! Per-phase operation tallies.
//!
//! Every hash, modular exponentiation, modular multiplication/division and
//! XOR performed through [`GroupParams`](crate::crypto::GroupParams) bumps
//! exactly one counter in the currently active phase. Counters are passed
//! explicitly, so two scenarios never share a tally.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    Registration,
    Login,
    Authentication,
    PasswordChange,
    /// Work not attributed to an honest protocol phase (adversary, setup).
    Other,
}

impl Phase {
    pub const PROTOCOL: [Phase; 4] = [
        Phase::Registration,
        Phase::Login,
        Phase::Authentication,
        Phase::PasswordChange,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Registration => "registration",
            Phase::Login => "login",
            Phase::Authentication => "authentication",
            Phase::PasswordChange => "password-change",
            Phase::Other => "other",
        }
    }
}

/// Counts of T_h, T_E, T_M and T_X operations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct OpCounts {
    pub hash: u64,
    pub exp: u64,
    pub mul: u64,
    pub xor: u64,
}

impl Add for OpCounts {
    type Output = OpCounts;
    fn add(self, rhs: OpCounts) -> OpCounts {
        OpCounts {
            hash: self.hash + rhs.hash,
            exp: self.exp + rhs.exp,
            mul: self.mul + rhs.mul,
            xor: self.xor + rhs.xor,
        }
    }
}

impl AddAssign for OpCounts {
    fn add_assign(&mut self, rhs: OpCounts) {
        *self = *self + rhs;
    }
}

impl fmt::Display for OpCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.hash, self.exp, self.mul, self.xor)
    }
}

impl std::str::FromStr for OpCounts {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != 4 {
            return Err(format!(
                "expected 4 comma-separated counts, got {}",
                parts.len()
            ));
        }
        let n = |i: usize| {
            parts[i]
                .parse::<u64>()
                .map_err(|e| format!("count {i}: {e}"))
        };
        Ok(OpCounts {
            hash: n(0)?,
            exp: n(1)?,
            mul: n(2)?,
            xor: n(3)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpCounter {
    phase: Phase,
    tallies: BTreeMap<Phase, OpCounts>,
}

impl Default for OpCounter {
    fn default() -> Self {
        OpCounter {
            phase: Phase::Other,
            tallies: BTreeMap::new(),
        }
    }
}

impl OpCounter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Switches the active phase. Tallies already recorded for `phase` are
    /// cleared so each phase reports one run.
    pub fn begin(&mut self, phase: Phase) {
        self.phase = phase;
        self.tallies.insert(phase, OpCounts::default());
    }

    /// Switches the active phase without clearing its tally.
    pub fn resume(&mut self, phase: Phase) {
        self.phase = phase;
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn counts(&self, phase: Phase) -> OpCounts {
        self.tallies.get(&phase).copied().unwrap_or_default()
    }

    pub fn total(&self) -> OpCounts {
        self.tallies
            .values()
            .fold(OpCounts::default(), |acc, c| acc + *c)
    }

    pub fn reset(&mut self) {
        self.tallies.clear();
    }

    fn current(&mut self) -> &mut OpCounts {
        self.tallies.entry(self.phase).or_default()
    }

    pub(crate) fn hash(&mut self) {
        self.current().hash += 1;
    }

    pub(crate) fn exp(&mut self) {
        self.current().exp += 1;
    }

    pub(crate) fn mul(&mut self) {
        self.current().mul += 1;
    }

    pub(crate) fn xor(&mut self) {
        self.current().xor += 1;
    }
}
