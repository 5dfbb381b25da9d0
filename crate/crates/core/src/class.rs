use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Fluid splitting class of a printed pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PatternClass {
    /// Dot pattern, point splitting (A).
    #[serde(rename = "A")]
    Dots,
    /// Mixed pattern, transition regime (B).
    #[serde(rename = "B")]
    Mixed,
    /// Finger pattern, lamella splitting (C).
    #[serde(rename = "C")]
    Fingers,
}

impl PatternClass {
    pub const ALL: [PatternClass; 3] = [PatternClass::Dots, PatternClass::Mixed, PatternClass::Fingers];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn letter(self) -> char {
        match self {
            PatternClass::Dots => 'A',
            PatternClass::Mixed => 'B',
            PatternClass::Fingers => 'C',
        }
    }
}

impl fmt::Display for PatternClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown class label {0:?} (expected A, B or C)")]
pub struct UnknownLabel(pub String);

impl FromStr for PatternClass {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "A" | "a" => Ok(PatternClass::Dots),
            "B" | "b" => Ok(PatternClass::Mixed),
            "C" | "c" => Ok(PatternClass::Fingers),
            other => Err(UnknownLabel(other.to_string())),
        }
    }
}

/// Index of the largest count; ties go to the lowest class index.
pub(crate) fn argmax_lowest(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}
