//! The ten diagnosable sensor states and their six-bit label encoding.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::signal::Condition;

pub const N_CLASSES: usize = 10;

/// Index of a diagnosable sensor state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassId(u8);

use Condition::{Hard as H, Normal as N, Soft as S};

// Row order is the class numbering.
const CONDITIONS: [[Condition; 3]; N_CLASSES] = [
    [N, N, N],
    [S, N, N],
    [H, N, N],
    [N, S, N],
    [N, H, N],
    [N, N, S],
    [N, N, H],
    [S, S, N],
    [H, H, N],
    [S, H, N],
];

// Columns S1 S2 S3 H1 H2 H3.
const LABELS: [[u8; 6]; N_CLASSES] = [
    [0, 0, 0, 0, 0, 0],
    [1, 0, 0, 0, 0, 0],
    [0, 0, 0, 1, 0, 0],
    [0, 1, 0, 0, 0, 0],
    [0, 0, 0, 0, 1, 0],
    [0, 0, 1, 0, 0, 0],
    [0, 0, 0, 0, 0, 1],
    [1, 1, 0, 0, 0, 0],
    [0, 0, 0, 1, 1, 0],
    [1, 0, 0, 0, 1, 0],
];

const NAMES: [&str; N_CLASSES] = [
    "Normal state",
    "A-phase soft fault",
    "A-phase hard fault",
    "B-phase soft fault",
    "B-phase hard fault",
    "C-phase soft fault",
    "C-phase hard fault",
    "A-B-phase soft faults",
    "A-B-phase hard faults",
    "A-phase soft fault and B-phase hard fault",
];

const SLUGS: [&str; N_CLASSES] = [
    "normal",
    "a-soft",
    "a-hard",
    "b-soft",
    "b-hard",
    "c-soft",
    "c-hard",
    "ab-soft",
    "ab-hard",
    "a-soft-b-hard",
];

impl ClassId {
    pub const NORMAL: ClassId = ClassId(0);

    pub fn new(index: usize) -> Result<Self> {
        if index < N_CLASSES {
            Ok(ClassId(index as u8))
        } else {
            Err(Error::InvalidInput(format!(
                "class id {index} out of range 0..{N_CLASSES}"
            )))
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn all() -> impl Iterator<Item = ClassId> {
        (0..N_CLASSES as u8).map(ClassId)
    }

    /// Sensor conditions of phases A, B, C.
    pub fn conditions(self) -> [Condition; 3] {
        CONDITIONS[self.index()]
    }

    /// Class whose condition pattern is exactly `conditions`, if enumerated.
    pub fn from_conditions(conditions: [Condition; 3]) -> Option<ClassId> {
        CONDITIONS
            .iter()
            .position(|c| *c == conditions)
            .map(|i| ClassId(i as u8))
    }

    pub fn name(self) -> &'static str {
        NAMES[self.index()]
    }

    /// Short kebab-case identifier used on the command line.
    pub fn slug(self) -> &'static str {
        SLUGS[self.index()]
    }

    pub fn labels(self) -> LabelVector {
        class_to_labels(self)
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for ClassId {
    type Err = Error;

    /// Accepts a numeric id or a slug such as `a-soft`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Ok(i) = s.parse::<usize>() {
            return ClassId::new(i);
        }
        SLUGS
            .iter()
            .position(|slug| slug.eq_ignore_ascii_case(s))
            .map(|i| ClassId(i as u8))
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "unknown state {s:?}; expected 0-9 or one of {}",
                    SLUGS.join(", ")
                ))
            })
    }
}

/// Soft/hard fault flags per phase: `[S1, S2, S3, H1, H2, H3]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LabelVector(pub [u8; 6]);

impl LabelVector {
    /// Encodes arbitrary per-phase conditions.
    pub fn from_conditions(conditions: [Condition; 3]) -> Self {
        let mut bits = [0u8; 6];
        for (k, c) in conditions.iter().enumerate() {
            match c {
                Condition::Normal => {}
                Condition::Soft => bits[k] = 1,
                Condition::Hard => bits[3 + k] = 1,
            }
        }
        LabelVector(bits)
    }

    pub fn bits(&self) -> [u8; 6] {
        self.0
    }
}

impl fmt::Display for LabelVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = self.0;
        write!(f, "{},{},{},{},{},{}", b[0], b[1], b[2], b[3], b[4], b[5])
    }
}

pub fn class_to_labels(c: ClassId) -> LabelVector {
    LabelVector(LABELS[c.index()])
}
