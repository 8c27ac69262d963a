use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Number of rhetorical roles.
pub const NUM_LABELS: usize = 7;

/// The seven rhetorical roles of a legal judgment sentence.
///
/// Discriminants are the canonical label indices used by every module
/// (class weights, logits, confusion matrices, checkpoints).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RhetoricalLabel {
    Facts = 0,
    RulingByLowerCourt = 1,
    Argument = 2,
    Statute = 3,
    Precedent = 4,
    RatioOfTheDecision = 5,
    RulingByPresentCourt = 6,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown rhetorical label {0:?}")]
pub struct UnknownLabel(pub String);

impl RhetoricalLabel {
    /// All labels in canonical index order.
    pub const ALL: [RhetoricalLabel; NUM_LABELS] = [
        RhetoricalLabel::Facts,
        RhetoricalLabel::RulingByLowerCourt,
        RhetoricalLabel::Argument,
        RhetoricalLabel::Statute,
        RhetoricalLabel::Precedent,
        RhetoricalLabel::RatioOfTheDecision,
        RhetoricalLabel::RulingByPresentCourt,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RhetoricalLabel::Facts => "Facts",
            RhetoricalLabel::RulingByLowerCourt => "Ruling by Lower Court",
            RhetoricalLabel::Argument => "Argument",
            RhetoricalLabel::Statute => "Statute",
            RhetoricalLabel::Precedent => "Precedent",
            RhetoricalLabel::RatioOfTheDecision => "Ratio of the decision",
            RhetoricalLabel::RulingByPresentCourt => "Ruling by Present Court",
        }
    }

    /// Canonical names in index order.
    pub fn names() -> Vec<String> {
        Self::ALL.iter().map(|l| l.as_str().to_string()).collect()
    }
}

impl fmt::Display for RhetoricalLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RhetoricalLabel {
    type Err = UnknownLabel;

    /// Exact match on the canonical string.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| UnknownLabel(s.to_string()))
    }
}

impl Serialize for RhetoricalLabel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for RhetoricalLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
