//! Legislative and electoral data model.
//!
//! Three tables make up a corpus: bills, legislators and constituencies. They are loaded from
//! headered CSV files ([`load_bills`], [`load_legislators`], [`load_constituencies`]), checked
//! for referential integrity by [`validate_corpus`], and can be synthesised for desk-scale
//! experiments with [`generate_synthetic_corpus`].

mod io;
mod synth;
mod validate;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use io::{
    load_bills, load_constituencies, load_legislators, write_bills, write_constituencies, write_legislators,
    BILLS_HEADER, CONSTITUENCIES_HEADER, LEGISLATORS_HEADER,
};
pub use synth::{generate_synthetic_corpus, BillTemplate, SynthParams, SyntheticCorpus};
pub use validate::{validate_corpus, CorpusValidationReport, Finding, TableKind};

#[cfg(test)]
pub(crate) mod synth_pools {
    pub(crate) use super::synth::{
        ECONOMY_SENTENCES, IDIOM_SENTENCES, INCIDENTAL_SENTENCES, TAX_SENTENCES, TRANSPORT_SENTENCES,
        UNRELATED_SENTENCES,
    };
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: header mismatch: expected `{expected}`, found `{found}`")]
    Header { path: String, expected: String, found: String },
    #[error("{path}: line {line}, column `{column}`: {message}")]
    Malformed { path: String, line: u64, column: String, message: String },
    #[error("{path}: line {line}: schema violation: {message}")]
    Schema { path: String, line: u64, message: String },
    #[error("{path}: line {line}: range violation: {message}")]
    Range { path: String, line: u64, message: String },
    #[error("{path}: duplicate key \"{key}\"")]
    DuplicateKey { path: String, key: String },
    #[error("invalid synthetic corpus parameter: {0}")]
    InvalidParameter(String),
}

/// Outcome of one review stage (committee, legislation and judiciary committee, plenary).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageOutcome {
    Passed,
    Dropped,
    Pending,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ideology {
    Conservative,
    Progressive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElectionType {
    Constituency,
    Proportional,
}

macro_rules! text_enum {
    ($ty:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        impl $ty {
            pub fn as_str(self) -> &'static str {
                match self { $($ty::$variant => $text),+ }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $ty {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($text => Ok($ty::$variant),)+
                    other => Err(format!(
                        "unknown value `{other}`, expected one of: {}",
                        [$($text),+].join(", ")
                    )),
                }
            }
        }
    };
}

text_enum!(StageOutcome { Passed => "passed", Dropped => "dropped", Pending => "pending" });
text_enum!(Ideology { Conservative => "conservative", Progressive => "progressive" });
text_enum!(Gender { Male => "male", Female => "female" });
text_enum!(ElectionType { Constituency => "constituency", Proportional => "proportional" });

/// One legislative proposal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bill {
    pub bill_id: String,
    pub title: String,
    /// Summary in the source language, stored untouched.
    pub summary: String,
    pub summary_translated: Option<String>,
    pub sponsor_id: String,
    pub cosponsor_ids: Vec<String>,
    pub committee_outcome: StageOutcome,
    pub ljc_outcome: StageOutcome,
    pub plenary_outcome: StageOutcome,
}

impl Bill {
    /// A bill is approved exactly when it passed the plenary vote.
    pub fn approved(&self) -> bool {
        self.plenary_outcome == StageOutcome::Passed
    }

    /// Sponsor followed by cosponsors in listed order.
    pub fn participants(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.sponsor_id.as_str()).chain(self.cosponsor_ids.iter().map(String::as_str))
    }

    /// Text used by the filter stages: the translation when present, else the source summary.
    pub fn working_summary(&self) -> &str {
        self.summary_translated.as_deref().unwrap_or(&self.summary)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Legislator {
    pub legislator_id: String,
    pub ideology: Ideology,
    pub gender: Gender,
    pub election_type: ElectionType,
    pub on_transport_committee: bool,
    pub terms_elected: u32,
    /// Absent exactly for proportional-representation members.
    pub constituency_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constituency {
    pub constituency_id: String,
    pub electoral_population: u64,
    pub votes: u64,
    pub invalid_votes: u64,
    pub area_km2: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enums_parse_case_insensitively() {
        assert_eq!("Passed".parse::<StageOutcome>().unwrap(), StageOutcome::Passed);
        assert_eq!(" progressive ".parse::<Ideology>().unwrap(), Ideology::Progressive);
        assert!("green".parse::<Ideology>().is_err());
    }

    #[test]
    fn approval_follows_plenary() {
        let mut b = Bill {
            bill_id: "B1".into(),
            title: String::new(),
            summary: String::new(),
            summary_translated: None,
            sponsor_id: "L1".into(),
            cosponsor_ids: vec![],
            committee_outcome: StageOutcome::Passed,
            ljc_outcome: StageOutcome::Passed,
            plenary_outcome: StageOutcome::Pending,
        };
        assert!(!b.approved());
        b.plenary_outcome = StageOutcome::Passed;
        assert!(b.approved());
    }
}
