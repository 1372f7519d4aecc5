use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use super::{Bill, Constituency, ElectionType, Legislator};
use crate::table::Table;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TableKind {
    Bills,
    Legislators,
    Constituencies,
}

impl fmt::Display for TableKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TableKind::Bills => "bills",
            TableKind::Legislators => "legislators",
            TableKind::Constituencies => "constituencies",
        })
    }
}

/// One validation finding. The locator is the record key, so findings do not depend on row order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Finding {
    pub table: TableKind,
    pub locator: String,
    pub rule: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]: {}", self.table, self.locator, self.rule)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CorpusValidationReport {
    pub errors: Vec<Finding>,
    pub warnings: Vec<Finding>,
    pub n_bills: usize,
    pub n_legislators: usize,
    pub n_constituencies: usize,
}

impl CorpusValidationReport {
    /// True when no errors were found and the corpus may feed downstream stages.
    pub fn is_admissible(&self) -> bool {
        self.errors.is_empty()
    }

    /// Line-oriented text rendering.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "bills: {}\nlegislators: {}\nconstituencies: {}\nerrors: {}\nwarnings: {}\n",
            self.n_bills,
            self.n_legislators,
            self.n_constituencies,
            self.errors.len(),
            self.warnings.len()
        );
        for e in &self.errors {
            s.push_str(&format!("ERROR {e}\n"));
        }
        for w in &self.warnings {
            s.push_str(&format!("WARNING {w}\n"));
        }
        s
    }

    /// Machine-readable table: severity, table, locator, rule.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["severity", "table", "locator", "rule"]);
        for (sev, list) in [("error", &self.errors), ("warning", &self.warnings)] {
            for f in list {
                t.push([sev.to_string(), f.table.to_string(), f.locator.clone(), f.rule.clone()]);
            }
        }
        t
    }
}

struct Collector(Vec<Finding>);

impl Collector {
    fn add(&mut self, table: TableKind, locator: &str, rule: impl Into<String>) {
        self.0.push(Finding { table, locator: locator.to_string(), rule: rule.into() });
    }

    fn finish(mut self) -> Vec<Finding> {
        self.0.sort();
        self.0
    }
}

fn count_keys<'a>(keys: impl Iterator<Item = &'a str>) -> BTreeMap<&'a str, usize> {
    let mut m = BTreeMap::new();
    for k in keys {
        *m.entry(k).or_insert(0) += 1;
    }
    m
}

/// Checks uniqueness, referential integrity and every type invariant.
///
/// Findings are sorted by (table, locator, rule), which makes the report independent of the
/// input row order.
pub fn validate_corpus(
    bills: &[Bill],
    legislators: &[Legislator],
    constituencies: &[Constituency],
) -> CorpusValidationReport {
    let mut errors = Collector(Vec::new());
    let mut warnings = Collector(Vec::new());

    let legislator_ids: HashSet<&str> = legislators.iter().map(|l| l.legislator_id.as_str()).collect();
    let constituency_ids: HashSet<&str> = constituencies.iter().map(|c| c.constituency_id.as_str()).collect();

    for (key, n) in count_keys(bills.iter().map(|b| b.bill_id.as_str())) {
        if n > 1 {
            errors.add(TableKind::Bills, key, format!("duplicate bill_id ({n} rows)"));
        }
    }
    for b in bills {
        let loc = b.bill_id.as_str();
        if b.bill_id.trim().is_empty() {
            errors.add(TableKind::Bills, loc, "empty bill_id");
        }
        if !legislator_ids.contains(b.sponsor_id.as_str()) {
            errors.add(TableKind::Bills, loc, format!("unknown sponsor \"{}\"", b.sponsor_id));
        }
        if b.cosponsor_ids.contains(&b.sponsor_id) {
            errors.add(TableKind::Bills, loc, format!("sponsor \"{}\" listed as cosponsor", b.sponsor_id));
        }
        let mut seen = HashSet::new();
        for c in &b.cosponsor_ids {
            if !seen.insert(c.as_str()) {
                errors.add(TableKind::Bills, loc, format!("cosponsor \"{c}\" listed twice"));
            }
            if !legislator_ids.contains(c.as_str()) {
                errors.add(TableKind::Bills, loc, format!("unknown cosponsor \"{c}\""));
            }
        }
        if b.summary.trim().is_empty() {
            warnings.add(TableKind::Bills, loc, "empty summary");
        }
    }

    for (key, n) in count_keys(legislators.iter().map(|l| l.legislator_id.as_str())) {
        if n > 1 {
            errors.add(TableKind::Legislators, key, format!("duplicate legislator_id ({n} rows)"));
        }
    }
    let mut referenced: HashMap<&str, usize> = HashMap::new();
    for l in legislators {
        let loc = l.legislator_id.as_str();
        if l.terms_elected < 1 {
            errors.add(TableKind::Legislators, loc, "terms_elected must be >= 1");
        }
        match (l.election_type, l.constituency_id.as_deref()) {
            (ElectionType::Proportional, Some(_)) => {
                errors.add(TableKind::Legislators, loc, "proportional legislator has a constituency")
            }
            (ElectionType::Constituency, None) => {
                errors.add(TableKind::Legislators, loc, "constituency legislator has no constituency")
            }
            (_, Some(c)) => {
                *referenced.entry(c).or_insert(0) += 1;
                if !constituency_ids.contains(c) {
                    errors.add(TableKind::Legislators, loc, format!("unknown constituency \"{c}\""));
                }
            }
            _ => {}
        }
    }

    for (key, n) in count_keys(constituencies.iter().map(|c| c.constituency_id.as_str())) {
        if n > 1 {
            errors.add(TableKind::Constituencies, key, format!("duplicate constituency_id ({n} rows)"));
        }
    }
    for c in constituencies {
        let loc = c.constituency_id.as_str();
        if c.invalid_votes > c.votes {
            errors.add(TableKind::Constituencies, loc, "invalid_votes exceeds votes");
        }
        if c.votes > c.electoral_population {
            errors.add(TableKind::Constituencies, loc, "votes exceeds electoral_population");
        }
        if !(c.area_km2.is_finite() && c.area_km2 > 0.0) {
            errors.add(TableKind::Constituencies, loc, "area_km2 must be positive");
        }
        if !referenced.contains_key(loc) {
            warnings.add(TableKind::Constituencies, loc, "constituency not referenced by any legislator");
        }
    }

    CorpusValidationReport {
        errors: errors.finish(),
        warnings: warnings.finish(),
        n_bills: bills.len(),
        n_legislators: legislators.len(),
        n_constituencies: constituencies.len(),
    }
}
